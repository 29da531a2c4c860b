#include "s4tok/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "s4tok/error.hpp"

namespace s4tok::io {

namespace {

constexpr char kMagic[4] = { 'S', '4', 'F', '1' };

void
put_u32(std::string& out, std::uint32_t v)
{
  for (int b = 0; b < 4; ++b)
    out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

std::uint32_t
get_u32(const std::string& bytes, std::size_t pos)
{
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + b])) << (8 * b);
  return v;
}

} // namespace

std::string
read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path.string() + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void
write_file(const std::filesystem::path& path, const std::string& bytes)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw IoError("failed writing '" + path.string() + "'");
}

void
write_feature_matrix(const RowMatrix& matrix, const std::filesystem::path& path)
{
  if (!matrix.allFinite())
    throw InvalidArgument("feature matrix contains non-finite values");
  if (matrix.rows() > 0xffffffffLL || matrix.cols() > 0xffffffffLL)
    throw InvalidArgument("feature matrix too large for the S4F1 header");
  std::string out(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(matrix.rows()));
  put_u32(out, static_cast<std::uint32_t>(matrix.cols()));
  out.reserve(out.size() + 4 * static_cast<std::size_t>(matrix.size()));
  for (Index r = 0; r < matrix.rows(); ++r) {
    for (Index c = 0; c < matrix.cols(); ++c) {
      const auto f = static_cast<float>(matrix(r, c));
      if (!std::isfinite(f))
        throw InvalidArgument("feature matrix value overflows float32");
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(out, bits);
    }
  }
  write_file(path, out);
}

RowMatrix
parse_feature_matrix(const std::string& bytes)
{
  if (bytes.size() < 12)
    throw ParseError("S4F1 header truncated", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ParseError("bad magic (expected S4F1)", 0);
  const std::uint64_t rows = get_u32(bytes, 4);
  const std::uint64_t cols = get_u32(bytes, 8);
  const std::uint64_t expected = 12 + 4 * rows * cols;
  if (bytes.size() != expected)
    throw ParseError("S4F1 payload holds " + std::to_string(bytes.size() - 12) +
                       " bytes, header declares " + std::to_string(expected - 12),
                     std::min<std::uint64_t>(bytes.size(), expected));
  RowMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  std::size_t pos = 12;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      const std::uint32_t bits = get_u32(bytes, pos);
      float f;
      std::memcpy(&f, &bits, 4);
      if (!std::isfinite(f))
        throw ParseError("non-finite value in S4F1 payload", pos);
      m(r, c) = f;
      pos += 4;
    }
  }
  return m;
}

RowMatrix
read_feature_matrix(const std::filesystem::path& path)
{
  return parse_feature_matrix(read_file(path));
}

void
write_partition(const std::vector<Index>& labels, const std::filesystem::path& path)
{
  std::string out;
  out.reserve(labels.size() * 4);
  for (Index l : labels) {
    out += std::to_string(l);
    out += '\n';
  }
  write_file(path, out);
}

SuperpointPartition
parse_partition(const std::string& text)
{
  std::vector<Index> raw;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos)
      end = text.size();
    std::size_t stop = end;
    if (stop > pos && text[stop - 1] == '\r')
      --stop;
    if (stop > pos) {
      long long v = 0;
      auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + stop, v);
      if (ec != std::errc() || ptr != text.data() + stop)
        throw ParseError("partition line " + std::to_string(raw.size() + 1) +
                           " is not a decimal integer",
                         pos);
      raw.push_back(static_cast<Index>(v));
    } else if (end < text.size()) {
      throw ParseError("empty line in partition file", pos);
    }
    pos = end + 1;
  }
  if (raw.empty())
    throw ParseError("partition file holds no labels", 0);
  return SuperpointPartition::from_labels(raw);
}

SuperpointPartition
read_partition(const std::filesystem::path& path)
{
  return parse_partition(read_file(path));
}

std::filesystem::path
offsets_path_for(const std::filesystem::path& tokens_path)
{
  auto p = tokens_path;
  return p.replace_extension().string() + ".offsets.s4f";
}

std::filesystem::path
pe_path_for(const std::filesystem::path& tokens_path)
{
  auto p = tokens_path;
  return p.replace_extension().string() + ".pe.s4f";
}

void
write_tokens(const TokenizerOutput& output, const std::filesystem::path& path)
{
  if (output.patches.empty())
    throw InvalidArgument("write_tokens: no patches to write");

  Index cols = output.patches.front().offsets.cols();
  Index total_rows = 0;
  for (const auto& p : output.patches) {
    if (p.offsets.cols() != cols || p.offsets.rows() != static_cast<Index>(p.members.size()))
      throw InvalidArgument("write_tokens: patch offsets are inconsistent with members");
    total_rows += p.offsets.rows();
  }

  nlohmann::json doc;
  doc["format"] = "s4tok-tokens";
  doc["version"] = 1;
  doc["mode"] = to_string(output.mode);
  doc["normalize"] = output.normalize;
  doc["radius"] = output.radius;
  doc["spacing"] = output.spacing;
  doc["n_tokens"] = output.patches.size();
  doc["singleton_count"] = output.singleton_count;
  doc["centroid_indices"] = output.centroid_indices;
  nlohmann::json centroids = nlohmann::json::array();
  for (Index t = 0; t < output.centroids.rows(); ++t)
    centroids.push_back({ output.centroids(t, 0), output.centroids(t, 1), output.centroids(t, 2) });
  doc["centroids"] = std::move(centroids);

  RowMatrix offsets(total_rows, cols);
  nlohmann::json patches = nlohmann::json::array();
  Index row = 0;
  for (const auto& p : output.patches) {
    patches.push_back({ { "center", p.center_index },
                        { "superpoint", p.superpoint },
                        { "offset_row", row },
                        { "members", p.members } });
    offsets.middleRows(row, p.offsets.rows()) = p.offsets;
    row += p.offsets.rows();
  }
  doc["patches"] = std::move(patches);
  doc["offset_cols"] = cols;
  doc["offsets_file"] = offsets_path_for(path).filename().string();
  if (output.pe.cols() > 0)
    doc["pe_file"] = pe_path_for(path).filename().string();

  write_file(path, doc.dump(1) + "\n");
  write_feature_matrix(offsets, offsets_path_for(path));
  if (output.pe.cols() > 0)
    write_feature_matrix(output.pe, pe_path_for(path));
}

TokenizerOutput
read_tokens(const std::filesystem::path& path)
{
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("token file is not valid JSON: ") + e.what(), e.byte);
  }
  try {
    if (doc.at("format") != "s4tok-tokens")
      throw ParseError("not an s4tok token file", 0);
    TokenizerOutput out;
    out.mode = parse_grouping_mode(doc.at("mode").get<std::string>());
    out.normalize = doc.at("normalize").get<bool>();
    out.radius = doc.at("radius").get<double>();
    out.spacing = doc.at("spacing").get<double>();
    out.singleton_count = doc.value("singleton_count", Index{ 0 });
    out.centroid_indices = doc.at("centroid_indices").get<IndexList>();
    const auto& centroids = doc.at("centroids");
    out.centroids.resize(static_cast<Index>(centroids.size()), 3);
    for (std::size_t t = 0; t < centroids.size(); ++t)
      for (int d = 0; d < 3; ++d)
        out.centroids(static_cast<Index>(t), d) = centroids[t].at(d).get<double>();

    const auto dir = path.parent_path();
    const RowMatrix offsets = read_feature_matrix(dir / doc.at("offsets_file").get<std::string>());
    for (const auto& entry : doc.at("patches")) {
      TokenPatch p;
      p.center_index = entry.at("center").get<Index>();
      p.superpoint = entry.at("superpoint").get<Index>();
      p.members = entry.at("members").get<IndexList>();
      const auto first = entry.at("offset_row").get<Index>();
      const auto count = static_cast<Index>(p.members.size());
      if (first < 0 || first + count > offsets.rows())
        throw ParseError("patch offset rows exceed the offsets file", 0);
      p.offsets = offsets.middleRows(first, count);
      const auto t = static_cast<Index>(out.patches.size());
      if (t < out.centroids.rows())
        p.center = out.centroids.row(t).transpose();
      out.patches.push_back(std::move(p));
    }
    if (doc.contains("pe_file"))
      out.pe = read_feature_matrix(dir / doc.at("pe_file").get<std::string>());
    if (out.patches.size() != out.centroid_indices.size() ||
        static_cast<Index>(out.patches.size()) != out.centroids.rows())
      throw ParseError("token file patch and centroid counts disagree", 0);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed token file: ") + e.what(), 0);
  }
}

} // namespace s4tok::io
