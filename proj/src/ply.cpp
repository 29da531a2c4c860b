#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <sstream>

#include "s4tok/error.hpp"
#include "s4tok/io.hpp"

namespace s4tok::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary readers assume a little-endian host");

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::size_t
scalar_size(ScalarType t)
{
  switch (t) {
    case ScalarType::Int8:
    case ScalarType::UInt8:
      return 1;
    case ScalarType::Int16:
    case ScalarType::UInt16:
      return 2;
    case ScalarType::Int32:
    case ScalarType::UInt32:
    case ScalarType::Float32:
      return 4;
    case ScalarType::Float64:
      return 8;
  }
  return 0;
}

bool
parse_scalar_type(const std::string& name, ScalarType& out)
{
  static const std::map<std::string, ScalarType> table{
    { "char", ScalarType::Int8 },     { "int8", ScalarType::Int8 },
    { "uchar", ScalarType::UInt8 },   { "uint8", ScalarType::UInt8 },
    { "short", ScalarType::Int16 },   { "int16", ScalarType::Int16 },
    { "ushort", ScalarType::UInt16 }, { "uint16", ScalarType::UInt16 },
    { "int", ScalarType::Int32 },     { "int32", ScalarType::Int32 },
    { "uint", ScalarType::UInt32 },   { "uint32", ScalarType::UInt32 },
    { "float", ScalarType::Float32 }, { "float32", ScalarType::Float32 },
    { "double", ScalarType::Float64 }, { "float64", ScalarType::Float64 },
  };
  auto it = table.find(name);
  if (it == table.end())
    return false;
  out = it->second;
  return true;
}

double
decode_scalar(const char* p, ScalarType t)
{
  switch (t) {
    case ScalarType::Int8: {
      std::int8_t v;
      std::memcpy(&v, p, 1);
      return v;
    }
    case ScalarType::UInt8: {
      std::uint8_t v;
      std::memcpy(&v, p, 1);
      return v;
    }
    case ScalarType::Int16: {
      std::int16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case ScalarType::UInt16: {
      std::uint16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case ScalarType::Int32: {
      std::int32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case ScalarType::UInt32: {
      std::uint32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case ScalarType::Float32: {
      float v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case ScalarType::Float64: {
      double v;
      std::memcpy(&v, p, 8);
      return v;
    }
  }
  return 0.0;
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::Float32;
  bool is_list = false;
  ScalarType count_type = ScalarType::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  bool binary = false;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
};

Header
parse_header(const std::string& bytes)
{
  Header h;
  std::size_t pos = 0;
  auto next_line = [&](std::size_t& line_start) -> std::string {
    line_start = pos;
    const std::size_t end = bytes.find('\n', pos);
    if (end == std::string::npos)
      throw ParseError("PLY header is not terminated by end_header", pos);
    std::string line = bytes.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    pos = end + 1;
    return line;
  };

  std::size_t at = 0;
  if (next_line(at) != "ply")
    throw ParseError("missing 'ply' magic", 0);

  bool have_format = false;
  while (true) {
    const std::string line = next_line(at);
    std::istringstream in(line);
    std::string keyword;
    in >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info")
      continue;
    if (keyword == "end_header")
      break;
    if (keyword == "format") {
      std::string fmt;
      in >> fmt;
      if (fmt == "ascii")
        h.binary = false;
      else if (fmt == "binary_little_endian")
        h.binary = true;
      else if (fmt == "binary_big_endian")
        throw ParseError("big-endian PLY is not supported", at);
      else
        throw ParseError("unknown PLY format '" + fmt + "'", at);
      have_format = true;
    } else if (keyword == "element") {
      Element e;
      long long count = -1;
      in >> e.name >> count;
      if (!in || count < 0)
        throw ParseError("malformed element line '" + line + "'", at);
      e.count = static_cast<std::size_t>(count);
      h.elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (h.elements.empty())
        throw ParseError("property declared before any element", at);
      Property p;
      std::string type;
      in >> type;
      if (type == "list") {
        std::string count_type;
        std::string item_type;
        in >> count_type >> item_type >> p.name;
        p.is_list = true;
        if (!parse_scalar_type(count_type, p.count_type) || !parse_scalar_type(item_type, p.type))
          throw ParseError("unknown list property types in '" + line + "'", at);
      } else {
        in >> p.name;
        if (!parse_scalar_type(type, p.type))
          throw ParseError("unknown property type '" + type + "'", at);
      }
      if (p.name.empty())
        throw ParseError("property without a name", at);
      h.elements.back().properties.push_back(std::move(p));
    } else {
      throw ParseError("unexpected header keyword '" + keyword + "'", at);
    }
  }
  if (!have_format)
    throw ParseError("PLY header lacks a format line", 0);
  h.body_offset = pos;
  return h;
}

// Columns of the vertex element, in declaration order.
struct VertexTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::size_t count = 0;

  const std::vector<double>* column(const std::string& name) const
  {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name)
        return &columns[i];
    return nullptr;
  }
};

class AsciiCursor {
public:
  AsciiCursor(const std::string& bytes, std::size_t pos)
    : bytes_(bytes)
    , pos_(pos)
  {}

  bool next(double& value)
  {
    while (pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      ++pos_;
    if (pos_ >= bytes_.size())
      return false;
    const char* begin = bytes_.data() + pos_;
    const char* end = bytes_.data() + bytes_.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc())
      throw ParseError("invalid number in PLY body", pos_);
    pos_ += static_cast<std::size_t>(ptr - begin);
    return true;
  }

  std::size_t offset() const { return pos_; }

private:
  const std::string& bytes_;
  std::size_t pos_;
};

VertexTable
parse_vertices(const std::string& bytes)
{
  const Header h = parse_header(bytes);
  VertexTable table;

  auto vertex_it = std::find_if(h.elements.begin(), h.elements.end(),
                                [](const Element& e) { return e.name == "vertex"; });
  if (vertex_it == h.elements.end())
    throw ParseError("PLY file has no vertex element", h.body_offset);
  const Element& vertex = *vertex_it;
  for (const auto& p : vertex.properties) {
    if (p.is_list)
      continue;
    table.names.push_back(p.name);
    table.columns.emplace_back();
    // A hostile header may declare far more rows than the body can hold.
    table.columns.back().reserve(std::min(vertex.count, bytes.size()));
  }
  table.count = vertex.count;

  if (!h.binary) {
    AsciiCursor cur(bytes, h.body_offset);
    for (const Element& e : h.elements) {
      const bool is_vertex = &e == &vertex;
      if (e.properties.empty())
        continue;
      for (std::size_t r = 0; r < e.count; ++r) {
        std::size_t col = 0;
        for (const auto& p : e.properties) {
          double v = 0.0;
          if (!cur.next(v))
            throw ParseError("PLY body ends in " + e.name + " " + std::to_string(r) + " of " +
                               std::to_string(e.count) + " declared",
                             cur.offset());
          if (p.is_list) {
            if (!(v >= 0) || v > static_cast<double>(bytes.size()))
              throw ParseError("invalid list length", cur.offset());
            for (auto i = static_cast<long long>(v); i > 0; --i)
              if (!cur.next(v))
                throw ParseError("PLY body ends inside a list property", cur.offset());
            continue;
          }
          // Match the binary path: a float property holds a float32.
          if (p.type == ScalarType::Float32)
            v = static_cast<float>(v);
          if (is_vertex)
            table.columns[col++].push_back(v);
        }
      }
      if (is_vertex)
        return table;
    }
    return table;
  }

  std::size_t pos = h.body_offset;
  auto need = [&](std::size_t n, const Element& e, std::size_t row) {
    if (n > bytes.size() - pos)
      throw ParseError("PLY body ends in " + e.name + " " + std::to_string(row) + " of " +
                         std::to_string(e.count) + " declared",
                       pos);
  };
  for (const Element& e : h.elements) {
    const bool is_vertex = &e == &vertex;
    if (e.properties.empty())
      continue;
    for (std::size_t r = 0; r < e.count; ++r) {
      std::size_t col = 0;
      for (const auto& p : e.properties) {
        if (p.is_list) {
          need(scalar_size(p.count_type), e, r);
          const double n = decode_scalar(bytes.data() + pos, p.count_type);
          pos += scalar_size(p.count_type);
          if (!(n >= 0) || n > static_cast<double>(bytes.size()))
            throw ParseError("invalid list length", pos);
          const std::size_t skip = static_cast<std::size_t>(n) * scalar_size(p.type);
          need(skip, e, r);
          pos += skip;
          continue;
        }
        need(scalar_size(p.type), e, r);
        if (is_vertex)
          table.columns[col++].push_back(decode_scalar(bytes.data() + pos, p.type));
        pos += scalar_size(p.type);
      }
    }
    if (is_vertex)
      break;
  }
  return table;
}

void
append_le(std::string& out, const void* p, std::size_t n)
{
  out.append(static_cast<const char*>(p), n);
}

} // namespace

PointCloud
parse_point_cloud(const std::string& bytes)
{
  const VertexTable table = parse_vertices(bytes);
  const auto* x = table.column("x");
  const auto* y = table.column("y");
  const auto* z = table.column("z");
  if (!x || !y || !z)
    throw ParseError("PLY vertex element lacks x/y/z properties", 0);

  PointCloud cloud;
  const auto n = static_cast<Index>(table.count);
  cloud.positions.resize(n, 3);
  for (Index i = 0; i < n; ++i)
    cloud.positions.row(i) << (*x)[i], (*y)[i], (*z)[i];

  std::vector<std::pair<std::string, const std::vector<double>*>> attrs;
  const auto* nx = table.column("nx");
  const auto* ny = table.column("ny");
  const auto* nz = table.column("nz");
  if (nx && ny && nz) {
    attrs.emplace_back("nx", nx);
    attrs.emplace_back("ny", ny);
    attrs.emplace_back("nz", nz);
  }
  const auto* red = table.column("red");
  const auto* green = table.column("green");
  const auto* blue = table.column("blue");
  if (red && green && blue) {
    attrs.emplace_back("red", red);
    attrs.emplace_back("green", green);
    attrs.emplace_back("blue", blue);
  }

  // Byte colors are rescaled; float colors are taken as already in [0, 1].
  const Header h = parse_header(bytes);
  const auto& vertex = *std::find_if(h.elements.begin(), h.elements.end(),
                                     [](const auto& e) { return e.name == "vertex"; });
  auto is_byte = [&](const std::string& name) {
    for (const auto& p : vertex.properties)
      if (p.name == name)
        return p.type == ScalarType::UInt8;
    return false;
  };

  cloud.attributes.resize(n, static_cast<Index>(attrs.size()));
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    const bool color = attrs[a].first == "red" || attrs[a].first == "green" || attrs[a].first == "blue";
    const double scale = color && is_byte(attrs[a].first) ? 1.0 / 255.0 : 1.0;
    for (Index i = 0; i < n; ++i)
      cloud.attributes(i, static_cast<Index>(a)) = (*attrs[a].second)[i] * scale;
    cloud.attribute_names.push_back(attrs[a].first);
  }
  if (!cloud.positions.allFinite())
    throw ParseError("PLY vertex coordinates are not finite", h.body_offset);
  return cloud;
}

PointCloud
read_point_cloud(const std::filesystem::path& path)
{
  return parse_point_cloud(read_file(path));
}

std::vector<Index>
read_vertex_labels(const std::filesystem::path& path, const std::string& name)
{
  const VertexTable table = parse_vertices(read_file(path));
  const auto* col = table.column(name);
  if (!col)
    return {};
  std::vector<Index> out(col->size());
  for (std::size_t i = 0; i < col->size(); ++i)
    out[i] = static_cast<Index>(std::llround((*col)[i]));
  return out;
}

void
write_point_cloud(const PointCloud& cloud,
                  const std::filesystem::path& path,
                  PlyFormat format,
                  const std::vector<Index>& labels)
{
  cloud.validate();
  const Index n = cloud.size();
  if (!labels.empty() && static_cast<Index>(labels.size()) != n)
    throw InvalidArgument("write_point_cloud: one label per point required");

  std::vector<std::string> names = cloud.attribute_names;
  for (Index a = static_cast<Index>(names.size()); a < cloud.attribute_dim(); ++a)
    names.push_back("attr" + std::to_string(a));
  auto is_color = [](const std::string& s) { return s == "red" || s == "green" || s == "blue"; };

  std::ostringstream header;
  header << "ply\n"
         << "format " << (format == PlyFormat::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
         << "element vertex " << n << "\n"
         << "property float x\nproperty float y\nproperty float z\n";
  for (const auto& name : names)
    header << "property " << (is_color(name) ? "uchar " : "float ") << name << "\n";
  if (!labels.empty())
    header << "property int label\n";
  header << "end_header\n";

  std::string out = header.str();
  auto color_byte = [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  for (Index i = 0; i < n; ++i) {
    if (format == PlyFormat::Ascii) {
      std::ostringstream line;
      line.precision(9);
      line << static_cast<float>(cloud.positions(i, 0)) << ' '
           << static_cast<float>(cloud.positions(i, 1)) << ' '
           << static_cast<float>(cloud.positions(i, 2));
      for (std::size_t a = 0; a < names.size(); ++a) {
        const double v = cloud.attributes(i, static_cast<Index>(a));
        if (is_color(names[a]))
          line << ' ' << static_cast<int>(color_byte(v));
        else
          line << ' ' << static_cast<float>(v);
      }
      if (!labels.empty())
        line << ' ' << labels[i];
      out += line.str();
      out += '\n';
      continue;
    }
    for (int d = 0; d < 3; ++d) {
      const auto f = static_cast<float>(cloud.positions(i, d));
      append_le(out, &f, 4);
    }
    for (std::size_t a = 0; a < names.size(); ++a) {
      const double v = cloud.attributes(i, static_cast<Index>(a));
      if (is_color(names[a])) {
        const std::uint8_t b = color_byte(v);
        append_le(out, &b, 1);
      } else {
        const auto f = static_cast<float>(v);
        append_le(out, &f, 4);
      }
    }
    if (!labels.empty()) {
      const auto l = static_cast<std::int32_t>(labels[i]);
      append_le(out, &l, 4);
    }
  }
  write_file(path, out);
}

} // namespace s4tok::io
