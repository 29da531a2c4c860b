#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "s4tok/config.hpp"
#include "s4tok/error.hpp"
#include "s4tok/io.hpp"
#include "s4tok/metrics.hpp"
#include "s4tok/propagation.hpp"
#include "s4tok/rng.hpp"
#include "s4tok/segmentation.hpp"
#include "s4tok/ssl.hpp"
#include "s4tok/synthetic.hpp"
#include "s4tok/tokenizer.hpp"

namespace s4tok::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<double> gamma;
  std::optional<double> alpha;
  std::optional<Index> tokens;
  std::optional<Index> cap;
  bool no_normalize = false;
  std::string out;
};

void
add_config_flags(CLI::App* app, Common& c)
{
  app->add_option("--config", c.config_path, "JSON configuration file");
  app->add_option("--seed", c.seed, "Seed for every random choice");
}

void
add_tokenizer_flags(CLI::App* app, Common& c)
{
  app->add_option("--mode", c.mode, "Grouping mode")
    ->check(CLI::IsMember({ "knn", "ball", "knn+spt", "ball+spt", "spt" }));
  app->add_option("--gamma", c.gamma, "WFPS exponent");
  app->add_option("--alpha", c.alpha, "Radius multiplier");
  app->add_option("--tokens", c.tokens, "Number of tokens N");
  app->add_option("--cap", c.cap, "Patch cap M");
  app->add_flag("--no-normalize", c.no_normalize, "Keep raw patch offsets");
}

Config
resolve_config(const Common& c)
{
  Config cfg = c.config_path.empty() ? Config{} : load_config(c.config_path);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.tokenizer.seed = *c.seed;
  }
  if (c.mode)
    cfg.tokenizer.mode = parse_grouping_mode(*c.mode);
  if (c.gamma)
    cfg.tokenizer.gamma = *c.gamma;
  if (c.alpha)
    cfg.tokenizer.alpha = *c.alpha;
  if (c.tokens)
    cfg.tokenizer.n_tokens = *c.tokens;
  if (c.cap)
    cfg.tokenizer.patch_cap = *c.cap;
  if (c.no_normalize)
    cfg.tokenizer.normalize = false;
  cfg.tokenizer.validate();
  return cfg;
}

std::size_t
worker_count(std::size_t jobs)
{
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("S4TOK_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
      throw InvalidArgument(std::string("S4TOK_THREADS must be a positive integer, got '") + env + "'");
    cap = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(cap, jobs));
}

// Runs job(i) for i in [0, n) on a bounded pool; the first failure in job
// order is rethrown.
void
parallel_for(std::size_t n, const std::function<void(std::size_t)>& job)
{
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = worker_count(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      job(i);
    return;
  }
  std::atomic<std::size_t> next{ 0 };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool)
    t.join();
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

Json
power_histogram(const std::vector<Index>& values)
{
  std::map<int, Index> bins;
  for (Index v : values) {
    int b = 0;
    while ((Index{ 2 } << b) <= v)
      ++b;
    ++bins[b];
  }
  Json hist = Json::array();
  for (const auto& [b, count] : bins)
    hist.push_back({ { "min", Index{ 1 } << b }, { "max", (Index{ 2 } << b) - 1 }, { "count", count } });
  return hist;
}

Json
size_histogram(const std::vector<TokenPatch>& patches)
{
  std::map<std::size_t, Index> counts;
  for (const auto& p : patches)
    ++counts[p.members.size()];
  Json hist = Json::array();
  for (const auto& [size, count] : counts)
    hist.push_back({ { "size", size }, { "count", count } });
  return hist;
}

SuperpointPartition
load_partition(const PointCloud& cloud,
               const std::string& partition_path,
               bool run_segmentation,
               const Config& cfg)
{
  if (!partition_path.empty()) {
    auto partition = io::read_partition(partition_path);
    if (partition.point_count() != cloud.size())
      throw InvalidArgument("partition " + partition_path + " has " +
                            std::to_string(partition.point_count()) + " labels for " +
                            std::to_string(cloud.size()) + " points");
    return partition;
  }
  if (run_segmentation)
    return segment(cloud, cfg.segmentation).partition;
  return SuperpointPartition::from_labels(std::vector<Index>(static_cast<std::size_t>(cloud.size()), 0));
}

RowMatrix
token_features(const TokenizerOutput& tokens)
{
  if (tokens.patches.empty())
    throw InvalidArgument("token file holds no patches");
  const Eigen::VectorXd first = default_featurizer(tokens.patches.front());
  RowMatrix f(static_cast<Index>(tokens.patches.size()), first.size());
  for (std::size_t i = 0; i < tokens.patches.size(); ++i)
    f.row(static_cast<Index>(i)) = default_featurizer(tokens.patches[i]).transpose();
  return f;
}

std::string
shape(const RowMatrix& m)
{
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

RowMatrix
load_token_features(const std::string& path, const TokenizerOutput& tokens, const char* what)
{
  if (path.empty())
    return token_features(tokens);
  RowMatrix f = io::read_feature_matrix(path);
  if (f.rows() != static_cast<Index>(tokens.patches.size()))
    throw InvalidArgument(std::string(what) + " features " + path + " are " + shape(f) + " but there are " +
                          std::to_string(tokens.patches.size()) + " tokens");
  return f;
}

double
kmeans_radius(const Config& cfg, const TokenizerOutput& tokens)
{
  const double r = cfg.ssl.kmeans_radius.value_or(tokens.radius);
  if (!(r > 0.0))
    throw InvalidArgument("K-Means radius must be positive; set ssl.kmeans_radius");
  return r;
}

ssl::KMeansParams
kmeans_params(const Config& cfg, double radius)
{
  ssl::KMeansParams p;
  p.k = cfg.ssl.clusters;
  p.radius = radius;
  p.iters = cfg.ssl.kmeans_iters;
  p.sinkhorn_epsilon = cfg.ssl.sinkhorn_epsilon;
  p.sinkhorn_iters = cfg.ssl.sinkhorn_iters;
  p.seed = derive_seed(cfg.seed, 0x6b6d);
  return p;
}

// ------------------------------------------------------------ subcommands

int
cmd_segment(const std::string& cloud_path, const Common& c, std::ostream& out)
{
  if (c.out.empty())
    throw InvalidArgument("--out is required");
  const Config cfg = resolve_config(c);
  const PointCloud cloud = io::read_point_cloud(cloud_path);
  const SegmentationResult seg = segment(cloud, cfg.segmentation);
  io::write_partition(seg.partition.labels, c.out);

  std::vector<Index> sizes = seg.partition.sizes;
  std::sort(sizes.rbegin(), sizes.rend());
  const Index top2 = sizes[0] + (sizes.size() > 1 ? sizes[1] : 0);
  Json report;
  report["command"] = "segment";
  report["points"] = cloud.size();
  report["superpoints"] = seg.partition.count();
  report["energy"] = seg.energy;
  report["iterations"] = seg.energy_trace.size() > 0 ? seg.energy_trace.size() - 1 : 0;
  report["merged_small"] = seg.merged_small;
  report["largest"] = std::vector<Index>(sizes.begin(), sizes.begin() + std::min<std::size_t>(5, sizes.size()));
  report["top2_coverage"] = static_cast<double>(top2) / static_cast<double>(cloud.size());
  report["size_histogram"] = power_histogram(seg.partition.sizes);
  report["out"] = c.out;
  out << report.dump(2) << '\n';
  return kOk;
}

int
cmd_tokenize(const std::string& cloud_path,
             const std::string& partition_path,
             bool run_segmentation,
             const Common& c,
             std::ostream& out)
{
  if (c.out.empty())
    throw InvalidArgument("--out is required");
  if (!partition_path.empty() && run_segmentation)
    throw InvalidArgument("--partition and --segment are exclusive");
  const Config cfg = resolve_config(c);
  const PointCloud cloud = io::read_point_cloud(cloud_path);
  const SuperpointPartition partition = load_partition(cloud, partition_path, run_segmentation, cfg);
  const TokenizerOutput tokens = tokenize(cloud, partition, cfg.tokenizer);
  io::write_tokens(tokens, c.out);

  Json report;
  report["command"] = "tokenize";
  report["points"] = cloud.size();
  report["superpoints"] = partition.count();
  report["tokens"] = tokens.patches.size();
  report["mode"] = to_string(tokens.mode);
  report["normalize"] = tokens.normalize;
  report["radius"] = tokens.radius;
  report["spacing"] = tokens.spacing;
  report["singleton_count"] = tokens.singleton_count;
  report["patch_size_histogram"] = size_histogram(tokens.patches);
  report["superpoint_purity"] = patch_purity(tokens.patches, partition.labels);
  const auto truth = io::read_vertex_labels(cloud_path, "label");
  if (!truth.empty()) {
    report["label_purity"] = patch_purity(tokens.patches, truth);
    report["boundary_crossing_rate"] = boundary_crossing_rate(tokens.patches, truth);
  }
  report["out"] = c.out;
  out << report.dump(2) << '\n';
  return kOk;
}

int
cmd_propagate(const std::string& cloud_path,
              const std::string& tokens_path,
              const std::string& partition_path,
              bool run_segmentation,
              const std::string& features_path,
              const Common& c,
              std::ostream& out)
{
  if (c.out.empty())
    throw InvalidArgument("--out is required");
  const Config cfg = resolve_config(c);
  const PointCloud cloud = io::read_point_cloud(cloud_path);
  const SuperpointPartition partition = load_partition(cloud, partition_path, run_segmentation, cfg);
  const TokenizerOutput tokens = io::read_tokens(tokens_path);

  PropagationInputs in;
  in.points = cloud.positions;
  in.point_labels = partition.labels;
  in.centroids = tokens.centroids;
  in.centroid_features = load_token_features(features_path, tokens, "centroid");
  in.epsilon = cfg.propagation.epsilon;
  for (Index idx : tokens.centroid_indices) {
    if (idx < 0 || idx >= cloud.size())
      throw InvalidArgument("token centroid index " + std::to_string(idx) + " outside the cloud");
    in.centroid_labels.push_back(partition.labels[static_cast<std::size_t>(idx)]);
  }
  const PropagationResult res = propagate_features(in);
  io::write_feature_matrix(res.features, c.out);

  Json report;
  report["command"] = "propagate";
  report["points"] = cloud.size();
  report["dims"] = res.features.cols();
  report["fallback_count"] = res.fallback_count;
  report["out"] = c.out;
  out << report.dump(2) << '\n';
  return kOk;
}

int
cmd_cluster(const std::string& tokens_path, const std::string& features_path, const Common& c, std::ostream& out)
{
  if (c.out.empty())
    throw InvalidArgument("--out is required");
  const Config cfg = resolve_config(c);
  const TokenizerOutput tokens = io::read_tokens(tokens_path);
  const RowMatrix features = load_token_features(features_path, tokens, "token");
  const double radius = kmeans_radius(cfg, tokens);
  const auto km = ssl::constrained_kmeans(features, tokens.centroids, kmeans_params(cfg, radius));
  io::write_feature_matrix(km.assignment, c.out);

  std::vector<Index> counts(static_cast<std::size_t>(km.assignment.cols()), 0);
  for (Index n = 0; n < km.assignment.rows(); ++n) {
    Index best = 0;
    km.assignment.row(n).maxCoeff(&best);
    ++counts[static_cast<std::size_t>(best)];
  }
  Json report;
  report["command"] = "cluster";
  report["tokens"] = km.assignment.rows();
  report["clusters"] = km.assignment.cols();
  report["radius"] = radius;
  report["iterations"] = km.iterations;
  report["relaxed_rows"] = km.relaxed_rows;
  report["reseeded_clusters"] = km.reseeded_clusters;
  report["hard_counts"] = counts;
  report["out"] = c.out;
  out << report.dump(2) << '\n';
  return kOk;
}

int
cmd_losses(const std::string& tokens_path,
           const std::string& teacher_path,
           const std::string& target_path,
           const std::string& student_path,
           const Common& c,
           std::ostream& out)
{
  const Config cfg = resolve_config(c);
  const TokenizerOutput tokens = io::read_tokens(tokens_path);
  const RowMatrix teacher = load_token_features(teacher_path, tokens, "teacher");
  const RowMatrix target = io::read_feature_matrix(target_path);
  const RowMatrix student = student_path.empty() ? teacher : io::read_feature_matrix(student_path);
  if (target.rows() != teacher.rows() || target.cols() != teacher.cols())
    throw InvalidArgument("target features are " + shape(target) + ", teacher features are " + shape(teacher));
  if (student.rows() != teacher.rows() || student.cols() != teacher.cols())
    throw InvalidArgument("student features are " + shape(student) + ", teacher features are " + shape(teacher));
  const Index n = teacher.rows();
  const Index d = teacher.cols();

  const auto mask = ssl::random_mask(n, cfg.ssl.mask_ratio, derive_seed(cfg.seed, 0x6d61736b));

  // Teacher targets from the locality-constrained clustering.
  const auto km = ssl::constrained_kmeans(teacher, tokens.centroids, kmeans_params(cfg, kmeans_radius(cfg, tokens)));

  double assign = 0.0;
  if (!mask.masked.empty()) {
    const Index m = static_cast<Index>(mask.masked.size());
    RowMatrix visible(static_cast<Index>(mask.visible.size()), d);
    for (std::size_t i = 0; i < mask.visible.size(); ++i)
      visible.row(static_cast<Index>(i)) = student.row(mask.visible[i]);
    // Queries start at zero and carry only the positional encoding, which
    // is truncated or zero-padded to the feature width.
    RowMatrix queries = RowMatrix::Zero(m, d);
    RowMatrix pos = RowMatrix::Zero(m, d);
    const Index pe_cols = std::min<Index>(d, tokens.pe.cols());
    RowMatrix teacher_rows(m, km.assignment.cols());
    for (Index i = 0; i < m; ++i) {
      const Index t = mask.masked[static_cast<std::size_t>(i)];
      if (pe_cols > 0 && tokens.pe.rows() == n)
        pos.row(i).head(pe_cols) = tokens.pe.row(t).head(pe_cols);
      teacher_rows.row(i) = km.assignment.row(t);
    }
    const auto decoded = ssl::query_decoder_forward(queries, pos, visible, cfg.ssl.heads);
    const RowMatrix predicted = ssl::student_assignment(decoded.features, km.state.centroid_features, cfg.ssl.tau);
    IndexList rows(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i)
      rows[static_cast<std::size_t>(i)] = i;
    assign = ssl::assignment_loss(teacher_rows, predicted, rows);
  }

  std::vector<Index> labels;
  for (const auto& p : tokens.patches)
    labels.push_back(p.superpoint);
  const auto groups = SuperpointPartition::from_labels(labels);
  const double local = ssl::local_distill_loss(pool_superpoint_features(student, groups),
                                               pool_superpoint_features(target, groups));
  const double global = ssl::global_distill_loss(student.colwise().mean(), target.colwise().mean());
  const auto loss = ssl::total_loss(assign, local, global, cfg.ssl.lambda_l, cfg.ssl.lambda_g);

  Json report;
  report["command"] = "losses";
  report["tokens"] = n;
  report["masked"] = mask.masked.size();
  report["visible"] = mask.visible.size();
  report["clusters"] = km.assignment.cols();
  report["assign"] = loss.assign;
  report["distill_local"] = loss.distill_local;
  report["distill_global"] = loss.distill_global;
  report["total"] = loss.total;
  report["lambda_l"] = loss.lambda_l;
  report["lambda_g"] = loss.lambda_g;
  report["empty_mask_warning"] = mask.masked.empty();
  const std::string text = report.dump(2) + "\n";
  if (!c.out.empty())
    io::write_file(c.out, text);
  out << text;
  return kOk;
}

std::vector<double>
parse_scales(const std::string& csv)
{
  std::vector<double> scales;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !(v > 0.0) || !std::isfinite(v))
      throw InvalidArgument("--scales expects positive comma-separated numbers, got '" + csv + "'");
    scales.push_back(v);
  }
  if (scales.empty())
    throw InvalidArgument("--scales is empty");
  return scales;
}

struct BenchInput {
  std::string name;
  PointCloud cloud;
  std::vector<Index> truth;
};

double
elapsed_ms(std::chrono::steady_clock::time_point since)
{
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

Json
bench_one(const BenchInput& input, const Config& cfg, const std::vector<double>& scales, bool timings)
{
  struct ScaleRun {
    PointCloud cloud;
    SuperpointPartition partition;
    double segment_ms = 0.0;
  };
  std::vector<ScaleRun> runs;
  for (double s : scales) {
    ScaleRun run;
    run.cloud = scaled(input.cloud, s);
    const auto t0 = std::chrono::steady_clock::now();
    run.partition = segment(run.cloud, cfg.segmentation).partition;
    run.segment_ms = elapsed_ms(t0);
    runs.push_back(std::move(run));
  }
  Index same_partitions = 0;
  for (const auto& r : runs)
    if (same_partition(r.partition.labels, runs.front().partition.labels))
      ++same_partitions;

  Json variants = Json::array();
  for (GroupingMode mode : { GroupingMode::Knn, GroupingMode::Ball, GroupingMode::KnnSpt, GroupingMode::BallSpt }) {
    for (bool normalize : { true, false }) {
      TokenizerConfig tc = cfg.tokenizer;
      tc.mode = mode;
      tc.normalize = normalize;
      std::vector<TokenizerOutput> outs;
      std::vector<double> ms;
      for (const auto& r : runs) {
        const auto t0 = std::chrono::steady_clock::now();
        outs.push_back(tokenize(r.cloud, r.partition, tc));
        ms.push_back(elapsed_ms(t0));
      }
      double agreement = 1.0;
      double deviation = 0.0;
      bool same_centroids = true;
      for (const auto& o : outs) {
        agreement = std::min(agreement, membership_agreement(outs.front().patches, o.patches));
        deviation = std::max(deviation, max_offset_deviation(outs.front().patches, o.patches));
        same_centroids = same_centroids && o.centroid_indices == outs.front().centroid_indices;
      }
      double purity = 0.0, crossing = 0.0, sp_purity = 0.0, mean_size = 0.0;
      for (std::size_t i = 0; i < outs.size(); ++i) {
        sp_purity += patch_purity(outs[i].patches, runs[i].partition.labels);
        if (!input.truth.empty()) {
          purity += patch_purity(outs[i].patches, input.truth);
          crossing += boundary_crossing_rate(outs[i].patches, input.truth);
        }
        Index members = 0;
        for (const auto& p : outs[i].patches)
          members += static_cast<Index>(p.members.size());
        mean_size += static_cast<double>(members) / static_cast<double>(outs[i].patches.size());
      }
      const double k = static_cast<double>(outs.size());
      Json v;
      v["mode"] = to_string(mode);
      v["normalize"] = normalize;
      if (input.truth.empty()) {
        v["purity"] = nullptr;
        v["boundary_crossing_rate"] = nullptr;
      } else {
        v["purity"] = purity / k;
        v["boundary_crossing_rate"] = crossing / k;
      }
      v["superpoint_purity"] = sp_purity / k;
      v["cross_scale_agreement"] = agreement;
      v["identical_centroids"] = same_centroids;
      v["offset_deviation"] = deviation;
      v["mean_patch_size"] = mean_size / k;
      v["singleton_count"] = outs.front().singleton_count;
      if (timings)
        v["tokenize_ms"] = ms;
      variants.push_back(v);
    }
  }

  Json rec;
  rec["input"] = input.name;
  rec["points"] = input.cloud.size();
  rec["superpoints"] = runs.front().partition.count();
  rec["partition_agreement"] = static_cast<double>(same_partitions) / static_cast<double>(runs.size());
  if (timings) {
    std::vector<double> seg_ms;
    for (const auto& r : runs)
      seg_ms.push_back(r.segment_ms);
    rec["segment_ms"] = seg_ms;
  }
  rec["variants"] = variants;
  return rec;
}

int
cmd_bench(const std::vector<std::string>& clouds,
          bool synthetic_scene,
          Index synthetic_points,
          const std::string& scales_csv,
          bool timings,
          const Common& c,
          std::ostream& out)
{
  if (clouds.empty() && !synthetic_scene)
    throw InvalidArgument("bench needs at least one cloud or --synthetic");
  const Config cfg = resolve_config(c);
  const std::vector<double> scales = parse_scales(scales_csv);

  std::vector<BenchInput> inputs;
  for (const auto& path : clouds)
    inputs.push_back({ path, io::read_point_cloud(path), io::read_vertex_labels(path, "label") });
  if (synthetic_scene) {
    auto scene = synthetic::make_scene(synthetic_points, 0.005, derive_seed(cfg.seed, 0x73796e));
    inputs.push_back({ "synthetic", std::move(scene.cloud), std::move(scene.labels) });
  }

  std::vector<Json> records(inputs.size());
  parallel_for(inputs.size(), [&](std::size_t i) { records[i] = bench_one(inputs[i], cfg, scales, timings); });

  Json report;
  report["command"] = "bench";
  report["seed"] = cfg.seed;
  report["scales"] = scales;
  report["tokens"] = cfg.tokenizer.n_tokens;
  report["cap"] = cfg.tokenizer.patch_cap;
  report["gamma"] = cfg.tokenizer.gamma;
  report["alpha"] = cfg.tokenizer.alpha;
  report["inputs"] = records;
  const std::string text = report.dump(2) + "\n";
  if (!c.out.empty())
    io::write_file(c.out, text);
  out << text;
  return kOk;
}

int
cmd_synth(const std::string& kind,
          Index points,
          double noise,
          double gap,
          bool ascii,
          const Common& c,
          std::ostream& out)
{
  if (c.out.empty())
    throw InvalidArgument("--out is required");
  const std::uint64_t seed = c.seed.value_or(0);
  synthetic::Scene scene;
  if (kind == "scene")
    scene = synthetic::make_scene(points, noise, seed);
  else if (kind == "perpendicular")
    scene = synthetic::make_perpendicular_planes(points, noise, seed);
  else if (kind == "parallel")
    scene = synthetic::make_parallel_planes(points, gap, seed);
  else {
    scene.cloud = synthetic::make_uniform_cube(points, seed);
    scene.labels.assign(static_cast<std::size_t>(points), 0);
  }
  io::write_point_cloud(scene.cloud, c.out, ascii ? io::PlyFormat::Ascii : io::PlyFormat::BinaryLittleEndian,
                        scene.labels);
  Json report;
  report["command"] = "synth";
  report["kind"] = kind;
  report["points"] = points;
  report["out"] = c.out;
  out << report.dump(2) << '\n';
  return kOk;
}

} // namespace

int
run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{ "Scale-invariant point-cloud tokenizer" };
  app.name("s4tok");
  app.require_subcommand(1);

  Common c;
  std::string cloud, partition, tokens, features, teacher, target, student, kind = "scene";
  std::vector<std::string> clouds;
  bool run_segmentation = false, synthetic_scene = false, timings = false, ascii = false;
  std::string scales_csv = "0.01,1,100";
  Index points = 2048;
  double noise = 0.005, gap = 0.05;

  auto* seg = app.add_subcommand("segment", "Oversegment a cloud into superpoints");
  seg->add_option("cloud", cloud, "PLY point cloud")->required();
  seg->add_option("--out", c.out, "Partition file to write");
  add_config_flags(seg, c);

  auto* tok = app.add_subcommand("tokenize", "Build token patches");
  tok->add_option("cloud", cloud, "PLY point cloud")->required();
  tok->add_option("--partition", partition, "Superpoint partition file");
  tok->add_flag("--segment", run_segmentation, "Segment the cloud first");
  tok->add_option("--out", c.out, "Token JSON to write");
  add_config_flags(tok, c);
  add_tokenizer_flags(tok, c);

  auto* prop = app.add_subcommand("propagate", "Spread token features back to every point");
  prop->add_option("cloud", cloud, "PLY point cloud")->required();
  prop->add_option("--tokens", tokens, "Token JSON")->required();
  prop->add_option("--partition", partition, "Superpoint partition file");
  prop->add_flag("--segment", run_segmentation, "Segment the cloud first");
  prop->add_option("--features", features, "Centroid features (S4F1); default: patch statistics");
  prop->add_option("--out", c.out, "Point features to write (S4F1)");
  add_config_flags(prop, c);

  auto* clu = app.add_subcommand("cluster", "Locality-constrained soft K-Means over tokens");
  clu->add_option("tokens", tokens, "Token JSON")->required();
  clu->add_option("--features", features, "Token features (S4F1); default: patch statistics");
  clu->add_option("--out", c.out, "Assignment matrix to write (S4F1)");
  add_config_flags(clu, c);

  auto* los = app.add_subcommand("losses", "Evaluate the self-supervised losses");
  los->add_option("tokens", tokens, "Token JSON")->required();
  los->add_option("teacher", teacher, "Teacher token features (S4F1)")->required();
  los->add_option("target", target, "Distillation target features (S4F1)")->required();
  los->add_option("--student", student, "Student token features (S4F1); default: teacher");
  los->add_option("--out", c.out, "Report to write");
  add_config_flags(los, c);

  auto* ben = app.add_subcommand("bench", "Compare tokenizer variants across scales");
  ben->add_option("clouds", clouds, "PLY point clouds (an int 'label' property enables purity)");
  ben->add_flag("--synthetic", synthetic_scene, "Add a generated scene");
  ben->add_option("--points", points, "Points in the generated scene");
  ben->add_option("--scales", scales_csv, "Comma-separated scale factors");
  ben->add_flag("--timings", timings, "Include wall-clock timings");
  ben->add_option("--out", c.out, "Report to write");
  add_config_flags(ben, c);
  add_tokenizer_flags(ben, c);

  auto* syn = app.add_subcommand("synth", "Write a generated labelled cloud");
  syn->add_option("--kind", kind, "Scene kind")
    ->check(CLI::IsMember({ "scene", "perpendicular", "parallel", "cube" }));
  syn->add_option("--points", points, "Point count");
  syn->add_option("--noise", noise, "Gaussian noise");
  syn->add_option("--gap", gap, "Plane gap for --kind parallel");
  syn->add_flag("--ascii", ascii, "Write ASCII PLY");
  syn->add_option("--seed", c.seed, "Seed");
  syn->add_option("--out", c.out, "PLY to write");

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("s4tok");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage)
    argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (seg->parsed())
      return cmd_segment(cloud, c, out);
    if (tok->parsed())
      return cmd_tokenize(cloud, partition, run_segmentation, c, out);
    if (prop->parsed())
      return cmd_propagate(cloud, tokens, partition, run_segmentation, features, c, out);
    if (clu->parsed())
      return cmd_cluster(tokens, features, c, out);
    if (los->parsed())
      return cmd_losses(tokens, teacher, target, student, c, out);
    if (ben->parsed())
      return cmd_bench(clouds, synthetic_scene, points, scales_csv, timings, c, out);
    if (syn->parsed())
      return cmd_synth(kind, points, noise, gap, ascii, c, out);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}

} // namespace s4tok::cli
