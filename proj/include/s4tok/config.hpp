#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "s4tok/segmentation.hpp"
#include "s4tok/ssl.hpp"
#include "s4tok/tokenizer.hpp"

namespace s4tok {

struct SslConfig {
  double mask_ratio = 0.6;
  double tau = 0.1;
  double lambda_l = 0.5;
  double lambda_g = 0.5;
  Index heads = 1;
  Index clusters = 24;
  int kmeans_iters = 20;
  double sinkhorn_epsilon = 0.05;
  int sinkhorn_iters = 3;
  /// K-Means locality radius; unset reuses the tokenizer radius.
  std::optional<double> kmeans_radius;
};

struct PropagationConfig {
  double epsilon = 1e-4;
};

/// Every tunable of the pipeline. Serialized as one JSON document with the
/// sections "tokenizer", "segmentation", "ssl", "propagation" and a
/// top-level "seed"; unknown keys are rejected.
struct Config {
  std::uint64_t seed = 0;
  TokenizerConfig tokenizer;
  SegmentationParams segmentation;
  SslConfig ssl;
  PropagationConfig propagation;
};

Config parse_config(const std::string& json_text);
Config load_config(const std::filesystem::path& path);
std::string dump_config(const Config& config);

} // namespace s4tok
