#include "s4tok/config.hpp"

#include <set>

#include <json.hpp>

#include "s4tok/error.hpp"
#include "s4tok/io.hpp"

namespace s4tok {

namespace {

using nlohmann::json;

void
reject_unknown(const json& obj, const std::string& section, const std::set<std::string>& known)
{
  if (!obj.is_object())
    throw InvalidArgument("config section '" + section + "' must be an object");
  for (const auto& [key, value] : obj.items())
    if (!known.contains(key))
      throw InvalidArgument("unknown config key '" + key + "' in section '" + section + "'");
}

template<typename T>
void
read(const json& obj, const char* key, T& target)
{
  if (obj.contains(key))
    target = obj.at(key).get<T>();
}

} // namespace

Config
parse_config(const std::string& json_text)
{
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), e.byte);
  }

  Config cfg;
  try {
    reject_unknown(doc, "<root>", { "seed", "tokenizer", "segmentation", "ssl", "propagation" });
    read(doc, "seed", cfg.seed);

    if (doc.contains("tokenizer")) {
      const json& t = doc.at("tokenizer");
      reject_unknown(t, "tokenizer",
                     { "n_tokens", "patch_cap", "gamma", "alpha", "mode", "normalize", "pe_dim",
                       "wfps_exponent_sign" });
      auto& tc = cfg.tokenizer;
      read(t, "n_tokens", tc.n_tokens);
      read(t, "patch_cap", tc.patch_cap);
      read(t, "gamma", tc.gamma);
      read(t, "alpha", tc.alpha);
      read(t, "normalize", tc.normalize);
      read(t, "pe_dim", tc.pe_dim);
      if (t.contains("mode"))
        tc.mode = parse_grouping_mode(t.at("mode").get<std::string>());
      if (t.contains("wfps_exponent_sign")) {
        const auto s = t.at("wfps_exponent_sign").get<std::string>();
        if (s == "+" || s == "positive")
          tc.exponent_sign = ExponentSign::Positive;
        else if (s == "-" || s == "negative")
          tc.exponent_sign = ExponentSign::Negative;
        else
          throw InvalidArgument("wfps_exponent_sign must be 'positive' or 'negative'");
      }
    }

    if (doc.contains("segmentation")) {
      const json& s = doc.at("segmentation");
      reject_unknown(s, "segmentation",
                     { "anchor_count", "descriptor_k", "graph_k", "mu", "max_iters", "min_gain",
                       "min_size" });
      auto& sc = cfg.segmentation;
      read(s, "anchor_count", sc.descriptors.anchor_count);
      read(s, "descriptor_k", sc.descriptors.k);
      read(s, "graph_k", sc.graph_k);
      read(s, "mu", sc.mu);
      read(s, "max_iters", sc.pursuit.max_iters);
      read(s, "min_gain", sc.pursuit.min_gain);
      read(s, "min_size", sc.min_size);
    }

    if (doc.contains("ssl")) {
      const json& s = doc.at("ssl");
      reject_unknown(s, "ssl",
                     { "mask_ratio", "tau", "lambda_l", "lambda_g", "heads", "clusters",
                       "kmeans_iters", "sinkhorn_epsilon", "sinkhorn_iters", "kmeans_radius" });
      auto& sc = cfg.ssl;
      read(s, "mask_ratio", sc.mask_ratio);
      read(s, "tau", sc.tau);
      read(s, "lambda_l", sc.lambda_l);
      read(s, "lambda_g", sc.lambda_g);
      read(s, "heads", sc.heads);
      read(s, "clusters", sc.clusters);
      read(s, "kmeans_iters", sc.kmeans_iters);
      read(s, "sinkhorn_epsilon", sc.sinkhorn_epsilon);
      read(s, "sinkhorn_iters", sc.sinkhorn_iters);
      if (s.contains("kmeans_radius") && !s.at("kmeans_radius").is_null())
        sc.kmeans_radius = s.at("kmeans_radius").get<double>();
    }

    if (doc.contains("propagation")) {
      const json& p = doc.at("propagation");
      reject_unknown(p, "propagation", { "epsilon" });
      read(p, "epsilon", cfg.propagation.epsilon);
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config value has the wrong type: ") + e.what());
  }

  cfg.tokenizer.seed = cfg.seed;
  cfg.tokenizer.validate();
  if (!(cfg.ssl.mask_ratio >= 0.0 && cfg.ssl.mask_ratio < 1.0))
    throw InvalidArgument("ssl.mask_ratio must lie in [0, 1)");
  if (!(cfg.ssl.tau > 0.0))
    throw InvalidArgument("ssl.tau must be positive");
  if (!(cfg.segmentation.mu >= 0.0))
    throw InvalidArgument("segmentation.mu must be non-negative");
  if (!(cfg.propagation.epsilon > 0.0))
    throw InvalidArgument("propagation.epsilon must be positive");
  return cfg;
}

Config
load_config(const std::filesystem::path& path)
{
  return parse_config(io::read_file(path));
}

std::string
dump_config(const Config& c)
{
  json doc;
  doc["seed"] = c.seed;
  doc["tokenizer"] = {
    { "n_tokens", c.tokenizer.n_tokens },
    { "patch_cap", c.tokenizer.patch_cap },
    { "gamma", c.tokenizer.gamma },
    { "alpha", c.tokenizer.alpha },
    { "mode", to_string(c.tokenizer.mode) },
    { "normalize", c.tokenizer.normalize },
    { "pe_dim", c.tokenizer.pe_dim },
    { "wfps_exponent_sign",
      c.tokenizer.exponent_sign == ExponentSign::Positive ? "positive" : "negative" },
  };
  doc["segmentation"] = {
    { "anchor_count", c.segmentation.descriptors.anchor_count },
    { "descriptor_k", c.segmentation.descriptors.k },
    { "graph_k", c.segmentation.graph_k },
    { "mu", c.segmentation.mu },
    { "max_iters", c.segmentation.pursuit.max_iters },
    { "min_gain", c.segmentation.pursuit.min_gain },
    { "min_size", c.segmentation.min_size },
  };
  doc["ssl"] = {
    { "mask_ratio", c.ssl.mask_ratio },
    { "tau", c.ssl.tau },
    { "lambda_l", c.ssl.lambda_l },
    { "lambda_g", c.ssl.lambda_g },
    { "heads", c.ssl.heads },
    { "clusters", c.ssl.clusters },
    { "kmeans_iters", c.ssl.kmeans_iters },
    { "sinkhorn_epsilon", c.ssl.sinkhorn_epsilon },
    { "sinkhorn_iters", c.ssl.sinkhorn_iters },
  };
  doc["ssl"]["kmeans_radius"] = c.ssl.kmeans_radius ? json(*c.ssl.kmeans_radius) : json(nullptr);
  doc["propagation"] = { { "epsilon", c.propagation.epsilon } };
  return doc.dump(2);
}

} // namespace s4tok
