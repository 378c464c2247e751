#include "dcrf/config.hpp"

#include "json.hpp"

#include "dcrf/errors.hpp"
#include "dcrf/io_util.hpp"

using nlohmann::json;

namespace dcrf {

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) {
        known = true;
        break;
      }
    if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T take(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": bad value for '" + std::string(key) + "'");
  }
}

KernelConfig default_spatial() { return {FeatureKind::spatial, {3.0, 3.0}, 1.0}; }
KernelConfig default_bilateral() { return {FeatureKind::bilateral, {20.0, 20.0, 16.0, 16.0, 16.0}, 1.0}; }

KernelConfig parse_kernel(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": kernel entries must be objects");
  check_keys(j, {"kind", "sigma", "weight"}, where);
  KernelConfig k;
  const std::string kind = take<std::string>(j, "kind", "spatial", where);
  if (kind == "spatial")
    k.kind = FeatureKind::spatial;
  else if (kind == "bilateral")
    k.kind = FeatureKind::bilateral;
  else
    throw ConfigError(where + ": kernel kind must be 'spatial' or 'bilateral'");
  k.sigma = take<std::vector<double>>(j, "sigma", {}, where);
  if (k.sigma.empty()) k.sigma.assign(feature_dim(k.kind), k.kind == FeatureKind::spatial ? 3.0 : 16.0);
  k.weight = take<double>(j, "weight", 1.0, where);
  return k;
}

}  // namespace

void RunConfig::validate() const {
  if (labels < 2) throw ConfigError("config: 'labels' must be at least 2");
  if (unary != "linear" && unary != "convnet") throw ConfigError("config: 'unary' must be 'linear' or 'convnet'");
  if (crf.iterations < 0) throw ConfigError("config: crf 'iterations' must be nonnegative");
  if (crf.kernels.empty()) throw ConfigError("config: crf needs at least one kernel");
  for (const auto& k : crf.kernels) {
    if (k.sigma.size() != static_cast<std::size_t>(feature_dim(k.kind)))
      throw ConfigError("config: kernel sigma must list one bandwidth per feature dimension");
    for (double s : k.sigma)
      if (!(s > 0.0)) throw ConfigError("config: kernel bandwidths must be positive");
  }
  if (!crf.compatibility_matrix.empty()) {
    if (crf.compatibility == CompatMode::potts)
      throw ConfigError("config: a compatibility matrix needs compatibility 'matrix'");
    if (crf.compatibility_matrix.size() != static_cast<std::size_t>(labels) * labels)
      throw ConfigError("config: compatibility matrix must be labels x labels");
  }
  if (crf.normalize_filter && crf.sigma_grad == SigmaGradMode::brute)
    throw ConfigError("config: analytic bandwidth gradients are unavailable with filter normalization");
  if (crf.filter_mode == FilterMode::lattice && crf.sigma_grad == SigmaGradMode::brute)
    throw ConfigError("config: analytic bandwidth gradients need the brute filter; use finite_diff or frozen");
  if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0))
    throw ConfigError("config: momentum must lie in [0, 1)");
  if (optimizer.weight_decay < 0.0 || optimizer.lr_top < 0.0 || optimizer.lr_body < 0.0 || optimizer.lr_crf < 0.0)
    throw ConfigError("config: optimizer rates must be nonnegative");
  if (training.epochs < 0) throw ConfigError("config: 'epochs' must be nonnegative");
  if (training.batch_size < 1) throw ConfigError("config: 'batch_size' must be at least 1");
}

PairwiseModel RunConfig::make_pairwise() const {
  PairwiseModel m;
  for (const auto& k : crf.kernels) m.kernels.push_back({KernelSpec{k.kind, k.sigma}, k.weight});
  if (crf.compatibility == CompatMode::potts) {
    m.compat = potts();
  } else {
    std::vector<double> matrix = crf.compatibility_matrix;
    if (matrix.empty()) {
      matrix.assign(static_cast<std::size_t>(labels) * labels, 0.0);
      for (int l = 0; l < labels; ++l) matrix[static_cast<std::size_t>(l) * labels + l] = 1.0;
    }
    m.compat = compat_from_matrix(labels, std::move(matrix));
  }
  m.validate(labels);
  return m;
}

RunConfig parse_run_config(const std::string& json_text, const std::string& source_name) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(source_name + ": config must be a JSON object");
  check_keys(j, {"labels", "unary", "crf", "optimizer", "training", "loss"}, source_name);

  RunConfig cfg;
  cfg.labels = take<int>(j, "labels", 0, source_name);
  cfg.unary = take<std::string>(j, "unary", "linear", source_name);

  if (j.contains("crf")) {
    const json& c = j.at("crf");
    const std::string where = source_name + ": crf";
    check_keys(c,
               {"enabled", "kernels", "compatibility", "compatibility_matrix", "iterations", "filter_mode",
                "sigma_grad", "normalize_filter"},
               where);
    cfg.crf.enabled = take<bool>(c, "enabled", true, where);
    if (c.contains("kernels")) {
      if (!c.at("kernels").is_array()) throw ConfigError(where + ": 'kernels' must be an array");
      cfg.crf.kernels.clear();
      for (const auto& k : c.at("kernels")) cfg.crf.kernels.push_back(parse_kernel(k, where));
    }
    const std::string compat = take<std::string>(c, "compatibility", "potts", where);
    if (compat == "potts")
      cfg.crf.compatibility = CompatMode::potts;
    else if (compat == "matrix")
      cfg.crf.compatibility = CompatMode::matrix;
    else
      throw ConfigError(where + ": compatibility must be 'potts' or 'matrix'");
    cfg.crf.compatibility_matrix = take<std::vector<double>>(c, "compatibility_matrix", {}, where);
    cfg.crf.iterations = take<int>(c, "iterations", 5, where);
    const std::string fm = take<std::string>(c, "filter_mode", "lattice", where);
    if (fm == "brute")
      cfg.crf.filter_mode = FilterMode::brute;
    else if (fm == "lattice")
      cfg.crf.filter_mode = FilterMode::lattice;
    else
      throw ConfigError(where + ": filter_mode must be 'brute' or 'lattice'");
    const std::string sg = take<std::string>(c, "sigma_grad", "frozen", where);
    if (sg == "brute")
      cfg.crf.sigma_grad = SigmaGradMode::brute;
    else if (sg == "finite_diff")
      cfg.crf.sigma_grad = SigmaGradMode::finite_diff;
    else if (sg == "frozen")
      cfg.crf.sigma_grad = SigmaGradMode::frozen;
    else
      throw ConfigError(where + ": sigma_grad must be 'brute', 'finite_diff', or 'frozen'");
    cfg.crf.normalize_filter = take<bool>(c, "normalize_filter", false, where);
  }
  if (cfg.crf.kernels.empty()) cfg.crf.kernels = {default_spatial(), default_bilateral()};

  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    const std::string where = source_name + ": optimizer";
    check_keys(o, {"momentum", "weight_decay", "lr_top", "lr_body", "lr_crf", "weight_decay_crf"}, where);
    cfg.optimizer.momentum = take<double>(o, "momentum", 0.9, where);
    cfg.optimizer.weight_decay = take<double>(o, "weight_decay", 0.0005, where);
    cfg.optimizer.lr_top = take<double>(o, "lr_top", 0.01, where);
    cfg.optimizer.lr_body = take<double>(o, "lr_body", 0.001, where);
    cfg.optimizer.lr_crf = take<double>(o, "lr_crf", 0.01, where);
    cfg.optimizer.weight_decay_crf = take<bool>(o, "weight_decay_crf", false, where);
  }

  if (j.contains("training")) {
    const json& t = j.at("training");
    const std::string where = source_name + ": training";
    check_keys(t, {"epochs", "batch_size", "seed"}, where);
    cfg.training.epochs = take<int>(t, "epochs", 10, where);
    cfg.training.batch_size = take<int>(t, "batch_size", 20, where);
    cfg.training.seed = take<std::uint64_t>(t, "seed", 1, where);
  }

  const std::string loss = take<std::string>(j, "loss", "mean", source_name);
  if (loss == "mean")
    cfg.loss = LossNorm::mean;
  else if (loss == "sum")
    cfg.loss = LossNorm::sum;
  else
    throw ConfigError(source_name + ": loss must be 'mean' or 'sum'");

  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_file(path), path); }

std::string dump_run_config(const RunConfig& config) {
  json j;
  j["labels"] = config.labels;
  j["unary"] = config.unary;
  json kernels = json::array();
  for (const auto& k : config.crf.kernels)
    kernels.push_back({{"kind", k.kind == FeatureKind::spatial ? "spatial" : "bilateral"},
                       {"sigma", k.sigma},
                       {"weight", k.weight}});
  j["crf"] = {{"enabled", config.crf.enabled},
              {"kernels", kernels},
              {"compatibility", config.crf.compatibility == CompatMode::potts ? "potts" : "matrix"},
              {"iterations", config.crf.iterations},
              {"filter_mode", config.crf.filter_mode == FilterMode::brute ? "brute" : "lattice"},
              {"sigma_grad", config.crf.sigma_grad == SigmaGradMode::brute      ? "brute"
                             : config.crf.sigma_grad == SigmaGradMode::frozen   ? "frozen"
                                                                                : "finite_diff"},
              {"normalize_filter", config.crf.normalize_filter}};
  if (!config.crf.compatibility_matrix.empty()) j["crf"]["compatibility_matrix"] = config.crf.compatibility_matrix;
  j["optimizer"] = {{"momentum", config.optimizer.momentum},
                    {"weight_decay", config.optimizer.weight_decay},
                    {"lr_top", config.optimizer.lr_top},
                    {"lr_body", config.optimizer.lr_body},
                    {"lr_crf", config.optimizer.lr_crf},
                    {"weight_decay_crf", config.optimizer.weight_decay_crf}};
  j["training"] = {{"epochs", config.training.epochs},
                   {"batch_size", config.training.batch_size},
                   {"seed", config.training.seed}};
  j["loss"] = config.loss == LossNorm::mean ? "mean" : "sum";
  return j.dump(2);
}

}  // namespace dcrf
