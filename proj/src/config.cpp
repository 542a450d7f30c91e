#include "unida/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "unida/csv.hpp"

namespace unida {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_real(const std::string& key, const std::string& v) {
  try {
    // fractions like "1/5" are accepted anywhere a real is
    const auto slash = v.find('/');
    if (slash != std::string::npos)
      return parse_double(trim(v.substr(0, slash))) /
             parse_double(trim(v.substr(slash + 1)));
    return parse_double(v);
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value '" + v + "' for " + key);
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    return parse_int(v);
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value '" + v + "' for " + key);
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::vector<double> to_real_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_real(key, item));
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

std::string real_str(double v) { return format_double(v); }

std::string list_str(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += real_str(v[i]);
  }
  return s;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "dataset",          "split.source_private", "split.common",
      "split.target_private", "samples_per_class", "data.dim",
      "data.separation",  "data.shift_rotation",  "data.shift_translation",
      "toy.tau",          "toy.gamma",            "toy.theta",
      "toy.noise_sigma",  "toy.alpha",            "toy.sigma_aug",
      "toy.lr",           "toy.steps",            "model.feature_hidden",
      "model.feature_dim", "model.disc_hidden",   "loss.lambda",
      "loss.alpha",       "ssl.variant",          "ssl.sigma_aug",
      "ssl.scope",        "weight.scheme",        "weight.kind",
      "weight.normalization", "weight.threshold", "weight.flip_rate",
      "weight.update_interval", "reject.kind",    "reject.threshold",
      "reject.relative",
      "train.steps",      "train.batch_size",     "train.lr",
      "train.momentum",   "seed",                 "seeds",
      "out",              "sweep.spcr",           "sweep.flip_rates",
      "sweep.alpha",      "sweep.target_private",
  };
  return keys;
}

void apply_override(ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (key == "dataset") {
    if (v == "toy")
      c.dataset = DatasetKind::Toy;
    else if (v == "unida")
      c.dataset = DatasetKind::Unida;
    else
      throw ConfigError("config: dataset must be toy|unida, got '" + v + "'");
  } else if (key == "split.source_private") {
    c.split.n_source_private = static_cast<int>(to_int(key, v));
  } else if (key == "split.common") {
    c.split.n_common = static_cast<int>(to_int(key, v));
  } else if (key == "split.target_private") {
    c.split.n_target_private = static_cast<int>(to_int(key, v));
  } else if (key == "samples_per_class") {
    c.samples_per_class = static_cast<int>(to_int(key, v));
  } else if (key == "data.dim") {
    c.dim = static_cast<int>(to_int(key, v));
  } else if (key == "data.separation") {
    c.separation = to_real(key, v);
  } else if (key == "data.shift_rotation") {
    c.shift_rotation = to_real(key, v);
  } else if (key == "data.shift_translation") {
    c.shift_translation = to_real(key, v);
  } else if (key == "toy.tau") {
    c.toy.tau = to_real(key, v);
  } else if (key == "toy.gamma") {
    c.toy.gamma = to_real(key, v);
  } else if (key == "toy.theta") {
    if (v == "auto")
      c.toy.theta.reset();
    else
      c.toy.theta = to_real(key, v);
  } else if (key == "toy.noise_sigma") {
    c.toy.noise_sigma = to_real(key, v);
  } else if (key == "toy.alpha") {
    c.toy_alpha = to_real(key, v);
  } else if (key == "toy.sigma_aug") {
    c.toy_sigma_aug = to_real(key, v);
  } else if (key == "toy.lr") {
    c.toy_lr = to_real(key, v);
  } else if (key == "toy.steps") {
    c.toy_steps = static_cast<int>(to_int(key, v));
  } else if (key == "model.feature_hidden") {
    c.feature_hidden.clear();
    for (const auto& item : split_list(v))
      c.feature_hidden.push_back(static_cast<std::size_t>(to_int(key, item)));
  } else if (key == "model.feature_dim") {
    c.feature_dim = static_cast<std::size_t>(to_int(key, v));
  } else if (key == "model.disc_hidden") {
    c.disc_hidden = static_cast<std::size_t>(to_int(key, v));
  } else if (key == "loss.lambda") {
    c.loss.lambda = to_real(key, v);
  } else if (key == "loss.alpha") {
    c.loss.alpha = to_real(key, v);
  } else if (key == "ssl.variant") {
    if (v == "plain_l2")
      c.ssl_variant = SslVariant::PlainL2;
    else if (v == "stop_grad")
      c.ssl_variant = SslVariant::StopGradOneBranch;
    else
      throw ConfigError("config: ssl.variant must be plain_l2|stop_grad, got '" + v + "'");
  } else if (key == "ssl.sigma_aug") {
    c.ssl_sigma_aug = to_real(key, v);
  } else if (key == "ssl.scope") {
    if (v == "all")
      c.ssl_scope = SslScope::AllTarget;
    else if (v == "common_only")
      c.ssl_scope = SslScope::CommonOnly;
    else
      throw ConfigError("config: ssl.scope must be all|common_only, got '" + v + "'");
  } else if (key == "weight.scheme") {
    if (v == "learned")
      c.weight_scheme = WeightScheme::Learned;
    else if (v == "oracle")
      c.weight_scheme = WeightScheme::Oracle;
    else
      throw ConfigError("config: weight.scheme must be learned|oracle, got '" + v + "'");
  } else if (key == "weight.kind") {
    try {
      c.weight.kind = uncertainty_kind_from_string(v);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  } else if (key == "weight.normalization") {
    if (v == "batch_minmax")
      c.weight.normalization = WeightNormalization::BatchMinmax;
    else if (v == "closed_form")
      c.weight.normalization = WeightNormalization::ClosedForm;
    else
      throw ConfigError("config: weight.normalization must be batch_minmax|closed_form");
  } else if (key == "weight.threshold") {
    c.weight.threshold = to_real(key, v);
  } else if (key == "weight.flip_rate") {
    c.flip_rate = to_real(key, v);
  } else if (key == "weight.update_interval") {
    c.weight_update_interval = static_cast<int>(to_int(key, v));
  } else if (key == "reject.kind") {
    if (v == "entropy")
      c.reject.kind = RejectionKind::EntropyThreshold;
    else if (v == "confidence")
      c.reject.kind = RejectionKind::ConfidenceThreshold;
    else
      throw ConfigError("config: reject.kind must be entropy|confidence");
  } else if (key == "reject.threshold") {
    if (v == "auto")
      c.reject.threshold = -1.0;
    else
      c.reject.threshold = to_real(key, v);
  } else if (key == "reject.relative") {
    if (v == "true")
      c.reject.relative = true;
    else if (v == "false")
      c.reject.relative = false;
    else
      throw ConfigError("config: reject.relative must be true|false");
  } else if (key == "train.steps") {
    c.steps = to_int(key, v);
  } else if (key == "train.batch_size") {
    c.batch_size = static_cast<int>(to_int(key, v));
  } else if (key == "train.lr") {
    c.lr = to_real(key, v);
  } else if (key == "train.momentum") {
    c.momentum = to_real(key, v);
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(to_int(key, v));
  } else if (key == "seeds") {
    c.seeds = static_cast<int>(to_int(key, v));
  } else if (key == "out") {
    c.out_dir = v;
  } else if (key == "sweep.spcr") {
    c.sweep_spcr = to_real_list(key, v);
  } else if (key == "sweep.flip_rates") {
    c.sweep_flip_rates = to_real_list(key, v);
  } else if (key == "sweep.alpha") {
    c.sweep_alpha = to_real_list(key, v);
  } else if (key == "sweep.target_private") {
    c.sweep_target_private.clear();
    for (const auto& item : split_list(v))
      c.sweep_target_private.push_back(static_cast<int>(to_int(key, item)));
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " has no '='");
    apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void ExperimentConfig::validate() const {
  split.validate();
  if (samples_per_class < 1) throw ConfigError("config: samples_per_class must be >= 1");
  if (steps < 1) throw ConfigError("config: train.steps must be >= 1");
  if (batch_size < 1) throw ConfigError("config: train.batch_size must be >= 1");
  if (lr <= 0.0) throw ConfigError("config: train.lr must be > 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw ConfigError("config: train.momentum must be in [0, 1)");
  if (loss.lambda < 0.0 || loss.alpha < 0.0)
    throw ConfigError("config: loss weights must be >= 0");
  if (flip_rate < 0.0 || flip_rate > 1.0)
    throw ConfigError("config: weight.flip_rate must be in [0, 1]");
  if (dim < 2) throw ConfigError("config: data.dim must be >= 2");
  if (feature_hidden.empty()) throw ConfigError("config: model.feature_hidden is empty");
  if (feature_dim < 1) throw ConfigError("config: model.feature_dim must be >= 1");
  if (seeds < 1) throw ConfigError("config: seeds must be >= 1");
  if (weight_update_interval < 1)
    throw ConfigError("config: weight.update_interval must be >= 1");
  if (sweep_spcr.empty() || sweep_flip_rates.empty() || sweep_alpha.empty() ||
      sweep_target_private.empty())
    throw ConfigError("config: sweep axes must be nonempty");
}

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["dataset"] = dataset == DatasetKind::Toy ? "toy" : "unida";
  kv["split.source_private"] = std::to_string(split.n_source_private);
  kv["split.common"] = std::to_string(split.n_common);
  kv["split.target_private"] = std::to_string(split.n_target_private);
  kv["samples_per_class"] = std::to_string(samples_per_class);
  kv["data.dim"] = std::to_string(dim);
  kv["data.separation"] = real_str(separation);
  kv["data.shift_rotation"] = real_str(shift_rotation);
  kv["data.shift_translation"] = real_str(shift_translation);
  kv["toy.tau"] = real_str(toy.tau);
  kv["toy.gamma"] = real_str(toy.gamma);
  kv["toy.theta"] = toy.theta ? real_str(*toy.theta) : "auto";
  kv["toy.noise_sigma"] = real_str(toy.noise_sigma);
  kv["toy.alpha"] = real_str(toy_alpha);
  kv["toy.sigma_aug"] = real_str(toy_sigma_aug);
  kv["toy.lr"] = real_str(toy_lr);
  kv["toy.steps"] = std::to_string(toy_steps);
  {
    std::string s;
    for (std::size_t i = 0; i < feature_hidden.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(feature_hidden[i]);
    }
    kv["model.feature_hidden"] = s;
  }
  kv["model.feature_dim"] = std::to_string(feature_dim);
  kv["model.disc_hidden"] = std::to_string(disc_hidden);
  kv["loss.lambda"] = real_str(loss.lambda);
  kv["loss.alpha"] = real_str(loss.alpha);
  kv["ssl.variant"] = ssl_variant == SslVariant::PlainL2 ? "plain_l2" : "stop_grad";
  kv["ssl.sigma_aug"] = real_str(ssl_sigma_aug);
  kv["ssl.scope"] = ssl_scope == SslScope::AllTarget ? "all" : "common_only";
  kv["weight.scheme"] = weight_scheme == WeightScheme::Learned ? "learned" : "oracle";
  kv["weight.kind"] = to_string(weight.kind);
  kv["weight.normalization"] = weight.normalization == WeightNormalization::BatchMinmax
                                   ? "batch_minmax"
                                   : "closed_form";
  kv["weight.threshold"] = real_str(weight.threshold);
  kv["weight.flip_rate"] = real_str(flip_rate);
  kv["weight.update_interval"] = std::to_string(weight_update_interval);
  kv["reject.kind"] =
      reject.kind == RejectionKind::EntropyThreshold ? "entropy" : "confidence";
  kv["reject.threshold"] = reject.threshold < 0.0 ? "auto" : real_str(reject.threshold);
  kv["reject.relative"] = reject.relative ? "true" : "false";
  kv["train.steps"] = std::to_string(steps);
  kv["train.batch_size"] = std::to_string(batch_size);
  kv["train.lr"] = real_str(lr);
  kv["train.momentum"] = real_str(momentum);
  kv["seed"] = std::to_string(seed);
  kv["seeds"] = std::to_string(seeds);
  kv["sweep.spcr"] = list_str(sweep_spcr);
  kv["sweep.flip_rates"] = list_str(sweep_flip_rates);
  kv["sweep.alpha"] = list_str(sweep_alpha);
  {
    std::string s;
    for (std::size_t i = 0; i < sweep_target_private.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(sweep_target_private[i]);
    }
    kv["sweep.target_private"] = s;
  }
  // out_dir intentionally excluded: it does not change results

  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string ExperimentConfig::config_hash() const {
  const std::string c = canonical();
  std::uint64_t h = 1469598103934665603ULL;
  for (char ch : c) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

LabelSplit split_for_spcr(double spcr_value, const LabelSplit& base) {
  if (spcr_value < 0.0) throw ConfigError("spcr must be >= 0");
  // smallest q >= 3 common classes with p = spcr * q integral
  for (int q = 3; q <= 60; ++q) {
    const double p_real = spcr_value * q;
    const double p_round = std::round(p_real);
    if (std::fabs(p_real - p_round) < 1e-9) {
      LabelSplit s = base;
      s.n_source_private = static_cast<int>(p_round);
      s.n_common = q;
      return s;
    }
  }
  throw ConfigError("spcr value " + std::to_string(spcr_value) +
                    " not realizable with <= 60 common classes");
}

}  // namespace unida
