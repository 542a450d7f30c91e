#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "unida/dataset.hpp"
#include "unida/losses.hpp"
#include "unida/metrics.hpp"
#include "unida/weighting.hpp"

namespace unida {

// Thrown on malformed configuration; the CLI maps it to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DatasetKind { Toy, Unida };
enum class WeightScheme { Learned, Oracle };
enum class SslScope { AllTarget, CommonOnly };

// Flat, typed experiment configuration. Mirrors the key=value config file
// format one to one; see config_keys() for the full key list.
struct ExperimentConfig {
  DatasetKind dataset = DatasetKind::Unida;
  LabelSplit split{20, 4, 4};
  int samples_per_class = 200;

  // synthetic UniDA generator
  int dim = 16;
  double separation = 6.0;
  double shift_rotation = 0.5;
  double shift_translation = 1.0;

  // toy scenario (2D, first layer analyzed)
  ToyConfig toy;
  double toy_alpha = 1.0;
  double toy_sigma_aug = 0.5;
  double toy_lr = 0.01;
  int toy_steps = 2000;

  // model widths
  std::vector<std::size_t> feature_hidden{32};
  std::size_t feature_dim = 8;
  std::size_t disc_hidden = 16;

  LossWeights loss{0.5, 0.5};
  SslVariant ssl_variant = SslVariant::StopGradOneBranch;
  double ssl_sigma_aug = 0.5;
  SslScope ssl_scope = SslScope::AllTarget;

  WeightScheme weight_scheme = WeightScheme::Learned;
  WeightConfig weight;
  double flip_rate = 0.0;
  int weight_update_interval = 100;

  RejectionRule reject;

  long long steps = 2000;
  int batch_size = 32;
  double lr = 0.05;
  double momentum = 0.9;

  std::uint64_t seed = 1;
  int seeds = 5;
  std::string out_dir = "out";

  // sweep axes
  std::vector<double> sweep_spcr{2.0, 5.0};
  std::vector<double> sweep_flip_rates{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> sweep_alpha{0.0, 0.3, 0.5, 0.7};
  std::vector<int> sweep_target_private{1, 3, 6, 9};

  void validate() const;

  // Canonical key=value serialization (sorted keys); config_hash is FNV-1a
  // over it, so the hash depends only on semantic content.
  std::string canonical() const;
  std::string config_hash() const;
};

// Parses the key=value file format: '#' comments, blank lines ignored,
// unknown keys rejected.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Applies a single "key=value" override (CLI --set).
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

const std::vector<std::string>& config_keys();

// Realizes an SPCR value as integer class counts: smallest (p, q) with
// p/q = spcr and q >= 3 common classes (scaled up when needed), keeping
// target-private from the base split.
LabelSplit split_for_spcr(double spcr_value, const LabelSplit& base);

}  // namespace unida
