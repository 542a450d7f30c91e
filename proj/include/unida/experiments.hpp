#pragma once

#include <string>
#include <vector>

#include "unida/config.hpp"
#include "unida/csv.hpp"
#include "unida/train.hpp"

namespace unida {

// Toy study (first-layer analysis of the 2D scenario): trains the
// supervised-only and supervised+consistency arms on paired seeds, dumps
// raw and learned feature coordinates, and reports the |cos| alignment of
// the target-feature principal direction to the image of e1 under the
// learned first layer.
struct ToyArmResult {
  std::uint64_t seed = 0;
  double spcr_value = 0.0;
  std::string arm;  // "sup_only" | "sup_ssl"
  double alignment = 0.0;
  double final_sup_loss = 0.0;
};

struct ToyExperimentResult {
  std::vector<ToyArmResult> rows;
  std::vector<std::string> feature_files;
};

ToyExperimentResult run_toy_experiment(const ExperimentConfig& cfg);

// Noise-tolerance study: oracle weights + flip noise against the paired
// source-only baseline, plus the observed noise rate of each learned
// uncertainty weighting. One row per (spcr, seed, arm, flip_rate).
CsvTable run_noise_tolerance_sweep(const ExperimentConfig& cfg);

// SSL scope ablation: no-SSL vs SSL-on-all-target vs SSL-on-common-only
// across target-private class counts.
CsvTable run_ssl_ablation(const ExperimentConfig& cfg);

// Alpha sensitivity: H-score per alpha per seed on paired datasets.
CsvTable run_alpha_sensitivity(const ExperimentConfig& cfg);

// SPCR robustness: alignment-only vs +SSL across SPCR values.
CsvTable run_spcr_robustness_sweep(const ExperimentConfig& cfg);

// Renders an SVG figure from a sweep CSV. `kind` is one of noise, spcr,
// alpha, ablation, toy, log, or "auto" to dispatch on the CSV's version
// comment. Returns false (writing nothing) when the CSV has no data rows.
bool emit_plot(const std::string& csv_path, const std::string& kind,
               const std::string& out_svg_path);

// Helpers shared by the sweep runners and the acceptance suite.
double mean(const std::vector<double>& v);
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace unida
