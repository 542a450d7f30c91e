#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "unida/matrix.hpp"
#include "unida/rng.hpp"

namespace unida {

// (|source-private|, |common|, |target-private|) class counts defining a
// UniDA scenario. Class ids are global: common classes come first
// (0..n_common-1), then source-private, then target-private, so the
// classifier's output ids are exactly the source label set.
struct LabelSplit {
  int n_source_private = 0;
  int n_common = 1;
  int n_target_private = 0;

  int n_source_classes() const { return n_source_private + n_common; }
  int n_target_classes() const { return n_common + n_target_private; }
  int n_total_classes() const { return n_source_private + n_common + n_target_private; }
  void validate() const;
};

// Source-private to source-common ratio |Cbar_s| / |C|.
double spcr(const LabelSplit& split);

enum class Domain { Source, Target };

// Feature rows with per-row class ids. Target labels are kept for
// evaluation and oracle weighting but training code only ever receives
// train_view(), which has no labels.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  Domain domain = Domain::Source;
  std::set<int> common_set;

  std::size_t size() const { return features.rows(); }
  bool is_common(std::size_t row) const { return common_set.count(labels[row]) > 0; }
};

// Label-free view handed to training code.
struct TrainView {
  const Matrix* features = nullptr;
  Domain domain = Domain::Target;
};

inline TrainView train_view(const Dataset& d) { return TrainView{&d.features, d.domain}; }

// 2D toy scenario: source classes sit on rays in the first quadrant, the
// target is the rotated image of the common-class generator and lies along
// e1. n_target_private must be 0.
struct ToyConfig {
  double tau = 3.0;
  double gamma = 3.0;
  // Angle rotating the common ray onto e1; the default -atan2(gamma, tau)
  // is substituted when theta is unset.
  std::optional<double> theta;
  double noise_sigma = 0.3;
  int samples_per_class = 200;
  LabelSplit split{4, 1, 0};

  double theta_value() const;
  void validate() const;
};

struct AugmentConfig {
  double sigma_aug = 0.1;
  std::optional<std::pair<double, double>> scale_jitter;
  void validate() const;
};

// Rotation/translation applied to target common-class data of the
// multi-class generator. The rotation acts in a random 2D subspace drawn
// from the generator's rng.
struct ShiftSpec {
  double rotate_angle = 0.0;
  double translate = 0.0;
};

// [[cos t, -sin t], [sin t, cos t]]
Matrix rotation(double theta);

struct DomainPair {
  Dataset source;
  Dataset target;
};

DomainPair make_toy_dataset(const ToyConfig& cfg, SeededRng& rng);

// Gaussian clusters (unit std) with means kept pairwise >= separation by
// rejection sampling. Target common clusters are the source generator
// pushed through the shift; private clusters are placed independently.
DomainPair make_unida_dataset(const LabelSplit& split, int dim, double separation,
                              int samples_per_class, const ShiftSpec& shift, SeededRng& rng);

// x + eps with eps ~ N(0, sigma_aug^2 I); optional multiplicative jitter.
std::vector<double> augment(const std::vector<double>& x, const AugmentConfig& cfg,
                            SeededRng& rng);

// Augment every row of a matrix; realizes one of the paired views T(x).
Matrix augment_rows(const Matrix& x, const AugmentConfig& cfg, SeededRng& rng);

// CSV schema: header "domain,label,f0..f{d-1}". Doubles are written in
// shortest round-trip form (<= 17 significant digits), so write/read is
// bit-exact. hide_target_labels writes -1 on target rows (the label-free
// training view).
void write_dataset_csv(const Dataset& d, const std::string& path, bool hide_target_labels);
void write_domain_pair_csv(const DomainPair& pair, const std::string& path,
                           bool hide_target_labels);
Dataset read_dataset_csv(const std::string& path, Domain expected_domain);
DomainPair read_domain_pair_csv(const std::string& path);

}  // namespace unida
