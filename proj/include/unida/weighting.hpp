#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "unida/matrix.hpp"
#include "unida/rng.hpp"

namespace unida {

enum class UncertaintyKind { Entropy, Confidence, Energy, Distance };

std::string to_string(UncertaintyKind k);
UncertaintyKind uncertainty_kind_from_string(const std::string& s);

// Per-source-class feature centroids for the distance score, refreshed
// every update_interval steps.
struct CentroidBank {
  Matrix centroids;  // one row per source class
  int update_interval = 100;
  long long last_update = -1;

  bool empty() const { return centroids.rows() == 0; }
};

enum class WeightNormalization { BatchMinmax, ClosedForm };

struct WeightConfig {
  UncertaintyKind kind = UncertaintyKind::Entropy;
  WeightNormalization normalization = WeightNormalization::BatchMinmax;
  double threshold = 0.5;  // binarization threshold for y_hat
  int num_classes = 0;     // needed by the entropy closed form (ln K)
};

// Shannon entropy of a probability vector, nats. Rejects vectors that do
// not sum to 1 within 1e-6 or have negative entries; 0*log 0 counts as 0.
double entropy(const std::vector<double>& p);

// max_i p_i.
double confidence(const std::vector<double>& p);

// -log sum_i exp(p_i), computed over probabilities exactly as stated in
// the source material (not over logits, which compresses the usual range;
// see to_weight for how orientation is handled).
double energy(const std::vector<double>& p);

// Minimum Euclidean distance from the feature to any centroid.
double distance_uncertainty(const std::vector<double>& feature, const CentroidBank& bank);

// Refresh centroids from per-class feature means when step - last_update
// >= update_interval. Classes absent from the batch keep their previous
// centroid.
void update_centroids(CentroidBank& bank, const Matrix& source_features,
                      const std::vector<int>& source_labels, long long step);

// Monotone score -> weight mapping oriented so LOW uncertainty gives HIGH
// weight. ClosedForm: entropy -> 1 - H/ln K, confidence as-is; energy and
// distance fall back to min-max rescaling with an orientation flip. A
// degenerate batch (all scores equal) maps to all 0.5.
std::vector<double> to_weight(const std::vector<double>& scores, const WeightConfig& cfg);

// Ground-truth 0/1 indicator of common-class membership. Simulation and
// evaluation use only; training never sees hidden labels directly.
std::vector<double> oracle_weights(const std::vector<int>& hidden_labels,
                                   const std::set<int>& common_set);

// Each mask entry is 1 with probability `rate`; applying the mask twice is
// the identity.
std::vector<std::uint8_t> draw_flip_mask(std::size_t n, double rate, SeededRng& rng);
void apply_flip_mask(std::vector<double>& binary_weights,
                     const std::vector<std::uint8_t>& mask);

// draw_flip_mask + apply_flip_mask in one call.
void inject_flip_noise(std::vector<double>& binary_weights, double rate, SeededRng& rng);

}  // namespace unida
