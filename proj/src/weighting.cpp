#include "unida/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unida {

std::string to_string(UncertaintyKind k) {
  switch (k) {
    case UncertaintyKind::Entropy: return "entropy";
    case UncertaintyKind::Confidence: return "confidence";
    case UncertaintyKind::Energy: return "energy";
    case UncertaintyKind::Distance: return "distance";
  }
  return "?";
}

UncertaintyKind uncertainty_kind_from_string(const std::string& s) {
  if (s == "entropy") return UncertaintyKind::Entropy;
  if (s == "confidence") return UncertaintyKind::Confidence;
  if (s == "energy") return UncertaintyKind::Energy;
  if (s == "distance") return UncertaintyKind::Distance;
  throw std::runtime_error("unknown uncertainty kind '" + s + "'");
}

namespace {

void require_simplex(const std::vector<double>& p) {
  if (p.empty()) throw std::runtime_error("probability vector is empty");
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0 || !std::isfinite(v))
      throw std::runtime_error("probability vector has invalid entry");
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-6)
    throw std::runtime_error("probability vector sums to " + std::to_string(sum));
}

}  // namespace

double entropy(const std::vector<double>& p) {
  require_simplex(p);
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double confidence(const std::vector<double>& p) {
  require_simplex(p);
  return *std::max_element(p.begin(), p.end());
}

double energy(const std::vector<double>& p) {
  require_simplex(p);
  double s = 0.0;
  for (double v : p) s += std::exp(v);
  return -std::log(s);
}

double distance_uncertainty(const std::vector<double>& feature, const CentroidBank& bank) {
  if (bank.empty()) throw std::runtime_error("distance_uncertainty: empty centroid bank");
  if (feature.size() != bank.centroids.cols())
    throw std::runtime_error("distance_uncertainty: feature dim mismatch");
  double best = 0.0;
  bool first = true;
  for (std::size_t j = 0; j < bank.centroids.rows(); ++j) {
    double sq = 0.0;
    for (std::size_t c = 0; c < feature.size(); ++c) {
      const double d = feature[c] - bank.centroids(j, c);
      sq += d * d;
    }
    if (first || sq < best) {
      best = sq;
      first = false;
    }
  }
  return std::sqrt(best);
}

void update_centroids(CentroidBank& bank, const Matrix& source_features,
                      const std::vector<int>& source_labels, long long step) {
  if (bank.last_update >= 0 && step - bank.last_update < bank.update_interval) return;
  if (source_labels.size() != source_features.rows())
    throw std::runtime_error("update_centroids: label count mismatch");

  int n_classes = static_cast<int>(bank.centroids.rows());
  for (int l : source_labels) n_classes = std::max(n_classes, l + 1);
  Matrix sums(n_classes, source_features.cols());
  std::vector<std::size_t> counts(n_classes, 0);
  for (std::size_t r = 0; r < source_features.rows(); ++r) {
    const int l = source_labels[r];
    if (l < 0) throw std::runtime_error("update_centroids: negative label");
    for (std::size_t c = 0; c < source_features.cols(); ++c)
      sums(l, c) += source_features(r, c);
    ++counts[l];
  }
  Matrix next(n_classes, source_features.cols());
  for (int j = 0; j < n_classes; ++j) {
    if (counts[j] > 0) {
      for (std::size_t c = 0; c < next.cols(); ++c)
        next(j, c) = sums(j, c) / static_cast<double>(counts[j]);
    } else if (static_cast<std::size_t>(j) < bank.centroids.rows()) {
      // class missing from this batch keeps its previous centroid
      for (std::size_t c = 0; c < next.cols(); ++c) next(j, c) = bank.centroids(j, c);
    } else {
      throw std::runtime_error("update_centroids: class " + std::to_string(j) +
                               " has no samples and no previous centroid");
    }
  }
  next.require_finite("update_centroids");
  bank.centroids = std::move(next);
  bank.last_update = step;
}

namespace {

// true when a larger raw score means MORE uncertainty for this kind
bool larger_means_uncertain(UncertaintyKind k) {
  switch (k) {
    case UncertaintyKind::Entropy: return true;
    case UncertaintyKind::Confidence: return false;
    case UncertaintyKind::Energy: return true;  // confident vectors score lower
    case UncertaintyKind::Distance: return true;
  }
  return true;
}

std::vector<double> minmax_oriented(const std::vector<double>& scores, bool flip) {
  const auto [mn_it, mx_it] = std::minmax_element(scores.begin(), scores.end());
  const double mn = *mn_it, mx = *mx_it;
  std::vector<double> w(scores.size());
  if (mx - mn < 1e-12) {
    std::fill(w.begin(), w.end(), 0.5);
    return w;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double norm = (scores[i] - mn) / (mx - mn);
    w[i] = flip ? 1.0 - norm : norm;
  }
  return w;
}

}  // namespace

std::vector<double> to_weight(const std::vector<double>& scores, const WeightConfig& cfg) {
  if (scores.empty()) throw std::runtime_error("to_weight: no scores");
  const bool flip = larger_means_uncertain(cfg.kind);

  if (cfg.normalization == WeightNormalization::ClosedForm) {
    if (cfg.kind == UncertaintyKind::Entropy) {
      if (cfg.num_classes < 2)
        throw std::runtime_error("to_weight: entropy closed form needs num_classes >= 2");
      const double lnk = std::log(static_cast<double>(cfg.num_classes));
      std::vector<double> w(scores.size());
      for (std::size_t i = 0; i < scores.size(); ++i)
        w[i] = std::clamp(1.0 - scores[i] / lnk, 0.0, 1.0);
      return w;
    }
    if (cfg.kind == UncertaintyKind::Confidence) {
      std::vector<double> w(scores.size());
      for (std::size_t i = 0; i < scores.size(); ++i) w[i] = std::clamp(scores[i], 0.0, 1.0);
      return w;
    }
    // energy and distance have no closed form; min-max with flip
    return minmax_oriented(scores, flip);
  }
  return minmax_oriented(scores, flip);
}

std::vector<double> oracle_weights(const std::vector<int>& hidden_labels,
                                   const std::set<int>& common_set) {
  std::vector<double> w(hidden_labels.size());
  for (std::size_t i = 0; i < hidden_labels.size(); ++i)
    w[i] = common_set.count(hidden_labels[i]) ? 1.0 : 0.0;
  return w;
}

std::vector<std::uint8_t> draw_flip_mask(std::size_t n, double rate, SeededRng& rng) {
  if (rate < 0.0 || rate > 1.0)
    throw std::runtime_error("flip noise rate must be in [0, 1]");
  std::vector<std::uint8_t> mask(n, 0);
  for (auto& m : mask) m = rng.bernoulli(rate) ? 1 : 0;
  return mask;
}

void apply_flip_mask(std::vector<double>& binary_weights,
                     const std::vector<std::uint8_t>& mask) {
  if (mask.size() != binary_weights.size())
    throw std::runtime_error("apply_flip_mask: length mismatch");
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double w = binary_weights[i];
    if (w != 0.0 && w != 1.0)
      throw std::runtime_error("apply_flip_mask: weights must be 0/1");
    if (mask[i]) binary_weights[i] = 1.0 - w;
  }
}

void inject_flip_noise(std::vector<double>& binary_weights, double rate, SeededRng& rng) {
  const auto mask = draw_flip_mask(binary_weights.size(), rate, rng);
  apply_flip_mask(binary_weights, mask);
}

}  // namespace unida
