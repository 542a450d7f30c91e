#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "unida/dataset.hpp"
#include "unida/losses.hpp"
#include "unida/matrix.hpp"

namespace unida {

// Harmonic mean of common-class and target-private accuracy; 0 when either
// input is 0.
double h_score(double a_common, double a_private);

enum class RejectionKind { EntropyThreshold, ConfidenceThreshold };

// Maps the |C_s|-way classifier to |C|+1 outputs: a sample whose
// prediction uncertainty crosses the threshold is rejected as "unknown".
// Entropy rule rejects when H(p) >= threshold; confidence rule rejects
// when max p <= threshold. The entropy threshold is a fraction of ln |C_s|
// when `relative` is set (default 0.5 * ln |C_s|, resolved at evaluation
// time when threshold < 0); otherwise it is absolute.
struct RejectionRule {
  RejectionKind kind = RejectionKind::EntropyThreshold;
  double threshold = -1.0;
  bool relative = false;

  double resolve_threshold(std::size_t n_source_classes) const;
};

struct EvalReport {
  double acc_common = 0.0;
  double acc_private = 0.0;
  double h = 0.0;
  double misclass_into_source_private = 0.0;
  std::map<int, double> per_class_accuracy;

  static std::vector<std::string> csv_header();
  std::vector<std::string> csv_row() const;
};

// Open-set evaluation over the full target set. Common-class samples count
// as correct when predicted as their true class and not rejected;
// private-class samples count as correct when rejected.
// misclass_into_source_private is the fraction of target-common samples
// whose non-rejected prediction is a source-private class. All rates are
// exact count ratios.
EvalReport evaluate(const ModelBundle& models, const Dataset& target,
                    const RejectionRule& rule);

// Same decisions, exposed for recount-style tests: per-row predicted class
// and rejection flag.
struct PredictedRow {
  int predicted = -1;
  bool rejected = false;
};
std::vector<PredictedRow> predict_rows(const ModelBundle& models, const Matrix& features,
                                       const RejectionRule& rule);

// Fraction of the batch where the 0.5-binarized weight disagrees with true
// common-class membership.
double batch_noise_rate(const std::vector<double>& weights,
                        const std::vector<int>& hidden_labels,
                        const std::set<int>& common_set, double threshold = 0.5);

struct PrincipalDirection {
  std::vector<double> direction;  // unit norm, first nonzero coordinate positive
  double eigenvalue = 0.0;
  double second_eigenvalue = 0.0;
  bool degenerate = false;  // relative eigengap below 1e-6
  double cos_to_reference = 0.0;
};

// Top eigenvector of the mean-centered covariance by power iteration
// (tolerance 1e-10), plus |cos| of the angle to `reference` when given.
// Rejects zero-variance input.
PrincipalDirection principal_direction(const Matrix& features,
                                       const std::vector<double>* reference = nullptr);

}  // namespace unida
