#include "unida/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "unida/csv.hpp"
#include "unida/weighting.hpp"

namespace unida {

double h_score(double a_common, double a_private) {
  if (a_common < 0.0 || a_common > 1.0 || a_private < 0.0 || a_private > 1.0)
    throw std::runtime_error("h_score: inputs must be in [0, 1]");
  if (a_common + a_private == 0.0) return 0.0;
  return 2.0 * a_common * a_private / (a_common + a_private);
}

double RejectionRule::resolve_threshold(std::size_t n_source_classes) const {
  if (threshold < 0.0)
    return kind == RejectionKind::EntropyThreshold
               ? 0.5 * std::log(static_cast<double>(n_source_classes))
               : 0.5;
  if (relative && kind == RejectionKind::EntropyThreshold)
    return threshold * std::log(static_cast<double>(n_source_classes));
  return threshold;
}

std::vector<std::string> EvalReport::csv_header() {
  return {"acc_common", "acc_private", "h_score", "misclass_sp"};
}

std::vector<std::string> EvalReport::csv_row() const {
  return {format_double(acc_common), format_double(acc_private), format_double(h),
          format_double(misclass_into_source_private)};
}

std::vector<PredictedRow> predict_rows(const ModelBundle& models, const Matrix& features,
                                       const RejectionRule& rule) {
  const Matrix feats = mlp_forward(models.feature, features).first;
  const Matrix logits = mlp_forward(models.classifier, feats).first;
  const Matrix probs = softmax_rows(logits);
  const double thr = rule.resolve_threshold(probs.cols());

  std::vector<PredictedRow> out(features.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const std::vector<double> p = probs.row(r);
    int argmax = 0;
    for (std::size_t c = 1; c < p.size(); ++c)
      if (p[c] > p[argmax]) argmax = static_cast<int>(c);
    out[r].predicted = argmax;
    if (rule.kind == RejectionKind::EntropyThreshold)
      out[r].rejected = entropy(p) >= thr;
    else
      out[r].rejected = confidence(p) <= thr;
  }
  return out;
}

EvalReport evaluate(const ModelBundle& models, const Dataset& target,
                    const RejectionRule& rule) {
  const auto rows = predict_rows(models, target.features, rule);

  long long n_common = 0, n_private = 0;
  long long ok_common = 0, ok_private = 0, into_sp = 0;
  std::map<int, long long> cls_total, cls_ok;

  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int y = target.labels[r];
    const bool common = target.common_set.count(y) > 0;
    const bool pred_common = target.common_set.count(rows[r].predicted) > 0;
    ++cls_total[y];
    if (common) {
      ++n_common;
      const bool correct = !rows[r].rejected && rows[r].predicted == y;
      if (correct) {
        ++ok_common;
        ++cls_ok[y];
      }
      if (!rows[r].rejected && !pred_common) ++into_sp;
    } else {
      ++n_private;
      if (rows[r].rejected) {
        ++ok_private;
        ++cls_ok[y];
      }
    }
  }

  EvalReport rep;
  rep.acc_common = n_common ? static_cast<double>(ok_common) / n_common : 0.0;
  rep.acc_private = n_private ? static_cast<double>(ok_private) / n_private : 0.0;
  rep.h = h_score(rep.acc_common, rep.acc_private);
  rep.misclass_into_source_private =
      n_common ? static_cast<double>(into_sp) / n_common : 0.0;
  for (const auto& [cls, total] : cls_total)
    rep.per_class_accuracy[cls] = static_cast<double>(cls_ok[cls]) / total;
  return rep;
}

double batch_noise_rate(const std::vector<double>& weights,
                        const std::vector<int>& hidden_labels,
                        const std::set<int>& common_set, double threshold) {
  if (weights.empty()) throw std::runtime_error("batch_noise_rate: empty batch");
  if (weights.size() != hidden_labels.size())
    throw std::runtime_error("batch_noise_rate: length mismatch");
  long long disagree = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const bool y_hat = weights[i] >= threshold;
    const bool in_common = common_set.count(hidden_labels[i]) > 0;
    if (y_hat != in_common) ++disagree;
  }
  return static_cast<double>(disagree) / static_cast<double>(weights.size());
}

namespace {

Matrix centered_covariance(const Matrix& features) {
  const std::size_t n = features.rows(), d = features.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) mean[c] += features(r, c);
  for (auto& m : mean) m /= static_cast<double>(n);
  Matrix cov(d, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = features(r, i) - mean[i];
      for (std::size_t j = 0; j < d; ++j)
        cov(i, j) += xi * (features(r, j) - mean[j]);
    }
  cov.scale_inplace(1.0 / static_cast<double>(n));
  return cov;
}

// Power iteration on a symmetric PSD matrix.
std::pair<std::vector<double>, double> top_eigen(const Matrix& m) {
  const std::size_t d = m.rows();
  std::vector<double> v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = 1.0 / static_cast<double>(i + 1);
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;

  double lambda = 0.0;
  for (int iter = 0; iter < 100000; ++iter) {
    std::vector<double> next(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) next[i] += m(i, j) * v[j];
    double nn = 0.0;
    for (double x : next) nn += x * x;
    nn = std::sqrt(nn);
    if (nn == 0.0) return {v, 0.0};  // vector in the null space; eigenvalue 0
    for (auto& x : next) x /= nn;
    double delta = 0.0, sign = 0.0;
    for (std::size_t i = 0; i < d; ++i) sign += next[i] * v[i];
    const double flip = sign < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < d; ++i)
      delta = std::max(delta, std::fabs(flip * next[i] - v[i]));
    v = next;
    lambda = nn;
    if (delta < 1e-10) break;
  }
  return {v, lambda};
}

}  // namespace

PrincipalDirection principal_direction(const Matrix& features,
                                       const std::vector<double>* reference) {
  if (features.rows() < 2)
    throw std::runtime_error("principal_direction: need at least 2 rows");
  Matrix cov = centered_covariance(features);
  double trace = 0.0;
  for (std::size_t i = 0; i < cov.rows(); ++i) trace += cov(i, i);
  if (trace <= 1e-24) throw std::runtime_error("principal_direction: zero-variance input");

  auto [v1, l1] = top_eigen(cov);

  // Deflate once for the eigengap check.
  Matrix deflated = cov;
  for (std::size_t i = 0; i < cov.rows(); ++i)
    for (std::size_t j = 0; j < cov.cols(); ++j) deflated(i, j) -= l1 * v1[i] * v1[j];
  const auto [v2, l2] = top_eigen(deflated);
  (void)v2;

  PrincipalDirection out;
  out.eigenvalue = l1;
  out.second_eigenvalue = l2;
  out.degenerate = (l1 - l2) < 1e-6 * std::max(l1, 1e-300);

  // Sign convention: first coordinate with magnitude above 1e-12 positive.
  double flip = 1.0;
  for (double x : v1)
    if (std::fabs(x) > 1e-12) {
      flip = x < 0.0 ? -1.0 : 1.0;
      break;
    }
  out.direction = v1;
  for (auto& x : out.direction) x *= flip;

  if (reference) {
    if (reference->size() != out.direction.size())
      throw std::runtime_error("principal_direction: reference dim mismatch");
    double dot = 0.0, rn = 0.0;
    for (std::size_t i = 0; i < out.direction.size(); ++i) {
      dot += out.direction[i] * (*reference)[i];
      rn += (*reference)[i] * (*reference)[i];
    }
    if (rn <= 0.0) throw std::runtime_error("principal_direction: zero reference");
    out.cos_to_reference = std::fabs(dot) / std::sqrt(rn);
  }
  return out;
}

}  // namespace unida
