#include "unida/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace unida {

void LossWeights::validate() const {
  if (lambda < 0.0 || alpha < 0.0)
    throw std::runtime_error("LossWeights: lambda and alpha must be >= 0");
}

void WeightedBatch::validate() const {
  if (source_y.size() != source_x.rows())
    throw std::runtime_error("WeightedBatch: source label count mismatch");
  if (w_source.size() != source_x.rows() || w_target.size() != target_x.rows())
    throw std::runtime_error("WeightedBatch: weight vector length mismatch");
  for (double w : w_source)
    if (w < 0.0 || w > 1.0) throw std::runtime_error("WeightedBatch: w_source outside [0,1]");
  for (double w : w_target)
    if (w < 0.0 || w > 1.0) throw std::runtime_error("WeightedBatch: w_target outside [0,1]");
}

CeResult source_ce_loss(const Matrix& logits, const std::vector<int>& labels) {
  if (labels.size() != logits.rows())
    throw std::runtime_error("source_ce_loss: label count != logit rows");
  const std::size_t n = logits.rows(), k = logits.cols();
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= k)
      throw std::runtime_error("source_ce_loss: label id " + std::to_string(y) +
                               " outside " + std::to_string(k) + " classes");
  const Matrix p = softmax_rows(logits);
  CeResult res;
  res.d_logits = Matrix(n, k);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t y = static_cast<std::size_t>(labels[r]);
    // log-softmax evaluated directly for accuracy near saturation
    double mx = logits(r, 0);
    for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, logits(r, c));
    double lse = 0.0;
    for (std::size_t c = 0; c < k; ++c) lse += std::exp(logits(r, c) - mx);
    total += -(logits(r, y) - mx - std::log(lse));
    for (std::size_t c = 0; c < k; ++c)
      res.d_logits(r, c) = (p(r, c) - (c == y ? 1.0 : 0.0)) / static_cast<double>(n);
  }
  res.loss = total / static_cast<double>(n);
  return res;
}

namespace {
constexpr double kProbClamp = 1e-7;

double clamp_prob(double v) {
  if (v < kProbClamp) return kProbClamp;
  if (v > 1.0 - kProbClamp) return 1.0 - kProbClamp;
  return v;
}
}  // namespace

AdvResult adv_alignment_loss(const Matrix& d_source, const Matrix& d_target,
                             const std::vector<double>& w_source,
                             const std::vector<double>& w_target) {
  if (d_source.cols() != 1 || d_target.cols() != 1)
    throw std::runtime_error("adv_alignment_loss: discriminator outputs must be n x 1");
  if (w_source.size() != d_source.rows() || w_target.size() != d_target.rows())
    throw std::runtime_error("adv_alignment_loss: weight/row mismatch");

  AdvResult res;
  res.d_source = Matrix(d_source.rows(), 1);
  res.d_target = Matrix(d_target.rows(), 1);
  const double ns = static_cast<double>(d_source.rows());
  const double nt = static_cast<double>(d_target.rows());

  double src_term = 0.0;
  for (std::size_t r = 0; r < d_source.rows(); ++r) {
    const double d = clamp_prob(d_source(r, 0));
    src_term += -w_source[r] * std::log(d);
    // zero gradient in the clamped region, matching the flat loss there
    const bool clamped = d_source(r, 0) < kProbClamp || d_source(r, 0) > 1.0 - kProbClamp;
    res.d_source(r, 0) = clamped ? 0.0 : -w_source[r] / (d * ns);
  }
  double tgt_term = 0.0;
  for (std::size_t r = 0; r < d_target.rows(); ++r) {
    const double d = clamp_prob(d_target(r, 0));
    tgt_term += -w_target[r] * std::log(1.0 - d);
    const bool clamped = d_target(r, 0) < kProbClamp || d_target(r, 0) > 1.0 - kProbClamp;
    res.d_target(r, 0) = clamped ? 0.0 : w_target[r] / ((1.0 - d) * nt);
  }
  res.loss = (ns > 0 ? src_term / ns : 0.0) + (nt > 0 ? tgt_term / nt : 0.0);
  return res;
}

SslResult ssl_loss(const Matrix& f_view1, const Matrix& f_view2, SslVariant variant,
                   const std::vector<std::uint8_t>* mask) {
  if (!f_view1.same_shape(f_view2)) throw_shape_error("ssl_loss", f_view1, f_view2);
  if (mask && mask->size() != f_view1.rows())
    throw std::runtime_error("ssl_loss: mask length mismatch");

  SslResult res;
  res.d_view1 = Matrix(f_view1.rows(), f_view1.cols());
  res.d_view2 = Matrix(f_view1.rows(), f_view1.cols());

  std::size_t active = 0;
  for (std::size_t r = 0; r < f_view1.rows(); ++r)
    if (!mask || (*mask)[r]) ++active;
  if (active == 0) return res;  // nothing selected: zero loss, zero grads

  const double n = static_cast<double>(active);
  // StopGradOneBranch averages the two orderings, halving the gradient.
  const double gscale = (variant == SslVariant::PlainL2) ? 2.0 / n : 1.0 / n;
  double total = 0.0;
  for (std::size_t r = 0; r < f_view1.rows(); ++r) {
    if (mask && !(*mask)[r]) continue;
    for (std::size_t c = 0; c < f_view1.cols(); ++c) {
      const double diff = f_view1(r, c) - f_view2(r, c);
      total += diff * diff;
      res.d_view1(r, c) = gscale * diff;
      res.d_view2(r, c) = -gscale * diff;
    }
  }
  res.loss = total / n;
  return res;
}

namespace {

struct SslForward {
  double loss = 0.0;
  Matrix d_view1, d_view2;
  ForwardCache cache1, cache2;
  bool active = false;
};

SslForward ssl_forward(const MlpParams& feature, const Matrix& view1, const Matrix& view2,
                       SslVariant variant, const std::vector<std::uint8_t>* mask) {
  SslForward s;
  auto [f1, c1] = mlp_forward(feature, view1);
  auto [f2, c2] = mlp_forward(feature, view2);
  const SslResult r = ssl_loss(f1, f2, variant, mask);
  s.loss = r.loss;
  s.d_view1 = r.d_view1;
  s.d_view2 = r.d_view2;
  s.cache1 = std::move(c1);
  s.cache2 = std::move(c2);
  s.active = true;
  return s;
}

}  // namespace

ObjectiveResult total_objective_fixed(const WeightedBatch& batch, const ModelBundle& models,
                                      const LossWeights& weights, SslVariant variant,
                                      const Matrix* view1, const Matrix* view2,
                                      const std::vector<std::uint8_t>* ssl_mask) {
  batch.validate();
  weights.validate();
  ObjectiveResult out;

  // Source path: features -> classifier -> CE.
  auto [f_src, cache_fs] = mlp_forward(models.feature, batch.source_x);
  auto [logits, cache_c] = mlp_forward(models.classifier, f_src);
  const CeResult ce = source_ce_loss(logits, batch.source_y);
  out.loss_source = ce.loss;
  out.grad_classifier = mlp_backward(models.classifier, cache_c, ce.d_logits);
  Matrix d_fsrc = out.grad_classifier.d_input;

  // Adversarial path. The loss is always reported; gradient flow is skipped
  // entirely at lambda == 0 so the reduction to the source-only objective
  // is exact.
  out.grad_discrim = GradBundle::zeros_like(models.discriminator, 0);
  Matrix d_ftgt(batch.target_x.rows(), models.feature.out_dim());
  auto [f_tgt, cache_ft] = mlp_forward(models.feature, batch.target_x);
  {
    auto [d_s, cache_ds] = mlp_forward(models.discriminator, f_src);
    auto [d_t, cache_dt] = mlp_forward(models.discriminator, f_tgt);
    const AdvResult adv = adv_alignment_loss(d_s, d_t, batch.w_source, batch.w_target);
    out.loss_adv = adv.loss;
    if (weights.lambda > 0.0) {
      GradBundle gd_s = mlp_backward(models.discriminator, cache_ds, adv.d_source);
      GradBundle gd_t = mlp_backward(models.discriminator, cache_dt, adv.d_target);
      d_fsrc.add_inplace(grad_reverse(gd_s.d_input, weights.lambda));
      d_ftgt.add_inplace(grad_reverse(gd_t.d_input, weights.lambda));
      gd_s.add_inplace(gd_t);
      gd_s.d_input = Matrix();
      out.grad_discrim = std::move(gd_s);
    }
  }

  out.grad_feature = mlp_backward(models.feature, cache_fs, d_fsrc);
  if (weights.lambda > 0.0) {
    GradBundle g_t = mlp_backward(models.feature, cache_ft, d_ftgt);
    out.grad_feature.add_inplace(g_t);
  }

  // SSL path on the target views; alpha == 0 skips it exactly.
  if (weights.alpha > 0.0) {
    if (!view1 || !view2)
      throw std::runtime_error("total_objective_fixed: ssl views required when alpha > 0");
    SslForward s = ssl_forward(models.feature, *view1, *view2, variant, ssl_mask);
    out.loss_ssl = s.loss;
    s.d_view1.scale_inplace(weights.alpha);
    s.d_view2.scale_inplace(weights.alpha);
    GradBundle g1 = mlp_backward(models.feature, s.cache1, s.d_view1);
    GradBundle g2 = mlp_backward(models.feature, s.cache2, s.d_view2);
    out.grad_feature.add_inplace(g1);
    out.grad_feature.add_inplace(g2);
  }

  if (!std::isfinite(out.loss_source) || !std::isfinite(out.loss_adv) ||
      !std::isfinite(out.loss_ssl))
    throw std::runtime_error("total_objective: non-finite component loss");
  return out;
}

ObjectiveResult total_objective(const WeightedBatch& batch, const ModelBundle& models,
                                const LossWeights& weights, const SslConfig& ssl_cfg,
                                SeededRng& rng) {
  if (weights.alpha > 0.0) {
    const Matrix v1 = augment_rows(batch.target_x, ssl_cfg.aug, rng);
    const Matrix v2 = augment_rows(batch.target_x, ssl_cfg.aug, rng);
    return total_objective_fixed(batch, models, weights, ssl_cfg.variant, &v1, &v2,
                                 ssl_cfg.mask ? &*ssl_cfg.mask : nullptr);
  }
  return total_objective_fixed(batch, models, weights, ssl_cfg.variant, nullptr, nullptr,
                               nullptr);
}

double min_player_scalar(const WeightedBatch& batch, const ModelBundle& models,
                         const LossWeights& weights, SslVariant variant,
                         const Matrix* view1, const Matrix* view2,
                         const std::vector<std::uint8_t>* ssl_mask) {
  const Matrix f_src = mlp_forward(models.feature, batch.source_x).first;
  const Matrix logits = mlp_forward(models.classifier, f_src).first;
  const double l_s = source_ce_loss(logits, batch.source_y).loss;

  double l_adv = 0.0;
  if (weights.lambda > 0.0) {
    const Matrix f_tgt = mlp_forward(models.feature, batch.target_x).first;
    const Matrix d_s = mlp_forward(models.discriminator, f_src).first;
    const Matrix d_t = mlp_forward(models.discriminator, f_tgt).first;
    l_adv = adv_alignment_loss(d_s, d_t, batch.w_source, batch.w_target).loss;
  }
  double l_ssl = 0.0;
  if (weights.alpha > 0.0) {
    const Matrix f1 = mlp_forward(models.feature, *view1).first;
    const Matrix f2 = mlp_forward(models.feature, *view2).first;
    l_ssl = ssl_loss(f1, f2, variant, ssl_mask).loss;
  }
  return l_s - weights.lambda * l_adv + weights.alpha * l_ssl;
}

double adv_scalar(const WeightedBatch& batch, const ModelBundle& models) {
  const Matrix f_src = mlp_forward(models.feature, batch.source_x).first;
  const Matrix f_tgt = mlp_forward(models.feature, batch.target_x).first;
  const Matrix d_s = mlp_forward(models.discriminator, f_src).first;
  const Matrix d_t = mlp_forward(models.discriminator, f_tgt).first;
  return adv_alignment_loss(d_s, d_t, batch.w_source, batch.w_target).loss;
}

ToyLossResult toy_sup_loss(const Matrix& w1, const Matrix& w2, const Matrix& x,
                           const Matrix& y) {
  if (x.cols() != w1.rows()) throw_shape_error("toy_sup_loss x*W1", x, w1);
  if (w1.cols() != w2.rows()) throw_shape_error("toy_sup_loss W1*W2", w1, w2);
  if (y.rows() != x.rows() || y.cols() != w2.cols())
    throw_shape_error("toy_sup_loss targets", y, w2);

  const Matrix z = matmul(x, w1);
  Matrix h = z;
  for (auto& v : h.data()) v = v > 0.0 ? v : 0.0;
  const Matrix pred = matmul(h, w2);

  const double n = static_cast<double>(x.rows());
  ToyLossResult res;
  Matrix diff = sub(pred, y);
  double total = 0.0;
  for (double v : diff.data()) total += v * v;
  res.loss = total / n;

  Matrix d_pred = scaled(diff, 2.0 / n);
  res.d_w2 = matmul_tn(h, d_pred);
  Matrix d_h = matmul_nt(d_pred, w2);
  for (std::size_t i = 0; i < d_h.size(); ++i)
    if (z.at(i) <= 0.0) d_h.at(i) = 0.0;
  res.d_w1 = matmul_tn(x, d_h);
  return res;
}

ToyLossResult toy_ssl_loss_fixed(const Matrix& w1, const Matrix& x, const Matrix& eps1,
                                 const Matrix& eps2) {
  if (!eps1.same_shape(x) || !eps2.same_shape(x))
    throw std::runtime_error("toy_ssl_loss: perturbation shape mismatch");
  const Matrix v1 = add(x, eps1);
  const Matrix v2 = add(x, eps2);
  const Matrix f1 = matmul(v1, w1);
  const Matrix f2 = matmul(v2, w1);

  const double n = static_cast<double>(x.rows());
  ToyLossResult res;
  Matrix diff = sub(f1, f2);
  double total = 0.0;
  for (double v : diff.data()) total += v * v;
  res.loss = total / n;

  // d/dW1 of mean ||(v1 - v2) W1||^2, both branches.
  Matrix d_f = scaled(diff, 2.0 / n);
  res.d_w1 = matmul_tn(sub(v1, v2), d_f);
  res.d_w2 = Matrix();
  return res;
}

ToyLossResult toy_ssl_loss(const Matrix& w1, const Matrix& x, SeededRng& rng, double sigma) {
  if (sigma <= 0.0) throw std::runtime_error("toy_ssl_loss: sigma must be > 0");
  Matrix eps1(x.rows(), x.cols());
  Matrix eps2(x.rows(), x.cols());
  for (auto& v : eps1.data()) v = sigma * rng.normal();
  for (auto& v : eps2.data()) v = sigma * rng.normal();
  return toy_ssl_loss_fixed(w1, x, eps1, eps2);
}

}  // namespace unida
