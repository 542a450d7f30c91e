#pragma once

#include <optional>
#include <vector>

#include "unida/dataset.hpp"
#include "unida/matrix.hpp"
#include "unida/mlp.hpp"
#include "unida/rng.hpp"

namespace unida {

// lambda weights the adversarial alignment term, alpha the self-supervised
// consistency term in the unified objective.
struct LossWeights {
  double lambda = 0.5;
  double alpha = 0.5;
  void validate() const;
};

// Paired source/target minibatch with per-sample alignment weights in
// [0, 1] used to downweight private-class samples.
struct WeightedBatch {
  Matrix source_x;
  std::vector<int> source_y;
  Matrix target_x;
  std::vector<double> w_source;
  std::vector<double> w_target;
  void validate() const;
};

enum class SslVariant { PlainL2, StopGradOneBranch };

struct SslConfig {
  SslVariant variant = SslVariant::StopGradOneBranch;
  AugmentConfig aug;
  // Optional row filter over the target batch (1 = row participates in the
  // SSL term). Lets the harness restrict SSL to target-common data.
  std::optional<std::vector<std::uint8_t>> mask;
};

// Feature extractor, label classifier and domain discriminator.
struct ModelBundle {
  MlpParams feature;
  MlpParams classifier;
  MlpParams discriminator;
};

struct CeResult {
  double loss = 0.0;
  Matrix d_logits;
};

// Mean cross-entropy of softmax(logits) against integer labels;
// gradient is (softmax - onehot)/batch.
CeResult source_ce_loss(const Matrix& logits, const std::vector<int>& labels);

struct AdvResult {
  double loss = 0.0;
  Matrix d_source;  // gradient w.r.t. discriminator outputs on source rows
  Matrix d_target;
};

// Weighted domain BCE: -mean_s w log d - mean_t w log(1-d), means per
// domain then summed. Outputs are clamped to [1e-7, 1-1e-7] to keep the
// logs finite. Minimized by the discriminator, maximized by the feature
// extractor through gradient reversal.
AdvResult adv_alignment_loss(const Matrix& d_source, const Matrix& d_target,
                             const std::vector<double>& w_source,
                             const std::vector<double>& w_target);

struct SslResult {
  double loss = 0.0;
  Matrix d_view1;
  Matrix d_view2;
};

// Mean squared distance between two feature views of the same rows.
// PlainL2 backpropagates through both views; StopGradOneBranch averages
// the two stop-gradient orderings (which halves the gradient but keeps the
// scalar identical). Optional mask restricts the mean to selected rows.
SslResult ssl_loss(const Matrix& f_view1, const Matrix& f_view2, SslVariant variant,
                   const std::vector<std::uint8_t>* mask = nullptr);

struct ObjectiveResult {
  double loss_source = 0.0;   // L_s
  double loss_adv = 0.0;      // L_adv (reported as its nonnegative value)
  double loss_ssl = 0.0;      // L_ssl
  GradBundle grad_feature;    // descent direction for theta_f
  GradBundle grad_classifier; // descent direction for theta_c
  GradBundle grad_discrim;    // descent direction for theta_d (descends L_adv)
};

// One training step's losses and gradients for the unified objective
//   min_{f,c} max_d [ L_s - lambda * L_adv + alpha * L_ssl ].
// theta_f and theta_c descend L_s - lambda*L_adv + alpha*L_ssl; the
// discriminator term reaches theta_f through grad_reverse(., lambda).
// theta_d descends L_adv (the max player). Zero lambda/alpha skip their
// component exactly, so the reduction identities hold bitwise.
ObjectiveResult total_objective(const WeightedBatch& batch, const ModelBundle& models,
                                const LossWeights& weights, const SslConfig& ssl_cfg,
                                SeededRng& rng);

// Deterministic core with pre-drawn SSL views; the rng overload draws the
// two views and delegates here. Exposed for the finite-difference checks.
ObjectiveResult total_objective_fixed(const WeightedBatch& batch, const ModelBundle& models,
                                      const LossWeights& weights, SslVariant variant,
                                      const Matrix* view1, const Matrix* view2,
                                      const std::vector<std::uint8_t>* ssl_mask);

// Scalar of the min player, L_s - lambda*L_adv + alpha*L_ssl, at fixed
// discriminator. Finite differences of this in (theta_f, theta_c) must
// match grad_feature/grad_classifier; finite differences of L_adv in
// theta_d must match grad_discrim.
double min_player_scalar(const WeightedBatch& batch, const ModelBundle& models,
                         const LossWeights& weights, SslVariant variant,
                         const Matrix* view1, const Matrix* view2,
                         const std::vector<std::uint8_t>* ssl_mask);
double adv_scalar(const WeightedBatch& batch, const ModelBundle& models);

struct ToyLossResult {
  double loss = 0.0;
  Matrix d_w1;
  Matrix d_w2;
};

// Toy study losses: y_hat = W2 * relu(W1 * x), L = mean ||y_hat - y||^2.
// x rows are samples; W1 is (in x hidden), W2 (hidden x out).
ToyLossResult toy_sup_loss(const Matrix& w1, const Matrix& w2, const Matrix& x,
                           const Matrix& y);

// Toy consistency loss mean ||W1(x+eps) - W1(x+eps')||^2 on the linear
// first layer, gradient through both branches.
ToyLossResult toy_ssl_loss(const Matrix& w1, const Matrix& x, SeededRng& rng, double sigma);

// Deterministic version with frozen perturbations (rows match x).
ToyLossResult toy_ssl_loss_fixed(const Matrix& w1, const Matrix& x, const Matrix& eps1,
                                 const Matrix& eps2);

}  // namespace unida
