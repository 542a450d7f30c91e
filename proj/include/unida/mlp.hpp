#pragma once

#include <functional>
#include <vector>

#include "unida/matrix.hpp"
#include "unida/rng.hpp"

namespace unida {

enum class Activation { Identity, Relu, Sigmoid, Softmax };

struct MlpLayer {
  Matrix weight;             // in_dim x out_dim
  std::vector<double> bias;  // out_dim
  Activation activation = Activation::Identity;
};

// Parameters of one MLP. Consecutive layer dimensions must chain; Softmax
// is row-wise and only allowed on the last layer.
struct MlpParams {
  std::vector<MlpLayer> layers;

  std::size_t in_dim() const { return layers.front().weight.rows(); }
  std::size_t out_dim() const { return layers.back().weight.cols(); }
  std::size_t num_params() const;
  void validate() const;
};

// Builds an MLP with the given layer sizes, e.g. {2, 8, 3} -> two layers.
// Hidden layers use `hidden_act`, the last layer `out_act`. Weights are
// N(0, sqrt(2/fan_in)) for relu-activated layers and N(0, sqrt(1/fan_in))
// otherwise; biases start at zero.
MlpParams make_mlp(const std::vector<std::size_t>& sizes, Activation hidden_act,
                   Activation out_act, SeededRng& rng);

// Pre-activations and layer inputs retained by the forward pass.
struct ForwardCache {
  std::vector<Matrix> inputs;   // input to each layer
  std::vector<Matrix> pre_act;  // z = x*W + b per layer
  Matrix output;
};

// Per-layer gradients mirroring MlpParams, plus the gradient w.r.t. the
// network input.
struct GradBundle {
  std::vector<Matrix> d_weight;
  std::vector<std::vector<double>> d_bias;
  Matrix d_input;

  void add_inplace(const GradBundle& o);
  void scale_inplace(double s);
  static GradBundle zeros_like(const MlpParams& p, std::size_t batch_rows);
};

std::pair<Matrix, ForwardCache> mlp_forward(const MlpParams& params, const Matrix& input);

// Backprop the upstream gradient (same shape as the forward output) through
// the cached pass. Returns parameter gradients and the input gradient.
GradBundle mlp_backward(const MlpParams& params, const ForwardCache& cache,
                        const Matrix& upstream_grad);

// Gradient reversal: -coeff * g, elementwise. coeff must be >= 0.
Matrix grad_reverse(const Matrix& input_grad, double coeff);

// Momentum buffers for sgd_step, one per layer.
struct SgdState {
  std::vector<Matrix> vel_weight;
  std::vector<std::vector<double>> vel_bias;
  static SgdState zeros_like(const MlpParams& p);
};

// v <- momentum*v + grad; param <- param - lr*v. Requires lr > 0 and
// momentum in [0, 1).
void sgd_step(MlpParams& params, const GradBundle& grads, double lr, double momentum,
              SgdState& state);

// Central-difference gradient of an arbitrary scalar loss over every
// parameter. Test oracle; intentionally independent of mlp_backward.
GradBundle finite_diff_grad(const std::function<double(const MlpParams&)>& loss_fn,
                            const MlpParams& params, double step);

// Row-wise softmax with max-subtraction.
Matrix softmax_rows(const Matrix& logits);

// max relative error over all parameter gradients, denominator
// max(|a|,|b|,1e-8). Used by the gradient-check tests.
double max_rel_error(const GradBundle& a, const GradBundle& b);

}  // namespace unida
