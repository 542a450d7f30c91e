#include "unida/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unida {

std::size_t MlpParams::num_params() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void MlpParams::validate() const {
  if (layers.empty()) throw std::runtime_error("MlpParams: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.bias.size() != l.weight.cols())
      throw std::runtime_error("MlpParams: bias length mismatch at layer " + std::to_string(i));
    if (i + 1 < layers.size()) {
      if (l.weight.cols() != layers[i + 1].weight.rows())
        throw std::runtime_error("MlpParams: layer dims do not chain at layer " +
                                 std::to_string(i));
      if (l.activation == Activation::Softmax)
        throw std::runtime_error("MlpParams: softmax only allowed on the output layer");
    }
  }
}

MlpParams make_mlp(const std::vector<std::size_t>& sizes, Activation hidden_act,
                   Activation out_act, SeededRng& rng) {
  if (sizes.size() < 2) throw std::runtime_error("make_mlp: need at least in/out sizes");
  MlpParams p;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    MlpLayer l;
    l.activation = (i + 2 == sizes.size()) ? out_act : hidden_act;
    const double scale = (l.activation == Activation::Relu)
                             ? std::sqrt(2.0 / static_cast<double>(sizes[i]))
                             : std::sqrt(1.0 / static_cast<double>(sizes[i]));
    l.weight = Matrix(sizes[i], sizes[i + 1]);
    for (auto& w : l.weight.data()) w = rng.normal(0.0, scale);
    l.bias.assign(sizes[i + 1], 0.0);
    p.layers.push_back(std::move(l));
  }
  p.validate();
  return p;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const double* in = logits.row_ptr(r);
    double* o = out.row_ptr(r);
    double mx = in[0];
    for (std::size_t c = 1; c < logits.cols(); ++c) mx = std::max(mx, in[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      o[c] = std::exp(in[c] - mx);
      sum += o[c];
    }
    for (std::size_t c = 0; c < logits.cols(); ++c) o[c] /= sum;
  }
  return out;
}

namespace {

Matrix apply_activation(const Matrix& z, Activation act) {
  switch (act) {
    case Activation::Identity:
      return z;
    case Activation::Relu: {
      Matrix a = z;
      for (auto& v : a.data()) v = v > 0.0 ? v : 0.0;
      return a;
    }
    case Activation::Sigmoid: {
      Matrix a = z;
      for (auto& v : a.data()) v = 1.0 / (1.0 + std::exp(-v));
      return a;
    }
    case Activation::Softmax:
      return softmax_rows(z);
  }
  throw std::runtime_error("apply_activation: unknown kind");
}

// dL/dz given dL/da and the cached pre-activation z.
Matrix activation_backward(const Matrix& z, const Matrix& upstream, Activation act) {
  switch (act) {
    case Activation::Identity:
      return upstream;
    case Activation::Relu: {
      Matrix g = upstream;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (z.at(i) <= 0.0) g.at(i) = 0.0;
      return g;
    }
    case Activation::Sigmoid: {
      Matrix g = upstream;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-z.at(i)));
        g.at(i) *= s * (1.0 - s);
      }
      return g;
    }
    case Activation::Softmax: {
      // dz = p .* (g - rowsum(g .* p))
      const Matrix p = softmax_rows(z);
      Matrix g(z.rows(), z.cols());
      for (std::size_t r = 0; r < z.rows(); ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < z.cols(); ++c) dot += upstream(r, c) * p(r, c);
        for (std::size_t c = 0; c < z.cols(); ++c)
          g(r, c) = p(r, c) * (upstream(r, c) - dot);
      }
      return g;
    }
  }
  throw std::runtime_error("activation_backward: unknown kind");
}

}  // namespace

std::pair<Matrix, ForwardCache> mlp_forward(const MlpParams& params, const Matrix& input) {
  params.validate();
  if (input.cols() != params.in_dim())
    throw std::runtime_error("mlp_forward: input cols " + std::to_string(input.cols()) +
                             " != first-layer in-dim " + std::to_string(params.in_dim()));
  ForwardCache cache;
  Matrix x = input;
  for (const auto& l : params.layers) {
    cache.inputs.push_back(x);
    Matrix z = matmul(x, l.weight);
    for (std::size_t r = 0; r < z.rows(); ++r)
      for (std::size_t c = 0; c < z.cols(); ++c) z(r, c) += l.bias[c];
    cache.pre_act.push_back(z);
    x = apply_activation(z, l.activation);
  }
  x.require_finite("mlp_forward output");
  cache.output = x;
  return {x, cache};
}

GradBundle mlp_backward(const MlpParams& params, const ForwardCache& cache,
                        const Matrix& upstream_grad) {
  if (cache.inputs.size() != params.layers.size())
    throw std::runtime_error("mlp_backward: cache does not match params");
  if (!upstream_grad.same_shape(cache.output))
    throw_shape_error("mlp_backward upstream", upstream_grad, cache.output);

  GradBundle g;
  g.d_weight.resize(params.layers.size());
  g.d_bias.resize(params.layers.size());

  Matrix grad = upstream_grad;
  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const auto& l = params.layers[li];
    const Matrix dz = activation_backward(cache.pre_act[li], grad, l.activation);
    g.d_weight[li] = matmul_tn(cache.inputs[li], dz);
    g.d_bias[li] = colsum(dz);
    grad = matmul_nt(dz, l.weight);
  }
  g.d_input = grad;
  g.d_input.require_finite("mlp_backward input grad");
  return g;
}

Matrix grad_reverse(const Matrix& input_grad, double coeff) {
  if (coeff < 0.0) throw std::runtime_error("grad_reverse: coeff must be >= 0");
  return scaled(input_grad, -coeff);
}

void GradBundle::add_inplace(const GradBundle& o) {
  if (d_weight.size() != o.d_weight.size())
    throw std::runtime_error("GradBundle::add_inplace: layer count mismatch");
  for (std::size_t i = 0; i < d_weight.size(); ++i) {
    d_weight[i].add_inplace(o.d_weight[i]);
    for (std::size_t j = 0; j < d_bias[i].size(); ++j) d_bias[i][j] += o.d_bias[i][j];
  }
}

void GradBundle::scale_inplace(double s) {
  for (auto& w : d_weight) w.scale_inplace(s);
  for (auto& b : d_bias)
    for (auto& v : b) v *= s;
}

GradBundle GradBundle::zeros_like(const MlpParams& p, std::size_t batch_rows) {
  GradBundle g;
  for (const auto& l : p.layers) {
    g.d_weight.emplace_back(l.weight.rows(), l.weight.cols());
    g.d_bias.emplace_back(l.bias.size(), 0.0);
  }
  g.d_input = Matrix(batch_rows, p.in_dim());
  return g;
}

SgdState SgdState::zeros_like(const MlpParams& p) {
  SgdState s;
  for (const auto& l : p.layers) {
    s.vel_weight.emplace_back(l.weight.rows(), l.weight.cols());
    s.vel_bias.emplace_back(l.bias.size(), 0.0);
  }
  return s;
}

void sgd_step(MlpParams& params, const GradBundle& grads, double lr, double momentum,
              SgdState& state) {
  if (lr <= 0.0) throw std::runtime_error("sgd_step: lr must be > 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::runtime_error("sgd_step: momentum must be in [0, 1)");
  if (grads.d_weight.size() != params.layers.size())
    throw std::runtime_error("sgd_step: grad/param layer count mismatch");

  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    auto& l = params.layers[li];
    if (!grads.d_weight[li].same_shape(l.weight))
      throw_shape_error("sgd_step", grads.d_weight[li], l.weight);
    auto& vw = state.vel_weight[li];
    for (std::size_t i = 0; i < l.weight.size(); ++i) {
      vw.at(i) = momentum * vw.at(i) + grads.d_weight[li].at(i);
      l.weight.at(i) -= lr * vw.at(i);
    }
    auto& vb = state.vel_bias[li];
    for (std::size_t i = 0; i < l.bias.size(); ++i) {
      vb[i] = momentum * vb[i] + grads.d_bias[li][i];
      l.bias[i] -= lr * vb[i];
    }
  }
}

GradBundle finite_diff_grad(const std::function<double(const MlpParams&)>& loss_fn,
                            const MlpParams& params, double step) {
  if (step <= 0.0) throw std::runtime_error("finite_diff_grad: step must be > 0");
  GradBundle g = GradBundle::zeros_like(params, 0);
  MlpParams probe = params;
  const auto eval = [&](double& slot, double delta) {
    const double saved = slot;
    slot = saved + delta;
    const double v = loss_fn(probe);
    slot = saved;
    if (!std::isfinite(v)) throw std::runtime_error("finite_diff_grad: non-finite loss");
    return v;
  };
  for (std::size_t li = 0; li < probe.layers.size(); ++li) {
    auto& l = probe.layers[li];
    for (std::size_t i = 0; i < l.weight.size(); ++i) {
      const double up = eval(l.weight.at(i), step);
      const double dn = eval(l.weight.at(i), -step);
      g.d_weight[li].at(i) = (up - dn) / (2.0 * step);
    }
    for (std::size_t i = 0; i < l.bias.size(); ++i) {
      const double up = eval(l.bias[i], step);
      const double dn = eval(l.bias[i], -step);
      g.d_bias[li][i] = (up - dn) / (2.0 * step);
    }
  }
  return g;
}

double max_rel_error(const GradBundle& a, const GradBundle& b) {
  const auto rel = [](double x, double y) {
    return std::fabs(x - y) / std::max({std::fabs(x), std::fabs(y), 1e-8});
  };
  double m = 0.0;
  for (std::size_t li = 0; li < a.d_weight.size(); ++li) {
    for (std::size_t i = 0; i < a.d_weight[li].size(); ++i)
      m = std::max(m, rel(a.d_weight[li].at(i), b.d_weight[li].at(i)));
    for (std::size_t i = 0; i < a.d_bias[li].size(); ++i)
      m = std::max(m, rel(a.d_bias[li][i], b.d_bias[li][i]));
  }
  return m;
}

}  // namespace unida
