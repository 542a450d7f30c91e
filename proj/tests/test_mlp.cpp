#include <stdexcept>

#include "doctest.h"

#include <cmath>

#include "unida/mlp.hpp"

using namespace unida;

namespace {

MlpParams identity_net(std::size_t dim, Activation act) {
  MlpParams p;
  MlpLayer l;
  l.weight = Matrix::identity(dim);
  l.bias.assign(dim, 0.0);
  l.activation = act;
  p.layers.push_back(l);
  return p;
}

}  // namespace

TEST_CASE("identity layer passes input through") {
  auto p = identity_net(2, Activation::Identity);
  Matrix x{{3, -1}};
  auto [out, cache] = mlp_forward(p, x);
  CHECK(out(0, 0) == 3.0);
  CHECK(out(0, 1) == -1.0);
}

TEST_CASE("relu clamps negatives") {
  auto p = identity_net(2, Activation::Relu);
  Matrix x{{-2, 5}};
  auto out = mlp_forward(p, x).first;
  CHECK(out(0, 0) == 0.0);
  CHECK(out(0, 1) == 5.0);
}

TEST_CASE("forward rejects dimension mismatch with diagnostic") {
  auto p = identity_net(2, Activation::Identity);
  CHECK_THROWS_WITH_AS(mlp_forward(p, Matrix(1, 3)).first,
                       doctest::Contains("in-dim"), std::runtime_error);
}

// Independent oracle: the same 2->4->3 forward pass recomputed with plain
// loops, no Matrix machinery.
TEST_CASE("random net matches a hand-rolled forward pass") {
  SeededRng rng(99);
  auto p = make_mlp({2, 4, 3}, Activation::Relu, Activation::Identity, rng);
  SeededRng xr(100);
  Matrix x(5, 2);
  for (auto& v : x.data()) v = xr.normal();

  const Matrix out = mlp_forward(p, x).first;

  for (std::size_t r = 0; r < 5; ++r) {
    double hidden[4];
    for (int j = 0; j < 4; ++j) {
      double z = p.layers[0].bias[j];
      for (int i = 0; i < 2; ++i) z += x(r, i) * p.layers[0].weight(i, j);
      hidden[j] = z > 0.0 ? z : 0.0;
    }
    for (int k = 0; k < 3; ++k) {
      double z = p.layers[1].bias[k];
      for (int j = 0; j < 4; ++j) z += hidden[j] * p.layers[1].weight(j, k);
      CHECK(out(r, k) == doctest::Approx(z).epsilon(1e-12));
    }
  }
}

TEST_CASE("single identity layer: weight grad is input^T * upstream") {
  auto p = identity_net(2, Activation::Identity);
  Matrix x{{1, 2}, {3, 4}};
  auto [out, cache] = mlp_forward(p, x);
  Matrix g{{0.5, -1}, {2, 0.25}};
  auto grads = mlp_backward(p, cache, g);
  const Matrix expect = matmul_tn(x, g);
  CHECK(max_abs_diff(grads.d_weight[0], expect) == 0.0);
}

TEST_CASE("relu gates gradient at negative pre-activation") {
  auto p = identity_net(2, Activation::Relu);
  Matrix x{{-3, 2}};
  auto [out, cache] = mlp_forward(p, x);
  Matrix g{{1, 1}};
  auto grads = mlp_backward(p, cache, g);
  CHECK(grads.d_input(0, 0) == 0.0);
  CHECK(grads.d_input(0, 1) == 1.0);
}

TEST_CASE("backward rejects cache/params mismatch") {
  auto p2 = identity_net(2, Activation::Identity);
  SeededRng rng(1);
  auto p3 = make_mlp({2, 3, 2}, Activation::Relu, Activation::Identity, rng);
  auto [out, cache] = mlp_forward(p2, Matrix{{1, 2}});
  CHECK_THROWS(mlp_backward(p3, cache, out));
}

// Finite-difference oracle over every parameter of a small net, several
// activations, 5 seeds.
TEST_CASE("analytic gradients match central finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SeededRng rng(seed);
    auto p = make_mlp({3, 8, 4}, Activation::Relu, Activation::Sigmoid, rng);
    Matrix x(6, 3);
    for (auto& v : x.data()) v = rng.normal();

    // scalar loss: mean of squared outputs
    const auto loss_fn = [&](const MlpParams& q) {
      const Matrix out = mlp_forward(q, x).first;
      double s = 0.0;
      for (double v : out.data()) s += v * v;
      return s / static_cast<double>(out.rows());
    };

    auto [out, cache] = mlp_forward(p, x);
    Matrix up = scaled(out, 2.0 / static_cast<double>(out.rows()));
    const GradBundle analytic = mlp_backward(p, cache, up);
    const GradBundle fd = finite_diff_grad(loss_fn, p, 1e-5);
    CHECK(max_rel_error(analytic, fd) < 1e-4);
  }
}

TEST_CASE("softmax output layer backward matches finite differences") {
  SeededRng rng(11);
  auto p = make_mlp({2, 5, 3}, Activation::Relu, Activation::Softmax, rng);
  Matrix x(4, 2);
  for (auto& v : x.data()) v = rng.normal();
  const auto loss_fn = [&](const MlpParams& q) {
    const Matrix out = mlp_forward(q, x).first;
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += (i % 2 ? 1.5 : -0.5) * out.at(i);
    return s;
  };
  auto [out, cache] = mlp_forward(p, x);
  Matrix up(out.rows(), out.cols());
  for (std::size_t i = 0; i < up.size(); ++i) up.at(i) = (i % 2 ? 1.5 : -0.5);
  const GradBundle analytic = mlp_backward(p, cache, up);
  const GradBundle fd = finite_diff_grad(loss_fn, p, 1e-6);
  CHECK(max_rel_error(analytic, fd) < 1e-4);
}

TEST_CASE("grad_reverse") {
  Matrix g{{2, -3}};
  Matrix r = grad_reverse(g, 1.0);
  CHECK(r(0, 0) == -2.0);
  CHECK(r(0, 1) == 3.0);
  Matrix z = grad_reverse(g, 0.0);
  CHECK(z(0, 0) == 0.0);
  Matrix h = grad_reverse(Matrix{{4, 4}}, 0.5);
  CHECK(h(0, 0) == -2.0);
  CHECK(h(0, 1) == -2.0);
  CHECK_THROWS(grad_reverse(g, -1.0));
  // double reversal at coeff 1 restores the gradient
  CHECK(max_abs_diff(grad_reverse(grad_reverse(g, 1.0), 1.0), g) == 0.0);
}

TEST_CASE("plain sgd step") {
  MlpParams p = identity_net(1, Activation::Identity);
  p.layers[0].weight(0, 0) = 1.0;
  GradBundle g = GradBundle::zeros_like(p, 0);
  g.d_weight[0](0, 0) = 2.0;
  SgdState s = SgdState::zeros_like(p);
  sgd_step(p, g, 0.1, 0.0, s);
  CHECK(p.layers[0].weight(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("zero grad leaves params bitwise unchanged") {
  SeededRng rng(3);
  auto p = make_mlp({2, 4, 2}, Activation::Relu, Activation::Identity, rng);
  auto snapshot = p;
  GradBundle g = GradBundle::zeros_like(p, 0);
  SgdState s = SgdState::zeros_like(p);
  sgd_step(p, g, 0.5, 0.9, s);
  for (std::size_t li = 0; li < p.layers.size(); ++li)
    CHECK(p.layers[li].weight == snapshot.layers[li].weight);
}

TEST_CASE("vanishing lr leaves parameters bitwise unchanged") {
  SeededRng rng(4);
  auto p = make_mlp({3, 4, 2}, Activation::Relu, Activation::Identity, rng);
  const auto snapshot = p;
  GradBundle g = GradBundle::zeros_like(p, 0);
  for (auto& w : g.d_weight)
    for (auto& v : w.data()) v = rng.normal();
  SgdState s = SgdState::zeros_like(p);
  sgd_step(p, g, 1e-300, 0.0, s);
  for (std::size_t li = 0; li < p.layers.size(); ++li)
    CHECK(p.layers[li].weight == snapshot.layers[li].weight);
}

TEST_CASE("momentum matches hand-computed velocity recursion") {
  MlpParams p = identity_net(1, Activation::Identity);
  p.layers[0].weight(0, 0) = 1.0;
  SgdState s = SgdState::zeros_like(p);
  const double lr = 0.1, mom = 0.9;
  const double g1 = 2.0, g2 = -1.0;

  GradBundle g = GradBundle::zeros_like(p, 0);
  g.d_weight[0](0, 0) = g1;
  sgd_step(p, g, lr, mom, s);
  g.d_weight[0](0, 0) = g2;
  sgd_step(p, g, lr, mom, s);

  // hand recursion: v1 = g1; p1 = 1 - lr*v1; v2 = mom*v1 + g2; p2 = p1 - lr*v2
  const double v1 = g1;
  const double p1 = 1.0 - lr * v1;
  const double v2 = mom * v1 + g2;
  const double p2 = p1 - lr * v2;
  CHECK(p.layers[0].weight(0, 0) == doctest::Approx(p2).epsilon(1e-12));
}

TEST_CASE("finite_diff_grad on analytic quadratic") {
  MlpParams p = identity_net(2, Activation::Identity);
  p.layers[0].weight(0, 0) = 1.0;
  p.layers[0].weight(1, 1) = 2.0;
  const auto loss_fn = [](const MlpParams& q) {
    double s = 0.0;
    for (double v : q.layers[0].weight.data()) s += v * v;
    return s;
  };
  const GradBundle fd = finite_diff_grad(loss_fn, p, 1e-5);
  CHECK(fd.d_weight[0](0, 0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(fd.d_weight[0](1, 1) == doctest::Approx(4.0).epsilon(1e-6));

  const auto const_fn = [](const MlpParams&) { return 3.5; };
  const GradBundle zero = finite_diff_grad(const_fn, p, 1e-5);
  CHECK(std::fabs(zero.d_weight[0](0, 1)) < 1e-9);

  const auto bad_fn = [](const MlpParams&) { return std::nan(""); };
  CHECK_THROWS(finite_diff_grad(bad_fn, p, 1e-5));
}

TEST_CASE("forward is deterministic") {
  SeededRng rng(8);
  auto p = make_mlp({3, 5, 2}, Activation::Relu, Activation::Identity, rng);
  Matrix x(7, 3);
  for (auto& v : x.data()) v = rng.normal();
  const Matrix a = mlp_forward(p, x).first;
  const Matrix b = mlp_forward(p, x).first;
  CHECK(a == b);
}
