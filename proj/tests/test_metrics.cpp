#include "doctest.h"

#include <cmath>

#include "unida/metrics.hpp"
#include "unida/weighting.hpp"

using namespace unida;

TEST_CASE("h_score closed forms") {
  CHECK(h_score(0.5, 0.5) == doctest::Approx(0.5));
  CHECK(h_score(1.0, 0.0) == 0.0);
  CHECK(h_score(0.0, 0.0) == 0.0);
  // direct formula evaluation: 2*0.48/1.4
  CHECK(h_score(0.8, 0.6) == doctest::Approx(2.0 * 0.48 / 1.4).epsilon(1e-12));
  CHECK_THROWS(h_score(1.2, 0.5));
}

TEST_CASE("h_score is symmetric and below the arithmetic mean") {
  SeededRng rng(91);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(), b = rng.uniform();
    const double h = h_score(a, b);
    CHECK(h == doctest::Approx(h_score(b, a)).epsilon(1e-12));
    CHECK(h <= (a + b) / 2.0 + 1e-12);
  }
}

TEST_CASE("batch noise rate") {
  const std::set<int> common{0, 1};
  const std::vector<int> labels{0, 1, 2, 3};
  const auto oracle = oracle_weights(labels, common);
  CHECK(batch_noise_rate(oracle, labels, common) == 0.0);

  std::vector<double> inverted;
  for (double w : oracle) inverted.push_back(1.0 - w);
  CHECK(batch_noise_rate(inverted, labels, common) == 1.0);
  CHECK_THROWS(batch_noise_rate({}, {}, common));
}

// Flip-rate identity: noise rate of flipped oracle weights equals the
// empirical flip fraction.
TEST_CASE("noise rate equals flip rate on large batches") {
  SeededRng rng(92);
  const std::set<int> common{0, 1, 2};
  std::vector<int> labels(50000);
  for (auto& l : labels) l = static_cast<int>(rng.uniform_index(6));
  auto w = oracle_weights(labels, common);
  inject_flip_noise(w, 0.25, rng);
  CHECK(batch_noise_rate(w, labels, common) == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("noise rate invariant to monotone reweighting preserving the partition") {
  SeededRng rng(93);
  const std::set<int> common{0};
  std::vector<int> labels(200);
  for (auto& l : labels) l = static_cast<int>(rng.uniform_index(3));
  std::vector<double> w(200);
  for (auto& v : w) v = rng.uniform();
  const double base = batch_noise_rate(w, labels, common);
  // strictly monotone map keeping the 0.5 threshold fixed: w' = w^3 scaled
  // around 0.5
  std::vector<double> remapped(200);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double centered = w[i] - 0.5;
    remapped[i] = 0.5 + 0.5 * (centered > 0 ? std::pow(centered * 2.0, 3.0)
                                            : -std::pow(-centered * 2.0, 3.0));
  }
  CHECK(batch_noise_rate(remapped, labels, common) == base);
}

namespace {

ModelBundle make_models(std::uint64_t seed, std::size_t in_dim, std::size_t k) {
  SeededRng rng(seed);
  ModelBundle m;
  m.feature = make_mlp({in_dim, 6, 4}, Activation::Relu, Activation::Identity, rng);
  m.classifier = make_mlp({4, k}, Activation::Relu, Activation::Identity, rng);
  m.discriminator = make_mlp({4, 4, 1}, Activation::Relu, Activation::Sigmoid, rng);
  return m;
}

}  // namespace

TEST_CASE("evaluate: rejector extremes") {
  const std::size_t k = 4;
  const auto models = make_models(94, 3, k);
  Dataset target;
  target.domain = Domain::Target;
  target.common_set = {0, 1};
  SeededRng rng(95);
  target.features = Matrix(20, 3);
  for (auto& v : target.features.data()) v = rng.normal();
  target.labels.resize(20);
  for (std::size_t i = 0; i < 20; ++i)
    target.labels[i] = (i % 2 == 0) ? static_cast<int>(i % 2)   // common
                                    : 4 + static_cast<int>(i % 2);  // target-private

  // entropy threshold 0 rejects everything (H >= 0 always)
  RejectionRule reject_all{RejectionKind::EntropyThreshold, 0.0};
  const auto rep = evaluate(models, target, reject_all);
  CHECK(rep.acc_common == 0.0);
  CHECK(rep.acc_private == 1.0);
  CHECK(rep.h == 0.0);
  CHECK(rep.misclass_into_source_private == 0.0);
}

// Brute-force per-sample recount oracle on seeded data.
TEST_CASE("evaluate matches a brute-force recount") {
  SeededRng rng(96);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 5;  // classifier classes: 3 common + 2 source-private
    const auto models = make_models(100 + trial, 3, k);
    Dataset target;
    target.domain = Domain::Target;
    target.common_set = {0, 1, 2};
    const std::size_t n = 40;
    target.features = Matrix(n, 3);
    for (auto& v : target.features.data()) v = 2.0 * rng.normal();
    target.labels.resize(n);
    for (auto& l : target.labels)
      l = rng.bernoulli(0.5) ? static_cast<int>(rng.uniform_index(3))
                             : 5 + static_cast<int>(rng.uniform_index(2));

    RejectionRule rule{RejectionKind::EntropyThreshold, -1.0};
    const auto rep = evaluate(models, target, rule);
    const auto rows = predict_rows(models, target.features, rule);

    long long nc = 0, np = 0, okc = 0, okp = 0, sp = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool common = target.common_set.count(target.labels[i]) > 0;
      if (common) {
        ++nc;
        if (!rows[i].rejected && rows[i].predicted == target.labels[i]) ++okc;
        if (!rows[i].rejected && target.common_set.count(rows[i].predicted) == 0) ++sp;
      } else {
        ++np;
        if (rows[i].rejected) ++okp;
      }
    }
    CHECK(rep.acc_common == (nc ? double(okc) / nc : 0.0));
    CHECK(rep.acc_private == (np ? double(okp) / np : 0.0));
    CHECK(rep.misclass_into_source_private == (nc ? double(sp) / nc : 0.0));
    CHECK(rep.h == doctest::Approx(h_score(rep.acc_common, rep.acc_private)).epsilon(1e-15));
  }
}

TEST_CASE("principal direction of points on the x axis") {
  Matrix pts(10, 2);
  for (std::size_t i = 0; i < 10; ++i) pts(i, 0) = static_cast<double>(i);
  const std::vector<double> e1{1.0, 0.0};
  const auto pd = principal_direction(pts, &e1);
  CHECK(pd.direction[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::fabs(pd.direction[1]) < 1e-10);
  CHECK(pd.cos_to_reference == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(!pd.degenerate);
}

TEST_CASE("isotropic cloud is flagged degenerate") {
  Matrix pts{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  const auto pd = principal_direction(pts);
  CHECK(pd.degenerate);
}

TEST_CASE("zero-variance input is rejected") {
  Matrix pts(5, 2, 3.0);
  CHECK_THROWS(principal_direction(pts));
}

// Dense closed-form eigendecomposition oracle on the 2x2 covariance.
TEST_CASE("principal direction matches 2x2 closed form on anisotropic gaussians") {
  SeededRng rng(97);
  for (int trial = 0; trial < 10; ++trial) {
    const double angle = rng.uniform(0.0, 3.14159);
    const double s1 = 3.0, s2 = 0.5;
    Matrix pts(4000, 2);
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      const double a = s1 * rng.normal(), b = s2 * rng.normal();
      pts(i, 0) = std::cos(angle) * a - std::sin(angle) * b + 5.0;
      pts(i, 1) = std::sin(angle) * a + std::cos(angle) * b - 2.0;
    }
    // closed-form top eigenvector of the sample covariance
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      mx += pts(i, 0);
      my += pts(i, 1);
    }
    mx /= pts.rows();
    my /= pts.rows();
    double cxx = 0.0, cxy = 0.0, cyy = 0.0;
    for (std::size_t i = 0; i < pts.rows(); ++i) {
      const double dx = pts(i, 0) - mx, dy = pts(i, 1) - my;
      cxx += dx * dx;
      cxy += dx * dy;
      cyy += dy * dy;
    }
    cxx /= pts.rows();
    cxy /= pts.rows();
    cyy /= pts.rows();
    const double tr = cxx + cyy, det = cxx * cyy - cxy * cxy;
    const double l1 = tr / 2.0 + std::sqrt(tr * tr / 4.0 - det);
    double vx, vy;
    if (std::fabs(cxy) > 1e-12) {
      vx = l1 - cyy;
      vy = cxy;
    } else {
      vx = cxx >= cyy ? 1.0 : 0.0;
      vy = cxx >= cyy ? 0.0 : 1.0;
    }
    const double nrm = std::hypot(vx, vy);
    vx /= nrm;
    vy /= nrm;

    const auto pd = principal_direction(pts);
    const double dot = std::fabs(pd.direction[0] * vx + pd.direction[1] * vy);
    CHECK(dot == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(pd.eigenvalue == doctest::Approx(l1).epsilon(1e-8));
    CHECK(std::hypot(pd.direction[0], pd.direction[1]) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("entropy rejection threshold defaults to half ln K") {
  RejectionRule rule;
  CHECK(rule.resolve_threshold(8) == doctest::Approx(0.5 * std::log(8.0)));
  RejectionRule fixed{RejectionKind::EntropyThreshold, 0.9};
  CHECK(fixed.resolve_threshold(8) == 0.9);
}
