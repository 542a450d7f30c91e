#include <stdexcept>

#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <set>

#include "unida/dataset.hpp"
#include "unida/metrics.hpp"

using namespace unida;

TEST_CASE("spcr") {
  CHECK(spcr({24, 5, 3}) == doctest::Approx(4.8));
  CHECK(spcr({0, 7, 2}) == 0.0);
  CHECK(spcr({50, 10, 5}) == doctest::Approx(5.0));
  CHECK_THROWS(spcr({1, 0, 0}));
}

TEST_CASE("rotation matrix") {
  const Matrix r0 = rotation(0.0);
  CHECK(max_abs_diff(r0, Matrix::identity(2)) == 0.0);

  const Matrix r90 = rotation(3.14159265358979323846 / 2.0);
  // quarter turn of (1, 0)
  CHECK(r90(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r90(1, 0) == doctest::Approx(1.0).epsilon(1e-12));

  const Matrix prod = matmul(rotation(0.7), rotation(-0.7));
  CHECK(max_abs_diff(prod, Matrix::identity(2)) < 1e-12);
}

TEST_CASE("toy dataset: noiseless limit maps common centroid through R(theta)") {
  ToyConfig cfg;
  cfg.tau = 3.0;
  cfg.gamma = 3.0;
  cfg.noise_sigma = 1e-9;
  cfg.samples_per_class = 4;
  cfg.split = {0, 1, 0};
  SeededRng rng(5);
  const auto pair = make_toy_dataset(cfg, rng);

  const Matrix rot = rotation(cfg.theta_value());
  const double ex = rot(0, 0) * cfg.tau + rot(0, 1) * cfg.gamma;
  const double ey = rot(1, 0) * cfg.tau + rot(1, 1) * cfg.gamma;
  for (std::size_t r = 0; r < pair.target.size(); ++r) {
    CHECK(pair.target.features(r, 0) == doctest::Approx(ex).epsilon(1e-6));
    CHECK(std::fabs(pair.target.features(r, 1) - ey) < 1e-6);
  }
  // default theta rotates the common ray onto e1
  CHECK(std::fabs(ey) < 1e-6);
  CHECK(ex == doctest::Approx(std::hypot(cfg.tau, cfg.gamma)).epsilon(1e-9));
}

TEST_CASE("toy dataset: SPCR=4 with one common class gives 5 source classes") {
  ToyConfig cfg;
  cfg.split = {4, 1, 0};
  cfg.samples_per_class = 3;
  SeededRng rng(6);
  const auto pair = make_toy_dataset(cfg, rng);
  CHECK(spcr(cfg.split) == doctest::Approx(4.0));
  std::set<int> src_labels(pair.source.labels.begin(), pair.source.labels.end());
  std::set<int> tgt_labels(pair.target.labels.begin(), pair.target.labels.end());
  CHECK(src_labels.size() == 5);
  CHECK(tgt_labels.size() == 1);
  CHECK(pair.source.common_set == std::set<int>{0});
}

// Sample-mean concentration: empirical centroid within 4 sigma / sqrt(n).
TEST_CASE("toy dataset source centroid concentration") {
  ToyConfig cfg;
  cfg.split = {0, 1, 0};
  cfg.samples_per_class = 10000;
  cfg.noise_sigma = 0.3;
  SeededRng rng(7);
  const auto pair = make_toy_dataset(cfg, rng);
  const double tol = 4.0 * cfg.noise_sigma / std::sqrt(10000.0);
  double mx = 0.0, my = 0.0;
  for (std::size_t r = 0; r < pair.source.size(); ++r) {
    mx += pair.source.features(r, 0);
    my += pair.source.features(r, 1);
  }
  mx /= 10000.0;
  my /= 10000.0;
  CHECK(std::fabs(mx - cfg.tau) < tol);
  CHECK(std::fabs(my - cfg.gamma) < tol);
}

// Population covariance of rotated target data is R Sigma R^T; with
// isotropic noise it stays sigma^2 I. Checked at n=10000 within 5%.
TEST_CASE("toy target covariance matches rotated source covariance") {
  ToyConfig cfg;
  cfg.split = {0, 1, 0};
  cfg.samples_per_class = 10000;
  cfg.noise_sigma = 0.3;
  SeededRng rng(8);
  const auto pair = make_toy_dataset(cfg, rng);

  double mx = 0.0, my = 0.0;
  const auto& f = pair.target.features;
  for (std::size_t r = 0; r < f.rows(); ++r) {
    mx += f(r, 0);
    my += f(r, 1);
  }
  mx /= static_cast<double>(f.rows());
  my /= static_cast<double>(f.rows());
  double cxx = 0.0, cxy = 0.0, cyy = 0.0;
  for (std::size_t r = 0; r < f.rows(); ++r) {
    const double dx = f(r, 0) - mx, dy = f(r, 1) - my;
    cxx += dx * dx;
    cxy += dx * dy;
    cyy += dy * dy;
  }
  cxx /= f.rows();
  cxy /= f.rows();
  cyy /= f.rows();
  const double s2 = cfg.noise_sigma * cfg.noise_sigma;
  CHECK(std::fabs(cxx - s2) < 0.05 * s2);
  CHECK(std::fabs(cyy - s2) < 0.05 * s2);
  CHECK(std::fabs(cxy) < 0.05 * s2);
}

TEST_CASE("unida dataset: closed set with zero shift draws from the same clusters") {
  LabelSplit split{0, 4, 0};
  SeededRng rng(9);
  const auto pair = make_unida_dataset(split, 4, 6.0, 500, ShiftSpec{}, rng);
  CHECK(pair.source.common_set.size() == 4);
  // per-class means differ by less than 4 sigma / sqrt(n) per coordinate
  // (sigma = 1, n = 500, so tolerance 0.179 with a safety factor below)
  for (int cls = 0; cls < 4; ++cls) {
    std::vector<double> ms(4, 0.0), mt(4, 0.0);
    int ns = 0, nt = 0;
    for (std::size_t r = 0; r < pair.source.size(); ++r)
      if (pair.source.labels[r] == cls) {
        ++ns;
        for (int c = 0; c < 4; ++c) ms[c] += pair.source.features(r, c);
      }
    for (std::size_t r = 0; r < pair.target.size(); ++r)
      if (pair.target.labels[r] == cls) {
        ++nt;
        for (int c = 0; c < 4; ++c) mt[c] += pair.target.features(r, c);
      }
    CHECK(ns == 500);
    CHECK(nt == 500);
    for (int c = 0; c < 4; ++c)
      CHECK(std::fabs(ms[c] / ns - mt[c] / nt) < 2.0 * 4.0 / std::sqrt(500.0));
  }
}

TEST_CASE("unida dataset reproduces Office-31 extreme ratios") {
  LabelSplit split{24, 5, 3};
  SeededRng rng(10);
  const auto pair = make_unida_dataset(split, 3, 4.0, 2, ShiftSpec{0.3, 1.0}, rng);
  std::set<int> src(pair.source.labels.begin(), pair.source.labels.end());
  std::set<int> tgt(pair.target.labels.begin(), pair.target.labels.end());
  CHECK(static_cast<int>(src.size()) == 29);
  CHECK(static_cast<int>(tgt.size()) == 8);
  CHECK(pair.source.common_set.size() == 5);
  // no target sample carries a source-private label
  for (int l : pair.target.labels) {
    const bool source_private = l >= 5 && l < 29;
    CHECK(!source_private);
  }
  CHECK(spcr(split) == doctest::Approx(4.8));
}

// Oracle classification: with separation >> noise a nearest-centroid rule
// recovers labels almost perfectly.
TEST_CASE("nearest-centroid oracle achieves 99% on separable source") {
  LabelSplit split{6, 4, 0};
  SeededRng rng(11);
  const auto pair = make_unida_dataset(split, 8, 8.0, 200, ShiftSpec{}, rng);

  const int k = split.n_source_classes();
  std::vector<std::vector<double>> means(k, std::vector<double>(8, 0.0));
  std::vector<int> counts(k, 0);
  for (std::size_t r = 0; r < pair.source.size(); ++r) {
    const int l = pair.source.labels[r];
    ++counts[l];
    for (int c = 0; c < 8; ++c) means[l][c] += pair.source.features(r, c);
  }
  for (int j = 0; j < k; ++j)
    for (auto& v : means[j]) v /= counts[j];

  int correct = 0;
  for (std::size_t r = 0; r < pair.source.size(); ++r) {
    int best = -1;
    double bestd = 0.0;
    for (int j = 0; j < k; ++j) {
      double d = 0.0;
      for (int c = 0; c < 8; ++c) {
        const double diff = pair.source.features(r, c) - means[j][c];
        d += diff * diff;
      }
      if (best < 0 || d < bestd) {
        best = j;
        bestd = d;
      }
    }
    if (best == pair.source.labels[r]) ++correct;
  }
  CHECK(static_cast<double>(correct) / pair.source.size() >= 0.99);
}

TEST_CASE("unida dataset rejects over-dense placement requests") {
  LabelSplit split{0, 400, 0};
  SeededRng rng(12);
  CHECK_THROWS_WITH_AS(make_unida_dataset(split, 2, 5.0, 1, ShiftSpec{}, rng),
                       doctest::Contains("separation"), std::runtime_error);
}

TEST_CASE("datasets are bitwise reproducible from the same seed") {
  LabelSplit split{4, 3, 2};
  SeededRng a(77), b(77);
  const auto p1 = make_unida_dataset(split, 5, 5.0, 20, ShiftSpec{0.4, 0.5}, a);
  const auto p2 = make_unida_dataset(split, 5, 5.0, 20, ShiftSpec{0.4, 0.5}, b);
  CHECK(p1.source.features == p2.source.features);
  CHECK(p1.target.features == p2.target.features);
  CHECK(p1.source.labels == p2.source.labels);
  CHECK(p1.target.labels == p2.target.labels);

  ToyConfig toy;
  SeededRng c(78), d(78);
  CHECK(make_toy_dataset(toy, c).source.features ==
        make_toy_dataset(toy, d).source.features);
}

TEST_CASE("augment: mean concentration and distinct views") {
  AugmentConfig cfg;
  cfg.sigma_aug = 0.2;
  std::vector<double> x{1.0, -2.0, 0.5};
  SeededRng rng(13);

  const int n = 10000;
  std::vector<double> mean(3, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto a = augment(x, cfg, rng);
    for (int c = 0; c < 3; ++c) mean[c] += a[c];
  }
  const double tol = 4.0 * cfg.sigma_aug / std::sqrt(static_cast<double>(n));
  for (int c = 0; c < 3; ++c) CHECK(std::fabs(mean[c] / n - x[c]) < tol);

  SeededRng r1(14), r2(15);
  CHECK(augment(x, cfg, r1) != augment(x, cfg, r2));

  // small-noise limit stays within 5 sigma per coordinate
  AugmentConfig tiny;
  tiny.sigma_aug = 1e-8;
  const auto a = augment(x, tiny, rng);
  for (int c = 0; c < 3; ++c) CHECK(std::fabs(a[c] - x[c]) < 5.0 * tiny.sigma_aug);
}

TEST_CASE("dataset csv round trip is bit exact") {
  LabelSplit split{2, 2, 1};
  SeededRng rng(16);
  const auto pair = make_unida_dataset(split, 3, 4.0, 7, ShiftSpec{0.2, 0.3}, rng);

  const std::string path = "test_dataset_roundtrip.csv";
  write_domain_pair_csv(pair, path, /*hide_target_labels=*/false);
  const auto back = read_domain_pair_csv(path);
  CHECK(back.source.features == pair.source.features);
  CHECK(back.target.features == pair.target.features);
  CHECK(back.source.labels == pair.source.labels);
  CHECK(back.target.labels == pair.target.labels);
  CHECK(back.source.common_set == pair.source.common_set);
  std::remove(path.c_str());
}

TEST_CASE("hidden labels: train view carries no labels, csv masks them") {
  ToyConfig cfg;
  cfg.samples_per_class = 3;
  SeededRng rng(17);
  const auto pair = make_toy_dataset(cfg, rng);
  const TrainView view = train_view(pair.target);
  CHECK(view.features == &pair.target.features);

  const std::string path = "test_dataset_masked.csv";
  write_domain_pair_csv(pair, path, /*hide_target_labels=*/true);
  const auto back = read_domain_pair_csv(path);
  for (int l : back.target.labels) CHECK(l == -1);
  CHECK(back.target.features == pair.target.features);
  std::remove(path.c_str());
}
