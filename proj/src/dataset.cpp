#include "unida/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "unida/csv.hpp"

namespace unida {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void LabelSplit::validate() const {
  if (n_common < 1) throw std::runtime_error("LabelSplit: n_common must be >= 1");
  if (n_source_private < 0 || n_target_private < 0)
    throw std::runtime_error("LabelSplit: counts must be nonnegative");
}

double spcr(const LabelSplit& split) {
  if (split.n_common < 1) throw std::runtime_error("spcr: n_common must be >= 1");
  return static_cast<double>(split.n_source_private) / static_cast<double>(split.n_common);
}

double ToyConfig::theta_value() const {
  return theta.has_value() ? *theta : -std::atan2(gamma, tau);
}

void ToyConfig::validate() const {
  split.validate();
  if (noise_sigma <= 0.0) throw std::runtime_error("ToyConfig: noise_sigma must be > 0");
  if (samples_per_class < 1)
    throw std::runtime_error("ToyConfig: samples_per_class must be >= 1");
  if (split.n_target_private != 0)
    throw std::runtime_error("ToyConfig: toy scenario has no target-private classes");
}

void AugmentConfig::validate() const {
  if (sigma_aug <= 0.0) throw std::runtime_error("AugmentConfig: sigma_aug must be > 0");
  if (scale_jitter && scale_jitter->first > scale_jitter->second)
    throw std::runtime_error("AugmentConfig: bad jitter range");
}

Matrix rotation(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return Matrix{{c, -s}, {s, c}};
}

namespace {

// Toy class centroids. Common class k lies on the (tau, gamma) ray at
// radius scale (1 + k); source-private classes sit on rays at angles
// evenly spaced inside (0, 90) degrees with the common radius. A private
// ray falling onto the common ray gets its radius bumped so no two
// centroids coincide.
std::vector<std::pair<double, double>> toy_source_centroids(const ToyConfig& cfg) {
  std::vector<std::pair<double, double>> cents(cfg.split.n_source_classes());
  for (int k = 0; k < cfg.split.n_common; ++k)
    cents[k] = {(1.0 + k) * cfg.tau, (1.0 + k) * cfg.gamma};
  const double radius = std::hypot(cfg.tau, cfg.gamma);
  const double common_angle = std::atan2(cfg.gamma, cfg.tau);
  const int p = cfg.split.n_source_private;
  for (int j = 0; j < p; ++j) {
    const double angle = (kPi / 2.0) * (j + 1) / (p + 1);
    double r = radius;
    if (std::fabs(angle - common_angle) < 1e-9) r *= 1.5;
    cents[cfg.split.n_common + j] = {r * std::cos(angle), r * std::sin(angle)};
  }
  return cents;
}

void append_gaussian_cluster(Matrix& features, std::vector<int>& labels, std::size_t& row,
                             const std::vector<double>& mean, double sigma, int label,
                             int count, SeededRng& rng) {
  const std::size_t d = mean.size();
  for (int i = 0; i < count; ++i, ++row) {
    for (std::size_t c = 0; c < d; ++c)
      features(row, c) = mean[c] + sigma * rng.normal();
    labels[row] = label;
  }
}

}  // namespace

DomainPair make_toy_dataset(const ToyConfig& cfg, SeededRng& rng) {
  cfg.validate();
  const auto cents = toy_source_centroids(cfg);
  const int n_src_classes = cfg.split.n_source_classes();
  const int n = cfg.samples_per_class;

  DomainPair pair;
  std::set<int> common;
  for (int k = 0; k < cfg.split.n_common; ++k) common.insert(k);

  pair.source.domain = Domain::Source;
  pair.source.common_set = common;
  pair.source.features = Matrix(static_cast<std::size_t>(n_src_classes) * n, 2);
  pair.source.labels.assign(pair.source.features.rows(), 0);
  std::size_t row = 0;
  for (int cls = 0; cls < n_src_classes; ++cls)
    append_gaussian_cluster(pair.source.features, pair.source.labels, row,
                            {cents[cls].first, cents[cls].second}, cfg.noise_sigma, cls, n,
                            rng);

  // Target = R(theta) applied to fresh draws from the common-class source
  // generator; labels stay hidden from training via train_view().
  const Matrix rot = rotation(cfg.theta_value());
  pair.target.domain = Domain::Target;
  pair.target.common_set = common;
  pair.target.features = Matrix(static_cast<std::size_t>(cfg.split.n_common) * n, 2);
  pair.target.labels.assign(pair.target.features.rows(), 0);
  row = 0;
  for (int cls = 0; cls < cfg.split.n_common; ++cls) {
    for (int i = 0; i < n; ++i, ++row) {
      const double x = cents[cls].first + cfg.noise_sigma * rng.normal();
      const double y = cents[cls].second + cfg.noise_sigma * rng.normal();
      pair.target.features(row, 0) = rot(0, 0) * x + rot(0, 1) * y;
      pair.target.features(row, 1) = rot(1, 0) * x + rot(1, 1) * y;
      pair.target.labels[row] = cls;
    }
  }
  return pair;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Draw one more mean at pairwise distance >= separation from `existing`.
// The placement region scales with the class count but is capped at 8
// separations per side, so requests denser than the region supports are
// rejected instead of looping.
std::vector<double> place_mean(const std::vector<std::vector<double>>& existing, int dim,
                               double separation, SeededRng& rng) {
  const double box = separation *
                     std::min(8.0, 1.0 + std::pow(static_cast<double>(existing.size() + 4),
                                                  1.0 / static_cast<double>(dim)));
  const double min_sq = separation * separation;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<double> cand(dim);
    for (auto& v : cand) v = rng.uniform(-box, box);
    bool ok = true;
    for (const auto& m : existing)
      if (sq_dist(cand, m) < min_sq) {
        ok = false;
        break;
      }
    if (ok) return cand;
  }
  throw std::runtime_error(
      "make_unida_dataset: could not place cluster means at separation " +
      std::to_string(separation) + " after 10000 retries (dim " + std::to_string(dim) +
      ", " + std::to_string(existing.size()) + " placed)");
}

struct SubspaceShift {
  std::vector<double> u, v;        // orthonormal plane of rotation
  double cos_t = 1.0, sin_t = 0.0;
  std::vector<double> translate;

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> out = x;
    const std::size_t d = x.size();
    double pu = 0.0, pv = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      pu += u[i] * x[i];
      pv += v[i] * x[i];
    }
    const double ru = cos_t * pu - sin_t * pv;
    const double rv = sin_t * pu + cos_t * pv;
    for (std::size_t i = 0; i < d; ++i)
      out[i] += (ru - pu) * u[i] + (rv - pv) * v[i] + translate[i];
    return out;
  }
};

SubspaceShift draw_shift(const ShiftSpec& spec, int dim, SeededRng& rng) {
  SubspaceShift s;
  s.cos_t = std::cos(spec.rotate_angle);
  s.sin_t = std::sin(spec.rotate_angle);
  // Gram-Schmidt on two Gaussian draws; dim >= 2 guarantees success a.s.
  s.u.resize(dim);
  s.v.resize(dim);
  double nu = 0.0;
  for (auto& x : s.u) x = rng.normal();
  for (double x : s.u) nu += x * x;
  nu = std::sqrt(nu);
  for (auto& x : s.u) x /= nu;
  double dot = 0.0, nv = 0.0;
  for (auto& x : s.v) x = rng.normal();
  for (int i = 0; i < dim; ++i) dot += s.v[i] * s.u[i];
  for (int i = 0; i < dim; ++i) s.v[i] -= dot * s.u[i];
  for (double x : s.v) nv += x * x;
  nv = std::sqrt(nv);
  for (auto& x : s.v) x /= nv;
  s.translate.assign(dim, 0.0);
  if (spec.translate != 0.0) {
    double nt = 0.0;
    for (auto& x : s.translate) x = rng.normal();
    for (double x : s.translate) nt += x * x;
    nt = std::sqrt(nt);
    for (auto& x : s.translate) x = x / nt * spec.translate;
  }
  return s;
}

}  // namespace

DomainPair make_unida_dataset(const LabelSplit& split, int dim, double separation,
                              int samples_per_class, const ShiftSpec& shift,
                              SeededRng& rng) {
  split.validate();
  if (dim < 2) throw std::runtime_error("make_unida_dataset: dim must be >= 2");
  if (separation <= 0.0)
    throw std::runtime_error("make_unida_dataset: separation must be > 0");
  if (samples_per_class < 1)
    throw std::runtime_error("make_unida_dataset: samples_per_class must be >= 1");

  // Means for every source-side class (common first, then source-private).
  std::vector<std::vector<double>> src_means;
  for (int c = 0; c < split.n_source_classes(); ++c)
    src_means.push_back(place_mean(src_means, dim, separation, rng));

  const SubspaceShift sshift = draw_shift(shift, dim, rng);

  // Target common means are the shifted source means; target-private means
  // are placed independently, kept separated from them and each other.
  std::vector<std::vector<double>> tgt_means;
  for (int c = 0; c < split.n_common; ++c) tgt_means.push_back(sshift.apply(src_means[c]));
  for (int c = 0; c < split.n_target_private; ++c)
    tgt_means.push_back(place_mean(tgt_means, dim, separation, rng));

  std::set<int> common;
  for (int c = 0; c < split.n_common; ++c) common.insert(c);

  DomainPair pair;
  pair.source.domain = Domain::Source;
  pair.source.common_set = common;
  pair.source.features =
      Matrix(static_cast<std::size_t>(split.n_source_classes()) * samples_per_class, dim);
  pair.source.labels.assign(pair.source.features.rows(), 0);
  std::size_t row = 0;
  for (int c = 0; c < split.n_source_classes(); ++c)
    append_gaussian_cluster(pair.source.features, pair.source.labels, row, src_means[c],
                            1.0, c, samples_per_class, rng);

  pair.target.domain = Domain::Target;
  pair.target.common_set = common;
  pair.target.features =
      Matrix(static_cast<std::size_t>(split.n_target_classes()) * samples_per_class, dim);
  pair.target.labels.assign(pair.target.features.rows(), 0);
  row = 0;
  for (int c = 0; c < split.n_common; ++c) {
    // Fresh draws from the source generator pushed through the shift.
    for (int i = 0; i < samples_per_class; ++i, ++row) {
      std::vector<double> x(dim);
      for (int k = 0; k < dim; ++k) x[k] = src_means[c][k] + rng.normal();
      const auto shifted = sshift.apply(x);
      pair.target.features.set_row(row, shifted);
      pair.target.labels[row] = c;
    }
  }
  for (int c = 0; c < split.n_target_private; ++c) {
    const int label = split.n_source_classes() + c;
    append_gaussian_cluster(pair.target.features, pair.target.labels, row,
                            tgt_means[split.n_common + c], 1.0, label, samples_per_class,
                            rng);
  }
  return pair;
}

std::vector<double> augment(const std::vector<double>& x, const AugmentConfig& cfg,
                            SeededRng& rng) {
  cfg.validate();
  std::vector<double> out(x.size());
  const double jitter =
      cfg.scale_jitter ? rng.uniform(cfg.scale_jitter->first, cfg.scale_jitter->second)
                       : 1.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = jitter * (x[i] + cfg.sigma_aug * rng.normal());
  return out;
}

Matrix augment_rows(const Matrix& x, const AugmentConfig& cfg, SeededRng& rng) {
  cfg.validate();
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double jitter =
        cfg.scale_jitter ? rng.uniform(cfg.scale_jitter->first, cfg.scale_jitter->second)
                         : 1.0;
    for (std::size_t c = 0; c < x.cols(); ++c)
      out(r, c) = jitter * (x(r, c) + cfg.sigma_aug * rng.normal());
  }
  return out;
}

namespace {

void append_rows(CsvTable& t, const Dataset& d, bool hide_target_labels) {
  const bool hide = hide_target_labels && d.domain == Domain::Target;
  for (std::size_t r = 0; r < d.size(); ++r) {
    std::vector<std::string> row;
    row.reserve(2 + d.features.cols());
    row.push_back(d.domain == Domain::Source ? "source" : "target");
    row.push_back(std::to_string(hide ? -1 : d.labels[r]));
    for (std::size_t c = 0; c < d.features.cols(); ++c)
      row.push_back(format_double(d.features(r, c)));
    t.rows.push_back(std::move(row));
  }
}

CsvTable dataset_table(std::size_t dim) {
  CsvTable t;
  t.comments.push_back("unida-dataset v1");
  t.header = {"domain", "label"};
  for (std::size_t c = 0; c < dim; ++c) t.header.push_back("f" + std::to_string(c));
  return t;
}

Dataset rows_to_dataset(const CsvTable& t, const std::vector<std::size_t>& idx,
                        Domain domain) {
  Dataset d;
  d.domain = domain;
  const std::size_t dim = t.header.size() - 2;
  d.features = Matrix(idx.size(), dim);
  d.labels.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& row = t.rows[idx[i]];
    d.labels[i] = static_cast<int>(parse_int(row[1]));
    for (std::size_t c = 0; c < dim; ++c) d.features(i, c) = parse_double(row[2 + c]);
  }
  return d;
}

}  // namespace

void write_dataset_csv(const Dataset& d, const std::string& path, bool hide_target_labels) {
  CsvTable t = dataset_table(d.features.cols());
  append_rows(t, d, hide_target_labels);
  write_csv(t, path);
}

void write_domain_pair_csv(const DomainPair& pair, const std::string& path,
                           bool hide_target_labels) {
  CsvTable t = dataset_table(pair.source.features.cols());
  append_rows(t, pair.source, hide_target_labels);
  append_rows(t, pair.target, hide_target_labels);
  write_csv(t, path);
}

Dataset read_dataset_csv(const std::string& path, Domain expected_domain) {
  const DomainPair pair = read_domain_pair_csv(path);
  return expected_domain == Domain::Source ? pair.source : pair.target;
}

DomainPair read_domain_pair_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 3 || t.header[0] != "domain" || t.header[1] != "label")
    throw std::runtime_error("read_domain_pair_csv: unexpected schema in " + path);
  std::vector<std::size_t> src, tgt;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& dom = t.rows[i][0];
    if (dom == "source")
      src.push_back(i);
    else if (dom == "target")
      tgt.push_back(i);
    else
      throw std::runtime_error("read_domain_pair_csv: bad domain '" + dom + "'");
  }
  DomainPair pair;
  pair.source = rows_to_dataset(t, src, Domain::Source);
  pair.target = rows_to_dataset(t, tgt, Domain::Target);
  // Reconstruct the common set from labels present on both sides, ignoring
  // hidden (-1) target rows.
  std::set<int> src_labels(pair.source.labels.begin(), pair.source.labels.end());
  for (int l : pair.target.labels)
    if (l >= 0 && src_labels.count(l)) {
      pair.source.common_set.insert(l);
      pair.target.common_set.insert(l);
    }
  return pair;
}

}  // namespace unida
