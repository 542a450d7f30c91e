#include "unida/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "unida/metrics.hpp"
#include "unida/svg.hpp"
#include "unida/weighting.hpp"

namespace fs = std::filesystem;

namespace unida {

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::runtime_error("spearman_rho: need two equal-length series");
  const auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = mean(ra), mb = mean(rb);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

namespace {

// Runs `body(cell)` for every cell index, spreading cells over threads.
// Each cell owns its outputs; callers assemble results by index, so the
// schedule cannot change any output.
void parallel_cells(std::size_t n_cells, const std::function<void(std::size_t)>& body) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(hw, n_cells));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n_cells; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n_cells) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Documented splitting rule: the rng seed of sweep cell i is
// SeededRng(master_seed).split(i).seed().
std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t cell_index) {
  return SeededRng(master_seed).split(cell_index).seed();
}

std::string fmt(double v) { return format_double(v); }

std::vector<std::string> eval_row(const RunRecord& rec, double spcr_value,
                                  double flip_rate, double alpha) {
  return {rec.config_hash,          std::to_string(rec.seed),
          fmt(spcr_value),          fmt(flip_rate),
          fmt(alpha),               fmt(rec.report.acc_common),
          fmt(rec.report.acc_private), fmt(rec.report.h),
          fmt(rec.report.misclass_into_source_private)};
}

const std::vector<std::string> kEvalHeader = {
    "config_hash", "seed",       "spcr",    "flip_rate", "alpha",
    "acc_common",  "acc_private", "h_score", "misclass_sp"};

void ensure_out_dir(const ExperimentConfig& cfg) {
  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
}

// ---------------------------------------------------------------------
// toy study
// ---------------------------------------------------------------------

struct ToyModel {
  Matrix w1, w2;
};

struct ToyTrainOutcome {
  ToyModel model;
  double final_sup = 0.0;
};

// Full-batch gradient descent on the two-layer toy net. Labels are the
// scalar class values 1 + id, consistent with the net's positive
// homogeneity (a bias-free relu net cannot hit one-hot targets on
// radius-scaled clusters). W1 starts at the identity plus a small jitter
// so the feature plane is anchored to the input plane.
ToyTrainOutcome train_toy(const ExperimentConfig& cfg, const DomainPair& data,
                          bool use_ssl, std::uint64_t seed) {
  SeededRng master(seed);
  SeededRng init_rng = master.split("init");
  SeededRng aug_rng = master.split("aug");

  Matrix y(data.source.size(), 1);
  for (std::size_t r = 0; r < data.source.size(); ++r)
    y(r, 0) = 1.0 + data.source.labels[r];

  ToyModel m;
  m.w1 = Matrix::identity(2);
  for (auto& v : m.w1.data()) v += 0.02 * init_rng.normal();
  m.w2 = Matrix(2, 1);
  for (auto& v : m.w2.data()) v = 0.1 * init_rng.normal();

  for (int step = 0; step < cfg.toy_steps; ++step) {
    const auto sup = toy_sup_loss(m.w1, m.w2, data.source.features, y);
    Matrix g1 = sup.d_w1;
    if (use_ssl) {
      const auto ssl = toy_ssl_loss(m.w1, data.target.features, aug_rng, cfg.toy_sigma_aug);
      g1.add_inplace(scaled(ssl.d_w1, cfg.toy_alpha));
    }
    if (!g1.all_finite() || !sup.d_w2.all_finite())
      throw NumericAbort(step, "non-finite toy gradient");
    for (std::size_t i = 0; i < m.w1.size(); ++i) m.w1.at(i) -= cfg.toy_lr * g1.at(i);
    for (std::size_t i = 0; i < m.w2.size(); ++i)
      m.w2.at(i) -= cfg.toy_lr * sup.d_w2.at(i);
  }
  ToyTrainOutcome out;
  out.final_sup = toy_sup_loss(m.w1, m.w2, data.source.features, y).loss;
  out.model = std::move(m);
  return out;
}

// |cos| between the principal direction of the learned target features
// W1 x_t and the image of e1 under the learned first layer.
double toy_alignment(const ToyModel& m, const Matrix& target_x) {
  const Matrix feats = matmul(target_x, m.w1);
  const std::vector<double> e1_image{m.w1(0, 0), m.w1(0, 1)};
  return principal_direction(feats, &e1_image).cos_to_reference;
}

void dump_toy_features(const DomainPair& data, const ToyModel& m,
                       const std::string& path) {
  CsvWriter w(path, "unida-toy-features v1",
              {"domain", "label", "x0", "x1", "f0", "f1"});
  const auto add = [&](const Dataset& d) {
    const Matrix feats = matmul(d.features, m.w1);
    for (std::size_t r = 0; r < d.size(); ++r)
      w.append({d.domain == Domain::Source ? "source" : "target",
                std::to_string(d.labels[r]), fmt(d.features(r, 0)), fmt(d.features(r, 1)),
                fmt(feats(r, 0)), fmt(feats(r, 1))});
  };
  add(data.source);
  add(data.target);
  w.flush();
}

}  // namespace

ToyExperimentResult run_toy_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_out_dir(cfg);
  ToyExperimentResult out;

  ToyConfig toy = cfg.toy;
  toy.split = cfg.split;
  toy.samples_per_class = cfg.samples_per_class;
  const double spcr_value = spcr(toy.split);

  struct Cell {
    ToyArmResult plain, ssl;
    std::string file_plain, file_ssl;
  };
  std::vector<Cell> cells(cfg.seeds);

  parallel_cells(cfg.seeds, [&](std::size_t i) {
    const std::uint64_t seed = cell_seed(cfg.seed, i);
    SeededRng data_rng = SeededRng(seed).split("data");
    const DomainPair data = make_toy_dataset(toy, data_rng);

    const auto plain = train_toy(cfg, data, /*use_ssl=*/false, seed);
    const auto ssl = train_toy(cfg, data, /*use_ssl=*/true, seed);

    Cell& c = cells[i];
    c.plain = {seed, spcr_value, "sup_only", toy_alignment(plain.model, data.target.features),
               plain.final_sup};
    c.ssl = {seed, spcr_value, "sup_ssl", toy_alignment(ssl.model, data.target.features),
             ssl.final_sup};

    const std::string tag =
        "spcr" + std::to_string(toy.split.n_source_private) + "_seed" + std::to_string(i);
    c.file_plain = cfg.out_dir + "/toy_features_" + tag + "_sup_only.csv";
    c.file_ssl = cfg.out_dir + "/toy_features_" + tag + "_sup_ssl.csv";
    dump_toy_features(data, plain.model, c.file_plain);
    dump_toy_features(data, ssl.model, c.file_ssl);
  });

  CsvWriter w(cfg.out_dir + "/toy_alignment.csv", "unida-toy-alignment v1",
              {"seed", "spcr", "arm", "alignment", "final_sup_loss"});
  for (const auto& c : cells) {
    for (const auto* r : {&c.plain, &c.ssl}) {
      w.append({std::to_string(r->seed), fmt(r->spcr_value), r->arm, fmt(r->alignment),
                fmt(r->final_sup_loss)});
      out.rows.push_back(*r);
    }
    out.feature_files.push_back(c.file_plain);
    out.feature_files.push_back(c.file_ssl);
  }
  w.flush();
  return out;
}

// ---------------------------------------------------------------------
// noise tolerance sweep (oracle weights + flip noise vs baseline)
// ---------------------------------------------------------------------

CsvTable run_noise_tolerance_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_out_dir(cfg);

  const std::vector<UncertaintyKind> kinds = {
      UncertaintyKind::Entropy, UncertaintyKind::Confidence, UncertaintyKind::Energy,
      UncertaintyKind::Distance};

  struct CellRows {
    std::vector<std::vector<std::string>> rows;
  };
  const std::size_t n_cells = cfg.sweep_spcr.size() * static_cast<std::size_t>(cfg.seeds);
  std::vector<CellRows> cells(n_cells);

  std::vector<std::string> header = kEvalHeader;
  header.insert(header.end(), {"arm", "noise_src", "noise_tgt", "noise_pool"});

  parallel_cells(n_cells, [&](std::size_t i) {
    const std::size_t spcr_idx = i / cfg.seeds;
    const double spcr_value = cfg.sweep_spcr[spcr_idx];

    ExperimentConfig base = cfg;
    base.split = split_for_spcr(spcr_value, cfg.split);
    base.seed = cell_seed(cfg.seed, i);
    base.loss.alpha = 0.0;  // partial alignment only in this protocol
    const DomainPair data = generate_dataset(base);

    auto& rows = cells[i].rows;
    const auto push = [&](const ExperimentConfig& c, const RunRecord& rec,
                          const std::string& arm, double flip) {
      auto row = eval_row(rec, spcr_value, flip, c.loss.alpha);
      row.insert(row.end(), {arm, fmt(rec.mean_noise_src()), fmt(rec.mean_noise_tgt()),
                             fmt(rec.mean_noise_pool())});
      rows.push_back(std::move(row));
    };

    // paired source-only baseline (lambda = 0) on the identical dataset
    {
      ExperimentConfig c = base;
      c.loss.lambda = 0.0;
      c.weight_scheme = WeightScheme::Oracle;
      c.flip_rate = 0.0;
      push(c, train_unida(c, data), "baseline", 0.0);
    }
    // oracle alignment at each flip rate
    for (const double flip : cfg.sweep_flip_rates) {
      ExperimentConfig c = base;
      c.weight_scheme = WeightScheme::Oracle;
      c.flip_rate = flip;
      push(c, train_unida(c, data), "aligned", flip);
    }
    // observed noise rate of each learned weighting scheme
    for (const auto kind : kinds) {
      ExperimentConfig c = base;
      c.weight_scheme = WeightScheme::Learned;
      c.weight.kind = kind;
      push(c, train_unida(c, data), "kind_" + to_string(kind), 0.0);
    }
  });

  CsvWriter w(cfg.out_dir + "/noise_sweep.csv", "unida-noise-sweep v1", header);
  for (const auto& c : cells)
    for (const auto& r : c.rows) w.append(r);
  w.flush();
  return read_csv(cfg.out_dir + "/noise_sweep.csv");
}

// ---------------------------------------------------------------------
// ssl scope ablation: no ssl / ssl on all target / ssl on common only
// ---------------------------------------------------------------------

CsvTable run_ssl_ablation(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_out_dir(cfg);

  const std::size_t n_cells =
      cfg.sweep_target_private.size() * static_cast<std::size_t>(cfg.seeds);
  std::vector<std::vector<std::vector<std::string>>> cells(n_cells);

  std::vector<std::string> header = kEvalHeader;
  header.insert(header.end(),
                {"arm", "target_private", "noise_src", "noise_tgt", "noise_pool"});

  parallel_cells(n_cells, [&](std::size_t i) {
    const std::size_t tp_idx = i / cfg.seeds;
    const int tp = cfg.sweep_target_private[tp_idx];

    ExperimentConfig base = cfg;
    base.split.n_target_private = tp;
    base.seed = cell_seed(cfg.seed, i);
    const DomainPair data = generate_dataset(base);
    const double spcr_value = spcr(base.split);

    const auto push = [&](const ExperimentConfig& c, const RunRecord& rec,
                          const std::string& arm) {
      auto row = eval_row(rec, spcr_value, c.flip_rate, c.loss.alpha);
      row.insert(row.end(), {arm, std::to_string(tp), fmt(rec.mean_noise_src()),
                             fmt(rec.mean_noise_tgt()), fmt(rec.mean_noise_pool())});
      cells[i].push_back(std::move(row));
    };

    {
      ExperimentConfig c = base;
      c.loss.alpha = 0.0;
      push(c, train_unida(c, data), "no_ssl");
    }
    {
      ExperimentConfig c = base;
      c.ssl_scope = SslScope::AllTarget;
      push(c, train_unida(c, data), "ssl_all");
    }
    {
      ExperimentConfig c = base;
      c.ssl_scope = SslScope::CommonOnly;
      push(c, train_unida(c, data), "ssl_common");
    }
  });

  CsvWriter w(cfg.out_dir + "/ssl_ablation.csv", "unida-ssl-ablation v1", header);
  for (const auto& c : cells)
    for (const auto& r : c) w.append(r);
  w.flush();
  return read_csv(cfg.out_dir + "/ssl_ablation.csv");
}

// ---------------------------------------------------------------------
// alpha sensitivity
// ---------------------------------------------------------------------

CsvTable run_alpha_sensitivity(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_out_dir(cfg);

  const std::size_t n_cells = static_cast<std::size_t>(cfg.seeds);
  std::vector<std::vector<std::vector<std::string>>> cells(n_cells);

  parallel_cells(n_cells, [&](std::size_t i) {
    ExperimentConfig base = cfg;
    base.seed = cell_seed(cfg.seed, i);
    const DomainPair data = generate_dataset(base);
    const double spcr_value = spcr(base.split);
    for (const double alpha : cfg.sweep_alpha) {
      ExperimentConfig c = base;
      c.loss.alpha = alpha;
      const RunRecord rec = train_unida(c, data);
      cells[i].push_back(eval_row(rec, spcr_value, c.flip_rate, alpha));
    }
  });

  CsvWriter w(cfg.out_dir + "/alpha_sweep.csv", "unida-alpha-sweep v1", kEvalHeader);
  for (const auto& c : cells)
    for (const auto& r : c) w.append(r);
  w.flush();
  return read_csv(cfg.out_dir + "/alpha_sweep.csv");
}

// ---------------------------------------------------------------------
// spcr robustness
// ---------------------------------------------------------------------

CsvTable run_spcr_robustness_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_out_dir(cfg);

  const std::size_t n_cells = cfg.sweep_spcr.size() * static_cast<std::size_t>(cfg.seeds);
  std::vector<std::vector<std::vector<std::string>>> cells(n_cells);

  std::vector<std::string> header = kEvalHeader;
  header.push_back("arm");

  parallel_cells(n_cells, [&](std::size_t i) {
    const std::size_t spcr_idx = i / cfg.seeds;
    const double spcr_value = cfg.sweep_spcr[spcr_idx];

    ExperimentConfig base = cfg;
    base.split = split_for_spcr(spcr_value, cfg.split);
    base.seed = cell_seed(cfg.seed, i);
    const DomainPair data = generate_dataset(base);

    const auto push = [&](const ExperimentConfig& c, const RunRecord& rec,
                          const std::string& arm) {
      auto row = eval_row(rec, spcr_value, c.flip_rate, c.loss.alpha);
      row.push_back(arm);
      cells[i].push_back(std::move(row));
    };
    {
      ExperimentConfig c = base;
      c.loss.alpha = 0.0;
      push(c, train_unida(c, data), "align_only");
    }
    {
      ExperimentConfig c = base;
      push(c, train_unida(c, data), "with_ssl");
    }
  });

  CsvWriter w(cfg.out_dir + "/spcr_sweep.csv", "unida-spcr-sweep v1", header);
  for (const auto& c : cells)
    for (const auto& r : c) w.append(r);
  w.flush();
  return read_csv(cfg.out_dir + "/spcr_sweep.csv");
}

// ---------------------------------------------------------------------
// plots
// ---------------------------------------------------------------------

namespace {

// mean of `y_col` grouped by (group_col value, x_col value)
std::map<std::string, std::vector<std::pair<double, double>>> grouped_curves(
    const CsvTable& t, const std::string& group_col, const std::string& x_col,
    const std::string& y_col) {
  const int gc = group_col.empty() ? -1 : t.require_column(group_col);
  const int xc = t.require_column(x_col);
  const int yc = t.require_column(y_col);
  std::map<std::string, std::map<double, std::vector<double>>> acc;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string g = gc < 0 ? "" : t.rows[r][gc];
    acc[g][t.cell_double(r, xc)].push_back(t.cell_double(r, yc));
  }
  std::map<std::string, std::vector<std::pair<double, double>>> out;
  for (auto& [g, xs] : acc) {
    auto& curve = out[g];
    for (auto& [x, ys] : xs) curve.emplace_back(x, mean(ys));
  }
  return out;
}

std::string detect_kind(const CsvTable& t) {
  for (const auto& c : t.comments) {
    if (c.find("noise-sweep") != std::string::npos) return "noise";
    if (c.find("spcr-sweep") != std::string::npos) return "spcr";
    if (c.find("alpha-sweep") != std::string::npos) return "alpha";
    if (c.find("ssl-ablation") != std::string::npos) return "ablation";
    if (c.find("toy-features") != std::string::npos) return "toy";
    if (c.find("unida-log") != std::string::npos) return "log";
  }
  throw std::runtime_error("emit_plot: cannot detect plot kind from CSV comments");
}

}  // namespace

bool emit_plot(const std::string& csv_path, const std::string& kind_arg,
               const std::string& out_svg_path) {
  const CsvTable t = read_csv(csv_path);
  if (t.rows.empty()) return false;  // nothing to plot
  const std::string kind = kind_arg == "auto" ? detect_kind(t) : kind_arg;

  SvgPlotSpec spec;
  std::vector<SvgSeries> series;

  if (kind == "noise") {
    spec.title = "Misclassification into source-private vs flip rate";
    spec.x_label = "flip rate";
    spec.y_label = "misclassification rate";
    const int arm_c = t.require_column("arm");
    const int spcr_c = t.require_column("spcr");
    // aligned curves per spcr, baseline as dashed horizontal reference
    std::map<std::string, std::map<double, std::vector<double>>> aligned, baseline;
    const int flip_c = t.require_column("flip_rate");
    const int y_c = t.require_column("misclass_sp");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const std::string spcr_v = t.rows[r][spcr_c];
      if (t.rows[r][arm_c] == "aligned")
        aligned[spcr_v][t.cell_double(r, flip_c)].push_back(t.cell_double(r, y_c));
      else if (t.rows[r][arm_c] == "baseline")
        baseline[spcr_v][0.0].push_back(t.cell_double(r, y_c));
    }
    int color = 0;
    double xmax = 0.0;
    for (auto& [spcr_v, xs] : aligned) {
      SvgSeries s;
      s.label = "aligned, SPCR=" + spcr_v;
      s.color = color;
      for (auto& [x, ys] : xs) {
        s.points.emplace_back(x, mean(ys));
        xmax = std::max(xmax, x);
      }
      series.push_back(std::move(s));
      ++color;
    }
    color = 0;
    for (auto& [spcr_v, xs] : baseline) {
      SvgSeries s;
      s.label = "source-only, SPCR=" + spcr_v;
      s.color = color;
      s.dashed = true;
      const double y = mean(xs.at(0.0));
      s.points.emplace_back(0.0, y);
      s.points.emplace_back(xmax, y);
      series.push_back(std::move(s));
      ++color;
    }
  } else if (kind == "spcr") {
    spec.title = "H-score vs SPCR";
    spec.x_label = "SPCR";
    spec.y_label = "H-score";
    int color = 0;
    for (auto& [arm, curve] : grouped_curves(t, "arm", "spcr", "h_score")) {
      SvgSeries s;
      s.label = arm;
      s.color = color++;
      s.points = curve;
      series.push_back(std::move(s));
    }
  } else if (kind == "alpha") {
    spec.title = "H-score vs alpha";
    spec.x_label = "alpha";
    spec.y_label = "H-score";
    for (auto& [arm, curve] : grouped_curves(t, "", "alpha", "h_score")) {
      SvgSeries s;
      s.label = "H-score";
      s.points = curve;
      series.push_back(std::move(s));
    }
  } else if (kind == "ablation") {
    spec.title = "H-score vs target-private classes";
    spec.x_label = "target-private classes";
    spec.y_label = "H-score";
    int color = 0;
    for (auto& [arm, curve] : grouped_curves(t, "arm", "target_private", "h_score")) {
      SvgSeries s;
      s.label = arm;
      s.color = color++;
      s.points = curve;
      series.push_back(std::move(s));
    }
  } else if (kind == "toy") {
    spec.title = "Toy features (learned layer)";
    spec.x_label = "f0";
    spec.y_label = "f1";
    spec.legend = true;
    const int dom_c = t.require_column("domain");
    const int lab_c = t.require_column("label");
    const int f0_c = t.require_column("f0");
    const int f1_c = t.require_column("f1");
    std::map<std::string, SvgSeries> groups;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const std::string key = t.rows[r][dom_c] + "/" + t.rows[r][lab_c];
      auto& s = groups[key];
      s.label = key;
      s.line = false;
      s.points.emplace_back(t.cell_double(r, f0_c), t.cell_double(r, f1_c));
    }
    int color = 0;
    for (auto& [key, s] : groups) {
      s.color = color++;
      series.push_back(std::move(s));
    }
  } else if (kind == "log") {
    spec.title = "Training losses";
    spec.x_label = "step";
    spec.y_label = "loss / noise rate";
    const char* cols[] = {"L_s", "L_adv", "L_ssl", "noise_pool"};
    int color = 0;
    for (const char* col : cols) {
      SvgSeries s;
      s.label = col;
      s.color = color++;
      const int xc = t.require_column("step");
      const int yc = t.require_column(col);
      for (std::size_t r = 0; r < t.rows.size(); ++r)
        s.points.emplace_back(t.cell_double(r, xc), t.cell_double(r, yc));
      series.push_back(std::move(s));
    }
  } else {
    throw std::runtime_error("emit_plot: unknown kind '" + kind + "'");
  }

  write_text_file(out_svg_path, render_svg_plot(spec, series));
  return true;
}

}  // namespace unida
