#include "unida/train.hpp"

#include <chrono>
#include <cmath>

#include "unida/csv.hpp"
#include "unida/weighting.hpp"

namespace unida {

namespace {

double mean_of(const std::vector<StepLog>& log, double StepLog::* field) {
  if (log.empty()) return 0.0;
  double s = 0.0;
  for (const auto& l : log) s += l.*field;
  return s / static_cast<double>(log.size());
}

}  // namespace

double RunRecord::mean_noise_src() const { return mean_of(step_log, &StepLog::noise_src); }
double RunRecord::mean_noise_tgt() const { return mean_of(step_log, &StepLog::noise_tgt); }
double RunRecord::mean_noise_pool() const { return mean_of(step_log, &StepLog::noise_pool); }

DomainPair generate_dataset(const ExperimentConfig& cfg) {
  SeededRng data_rng = SeededRng(cfg.seed).split("data");
  if (cfg.dataset == DatasetKind::Toy) {
    ToyConfig toy = cfg.toy;
    toy.split = cfg.split;
    toy.samples_per_class = cfg.samples_per_class;
    return make_toy_dataset(toy, data_rng);
  }
  return make_unida_dataset(cfg.split, cfg.dim, cfg.separation, cfg.samples_per_class,
                            ShiftSpec{cfg.shift_rotation, cfg.shift_translation}, data_rng);
}

namespace {

std::vector<std::size_t> draw_batch(std::size_t n, int batch_size, SeededRng& rng) {
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = rng.uniform_index(n);
  return idx;
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(idx[r], c);
  return out;
}

// Learned alignment weights from the current models; pure scoring, no
// gradient flow. Entropy/confidence/energy score classifier probabilities
// on target rows (w_s stays 1); the distance kind scores feature distances
// to the source-class centroid bank on both sides.
struct WeightEngine {
  WeightConfig cfg;
  WeightScheme scheme;
  double flip_rate;
  CentroidBank bank;
  // Flip corruption is drawn once per run over the whole dataset, so a
  // noisy oracle is consistently wrong on the same samples every step.
  std::vector<std::uint8_t> flip_src, flip_tgt;

  void draw_flips(std::size_t n_src, std::size_t n_tgt, SeededRng& rng) {
    if (scheme != WeightScheme::Oracle || flip_rate <= 0.0) return;
    flip_src = draw_flip_mask(n_src, flip_rate, rng);
    flip_tgt = draw_flip_mask(n_tgt, flip_rate, rng);
  }

  // full source set used by the periodic centroid refresh
  const Matrix* full_source_x = nullptr;
  const std::vector<int>* full_source_y = nullptr;

  void compute(const ModelBundle& models, const Matrix& src_x,
               const std::vector<int>& src_y, const Matrix& tgt_x,
               const std::vector<int>& tgt_hidden_y, const std::set<int>& common,
               const std::vector<std::size_t>& src_idx,
               const std::vector<std::size_t>& tgt_idx, long long step,
               std::vector<double>& w_s, std::vector<double>& w_t) {
    if (scheme == WeightScheme::Oracle) {
      w_s = oracle_weights(src_y, common);
      w_t = oracle_weights(tgt_hidden_y, common);
      if (!flip_src.empty()) {
        for (std::size_t i = 0; i < src_idx.size(); ++i)
          if (flip_src[src_idx[i]]) w_s[i] = 1.0 - w_s[i];
        for (std::size_t i = 0; i < tgt_idx.size(); ++i)
          if (flip_tgt[tgt_idx[i]]) w_t[i] = 1.0 - w_t[i];
      }
      return;
    }
    const Matrix f_src = mlp_forward(models.feature, src_x).first;
    const Matrix f_tgt = mlp_forward(models.feature, tgt_x).first;
    if (cfg.kind == UncertaintyKind::Distance) {
      // Clustering runs on the full source data; the interval inside
      // update_centroids keeps it to every k-th step.
      if (bank.empty() || step - bank.last_update >= bank.update_interval) {
        const Matrix f_all = mlp_forward(models.feature, *full_source_x).first;
        update_centroids(bank, f_all, *full_source_y, step);
      }
      std::vector<double> s_scores(f_src.rows()), t_scores(f_tgt.rows());
      for (std::size_t r = 0; r < f_src.rows(); ++r)
        s_scores[r] = distance_uncertainty(f_src.row(r), bank);
      for (std::size_t r = 0; r < f_tgt.rows(); ++r)
        t_scores[r] = distance_uncertainty(f_tgt.row(r), bank);
      w_s = to_weight(s_scores, cfg);
      w_t = to_weight(t_scores, cfg);
      return;
    }
    const Matrix probs = softmax_rows(mlp_forward(models.classifier, f_tgt).first);
    std::vector<double> scores(probs.rows());
    for (std::size_t r = 0; r < probs.rows(); ++r) {
      const auto p = probs.row(r);
      switch (cfg.kind) {
        case UncertaintyKind::Entropy: scores[r] = entropy(p); break;
        case UncertaintyKind::Confidence: scores[r] = confidence(p); break;
        case UncertaintyKind::Energy: scores[r] = energy(p); break;
        case UncertaintyKind::Distance: break;  // handled above
      }
    }
    w_t = to_weight(scores, cfg);
    w_s.assign(src_x.rows(), 1.0);  // align all source unless distance selected
  }
};

}  // namespace

TrainOutcome train_unida_full(const ExperimentConfig& cfg, const DomainPair& data) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  const SeededRng master(cfg.seed);
  SeededRng init_rng = master.split("init");
  SeededRng batch_rng = master.split("batch");
  SeededRng weight_rng = master.split("weights");
  SeededRng aug_rng = master.split("aug");

  const std::size_t in_dim = data.source.features.cols();
  const int n_classes = cfg.split.n_source_classes();

  ModelBundle models;
  {
    std::vector<std::size_t> sizes{in_dim};
    sizes.insert(sizes.end(), cfg.feature_hidden.begin(), cfg.feature_hidden.end());
    sizes.push_back(cfg.feature_dim);
    models.feature = make_mlp(sizes, Activation::Relu, Activation::Identity, init_rng);
    models.classifier =
        make_mlp({cfg.feature_dim, static_cast<std::size_t>(n_classes)}, Activation::Relu,
                 Activation::Identity, init_rng);
    models.discriminator = make_mlp({cfg.feature_dim, cfg.disc_hidden, 1}, Activation::Relu,
                                    Activation::Sigmoid, init_rng);
  }
  SgdState state_f = SgdState::zeros_like(models.feature);
  SgdState state_c = SgdState::zeros_like(models.classifier);
  SgdState state_d = SgdState::zeros_like(models.discriminator);

  WeightEngine weights;
  weights.cfg = cfg.weight;
  weights.cfg.num_classes = n_classes;
  weights.scheme = cfg.weight_scheme;
  weights.flip_rate = cfg.flip_rate;
  weights.bank.update_interval = cfg.weight_update_interval;
  weights.full_source_x = &data.source.features;
  weights.full_source_y = &data.source.labels;
  weights.draw_flips(data.source.size(), data.target.size(), weight_rng);

  SslConfig ssl_cfg;
  ssl_cfg.variant = cfg.ssl_variant;
  ssl_cfg.aug.sigma_aug = cfg.ssl_sigma_aug;

  RunRecord rec;
  rec.seed = cfg.seed;
  rec.config_hash = cfg.config_hash();
  rec.step_log.reserve(cfg.steps);

  for (long long step = 0; step < cfg.steps; ++step) {
    const auto src_idx = draw_batch(data.source.size(), cfg.batch_size, batch_rng);
    const auto tgt_idx = draw_batch(data.target.size(), cfg.batch_size, batch_rng);

    WeightedBatch batch;
    batch.source_x = gather_rows(data.source.features, src_idx);
    batch.target_x = gather_rows(data.target.features, tgt_idx);
    batch.source_y.resize(src_idx.size());
    for (std::size_t i = 0; i < src_idx.size(); ++i)
      batch.source_y[i] = data.source.labels[src_idx[i]];
    std::vector<int> tgt_hidden(tgt_idx.size());
    for (std::size_t i = 0; i < tgt_idx.size(); ++i)
      tgt_hidden[i] = data.target.labels[tgt_idx[i]];

    ObjectiveResult res;
    try {
      weights.compute(models, batch.source_x, batch.source_y, batch.target_x, tgt_hidden,
                      data.source.common_set, src_idx, tgt_idx, step, batch.w_source,
                      batch.w_target);

      // SSL scope restriction uses hidden labels (simulation arm only).
      ssl_cfg.mask.reset();
      if (cfg.ssl_scope == SslScope::CommonOnly && cfg.loss.alpha > 0.0) {
        std::vector<std::uint8_t> mask(tgt_idx.size(), 0);
        for (std::size_t i = 0; i < tgt_idx.size(); ++i)
          mask[i] = data.target.common_set.count(tgt_hidden[i]) ? 1 : 0;
        ssl_cfg.mask = std::move(mask);
      }

      res = total_objective(batch, models, cfg.loss, ssl_cfg, aug_rng);
    } catch (const NumericAbort&) {
      throw;
    } catch (const std::exception& e) {
      throw NumericAbort(step, e.what());
    }
    if (!std::isfinite(res.loss_source) || !std::isfinite(res.loss_adv) ||
        !std::isfinite(res.loss_ssl))
      throw NumericAbort(step, "non-finite component loss (L_s=" +
                                   std::to_string(res.loss_source) +
                                   ", L_adv=" + std::to_string(res.loss_adv) +
                                   ", L_ssl=" + std::to_string(res.loss_ssl) + ")");

    sgd_step(models.feature, res.grad_feature, cfg.lr, cfg.momentum, state_f);
    sgd_step(models.classifier, res.grad_classifier, cfg.lr, cfg.momentum, state_c);
    if (cfg.loss.lambda > 0.0)
      sgd_step(models.discriminator, res.grad_discrim, cfg.lr, cfg.momentum, state_d);

    StepLog log;
    log.step = step;
    log.l_s = res.loss_source;
    log.l_adv = res.loss_adv;
    log.l_ssl = res.loss_ssl;
    log.noise_src =
        batch_noise_rate(batch.w_source, batch.source_y, data.source.common_set);
    log.noise_tgt = batch_noise_rate(batch.w_target, tgt_hidden, data.target.common_set);
    std::vector<double> pooled_w = batch.w_source;
    pooled_w.insert(pooled_w.end(), batch.w_target.begin(), batch.w_target.end());
    std::vector<int> pooled_y = batch.source_y;
    pooled_y.insert(pooled_y.end(), tgt_hidden.begin(), tgt_hidden.end());
    log.noise_pool = batch_noise_rate(pooled_w, pooled_y, data.source.common_set);
    rec.step_log.push_back(log);
  }

  rec.report = evaluate(models, data.target, cfg.reject);
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return TrainOutcome{std::move(rec), std::move(models)};
}

RunRecord train_unida(const ExperimentConfig& cfg, const DomainPair& data) {
  return train_unida_full(cfg, data).record;
}

RunRecord train_unida(const ExperimentConfig& cfg) {
  return train_unida(cfg, generate_dataset(cfg));
}

void write_run_log_csv(const RunRecord& rec, const std::string& path) {
  CsvWriter w(path, "unida-log v1",
              {"step", "L_s", "L_adv", "L_ssl", "noise_src", "noise_tgt", "noise_pool"});
  for (const auto& l : rec.step_log)
    w.append({std::to_string(l.step), format_double(l.l_s), format_double(l.l_adv),
              format_double(l.l_ssl), format_double(l.noise_src),
              format_double(l.noise_tgt), format_double(l.noise_pool)});
  w.flush();
}

RunRecord read_run_log_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  RunRecord rec;
  const int c_step = t.require_column("step");
  const int c_ls = t.require_column("L_s");
  const int c_la = t.require_column("L_adv");
  const int c_lx = t.require_column("L_ssl");
  const int c_ns = t.require_column("noise_src");
  const int c_nt = t.require_column("noise_tgt");
  const int c_np = t.require_column("noise_pool");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    StepLog l;
    l.step = parse_int(t.rows[r][c_step]);
    l.l_s = t.cell_double(r, c_ls);
    l.l_adv = t.cell_double(r, c_la);
    l.l_ssl = t.cell_double(r, c_lx);
    l.noise_src = t.cell_double(r, c_ns);
    l.noise_tgt = t.cell_double(r, c_nt);
    l.noise_pool = t.cell_double(r, c_np);
    rec.step_log.push_back(l);
  }
  return rec;
}

}  // namespace unida
