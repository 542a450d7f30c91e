#pragma once

#include <string>
#include <stdexcept>
#include <vector>

#include "unida/config.hpp"
#include "unida/dataset.hpp"
#include "unida/losses.hpp"
#include "unida/metrics.hpp"

namespace unida {

// Thrown when a component loss goes non-finite; the CLI maps it to exit
// code 2. No RunRecord is emitted for an aborted run.
struct NumericAbort : std::runtime_error {
  long long step;
  NumericAbort(long long s, const std::string& detail)
      : std::runtime_error("numeric abort at step " + std::to_string(s) + ": " + detail),
        step(s) {}
};

struct StepLog {
  long long step = 0;
  double l_s = 0.0;
  double l_adv = 0.0;
  double l_ssl = 0.0;
  double noise_src = 0.0;
  double noise_tgt = 0.0;
  double noise_pool = 0.0;
};

struct RunRecord {
  std::vector<StepLog> step_log;
  EvalReport report;
  std::string config_hash;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;

  double mean_noise_src() const;
  double mean_noise_tgt() const;
  double mean_noise_pool() const;
};

DomainPair generate_dataset(const ExperimentConfig& cfg);

struct TrainOutcome {
  RunRecord record;
  ModelBundle models;
};

// Adversarial partial-alignment training with optional SSL, on a
// pre-generated dataset (kept fixed so baselines can be paired). Per-step
// rng streams are split from cfg.seed by name ("init", "batch", "weights",
// "aug"), so disabling one component never shifts another's draws.
RunRecord train_unida(const ExperimentConfig& cfg, const DomainPair& data);

// Convenience: generate (stream "data") then train.
RunRecord train_unida(const ExperimentConfig& cfg);

// Same loop, also returning the trained models.
TrainOutcome train_unida_full(const ExperimentConfig& cfg, const DomainPair& data);

// Per-step log CSV: "step,L_s,L_adv,L_ssl,noise_src,noise_tgt,noise_pool".
void write_run_log_csv(const RunRecord& rec, const std::string& path);
RunRecord read_run_log_csv(const std::string& path);

}  // namespace unida
