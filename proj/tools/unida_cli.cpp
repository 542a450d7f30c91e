// Command-line front end: dataset generation, training, and the sweep
// runners, all driven by a flat key=value config file plus --set overrides.
//
// Exit codes: 0 success, 1 config error, 2 numeric abort.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "unida/config.hpp"
#include "unida/experiments.hpp"
#include "unida/svg.hpp"
#include "unida/train.hpp"

namespace fs = std::filesystem;
using namespace unida;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  long long seed = -1;
  std::string out_dir;
};

ExperimentConfig resolve_config(const GlobalOpts& g) {
  ExperimentConfig cfg;
  if (!g.config_path.empty()) cfg = load_config_file(g.config_path);
  for (const auto& ov : g.overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + ov + "'");
    apply_override(cfg, ov.substr(0, eq), ov.substr(eq + 1));
  }
  if (g.seed >= 0) cfg.seed = static_cast<std::uint64_t>(g.seed);
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  cfg.validate();
  return cfg;
}

void add_globals(CLI::App* cmd, GlobalOpts& g) {
  cmd->add_option("--config", g.config_path, "config file (key = value lines)");
  cmd->add_option("--set", g.overrides, "override a config key, e.g. --set loss.alpha=0.3")
      ->take_all();
  cmd->add_option("--seed", g.seed, "master seed (overrides config)");
  cmd->add_option("--out", g.out_dir, "output directory (overrides config)");
}

void print_report(const RunRecord& rec) {
  std::printf("acc_common=%.4f acc_private=%.4f h_score=%.4f misclass_sp=%.4f\n",
              rec.report.acc_common, rec.report.acc_private, rec.report.h,
              rec.report.misclass_into_source_private);
  std::printf("mean noise rates: src=%.4f tgt=%.4f pool=%.4f\n", rec.mean_noise_src(),
              rec.mean_noise_tgt(), rec.mean_noise_pool());
  std::printf("config_hash=%s seed=%llu wall=%.2fs\n", rec.config_hash.c_str(),
              static_cast<unsigned long long>(rec.seed), rec.wall_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic laboratory for universal domain adaptation"};
  app.require_subcommand(1);

  GlobalOpts g_generate, g_train, g_toy, g_noise, g_ablate, g_alpha, g_spcr;

  auto* cmd_generate =
      app.add_subcommand("generate", "generate a dataset pair and write it as CSV");
  add_globals(cmd_generate, g_generate);

  auto* cmd_train = app.add_subcommand("train", "run one training job");
  add_globals(cmd_train, g_train);

  auto* cmd_toy = app.add_subcommand("toy", "toy study: feature dumps + alignment");
  add_globals(cmd_toy, g_toy);

  auto* cmd_noise =
      app.add_subcommand("sweep-noise", "noise-tolerance sweep (oracle weights + flips)");
  add_globals(cmd_noise, g_noise);

  auto* cmd_ablate = app.add_subcommand("ablate-ssl", "ssl scope ablation");
  add_globals(cmd_ablate, g_ablate);

  auto* cmd_alpha = app.add_subcommand("sweep-alpha", "alpha sensitivity sweep");
  add_globals(cmd_alpha, g_alpha);

  auto* cmd_spcr = app.add_subcommand("sweep-spcr", "spcr robustness sweep");
  add_globals(cmd_spcr, g_spcr);

  auto* cmd_plot = app.add_subcommand("plot", "render an SVG from a sweep CSV");
  std::string plot_csv, plot_kind = "auto", plot_out;
  cmd_plot->add_option("csv", plot_csv, "input CSV")->required();
  cmd_plot->add_option("--kind", plot_kind, "noise|spcr|alpha|ablation|toy|log|auto");
  cmd_plot->add_option("--out", plot_out, "output SVG path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_generate->parsed()) {
      const auto cfg = resolve_config(g_generate);
      fs::create_directories(cfg.out_dir);
      const DomainPair pair = generate_dataset(cfg);
      const std::string full = cfg.out_dir + "/dataset.csv";
      const std::string train_view_path = cfg.out_dir + "/dataset_train.csv";
      write_domain_pair_csv(pair, full, /*hide_target_labels=*/false);
      write_domain_pair_csv(pair, train_view_path, /*hide_target_labels=*/true);
      std::printf("wrote %s (full labels) and %s (train view)\n", full.c_str(),
                  train_view_path.c_str());
    } else if (cmd_train->parsed()) {
      const auto cfg = resolve_config(g_train);
      fs::create_directories(cfg.out_dir);
      const RunRecord rec = train_unida(cfg);
      write_run_log_csv(rec, cfg.out_dir + "/run_log.csv");
      CsvWriter w(cfg.out_dir + "/eval.csv", "unida-eval v1",
                  {"config_hash", "seed", "spcr", "flip_rate", "alpha", "acc_common",
                   "acc_private", "h_score", "misclass_sp"});
      w.append({rec.config_hash, std::to_string(rec.seed), format_double(spcr(cfg.split)),
                format_double(cfg.flip_rate), format_double(cfg.loss.alpha),
                format_double(rec.report.acc_common), format_double(rec.report.acc_private),
                format_double(rec.report.h),
                format_double(rec.report.misclass_into_source_private)});
      w.flush();
      print_report(rec);
    } else if (cmd_toy->parsed()) {
      auto cfg = resolve_config(g_toy);
      cfg.dataset = DatasetKind::Toy;
      cfg.split.n_target_private = 0;  // the toy scenario has none
      const auto res = run_toy_experiment(cfg);
      for (const auto& r : res.rows)
        std::printf("seed=%llu spcr=%.3g arm=%s alignment=%.4f sup_loss=%.4f\n",
                    static_cast<unsigned long long>(r.seed), r.spcr_value, r.arm.c_str(),
                    r.alignment, r.final_sup_loss);
      std::printf("wrote %s/toy_alignment.csv and %zu feature dumps\n",
                  cfg.out_dir.c_str(), res.feature_files.size());
    } else if (cmd_noise->parsed()) {
      const auto cfg = resolve_config(g_noise);
      const auto t = run_noise_tolerance_sweep(cfg);
      std::printf("wrote %s/noise_sweep.csv (%zu rows)\n", cfg.out_dir.c_str(),
                  t.rows.size());
    } else if (cmd_ablate->parsed()) {
      const auto cfg = resolve_config(g_ablate);
      const auto t = run_ssl_ablation(cfg);
      std::printf("wrote %s/ssl_ablation.csv (%zu rows)\n", cfg.out_dir.c_str(),
                  t.rows.size());
    } else if (cmd_alpha->parsed()) {
      const auto cfg = resolve_config(g_alpha);
      const auto t = run_alpha_sensitivity(cfg);
      std::printf("wrote %s/alpha_sweep.csv (%zu rows)\n", cfg.out_dir.c_str(),
                  t.rows.size());
    } else if (cmd_spcr->parsed()) {
      const auto cfg = resolve_config(g_spcr);
      const auto t = run_spcr_robustness_sweep(cfg);
      std::printf("wrote %s/spcr_sweep.csv (%zu rows)\n", cfg.out_dir.c_str(),
                  t.rows.size());
    } else if (cmd_plot->parsed()) {
      std::string out = plot_out;
      if (out.empty()) {
        out = plot_csv;
        const auto dot = out.rfind('.');
        if (dot != std::string::npos) out = out.substr(0, dot);
        out += ".svg";
      }
      if (emit_plot(plot_csv, plot_kind, out))
        std::printf("wrote %s\n", out.c_str());
      else
        std::printf("nothing to plot\n");
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const NumericAbort& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
