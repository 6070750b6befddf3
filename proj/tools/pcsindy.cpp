// Command-line front end: simulate, identify, predict, pipeline, report.
#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pcsindy/errors.hpp"
#include "pcsindy/pipeline.hpp"

using namespace pcsindy;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool no_noise = false;
  bool no_plots = false;
  std::string out = "out";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration (defaults when omitted)");
  cmd->add_option("--seed", c.seed, "master seed, overrides the configuration");
  cmd->add_flag("--no-noise", c.no_noise, "disable PMU measurement noise");
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
}

void add_plot_flag(CLI::App* cmd, Common& c) { cmd->add_flag("--no-plots", c.no_plots, "skip SVG plots"); }

RunConfig resolve(const Common& c) {
  RunConfig cfg = load_config(c.config);
  if (c.seed) cfg.set_seed(*c.seed);
  if (c.no_noise) cfg.disable_noise();
  return cfg;
}

std::vector<LibraryKind> kinds_of(const std::string& lib) {
  if (lib == "both") return {LibraryKind::Analytical, LibraryKind::Intuitive};
  return {parse_library_kind(lib)};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_metrics(const std::vector<PredictionResult>& preds) {
  for (const auto& p : preds)
    for (const auto& d : p.ders)
      std::cout << "  " << to_string(p.kind) << " " << d.der << ": rmse " << d.metrics.rmse << " Hz, divergence "
                << (d.metrics.divergence_time ? std::to_string(*d.metrics.divergence_time) + " s" : "never") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-constrained sparse identification of inverter-based microgrid dynamics"};
  app.require_subcommand(1);

  Common sim_opts, id_opts, pred_opts, pipe_opts;
  std::string scenario = "identification";
  auto* sim = app.add_subcommand("simulate", "simulate a scenario and write trajectory and PMU data");
  add_common(sim, sim_opts);
  sim->add_option("--scenario", scenario, "identification or validation")
      ->check(CLI::IsMember({"identification", "validation"}))
      ->capture_default_str();

  std::string id_pmu, id_lib = "both";
  auto* ident = app.add_subcommand("identify", "identify models from PMU data");
  add_common(ident, id_opts);
  ident->add_option("--pmu", id_pmu, "PMU CSV (simulated from the configuration when omitted)");
  ident->add_option("--library", id_lib, "candidate library")
      ->check(CLI::IsMember({"analytical", "intuitive", "both"}))
      ->capture_default_str();

  std::string pred_pmu;
  std::vector<std::string> pred_models;
  auto* pred = app.add_subcommand("predict", "one-step frequency prediction on validation data");
  add_common(pred, pred_opts);
  pred->add_option("--pmu", pred_pmu, "validation PMU CSV (simulated from the configuration when omitted)");
  pred->add_option("--model", pred_models, "model JSON files")->required();
  add_plot_flag(pred, pred_opts);

  std::string pipe_lib = "both";
  bool pipe_traj = false;
  auto* pipe = app.add_subcommand("pipeline", "simulate, identify and predict end to end");
  add_common(pipe, pipe_opts);
  pipe->add_option("--library", pipe_lib, "candidate library")
      ->check(CLI::IsMember({"analytical", "intuitive", "both"}))
      ->capture_default_str();
  pipe->add_flag("--trajectories", pipe_traj, "also write full-rate trajectory CSVs");
  add_plot_flag(pipe, pipe_opts);

  std::string report_dir = "out";
  auto* report = app.add_subcommand("report", "summarize a pipeline output directory");
  report->add_option("--out", report_dir, "directory holding metrics.json")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const auto t0 = std::chrono::steady_clock::now();
    if (*sim) {
      const RunConfig cfg = resolve(sim_opts);
      const Scenario& sc = scenario == "validation" ? cfg.validation : cfg.identification;
      ArtifactWriter w(sim_opts.out);
      w.text("config.resolved.json", cfg.resolved.dump(2) + "\n");
      Trajectory traj;
      try {
        traj = simulate(sc, cfg.microgrid);
      } catch (const SimulationError& e) {
        w.table("trajectory.partial.csv", e.partial().table);
        throw;
      }
      w.table("trajectory.csv", traj.table);
      w.table("pmu.csv", sample(traj, cfg.pmu).table);
      w.text("manifest.json", manifest_json("simulate", cfg, w, {{"simulate", seconds_since(t0)}}));
      std::cout << scenario << ": " << traj.table.rows() << " steps, max |f - f0| "
                << traj.max_frequency_deviation_hz << " Hz";
      if (!traj.within_sanity_bound) std::cout << " (exceeds the sanity bound)";
      std::cout << "\n";
    } else if (*ident) {
      const RunConfig cfg = resolve(id_opts);
      const PmuSeries pmu = id_pmu.empty() ? sample(simulate(cfg.identification, cfg.microgrid), cfg.pmu)
                                           : read_pmu_csv(id_pmu);
      const auto frame = estimate_derivatives(pmu, cfg.derivatives);
      ArtifactWriter w(id_opts.out);
      std::vector<IdentificationResult> results;
      for (auto k : kinds_of(id_lib)) {
        results.push_back(run_identification(cfg, frame, k, &cfg.microgrid.ders));
        const auto& r = results.back();
        w.text("model_" + to_string(k) + ".json", model_to_json(r.model));
        std::cout << to_string(k) << ": " << r.model.column_labels.size() << " columns, fit in " << r.seconds
                  << " s\n";
        if (r.fit) std::cout << coefficient_table(r);
      }
      write_fit_report(results, w);
      w.text("metrics.json", metrics_json(cfg, results, {}));
      w.text("manifest.json", manifest_json("identify", cfg, w, {{"identify", seconds_since(t0)}}));
    } else if (*pred) {
      const RunConfig cfg = resolve(pred_opts);
      const PmuSeries pmu = pred_pmu.empty() ? sample(simulate(cfg.validation, cfg.microgrid), cfg.pmu)
                                             : read_pmu_csv(pred_pmu);
      const auto frame = estimate_derivatives(pmu, cfg.derivatives);
      std::vector<PredictionResult> preds;
      for (const auto& path : pred_models) preds.push_back(run_prediction(cfg, load_model(path), frame));
      ArtifactWriter w(pred_opts.out);
      w.table("prediction.csv", combine_predictions(preds));
      w.text("metrics.json", metrics_json(cfg, {}, preds));
      if (!pred_opts.no_plots)
        for (const auto& [name, svg] : frequency_plots(cfg, preds)) w.text(name, svg);
      w.text("manifest.json", manifest_json("predict", cfg, w, {{"predict", seconds_since(t0)}}));
      print_metrics(preds);
    } else if (*pipe) {
      const RunConfig cfg = resolve(pipe_opts);
      const auto res = run_pipeline(cfg, kinds_of(pipe_lib));
      ArtifactWriter w(pipe_opts.out);
      write_pipeline(res, cfg, w, {pipe_traj, !pipe_opts.no_plots});
      w.text("manifest.json", manifest_json("pipeline", cfg, w, res.timings));
      for (const auto& m : res.models) {
        std::cout << to_string(m.model.library.kind) << ": fit in " << m.seconds << " s\n";
        if (m.fit) std::cout << coefficient_table(m);
      }
      print_metrics(res.predictions);
    } else if (*report) {
      std::ifstream is(std::filesystem::path(report_dir) / "metrics.json", std::ios::binary);
      if (!is) throw ConfigError("no metrics.json in '" + report_dir + "'");
      std::stringstream ss;
      ss << is.rdbuf();
      std::cout << render_report(ss.str());
      return 0;
    }
    std::cout << "done in " << seconds_since(t0) << " s\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
