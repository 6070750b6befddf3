#include "pcsindy/pipeline.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pcsindy/errors.hpp"
#include "pcsindy/svg.hpp"

namespace pcsindy {

using nlohmann::ordered_json;

ArtifactWriter::ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir_.string() + "': " + ec.message());
}

void ArtifactWriter::text(const std::string& name, const std::string& content) {
  const auto path = dir_ / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open '" + path.string() + "' for writing");
  os << content;
  if (!os) throw ConfigError("failed writing '" + path.string() + "'");
  records_.push_back({name, fnv1a64_hex(content), content.size()});
}

void ArtifactWriter::table(const std::string& name, const SeriesTable& t) {
  std::ostringstream ss;
  write_csv(ss, t);
  text(name, ss.str());
}

std::string manifest_json(const std::string& command, const RunConfig& cfg, const ArtifactWriter& w,
                          const StepTimings& timings) {
  ordered_json j;
  j["tool"] = "pcsindy";
  j["version"] = "0.1.0";
  j["command"] = command;
  j["seed"] = cfg.seed;
  const auto s = derive_seeds(cfg.seed);
  j["derived_seeds"] = {{"excitation", s.excitation}, {"load", s.load}, {"noise", s.noise}};
  j["config_fnv1a64"] = fnv1a64_hex(cfg.resolved.dump());
  j["outputs"] = ordered_json::array();
  for (const auto& r : w.records())
    j["outputs"].push_back({{"file", r.file}, {"fnv1a64", r.fnv1a64}, {"bytes", r.bytes}});
  j["timings_s"] = ordered_json::object();
  for (const auto& [step, s] : timings) j["timings_s"][step] = s;
  return j.dump(2) + "\n";
}

IdentificationResult run_identification(const RunConfig& cfg, const MeasurementFrame& frame, LibraryKind kind,
                                        const std::vector<DerParams>* truth) {
  IdentificationResult r;
  auto spec = cfg.library_spec(kind);
  // Data files carry no bus ids; keep the ones the configuration provides.
  if (spec.roster.size() != frame.roster.size())
    throw ConfigError("measured data has " + std::to_string(frame.roster.size()) + " DERs, configuration has " +
                      std::to_string(spec.roster.size()));
  const auto t0 = std::chrono::steady_clock::now();
  r.model = identify(frame, spec, cfg.stlsq, cfg.trim);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (kind == LibraryKind::Analytical && truth)
    r.fit = compare_coefficients(analytical_xi(*truth), r.model.xi, r.model.target_labels);
  return r;
}

std::optional<double> PredictionResult::divergence_time() const {
  std::optional<double> out;
  for (const auto& d : ders)
    if (d.metrics.divergence_time && (!out || *d.metrics.divergence_time < *out)) out = d.metrics.divergence_time;
  return out;
}

PredictionResult run_prediction(const RunConfig& cfg, const IdentifiedModel& model, const MeasurementFrame& frame) {
  PredictionResult r;
  r.kind = model.library.kind;
  const Predictor p(model);
  r.series = one_step_series(p, frame, {cfg.prediction.window_start, cfg.prediction.window_end});
  const auto& t = r.series.column("t");
  for (const auto& name : r.series.names()) {
    const auto pos = name.find(".f_predicted");
    if (pos == std::string::npos) continue;
    const auto der = name.substr(0, pos);
    r.ders.push_back({der, error_metrics(t, r.series.column(name), r.series.column(der + ".f_measured"),
                                         cfg.prediction.metrics_start, cfg.prediction.divergence_cap_hz)});
  }
  return r;
}

SeriesTable combine_predictions(const std::vector<PredictionResult>& preds) {
  if (preds.empty()) throw ConfigError("no predictions to combine");
  SeriesTable out;
  const auto& first = preds.front().series;
  out.add_column("t", first.column("t"));
  for (const auto& d : preds.front().ders) {
    out.add_column(d.der + ".f_measured", first.column(d.der + ".f_measured"));
    for (const auto& p : preds) {
      const auto lib = to_string(p.kind);
      out.add_column(d.der + ".f_" + lib, p.series.column(d.der + ".f_predicted"));
      out.add_column(d.der + ".err_" + lib, p.series.column(d.der + ".f_error"));
    }
  }
  return out;
}

PipelineResult run_pipeline(const RunConfig& cfg, const std::vector<LibraryKind>& kinds) {
  PipelineResult res;
  auto clock = std::chrono::steady_clock::now();
  const auto lap = [&](std::string step) {
    const auto now = std::chrono::steady_clock::now();
    res.timings.emplace_back(std::move(step), std::chrono::duration<double>(now - clock).count());
    clock = now;
  };
  res.identification_trajectory = simulate(cfg.identification, cfg.microgrid);
  res.validation_trajectory = simulate(cfg.validation, cfg.microgrid);
  lap("simulate");
  res.identification_pmu = sample(res.identification_trajectory, cfg.pmu);
  res.validation_pmu = sample(res.validation_trajectory, cfg.pmu);
  const auto id_frame = estimate_derivatives(res.identification_pmu, cfg.derivatives);
  const auto val_frame = estimate_derivatives(res.validation_pmu, cfg.derivatives);
  lap("measure");
  for (auto k : kinds) {
    res.models.push_back(run_identification(cfg, id_frame, k, &cfg.microgrid.ders));
    lap("identify_" + to_string(k));
    res.predictions.push_back(run_prediction(cfg, res.models.back().model, val_frame));
    lap("predict_" + to_string(k));
  }
  return res;
}

namespace {

ordered_json optional_time(const std::optional<double>& t) { return t ? ordered_json(*t) : ordered_json(nullptr); }

// JSON has no infinity; a diverged model reports null.
ordered_json finite(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::string fixed_or_inf(const ordered_json& v, int digits) {
  return v.is_null() ? std::string("inf") : fmt::format("{:.{}f}", v.get<double>(), digits);
}

}  // namespace

std::string metrics_json(const RunConfig& cfg, const std::vector<IdentificationResult>& models,
                         const std::vector<PredictionResult>& preds) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["prediction_window"] = {cfg.prediction.window_start, cfg.prediction.window_end};
  j["metrics_start"] = cfg.prediction.metrics_start;
  j["divergence_cap_hz"] = cfg.prediction.divergence_cap_hz;
  j["models"] = ordered_json::array();
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& m = models[i];
    ordered_json e;
    e["library"] = to_string(m.model.library.kind);
    e["columns"] = m.model.column_labels.size();
    e["nonzeros"] = (m.model.xi.array() != 0.0).count();
    if (m.fit) {
      e["relative_error"] = m.fit->relative_error;
      e["precision"] = m.fit->precision;
      e["recall"] = m.fit->recall;
      e["support_exact"] = m.fit->support_exact;
      e["targets"] = ordered_json::array();
      for (const auto& t : m.fit->targets)
        e["targets"].push_back({{"target", t.target},
                                {"correlation", t.correlation},
                                {"norm_ratio", t.norm_ratio},
                                {"precision", t.precision},
                                {"recall", t.recall}});
    }
    if (i < preds.size()) {
      const auto& p = preds[i];
      e["divergence_time"] = optional_time(p.divergence_time());
      e["prediction"] = ordered_json::array();
      for (const auto& d : p.ders) {
        ordered_json dj{{"der", d.der},
                        {"rmse_hz", finite(d.metrics.rmse)},
                        {"max_abs_hz", finite(d.metrics.max_abs)},
                        {"divergence_time", optional_time(d.metrics.divergence_time)}};
        dj["divergence_after_start"] =
            d.metrics.divergence_time ? ordered_json(*d.metrics.divergence_time - cfg.prediction.window_start)
                                      : ordered_json(nullptr);
        e["prediction"].push_back(dj);
      }
    }
    j["models"].push_back(e);
  }
  return j.dump(2) + "\n";
}

std::string coefficient_table(const IdentificationResult& r) {
  std::string out = fmt::format("{:<18} {:>8} {:>8} {:>9} {:>7}\n", "target", "rho", "ratio", "precision", "recall");
  if (!r.fit) return out;
  for (const auto& t : r.fit->targets)
    out += fmt::format("{:<18} {:>8.4f} {:>8.4f} {:>9.3f} {:>7.3f}\n", t.target, t.correlation, t.norm_ratio,
                       t.precision, t.recall);
  out += fmt::format("relative error {:.3e}, exact support: {}\n", r.fit->relative_error,
                     r.fit->support_exact ? "yes" : "no");
  return out;
}

std::vector<std::pair<std::string, std::string>> frequency_plots(const RunConfig& cfg,
                                                                 const std::vector<PredictionResult>& preds) {
  std::vector<std::pair<std::string, std::string>> out;
  if (preds.empty()) return out;
  static const char* colors[] = {"#d62728", "#2ca02c", "#9467bd"};
  const auto& first = preds.front();
  const auto& t = first.series.column("t");
  for (std::size_t k = 0; k < first.ders.size() && k < 2; ++k) {
    const auto& der = first.ders[k].der;
    const auto& meas = first.series.column(der + ".f_measured");
    double lo = meas.front(), hi = meas.front();
    for (double v : meas) lo = std::min(lo, v), hi = std::max(hi, v);
    const double pad = 0.5 * cfg.prediction.divergence_cap_hz;
    PlotSpec spec;
    spec.title = fmt::format("f{} ({}): one-step prediction", k + 1, der);
    spec.y_label = "frequency (Hz)";
    spec.y_range = std::pair{lo - pad, hi + pad};
    std::vector<PlotSeries> series{{"measured", t, meas, "#1f77b4", false}};
    for (std::size_t i = 0; i < preds.size(); ++i)
      series.push_back({to_string(preds[i].kind), t, preds[i].series.column(der + ".f_predicted"), colors[i % 3], true});
    out.emplace_back(fmt::format("f{}.svg", k + 1), render_svg(spec, series));
  }
  return out;
}

std::string fit_report_csv(const std::vector<IdentificationResult>& results) {
  std::string out = "library,target,correlation,norm_ratio,precision,recall\n";
  for (const auto& r : results) {
    if (!r.fit) continue;
    for (const auto& f : r.fit->targets)
      out += fmt::format("{},{},{},{},{},{}\n", to_string(r.model.library.kind), f.target, f.correlation, f.norm_ratio,
                         f.precision, f.recall);
  }
  return out;
}

void write_fit_report(const std::vector<IdentificationResult>& results, ArtifactWriter& w) {
  std::string text;
  for (const auto& r : results)
    if (r.fit) text += coefficient_table(r);
  if (text.empty()) return;
  w.text("fit_report.txt", text);
  w.text("fit_report.csv", fit_report_csv(results));
}

void write_pipeline(const PipelineResult& res, const RunConfig& cfg, ArtifactWriter& w, const OutputOptions& opts) {
  w.text("config.resolved.json", cfg.resolved.dump(2) + "\n");
  if (opts.trajectories) {
    w.table("trajectory_identification.csv", res.identification_trajectory.table);
    w.table("trajectory_validation.csv", res.validation_trajectory.table);
  }
  w.table("pmu_identification.csv", res.identification_pmu.table);
  w.table("pmu_validation.csv", res.validation_pmu.table);
  for (const auto& m : res.models) w.text("model_" + to_string(m.model.library.kind) + ".json", model_to_json(m.model));
  if (!res.predictions.empty()) w.table("prediction.csv", combine_predictions(res.predictions));
  write_fit_report(res.models, w);
  w.text("metrics.json", metrics_json(cfg, res.models, res.predictions));
  if (opts.plots)
    for (const auto& [name, svg] : frequency_plots(cfg, res.predictions)) w.text(name, svg);
}

std::string render_report(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("metrics file is not valid JSON: ") + e.what());
  }
  std::string out;
  try {
    out += fmt::format("seed {}  divergence cap {} Hz  metrics from t = {} s\n", j.at("seed").get<std::uint64_t>(),
                       j.at("divergence_cap_hz").get<double>(), j.at("metrics_start").get<double>());
    for (const auto& m : j.at("models")) {
      out += fmt::format("\n[{}] {} candidate columns, {} nonzero coefficients\n", m.at("library").get<std::string>(),
                         m.at("columns").get<int>(), m.at("nonzeros").get<int>());
      if (m.contains("targets")) {
        out += fmt::format("  {:<18} {:>8} {:>8}\n", "target", "rho", "ratio");
        for (const auto& t : m.at("targets"))
          out += fmt::format("  {:<18} {:>8.4f} {:>8.4f}\n", t.at("target").get<std::string>(),
                             t.at("correlation").get<double>(), t.at("norm_ratio").get<double>());
        out += fmt::format("  relative error {:.3e}\n", m.at("relative_error").get<double>());
      }
      if (m.contains("prediction")) {
        for (const auto& d : m.at("prediction")) {
          const auto& dv = d.at("divergence_time");
          out += fmt::format("  {:<6} rmse {} Hz  max {} Hz  diverges {}\n", d.at("der").get<std::string>(),
                             fixed_or_inf(d.at("rmse_hz"), 5), fixed_or_inf(d.at("max_abs_hz"), 4),
                             dv.is_null() ? std::string("never") : fmt::format("at {:.4f} s", dv.get<double>()));
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("metrics file is missing fields: ") + e.what());
  }
  return out;
}

}  // namespace pcsindy
