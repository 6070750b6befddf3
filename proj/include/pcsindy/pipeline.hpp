#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pcsindy/config.hpp"

namespace pcsindy {

// Writes files into one directory and records their hashes for the manifest.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir);
  void text(const std::string& name, const std::string& content);
  void table(const std::string& name, const SeriesTable& t);

  struct Record {
    std::string file;
    std::string fnv1a64;
    std::size_t bytes = 0;
  };
  const std::vector<Record>& records() const { return records_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<Record> records_;
};

using StepTimings = std::vector<std::pair<std::string, double>>;

// Everything except the timings is deterministic.
std::string manifest_json(const std::string& command, const RunConfig& cfg, const ArtifactWriter& w,
                          const StepTimings& timings = {});

struct IdentificationResult {
  IdentifiedModel model;
  std::optional<FitReport> fit;  // analytical library only
  double seconds = 0.0;
};

IdentificationResult run_identification(const RunConfig& cfg, const MeasurementFrame& frame, LibraryKind kind,
                                        const std::vector<DerParams>* truth);

struct DerMetrics {
  std::string der;
  ErrorMetrics metrics;
};

struct PredictionResult {
  LibraryKind kind = LibraryKind::Analytical;
  SeriesTable series;
  std::vector<DerMetrics> ders;
  // Earliest divergence over all DERs.
  std::optional<double> divergence_time() const;
};

PredictionResult run_prediction(const RunConfig& cfg, const IdentifiedModel& model, const MeasurementFrame& frame);

// One table with the measured frequency and every model's prediction and error per DER.
SeriesTable combine_predictions(const std::vector<PredictionResult>& preds);

struct PipelineResult {
  Trajectory identification_trajectory, validation_trajectory;
  PmuSeries identification_pmu, validation_pmu;
  std::vector<IdentificationResult> models;
  std::vector<PredictionResult> predictions;
  StepTimings timings;
};

PipelineResult run_pipeline(const RunConfig& cfg, const std::vector<LibraryKind>& kinds);

std::string metrics_json(const RunConfig& cfg, const std::vector<IdentificationResult>& models,
                         const std::vector<PredictionResult>& preds);
std::string coefficient_table(const IdentificationResult& r);
// Per-target correlation, norm ratio and support scores of every analytical fit.
std::string fit_report_csv(const std::vector<IdentificationResult>& results);
// Writes fit_report.txt and fit_report.csv when any result carries a comparison.
void write_fit_report(const std::vector<IdentificationResult>& results, ArtifactWriter& w);
// Frequency plots for the first two DERs over the prediction window.
std::vector<std::pair<std::string, std::string>> frequency_plots(const RunConfig& cfg,
                                                                 const std::vector<PredictionResult>& preds);

struct OutputOptions {
  bool trajectories = false;
  bool plots = true;
};

void write_pipeline(const PipelineResult& res, const RunConfig& cfg, ArtifactWriter& w, const OutputOptions& opts);

// Human-readable summary of a metrics file.
std::string render_report(const std::string& metrics_json_text);

}  // namespace pcsindy
