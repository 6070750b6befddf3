#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

#include "pcsindy/library.hpp"

namespace pcsindy {

struct StlsqConfig {
  double threshold = 0.05;  // applied to coefficients of unit-RMS columns and targets
  int max_iters = 10;
  bool normalize_columns = true;
  double ridge = 1e-10;
  bool block_structured = true;  // fit each DER's targets on its own block only
  void validate() const;
};

struct TargetDiagnostics {
  std::string target;
  int iterations = 0;
  bool converged = false;
  std::size_t support_size = 0;
  double residual_rms = 0.0;
};

struct StlsqResult {
  Eigen::MatrixXd xi;  // P x N
  std::vector<TargetDiagnostics> diagnostics;
};

// Sequentially thresholded least squares for one target. Throws NumericalError when the
// threshold removes every candidate.
Eigen::VectorXd stlsq_target(const Eigen::Ref<const Eigen::MatrixXd>& theta, const Eigen::VectorXd& y,
                             const StlsqConfig& cfg, TargetDiagnostics& diag);

// Targets are fitted in parallel. Results match stlsq_serial bit for bit.
StlsqResult stlsq(const SnapshotMatrices& s, const StlsqConfig& cfg);
StlsqResult stlsq_serial(const SnapshotMatrices& s, const StlsqConfig& cfg);

struct IdentifiedModel {
  LibrarySpec library;
  StlsqConfig config;
  std::vector<std::string> column_labels, target_labels;
  Eigen::MatrixXd xi;
  std::vector<TargetDiagnostics> diagnostics;
  double f0 = 60.0;
  double dt = 0.0;
  std::size_t samples = 0;
};

IdentifiedModel identify(const MeasurementFrame& frame, const LibrarySpec& spec, const StlsqConfig& cfg,
                         std::size_t trim = 0);

std::string model_to_json(const IdentifiedModel& m);
IdentifiedModel model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const IdentifiedModel& m);
IdentifiedModel load_model(const std::filesystem::path& path);

struct TargetFit {
  std::string target;
  double correlation = 0.0;  // Pearson over the full coefficient column
  double norm_ratio = 0.0;   // |xi_hat| / |xi|
  double precision = 0.0;
  double recall = 0.0;
};

struct FitReport {
  std::vector<TargetFit> targets;
  double relative_error = 0.0;  // Frobenius
  double precision = 0.0;
  double recall = 0.0;
  bool support_exact = false;
};

FitReport compare_coefficients(const Eigen::MatrixXd& xi_true, const Eigen::MatrixXd& xi_hat,
                               const std::vector<std::string>& target_labels);

}  // namespace pcsindy
