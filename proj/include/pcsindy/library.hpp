#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "pcsindy/der_models.hpp"
#include "pcsindy/pmu.hpp"

namespace pcsindy {

enum class LibraryKind { Analytical, Intuitive };

std::string to_string(LibraryKind k);
LibraryKind parse_library_kind(const std::string& s);

struct LibrarySpec {
  LibraryKind kind = LibraryKind::Analytical;
  // Intuitive library only.
  int degree = 2;
  bool sinusoids = true;
  bool include_vq_int = false;
  std::vector<DerDescriptor> roster;
  void validate() const;
};

// Columns and targets that belong to one DER.
struct Block {
  std::string der;
  std::size_t col_begin = 0, col_count = 0;
  std::size_t target_begin = 0, target_count = 0;
};

// Candidate function set Theta, organised as one block per DER.
// Column labels read "<der>:<term>", e.g. "gfl2:vq" or "gfm1:theta*omega".
class CandidateLibrary {
 public:
  explicit CandidateLibrary(LibrarySpec spec);

  const LibrarySpec& spec() const { return spec_; }
  std::size_t size() const { return terms_.size(); }
  const std::vector<std::string>& column_labels() const { return column_labels_; }
  // "<der>.theta_dot" and so on.
  const std::vector<std::string>& target_labels() const { return target_labels_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  // Frame quantities read by the library. omega0 is supplied separately.
  const std::vector<std::string>& variables() const { return variables_; }

  void evaluate_row(std::span<const double> vars, double omega0, std::span<double> out) const;
  // Rows evaluated in parallel.
  Eigen::MatrixXd evaluate(const MeasurementFrame& frame) const;
  Eigen::MatrixXd evaluate_serial(const MeasurementFrame& frame) const;

 private:
  enum class Op { Constant, Product, Sin, Cos };
  struct Term {
    Op op;
    std::vector<int> vars;  // indices into variables_, -1 for omega0
  };
  int variable(const std::string& name);
  void add_term(const std::string& der, Op op, std::vector<int> vars, const std::string& label);
  std::vector<const std::vector<double>*> bind(const MeasurementFrame& frame) const;

  LibrarySpec spec_;
  std::vector<Term> terms_;
  std::vector<std::string> column_labels_, target_labels_, variables_;
  std::vector<Block> blocks_;
};

struct SnapshotMatrices {
  Eigen::MatrixXd x_dot;  // M x N
  Eigen::MatrixXd theta;  // M x P
  std::vector<std::string> target_labels, column_labels;
  std::vector<Block> blocks;
  std::vector<double> time;
};

// Stacks targets and candidate columns. `trim` drops that many rows at each end.
// Throws ConfigError when the library has more columns than rows remain.
SnapshotMatrices build_matrices(const MeasurementFrame& frame, const CandidateLibrary& lib,
                                std::size_t trim = 0);

}  // namespace pcsindy
