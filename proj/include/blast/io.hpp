#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "blast/driver.hpp"
#include "blast/model.hpp"

namespace blast {

/// Shortest round-trip decimal representation of a double ('.' separator,
/// locale independent). Reading the string back reproduces the value bit for
/// bit, which is what makes the CSV/JSON outputs exactly reloadable.
std::string format_double(double v);

/// Per-column centering/scaling records sufficient to invert any applied
/// standardization. Predictor statistics are pooled over all studies;
/// outcomes are centered per study.
struct StandardizationRecord {
  bool applied = false;
  Eigen::VectorXd predictor_mean;  // length p
  Eigen::VectorXd predictor_sd;    // length p
  std::vector<double> outcome_mean;  // target first, then sources in order
};

struct ProblemBundle {
  Dataset target;
  std::vector<Dataset> sources;  // study ids 1..K in load order
  std::vector<std::string> column_names;  // predictor names
  StandardizationRecord standardization;
};

struct LoadOptions {
  std::string outcome_column = "y";
  bool standardize = true;
};

/// Load one CSV (header row, comma separated, '.' decimals). Errors cite the
/// file and 1-based line number.
Dataset load_dataset_csv(const std::string& path,
                         const std::string& outcome_column,
                         std::vector<std::string>* column_names_out = nullptr);

/// Load target + sources, validate shared headers, optionally center/scale
/// predictors (pooled statistics) and center outcomes (per study).
ProblemBundle load_problem(const std::string& target_path,
                           const std::vector<std::string>& source_paths,
                           const LoadOptions& options = {});

/// Map a posterior summary of standardized coefficients back to the original
/// covariate scale (divides by the recorded per-column sd).
Eigen::VectorXd unstandardize_coefficients(const Eigen::VectorXd& beta,
                                           const StandardizationRecord& rec);

/// Write the retained draws (one row per retained iteration; chains
/// concatenated in order). Columns: beta_1..p[, gamma_1..K], sigma2_<block>.
void write_draws_csv(const std::string& path, const PosteriorDraws& draws);

/// In-memory image of a draws CSV.
struct LoadedDraws {
  Eigen::MatrixXd beta;
  Eigen::MatrixXd gamma;      // 0 columns when absent
  Eigen::MatrixXd variances;
  std::vector<std::string> variance_names;
};

LoadedDraws read_draws_csv(const std::string& path);

/// Wrap loaded draws as a single-chain PosteriorDraws with every row
/// retained, so `summarize` can run on stored output.
PosteriorDraws draws_from_loaded(const LoadedDraws& loaded);

/// Hex SHA-256 digest of a file's contents.
std::string sha256_file(const std::string& path);
std::string sha256_bytes(const void* data, std::size_t size);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace blast
