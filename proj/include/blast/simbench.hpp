#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "blast/driver.hpp"
#include "blast/model.hpp"
#include "blast/rng.hpp"

namespace blast {

/// Parameters of one synthetic transfer-learning scenario: sparse target
/// coefficients, informative sources biased on a small random coordinate
/// subset, noninformative sources biased heavily on a larger subset.
struct ScenarioSpec {
  int p = 50;
  int s = 3;                     // number of signal coordinates
  int n0 = 60;                   // target sample size
  int nk = 60;                   // per-source sample size
  int K = 4;                     // number of source studies
  int num_informative = 4;       // how many sources are truly informative
  int bias_level_h = 2;          // informative bias subset size
  double signal_value = 0.5;
  double informative_bias = 0.3;
  double noninformative_bias = 1.0;
  double noise_sd = 1.0;
  int replicates = 20;
  std::uint64_t seed = 0;

  // Sampler settings applied to every method run.
  std::size_t iterations = 1500;
  std::size_t burn_in = 500;
  double kappa = 0.005;

  void validate() const;
};

struct GeneratedScenario {
  Dataset target;
  std::vector<Dataset> sources;   // study ids 1..K; 1..num_informative informative
  Eigen::VectorXd beta_true;
  std::set<int> informative_ids;
};

/// Draw one scenario: covariates iid standard normal, target coefficients
/// (signal_value * 1_s, 0), informative sources biased by informative_bias on
/// a uniformly random h-subset, noninformative sources by noninformative_bias
/// on a random 2s-subset, outcomes with N(0, noise_sd^2) errors.
GeneratedScenario generate_scenario(const ScenarioSpec& spec, RngStream& rng);

/// Sum of squared estimation errors.
double sse(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true);

/// Mean squared prediction error over a holdout set (divisor = holdout size).
double mspe(const Eigen::VectorXd& y_hat, const Eigen::VectorXd& y);

struct IntervalMetrics {
  double avg_width_signal = 0.0;
  double avg_width_noise = 0.0;
  double coverage_signal = 0.0;
  double coverage_noise = 0.0;
};

/// Widths and coverage fractions stratified into signal and non-signal
/// coordinates. Intervals are closed: a truth exactly on an endpoint counts
/// as covered.
IntervalMetrics interval_metrics(const Eigen::MatrixXd& intervals,
                                 const Eigen::VectorXd& beta_true,
                                 const std::vector<bool>& signal_mask);

enum class MethodKind {
  target_only,      // ignores all sources (empty oracle set)
  oracle_blast,     // informative set known
  naive_blast,      // every source treated as informative
  blast_selection,  // source selection sampler
};

/// Parse a method name ("target-only", "oracle", "naive", "selection").
MethodKind parse_method(const std::string& name);
std::string method_name(MethodKind kind);

struct MetricsRow {
  std::string method;
  int num_informative = 0;
  int h = 0;
  double sse = 0.0;
  double sse_se = 0.0;  // replicate standard error of the mean SSE
  double mspe = 0.0;
  double avg_width_signal = 0.0;
  double avg_width_noise = 0.0;
  double coverage_signal = 0.0;
  double coverage_noise = 0.0;
  Eigen::VectorXd inclusion_probs;  // selection methods only (else empty)
};

struct BenchmarkTable {
  std::vector<MetricsRow> rows;
  std::string to_csv() const;
};

/// Run every method on `replicates` independent scenario draws and average
/// the metrics. Replicates run concurrently when threads > 1; per-replicate
/// seeds derive from the scenario seed so results do not depend on the
/// thread count.
BenchmarkTable run_benchmark(const ScenarioSpec& spec,
                             const std::vector<MethodKind>& methods,
                             int threads = 1);

}  // namespace blast
