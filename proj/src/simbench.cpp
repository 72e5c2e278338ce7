#include "blast/simbench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "blast/errors.hpp"

namespace blast {

namespace {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Uniform without-replacement subset of {0..p-1} of the given size.
std::vector<int> random_subset(int p, int size, RngStream& rng) {
  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < size; ++i) {
    const auto j =
        i + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(p - i)));
    std::swap(order[i], order[j]);
  }
  order.resize(size);
  return order;
}

Dataset draw_study(const Eigen::VectorXd& coeffs, int n, double noise_sd,
                   int study_id, StudyRole role, RngStream& rng) {
  Dataset d;
  const auto p = coeffs.size();
  d.design.resize(n, p);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) d.design(i, j) = rng.normal();
  }
  d.outcome = d.design * coeffs;
  for (int i = 0; i < n; ++i) d.outcome[i] += noise_sd * rng.normal();
  d.study_id = study_id;
  d.role = role;
  return d;
}

}  // namespace

void ScenarioSpec::validate() const {
  if (p < 1 || s < 1 || n0 < 1 || nk < 1 || K < 1 || replicates < 1) {
    throw InputError("ScenarioSpec: sizes must be positive");
  }
  if (s > p) throw InputError("ScenarioSpec: s must not exceed p");
  if (2 * s > p) throw InputError("ScenarioSpec: 2s must not exceed p");
  if (num_informative < 0 || num_informative > K) {
    throw InputError("ScenarioSpec: num_informative must lie in [0, K]");
  }
  if (bias_level_h < 0 || bias_level_h > p) {
    throw InputError("ScenarioSpec: bias level h must lie in [0, p]");
  }
  if (!(noise_sd > 0.0)) throw InputError("ScenarioSpec: noise sd must be positive");
  if (burn_in >= iterations) {
    throw InputError("ScenarioSpec: burn-in must be smaller than iterations");
  }
}

GeneratedScenario generate_scenario(const ScenarioSpec& spec, RngStream& rng) {
  spec.validate();
  GeneratedScenario out;
  out.beta_true = Eigen::VectorXd::Zero(spec.p);
  out.beta_true.head(spec.s).setConstant(spec.signal_value);

  out.target = draw_study(out.beta_true, spec.n0, spec.noise_sd, 0,
                          StudyRole::target, rng);

  out.sources.reserve(spec.K);
  for (int k = 1; k <= spec.K; ++k) {
    const bool informative = k <= spec.num_informative;
    Eigen::VectorXd coeffs = out.beta_true;
    const int subset_size = informative ? spec.bias_level_h : 2 * spec.s;
    const double bias =
        informative ? spec.informative_bias : spec.noninformative_bias;
    for (int j : random_subset(spec.p, subset_size, rng)) coeffs[j] -= bias;
    out.sources.push_back(draw_study(coeffs, spec.nk, spec.noise_sd, k,
                                     StudyRole::source, rng));
    if (informative) out.informative_ids.insert(k);
  }
  return out;
}

double sse(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_true) {
  if (beta_hat.size() != beta_true.size()) {
    throw InputError("sse: vector lengths differ");
  }
  return (beta_hat - beta_true).squaredNorm();
}

double mspe(const Eigen::VectorXd& y_hat, const Eigen::VectorXd& y) {
  if (y_hat.size() != y.size()) throw InputError("mspe: vector lengths differ");
  if (y.size() == 0) throw InputError("mspe: empty vectors");
  return (y_hat - y).squaredNorm() / static_cast<double>(y.size());
}

IntervalMetrics interval_metrics(const Eigen::MatrixXd& intervals,
                                 const Eigen::VectorXd& beta_true,
                                 const std::vector<bool>& signal_mask) {
  const auto p = beta_true.size();
  if (intervals.rows() != p || intervals.cols() != 2 ||
      static_cast<Eigen::Index>(signal_mask.size()) != p) {
    throw InputError("interval_metrics: inconsistent lengths");
  }
  IntervalMetrics out;
  int n_signal = 0, n_noise = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double lo = intervals(j, 0);
    const double hi = intervals(j, 1);
    if (lo > hi) throw InputError("interval_metrics: lower bound above upper");
    const double width = hi - lo;
    const bool covered = beta_true[j] >= lo && beta_true[j] <= hi;
    if (signal_mask[j]) {
      ++n_signal;
      out.avg_width_signal += width;
      out.coverage_signal += covered ? 1.0 : 0.0;
    } else {
      ++n_noise;
      out.avg_width_noise += width;
      out.coverage_noise += covered ? 1.0 : 0.0;
    }
  }
  if (n_signal > 0) {
    out.avg_width_signal /= n_signal;
    out.coverage_signal /= n_signal;
  }
  if (n_noise > 0) {
    out.avg_width_noise /= n_noise;
    out.coverage_noise /= n_noise;
  }
  return out;
}

MethodKind parse_method(const std::string& name) {
  if (name == "target-only") return MethodKind::target_only;
  if (name == "oracle") return MethodKind::oracle_blast;
  if (name == "naive") return MethodKind::naive_blast;
  if (name == "selection") return MethodKind::blast_selection;
  throw InputError("unknown method name: " + name);
}

std::string method_name(MethodKind kind) {
  switch (kind) {
    case MethodKind::target_only: return "target-only";
    case MethodKind::oracle_blast: return "oracle";
    case MethodKind::naive_blast: return "naive";
    case MethodKind::blast_selection: return "selection";
  }
  return "unknown";
}

namespace {

SamplerConfig method_config(MethodKind kind, const ScenarioSpec& spec,
                            const GeneratedScenario& scenario,
                            std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.iterations = spec.iterations;
  cfg.burn_in = spec.burn_in;
  cfg.seed = seed;
  cfg.tempering.kappa = spec.kappa;
  switch (kind) {
    case MethodKind::target_only:
      cfg.mode = SamplerMode::oracle;
      cfg.oracle_informative_ids = {};
      // A permanently empty informative block is pinned rather than imputed.
      cfg.pseudo_data.mode = PseudoDataMode::prior_draw;
      break;
    case MethodKind::oracle_blast:
      cfg.mode = SamplerMode::oracle;
      cfg.oracle_informative_ids = scenario.informative_ids;
      cfg.pseudo_data.mode = PseudoDataMode::prior_draw;
      break;
    case MethodKind::naive_blast: {
      cfg.mode = SamplerMode::oracle;
      for (const auto& s : scenario.sources) {
        cfg.oracle_informative_ids.insert(s.study_id);
      }
      break;
    }
    case MethodKind::blast_selection:
      cfg.mode = SamplerMode::selection;
      break;
  }
  return cfg;
}

struct ReplicateMetrics {
  double sse = 0.0;
  double mspe = 0.0;
  IntervalMetrics intervals;
  Eigen::VectorXd inclusion;
};

ReplicateMetrics run_one(MethodKind kind, const ScenarioSpec& spec,
                         const GeneratedScenario& scenario,
                         const Dataset& holdout, std::uint64_t seed) {
  const SamplerConfig cfg = method_config(kind, spec, scenario, seed);
  PosteriorDraws draws =
      kind == MethodKind::blast_selection
          ? run_selection(scenario.target, scenario.sources, cfg)
          : run_oracle(scenario.target, scenario.sources, cfg);
  const PosteriorSummary summary = summarize(draws, 0.95);

  std::vector<bool> signal_mask(spec.p, false);
  for (int j = 0; j < spec.s; ++j) signal_mask[j] = true;

  ReplicateMetrics out;
  out.sse = sse(summary.beta_mean, scenario.beta_true);
  out.mspe = mspe(holdout.design * summary.beta_mean, holdout.outcome);
  out.intervals =
      interval_metrics(summary.intervals, scenario.beta_true, signal_mask);
  out.inclusion = summary.inclusion_probs;
  return out;
}

}  // namespace

std::string BenchmarkTable::to_csv() const {
  std::ostringstream os;
  os << "method,num_informative,h,sse,sse_se,mspe,avg_width_signal,"
        "avg_width_noise,coverage_signal,coverage_noise,inclusion_probs\n";
  for (const auto& row : rows) {
    os << row.method << ',' << row.num_informative << ',' << row.h << ','
       << format_number(row.sse) << ',' << format_number(row.sse_se) << ','
       << format_number(row.mspe) << ','
       << format_number(row.avg_width_signal) << ','
       << format_number(row.avg_width_noise) << ','
       << format_number(row.coverage_signal) << ','
       << format_number(row.coverage_noise) << ',';
    for (Eigen::Index k = 0; k < row.inclusion_probs.size(); ++k) {
      if (k > 0) os << ';';
      os << format_number(row.inclusion_probs[k]);
    }
    os << '\n';
  }
  return os.str();
}

BenchmarkTable run_benchmark(const ScenarioSpec& spec,
                             const std::vector<MethodKind>& methods,
                             int threads) {
  spec.validate();
  if (methods.empty()) throw InputError("run_benchmark: no methods given");

  const auto reps = static_cast<std::size_t>(spec.replicates);
  std::vector<std::vector<ReplicateMetrics>> per_method(
      methods.size(), std::vector<ReplicateMetrics>(reps));

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(threads, 1))
#endif
  for (long long rep = 0; rep < static_cast<long long>(reps); ++rep) {
    const auto r = static_cast<std::size_t>(rep);
    RngStream scenario_rng(derive_seed(spec.seed, 1000 + r), 0);
    const GeneratedScenario scenario = generate_scenario(spec, scenario_rng);
    // Fresh target-distribution holdout of size n0.
    const Dataset holdout = [&] {
      RngStream hold_rng(derive_seed(spec.seed, 500000 + r), 0);
      Dataset h;
      h.design.resize(spec.n0, spec.p);
      for (int i = 0; i < spec.n0; ++i) {
        for (int j = 0; j < spec.p; ++j) h.design(i, j) = hold_rng.normal();
      }
      h.outcome = h.design * scenario.beta_true;
      for (int i = 0; i < spec.n0; ++i) {
        h.outcome[i] += spec.noise_sd * hold_rng.normal();
      }
      return h;
    }();
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const std::uint64_t run_seed =
          derive_seed(spec.seed, 7777 + r * 64 + m);
      per_method[m][r] = run_one(methods[m], spec, scenario, holdout, run_seed);
    }
  }
  (void)threads;

  BenchmarkTable table;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    MetricsRow row;
    row.method = method_name(methods[m]);
    row.num_informative = spec.num_informative;
    row.h = spec.bias_level_h;
    const auto& results = per_method[m];
    const auto n = static_cast<double>(results.size());
    double sse_sq = 0.0;
    for (const auto& res : results) {
      row.sse += res.sse;
      sse_sq += res.sse * res.sse;
      row.mspe += res.mspe;
      row.avg_width_signal += res.intervals.avg_width_signal;
      row.avg_width_noise += res.intervals.avg_width_noise;
      row.coverage_signal += res.intervals.coverage_signal;
      row.coverage_noise += res.intervals.coverage_noise;
    }
    row.sse /= n;
    row.mspe /= n;
    row.avg_width_signal /= n;
    row.avg_width_noise /= n;
    row.coverage_signal /= n;
    row.coverage_noise /= n;
    if (results.size() > 1) {
      const double var = (sse_sq / n - row.sse * row.sse) * n / (n - 1.0);
      row.sse_se = std::sqrt(std::max(var, 0.0) / n);
    }
    if (methods[m] == MethodKind::blast_selection && !results.empty() &&
        results.front().inclusion.size() > 0) {
      row.inclusion_probs =
          Eigen::VectorXd::Zero(results.front().inclusion.size());
      for (const auto& res : results) row.inclusion_probs += res.inclusion;
      row.inclusion_probs /= n;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace blast
