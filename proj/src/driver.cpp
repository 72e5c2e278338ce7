#include "blast/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "blast/errors.hpp"
#include "blast/stats.hpp"

namespace blast {

namespace {

std::set<int> all_source_ids(const std::vector<Dataset>& sources) {
  std::set<int> ids;
  for (const auto& s : sources) ids.insert(s.study_id);
  return ids;
}

void check_problem(const Dataset& target, const std::vector<Dataset>& sources) {
  target.validate();
  if (target.rows() < 1) throw InputError("target dataset has no rows");
  for (const auto& s : sources) {
    s.validate();
    if (s.cols() != target.cols()) {
      throw InputError("source and target disagree on the number of predictors");
    }
  }
}

TemperingPolicy resolve_tempering(const TemperingPolicy& policy,
                                  Eigen::Index p) {
  TemperingPolicy out = policy;
  if (out.bounds.first == 0.0 && out.bounds.second == 0.0) {
    const double floor =
        std::min(1.0 / (static_cast<double>(p) * static_cast<double>(p)),
                 out.kappa);
    out.bounds = {floor, 10.0};
  }
  out.validate();
  return out;
}

// Dirac-mass handling for an empty block under the prior_draw policy: the
// block's local scales are pinned at 1/p^2 and coefficients are drawn from
// the pinned prior.
void dirac_prior_draw(Eigen::VectorXd& coeffs, BlockShrinkage& shrink,
                      double variance, RngStream& rng) {
  const auto p = static_cast<double>(coeffs.size());
  shrink.local_scales.setConstant(1.0 / (p * p));
  const double sd = std::sqrt(variance) / p;
  for (Eigen::Index j = 0; j < coeffs.size(); ++j) coeffs[j] = sd * rng.normal();
}

double dirac_variance_draw(Eigen::Index sample_size, RngStream& rng) {
  // IG(sqrt(N), s(sqrt(N)+1)) with s = 1 for standardized outcomes; keeps the
  // idle block's variance concentrated near one. N is the target sample size
  // (the only data in play when a block is empty).
  const double root_n = std::sqrt(static_cast<double>(std::max<Eigen::Index>(
      sample_size, 1)));
  return draw_inverse_gamma(root_n, root_n + 1.0, rng);
}

struct ShrinkageAdaptState {
  bool enabled = false;
  std::size_t iteration = 1;
};

// One shrinkage update for a block: eta slice sweep, the global xi
// Metropolis step, then a joint (coefficients, xi) rescaling move that cuts
// across the shrinkage funnel. The rescale may mutate the coefficients, so
// the local-scale coupling is restored afterwards.
void sweep_block(HorseshoeBlockState& hs, BlockShrinkage& shrink,
                 Eigen::VectorXd& coeffs, double sigma2,
                 const std::function<double(const Eigen::VectorXd&)>& log_lik,
                 const XiBounds& bounds, const ShrinkageAdaptState& adapt,
                 RngStream& rng) {
  const bool accepted = horseshoe_sweep(hs, shrink, coeffs, sigma2, rng, bounds);
  xi_coefficient_rescale(hs, coeffs, log_lik, 1.0, rng, bounds);
  shrink.local_scales = (hs.xi * hs.etas.array()).inverse();
  if (adapt.enabled) {
    hs.step_size =
        step_size_adapt(hs.step_size, accepted ? 1.0 : 0.0, adapt.iteration);
  }
}

}  // namespace

void SamplerConfig::validate() const {
  if (iterations < 1) throw InputError("SamplerConfig: iterations must be positive");
  if (burn_in >= iterations) {
    throw InputError("SamplerConfig: burn-in must be smaller than iterations");
  }
  if (thin < 1) throw InputError("SamplerConfig: thinning factor must be positive");
  if (chains < 1) throw InputError("SamplerConfig: chains must be positive");
  if (!(initial_step_size > 0.0)) {
    throw InputError("SamplerConfig: initial step size must be positive");
  }
  if (!(pseudo_data.fraction > 0.0) || pseudo_data.fraction > 1.0) {
    throw InputError("SamplerConfig: pseudo-data fraction must lie in (0,1]");
  }
}

OracleChainState OracleChainState::initial(Eigen::Index p, double step_size) {
  OracleChainState chain;
  chain.model = ModelState::initial(p, 0);
  chain.hs_informative = HorseshoeBlockState::initial(p, step_size);
  chain.hs_contrast = HorseshoeBlockState::initial(p, step_size);
  return chain;
}

void oracle_step(OracleChainState& chain, const Dataset& target,
                 const Dataset& stacked_inf, const SamplerConfig& config,
                 std::size_t adapt_iteration, RngStream& rng) {
  ModelState& model = chain.model;
  const bool dirac_w = stacked_inf.rows() == 0 &&
                       config.pseudo_data.mode == PseudoDataMode::prior_draw;

  // Coefficients.
  if (dirac_w) {
    dirac_prior_draw(model.w_informative, model.shrink_informative,
                     model.var_informative, rng);
  } else {
    model.w_informative =
        draw_w_informative(model, target, stacked_inf, rng);
  }
  model.contrast = draw_contrast(model, target, rng);

  // Variances.
  model.var_target = draw_variance(VarianceBlock::target, model, target,
                                   config.priors.target, rng);
  if (dirac_w) {
    model.var_informative = dirac_variance_draw(target.rows(), rng);
  } else {
    model.var_informative =
        draw_variance(VarianceBlock::informative, model, stacked_inf,
                      config.priors.informative, rng);
  }

  // Shrinkage sweeps; the contrast's global precision is kept above the
  // informative block's when the sparsity ordering is enforced.
  const ShrinkageAdaptState adapt{adapt_iteration > 0, adapt_iteration};
  const auto w_log_lik = [&](const Eigen::VectorXd& w) {
    return -0.5 * (stacked_inf.outcome - stacked_inf.design * w).squaredNorm() /
               model.var_informative -
           0.5 * (target.outcome - target.design * (w + model.contrast))
                     .squaredNorm() /
               model.var_target;
  };
  const auto d_log_lik = [&](const Eigen::VectorXd& d) {
    return -0.5 * (target.outcome -
                   target.design * (model.w_informative + d))
                      .squaredNorm() /
           model.var_target;
  };
  if (!dirac_w) {
    XiBounds w_bounds;
    if (config.enforce_contrast_sparsity) w_bounds.upper = chain.hs_contrast.xi;
    sweep_block(chain.hs_informative, model.shrink_informative,
                model.w_informative, model.var_informative, w_log_lik,
                w_bounds, adapt, rng);
  }
  XiBounds d_bounds;
  if (config.enforce_contrast_sparsity) d_bounds.lower = chain.hs_informative.xi;
  sweep_block(chain.hs_contrast, model.shrink_contrast, model.contrast,
              model.var_target, d_log_lik, d_bounds, adapt, rng);
}

SelectionChainState SelectionChainState::initial(Eigen::Index p,
                                                 std::size_t num_studies,
                                                 const TemperingPolicy& policy,
                                                 double step_size) {
  SelectionChainState chain;
  chain.model = ModelState::initial(p, num_studies);
  chain.hs_informative = HorseshoeBlockState::initial(p, step_size);
  chain.hs_contrast = HorseshoeBlockState::initial(p, step_size);
  chain.hs_noninformative = HorseshoeBlockState::initial(p, step_size);
  chain.tempering = policy;
  return chain;
}

void selection_step(SelectionChainState& chain, const Dataset& target,
                    const std::vector<Dataset>& sources,
                    const Dataset& all_sources_stacked,
                    const StudyGrams& grams, const SamplerConfig& config,
                    std::size_t iteration, std::size_t adapt_iteration,
                    RngStream& rng) {
  ModelState& model = chain.model;

  const Partition part = partition_from_inclusion(model.inclusion);
  Dataset stacked_inf = stack_studies(sources, part.informative_ids);
  Dataset stacked_noninf = stack_studies(sources, part.noninformative_ids);

  // Degenerate partitions: substitute pseudo-data for the parameter draws
  // (marginal evaluations below keep the raw empty stacks).
  bool dirac_w = false;
  bool dirac_noninf = false;
  if (stacked_inf.rows() == 0) {
    switch (config.pseudo_data.mode) {
      case PseudoDataMode::pseudo_data:
        stacked_inf = make_pseudo_data(PseudoRole::informative, target,
                                       all_sources_stacked, config.pseudo_data,
                                       rng);
        break;
      case PseudoDataMode::zero_impute:
        break;
      case PseudoDataMode::prior_draw:
        dirac_w = true;
        break;
    }
  }
  if (stacked_noninf.rows() == 0) {
    switch (config.pseudo_data.mode) {
      case PseudoDataMode::pseudo_data:
        stacked_noninf = make_pseudo_data(PseudoRole::noninformative, target,
                                          all_sources_stacked,
                                          config.pseudo_data, rng);
        break;
      case PseudoDataMode::zero_impute:
        break;
      case PseudoDataMode::prior_draw:
        dirac_noninf = true;
        break;
    }
  }

  // Coefficients.
  if (dirac_w) {
    dirac_prior_draw(model.w_informative, model.shrink_informative,
                     model.var_informative, rng);
  } else {
    model.w_informative = draw_w_informative(model, target, stacked_inf, rng);
  }
  model.contrast = draw_contrast(model, target, rng);
  if (dirac_noninf) {
    dirac_prior_draw(model.w_noninformative, model.shrink_noninformative,
                     model.var_noninformative, rng);
  } else {
    model.w_noninformative =
        draw_w_noninformative(model, stacked_noninf, rng);
  }

  // Variances.
  model.var_target = draw_variance(VarianceBlock::target, model, target,
                                   config.priors.target, rng);
  model.var_informative =
      dirac_w ? dirac_variance_draw(target.rows(), rng)
              : draw_variance(VarianceBlock::informative, model, stacked_inf,
                              config.priors.informative, rng);
  model.var_noninformative =
      dirac_noninf
          ? dirac_variance_draw(target.rows(), rng)
          : draw_variance(VarianceBlock::noninformative, model, stacked_noninf,
                          config.priors.noninformative, rng);

  // Shrinkage sweeps.
  const ShrinkageAdaptState adapt{adapt_iteration > 0, adapt_iteration};
  const auto w_log_lik = [&](const Eigen::VectorXd& w) {
    return -0.5 * (stacked_inf.outcome - stacked_inf.design * w).squaredNorm() /
               model.var_informative -
           0.5 * (target.outcome - target.design * (w + model.contrast))
                     .squaredNorm() /
               model.var_target;
  };
  const auto d_log_lik = [&](const Eigen::VectorXd& d) {
    return -0.5 * (target.outcome -
                   target.design * (model.w_informative + d))
                      .squaredNorm() /
           model.var_target;
  };
  const auto n_log_lik = [&](const Eigen::VectorXd& w) {
    return -0.5 *
           (stacked_noninf.outcome - stacked_noninf.design * w).squaredNorm() /
           model.var_noninformative;
  };
  if (!dirac_w) {
    XiBounds w_bounds;
    if (config.enforce_contrast_sparsity) w_bounds.upper = chain.hs_contrast.xi;
    sweep_block(chain.hs_informative, model.shrink_informative,
                model.w_informative, model.var_informative, w_log_lik,
                w_bounds, adapt, rng);
  }
  XiBounds d_bounds;
  if (config.enforce_contrast_sparsity) d_bounds.lower = chain.hs_informative.xi;
  sweep_block(chain.hs_contrast, model.shrink_contrast, model.contrast,
              model.var_target, d_log_lik, d_bounds, adapt, rng);
  if (!dirac_noninf) {
    sweep_block(chain.hs_noninformative, model.shrink_noninformative,
                model.w_noninformative, model.var_noninformative, n_log_lik,
                {}, adapt, rng);
  }

  // Source study selection step, conditioning on the current shrinkage
  // snapshot, followed by the Robbins-Monro tempering update.
  MarginalContext ctx;
  ctx.shared_variance_prior = config.shared_variance_prior;
  ctx.nu_w = model.shrink_informative.local_scales;
  ctx.nu_delta = model.shrink_contrast.local_scales;
  ctx.nu_noninf = model.shrink_noninformative.local_scales;
  const InclusionSweepResult sweep =
      update_inclusion_sweep(model, grams, ctx, chain.tempering, rng);
  if (chain.tempering.mode == TemperingMode::adaptive) {
    chain.tempering = adapt_kappa(chain.tempering, sweep.flip_rate, iteration);
  }
}

namespace {

struct StorageLayout {
  std::size_t stored = 0;
  Eigen::Index p = 0;
  std::size_t num_studies = 0;
  bool selection = false;
  Eigen::Index blocks() const { return selection ? 3 : 2; }
};

ChainDraws allocate_chain(const StorageLayout& layout) {
  ChainDraws draws;
  draws.beta.resize(layout.stored, layout.p);
  draws.gamma.resize(layout.stored,
                     layout.selection
                         ? static_cast<Eigen::Index>(layout.num_studies)
                         : 0);
  draws.variances.resize(layout.stored, layout.blocks());
  draws.global_shrink.resize(layout.stored, layout.blocks());
  return draws;
}

// Collect the tau^2 = 1/xi trace of the last half of a warm-up phase and
// return the empirical-Bayes scale for the block.
double eb_psi_from_trace(const std::vector<double>& xi_trace,
                         std::size_t sample_size) {
  EmpiricalBayesTrace trace;
  const std::size_t keep = std::max<std::size_t>(1, xi_trace.size() / 2);
  trace.tau_squared_draws.reserve(keep);
  for (std::size_t i = xi_trace.size() - keep; i < xi_trace.size(); ++i) {
    trace.tau_squared_draws.push_back(1.0 / xi_trace[i]);
  }
  trace.sample_size = std::max<std::size_t>(sample_size, 1);
  return empirical_bayes_psi(trace);
}

}  // namespace

PosteriorDraws run_oracle(const Dataset& target,
                          const std::vector<Dataset>& sources,
                          const SamplerConfig& config) {
  config.validate();
  check_problem(target, sources);
  const Eigen::Index p = target.cols();

  const std::set<int>& wanted = config.oracle_informative_ids;
  const std::set<int> available = all_source_ids(sources);
  for (int id : wanted) {
    if (available.count(id) == 0) {
      throw InputError("run_oracle: informative id not among the sources");
    }
  }
  const Dataset stacked_inf = stack_studies(
      sources.empty() ? std::vector<Dataset>{target} : sources, wanted);

  StorageLayout layout{config.iterations / config.thin, p, 0, false};

  PosteriorDraws out;
  out.mode = SamplerMode::oracle;
  out.iterations = config.iterations;
  out.burn_in = config.burn_in;
  out.thin = config.thin;
  out.p = p;
  out.num_studies = 0;
  out.variance_names = {"target", "informative"};
  out.chains.resize(config.chains);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) \
    num_threads(std::max(config.threads, 1)) if (config.chains > 1)
#endif
  for (long long chain_index = 0;
       chain_index < static_cast<long long>(config.chains); ++chain_index) {
    const auto c = static_cast<std::size_t>(chain_index);
    RngStream rng(config.seed, c);
    OracleChainState chain =
        OracleChainState::initial(p, config.initial_step_size);
    ChainDraws draws = allocate_chain(layout);

    if (config.empirical_bayes) {
      std::vector<double> xi_w, xi_d;
      xi_w.reserve(config.empirical_bayes_warmup);
      xi_d.reserve(config.empirical_bayes_warmup);
      for (std::size_t t = 1; t <= config.empirical_bayes_warmup; ++t) {
        Dataset eff = stacked_inf;
        if (eff.rows() == 0 &&
            config.pseudo_data.mode == PseudoDataMode::pseudo_data) {
          eff = make_pseudo_data(PseudoRole::informative, target, target,
                                 config.pseudo_data, rng);
        }
        oracle_step(chain, target, eff, config, t, rng);
        xi_w.push_back(chain.hs_informative.xi);
        xi_d.push_back(chain.hs_contrast.xi);
      }
      const auto n_inf = static_cast<std::size_t>(stacked_inf.rows());
      chain.hs_informative.psi = eb_psi_from_trace(xi_w, n_inf);
      chain.hs_contrast.psi =
          eb_psi_from_trace(xi_d, static_cast<std::size_t>(target.rows()));
    }

    std::size_t stored = 0;
    for (std::size_t t = 1; t <= config.iterations; ++t) {
      Dataset eff = stacked_inf;
      if (eff.rows() == 0 &&
          config.pseudo_data.mode == PseudoDataMode::pseudo_data) {
        eff = make_pseudo_data(PseudoRole::informative, target, target,
                               config.pseudo_data, rng);
      }
      const std::size_t adapt = t <= config.burn_in ? t : 0;
      oracle_step(chain, target, eff, config, adapt, rng);
      if (t % config.thin == 0) {
        draws.beta.row(stored) = compose_beta(chain.model).transpose();
        draws.variances(stored, 0) = chain.model.var_target;
        draws.variances(stored, 1) = chain.model.var_informative;
        draws.global_shrink(stored, 0) = chain.hs_informative.xi;
        draws.global_shrink(stored, 1) = chain.hs_contrast.xi;
        ++stored;
      }
    }
    out.chains[c] = std::move(draws);
  }
  return out;
}

PosteriorDraws run_selection(const Dataset& target,
                             const std::vector<Dataset>& sources,
                             const SamplerConfig& config) {
  config.validate();
  check_problem(target, sources);
  if (sources.empty()) {
    throw InputError("run_selection: needs at least one source study");
  }
  const Eigen::Index p = target.cols();
  const std::size_t num_studies = sources.size();

  // The selection machinery indexes studies 1..K in the order supplied.
  std::vector<Dataset> indexed = sources;
  std::set<int> every_id;
  for (std::size_t k = 0; k < indexed.size(); ++k) {
    indexed[k].study_id = static_cast<int>(k) + 1;
    indexed[k].role = StudyRole::source;
    every_id.insert(static_cast<int>(k) + 1);
  }
  const Dataset all_sources = stack_studies(indexed, every_id);
  const StudyGrams grams = StudyGrams::build(target, indexed);
  const TemperingPolicy tempering = resolve_tempering(config.tempering, p);

  StorageLayout layout{config.iterations / config.thin, p, num_studies, true};

  PosteriorDraws out;
  out.mode = SamplerMode::selection;
  out.iterations = config.iterations;
  out.burn_in = config.burn_in;
  out.thin = config.thin;
  out.p = p;
  out.num_studies = num_studies;
  out.variance_names = {"target", "informative", "noninformative"};
  out.chains.resize(config.chains);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) \
    num_threads(std::max(config.threads, 1)) if (config.chains > 1)
#endif
  for (long long chain_index = 0;
       chain_index < static_cast<long long>(config.chains); ++chain_index) {
    const auto c = static_cast<std::size_t>(chain_index);
    RngStream rng(config.seed, c);
    SelectionChainState chain = SelectionChainState::initial(
        p, num_studies, tempering, config.initial_step_size);
    ChainDraws draws = allocate_chain(layout);

    if (config.empirical_bayes) {
      std::vector<double> xi_w, xi_d, xi_n;
      for (std::size_t t = 1; t <= config.empirical_bayes_warmup; ++t) {
        selection_step(chain, target, indexed, all_sources, grams, config, t,
                       t, rng);
        xi_w.push_back(chain.hs_informative.xi);
        xi_d.push_back(chain.hs_contrast.xi);
        xi_n.push_back(chain.hs_noninformative.xi);
      }
      // With a stochastic informative set the scale is calibrated against
      // the target sample size alone for every block.
      const auto n0 = static_cast<std::size_t>(target.rows());
      chain.hs_informative.psi = eb_psi_from_trace(xi_w, n0);
      chain.hs_contrast.psi = eb_psi_from_trace(xi_d, n0);
      chain.hs_noninformative.psi = eb_psi_from_trace(xi_n, n0);
    }

    std::size_t stored = 0;
    for (std::size_t t = 1; t <= config.iterations; ++t) {
      const std::size_t adapt = t <= config.burn_in ? t : 0;
      selection_step(chain, target, indexed, all_sources, grams, config, t,
                     adapt, rng);
      if (t % config.thin == 0) {
        draws.beta.row(stored) = compose_beta(chain.model).transpose();
        for (std::size_t k = 0; k < num_studies; ++k) {
          draws.gamma(stored, static_cast<Eigen::Index>(k)) =
              static_cast<double>(chain.model.inclusion[k]);
        }
        draws.variances(stored, 0) = chain.model.var_target;
        draws.variances(stored, 1) = chain.model.var_informative;
        draws.variances(stored, 2) = chain.model.var_noninformative;
        draws.global_shrink(stored, 0) = chain.hs_informative.xi;
        draws.global_shrink(stored, 1) = chain.hs_contrast.xi;
        draws.global_shrink(stored, 2) = chain.hs_noninformative.xi;
        ++stored;
      }
    }
    out.chains[c] = std::move(draws);
  }
  return out;
}

PosteriorSummary summarize(const PosteriorDraws& draws, double level) {
  if (!(level > 0.0) || !(level < 1.0)) {
    throw InputError("summarize: level must lie in (0,1)");
  }
  if (draws.chains.empty()) throw InputError("summarize: no chains");
  const std::size_t begin = draws.retained_begin();
  const std::size_t retained_per_chain = draws.retained_per_chain();
  const std::size_t total_retained = retained_per_chain * draws.chains.size();
  if (total_retained < 2) {
    throw InputError("summarize: need at least 2 retained draws");
  }

  PosteriorSummary out;
  out.level = level;
  out.variance_names = draws.variance_names;
  const Eigen::Index p = draws.p;
  out.beta_mean.resize(p);
  out.intervals.resize(p, 2);
  out.ess_beta.resize(p);

  const double lower_q = 0.5 * (1.0 - level);
  const double upper_q = 1.0 - lower_q;

  std::vector<double> pooled(total_retained);
  std::vector<std::vector<double>> per_chain(draws.chains.size());
  bool warned_mean_outside = false;
  for (Eigen::Index j = 0; j < p; ++j) {
    std::size_t idx = 0;
    for (std::size_t c = 0; c < draws.chains.size(); ++c) {
      per_chain[c].resize(retained_per_chain);
      for (std::size_t r = 0; r < retained_per_chain; ++r) {
        const double v = draws.chains[c].beta(begin + r, j);
        per_chain[c][r] = v;
        pooled[idx++] = v;
      }
    }
    const double mean =
        std::accumulate(pooled.begin(), pooled.end(), 0.0) /
        static_cast<double>(pooled.size());
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    const double lo = quantile_sorted(sorted, lower_q);
    const double hi = quantile_sorted(sorted, upper_q);
    out.beta_mean[j] = mean;
    out.intervals(j, 0) = lo;
    out.intervals(j, 1) = hi;
    if ((mean < lo || mean > hi) && !warned_mean_outside) {
      std::fprintf(stderr,
                   "blast: posterior mean outside the %.0f%% interval for "
                   "coordinate %ld (skewed posterior)\n",
                   100.0 * level, static_cast<long>(j));
      warned_mean_outside = true;
    }

    double ess = 0.0;
    for (const auto& chain_vals : per_chain) {
      ess += effective_sample_size(chain_vals);
    }
    out.ess_beta[j] = ess;
  }

  if (draws.chains.size() >= 2) {
    out.split_chain_beta.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      std::vector<std::vector<double>> chains_j(draws.chains.size());
      for (std::size_t c = 0; c < draws.chains.size(); ++c) {
        chains_j[c].resize(retained_per_chain);
        for (std::size_t r = 0; r < retained_per_chain; ++r) {
          chains_j[c][r] = draws.chains[c].beta(begin + r, j);
        }
      }
      out.split_chain_beta[j] = split_chain_ratio(chains_j);
    }
  }

  const Eigen::Index blocks = draws.chains.front().variances.cols();
  out.ess_variances.resize(blocks);
  for (Eigen::Index b = 0; b < blocks; ++b) {
    double ess = 0.0;
    for (const auto& chain : draws.chains) {
      std::vector<double> vals(retained_per_chain);
      for (std::size_t r = 0; r < retained_per_chain; ++r) {
        vals[r] = chain.variances(begin + r, b);
      }
      ess += effective_sample_size(vals);
    }
    out.ess_variances[b] = ess;
  }

  const auto num_studies = static_cast<Eigen::Index>(draws.num_studies);
  out.inclusion_probs = Eigen::VectorXd::Zero(num_studies);
  if (draws.mode == SamplerMode::selection && num_studies > 0) {
    for (Eigen::Index k = 0; k < num_studies; ++k) {
      double total = 0.0;
      for (const auto& chain : draws.chains) {
        total += chain.gamma.col(k)
                     .segment(begin, retained_per_chain)
                     .sum();
      }
      out.inclusion_probs[k] = total / static_cast<double>(total_retained);
    }
  }
  return out;
}

}  // namespace blast
