#include "blast/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "blast/errors.hpp"

namespace blast {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

void check_prior(const VariancePrior& prior, const char* where) {
  if (!(prior.shape > 0.0) || !(prior.scale > 0.0)) {
    throw InputError(std::string(where) + ": variance prior must be positive");
  }
}

void check_scales(const Eigen::VectorXd& nu, const char* where) {
  if (!nu.allFinite() || (nu.array() <= 0.0).any()) {
    throw InputError(std::string(where) + ": shrinkage scales must be positive and finite");
  }
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < llt.matrixLLT().rows(); ++i) {
    out += 2.0 * std::log(llt.matrixLLT()(i, i));
  }
  return out;
}

// Core collapsed marginal of one block from sufficient statistics:
// log integral of N(y; Xw, s2 I) N(w; 0, s2 D) * (s2)^{-(shape+1)} e^{-scale/s2}
// [times scale^shape/Gamma(shape) when normalized].
double collapsed_block_log_marginal(const GramSystem& sys,
                                    const Eigen::VectorXd& nu, double shape,
                                    double scale, bool normalized,
                                    const char* where) {
  check_scales(nu, where);
  const double n = static_cast<double>(sys.n);

  Eigen::MatrixXd q_mat = sys.gram;
  q_mat.diagonal() += nu.cwiseInverse();
  Eigen::LLT<Eigen::MatrixXd> llt(q_mat);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(where) + ": ridge system factorization failed");
  }
  const double quad =
      std::max(sys.yy - sys.cross.dot(llt.solve(sys.cross)), 0.0);

  double out = -0.5 * n * kLogTwoPi - 0.5 * nu.array().log().sum() -
               0.5 * log_det_from_llt(llt) + std::lgamma(shape + 0.5 * n) -
               (shape + 0.5 * n) * std::log(scale + 0.5 * quad);
  if (normalized) {
    out += shape * std::log(scale) - std::lgamma(shape);
  }
  return out;
}

}  // namespace

void TemperingPolicy::validate() const {
  if (!(kappa > 0.0)) throw InputError("TemperingPolicy: kappa must be positive");
  if (!(target_rate > 0.0) || !(target_rate < 1.0)) {
    throw InputError("TemperingPolicy: target rate must lie in (0,1)");
  }
  if (!(gain > 0.0)) throw InputError("TemperingPolicy: gain must be positive");
  if (!(bounds.first > 0.0) || !(bounds.second >= bounds.first)) {
    throw InputError("TemperingPolicy: bounds must be positive and ordered");
  }
  if (kappa < bounds.first || kappa > bounds.second) {
    throw InputError("TemperingPolicy: kappa must lie within bounds");
  }
}

GramSystem GramSystem::from_dataset(const Dataset& data) {
  GramSystem sys;
  sys.gram = data.design.transpose() * data.design;
  sys.cross = data.design.transpose() * data.outcome;
  sys.yy = data.outcome.squaredNorm();
  sys.n = data.rows();
  return sys;
}

GramSystem GramSystem::zero(Eigen::Index p) {
  return {Eigen::MatrixXd::Zero(p, p), Eigen::VectorXd::Zero(p), 0.0, 0};
}

GramSystem& GramSystem::operator+=(const GramSystem& other) {
  gram += other.gram;
  cross += other.cross;
  yy += other.yy;
  n += other.n;
  return *this;
}

StudyGrams StudyGrams::build(const Dataset& target,
                             const std::vector<Dataset>& sources) {
  StudyGrams grams;
  grams.target = GramSystem::from_dataset(target);
  grams.sources.reserve(sources.size());
  for (const auto& s : sources) {
    if (s.cols() != target.cols()) {
      throw InputError("StudyGrams: sources disagree with target on p");
    }
    grams.sources.push_back(GramSystem::from_dataset(s));
  }
  return grams;
}

double noninformative_log_marginal(const GramSystem& stacked,
                                   const Eigen::VectorXd& nu,
                                   const VariancePrior& prior) {
  check_prior(prior, "noninformative_log_marginal");
  if (stacked.n == 0) return 0.0;  // empty blocks contribute neutrally
  return collapsed_block_log_marginal(stacked, nu, prior.shape, prior.scale,
                                      /*normalized=*/true,
                                      "noninformative_log_marginal");
}

double marginal_log_lik_noninformative(const Dataset& stacked,
                                       const BlockShrinkage& d,
                                       const VariancePrior& prior) {
  if (stacked.rows() == 0) return 0.0;
  stacked.validate();
  if (d.local_scales.size() != stacked.cols()) {
    throw InputError("marginal_log_lik_noninformative: scale length mismatch");
  }
  return noninformative_log_marginal(GramSystem::from_dataset(stacked),
                                     d.local_scales, prior);
}

double marginal_log_lik_noninformative_unnormalized(const Dataset& stacked,
                                                    const BlockShrinkage& d) {
  const Eigen::Index p = d.local_scales.size();
  const Eigen::Index n = stacked.rows();
  if (n + p <= 1) {
    throw InputError(
        "marginal_log_lik_noninformative_unnormalized: Gamma argument would be"
        " non-positive (n + p <= 1)");
  }
  GramSystem sys =
      n == 0 ? GramSystem::zero(p) : GramSystem::from_dataset(stacked);
  return collapsed_block_log_marginal(
      sys, d.local_scales, 0.5 * (static_cast<double>(p) - 1.0), 0.5,
      /*normalized=*/false, "marginal_log_lik_noninformative_unnormalized");
}

double target_informative_log_marginal(const GramSystem& target,
                                       const GramSystem& informative,
                                       const Eigen::VectorXd& nu_w,
                                       const Eigen::VectorXd& nu_delta,
                                       const VariancePrior& prior) {
  check_prior(prior, "target_informative_log_marginal");
  check_scales(nu_w, "target_informative_log_marginal (w block)");
  check_scales(nu_delta, "target_informative_log_marginal (contrast block)");
  if (target.n == 0) {
    throw InputError("target_informative_log_marginal: target must be non-empty");
  }

  const double n_star = static_cast<double>(target.n + informative.n);

  // Joint precision over (w, delta) after integrating the shared variance:
  //   [ Q_A  C ]      Q_A = X_A'X_A + X_0'X_0 + D_A^{-1}
  //   [ C    R ]      C   = X_0'X_0,  R = X_0'X_0 + D_0^{-1}
  Eigen::MatrixXd q_a = informative.gram + target.gram;
  q_a.diagonal() += nu_w.cwiseInverse();
  Eigen::LLT<Eigen::MatrixXd> llt_qa(q_a);
  if (llt_qa.info() != Eigen::Success) {
    throw NumericalError(
        "target_informative_log_marginal: w-block system factorization failed");
  }

  const Eigen::MatrixXd& c = target.gram;
  Eigen::MatrixXd schur = target.gram - c * llt_qa.solve(c);
  schur.diagonal() += nu_delta.cwiseInverse();
  Eigen::LLT<Eigen::MatrixXd> llt_schur(schur);
  if (llt_schur.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "target_informative_log_marginal: contrast Schur complement is "
           "numerically indefinite (diagonal range ["
        << schur.diagonal().minCoeff() << ", " << schur.diagonal().maxCoeff()
        << "])";
    throw NumericalError(msg.str());
  }

  const Eigen::VectorXd t_w = informative.cross + target.cross;
  const Eigen::VectorXd& t_delta = target.cross;
  const Eigen::VectorXd v =
      llt_schur.solve(t_delta - c * llt_qa.solve(t_w));
  const Eigen::VectorXd u = llt_qa.solve(t_w - c * v);
  const double quad = std::max(
      target.yy + informative.yy - (t_w.dot(u) + t_delta.dot(v)), 0.0);

  return -0.5 * n_star * kLogTwoPi - 0.5 * nu_w.array().log().sum() -
         0.5 * nu_delta.array().log().sum() - 0.5 * log_det_from_llt(llt_qa) -
         0.5 * log_det_from_llt(llt_schur) +
         prior.shape * std::log(prior.scale) - std::lgamma(prior.shape) +
         std::lgamma(prior.shape + 0.5 * n_star) -
         (prior.shape + 0.5 * n_star) * std::log(prior.scale + 0.5 * quad);
}

double marginal_log_lik_target_informative(const Dataset& target,
                                           const Dataset& stacked_inf,
                                           const BlockShrinkage& d_informative,
                                           const BlockShrinkage& d_contrast,
                                           const MarginalContext& ctx) {
  target.validate();
  if (target.rows() == 0) {
    throw InputError("marginal_log_lik_target_informative: target must be non-empty");
  }
  GramSystem inf_sys = stacked_inf.rows() == 0
                           ? GramSystem::zero(target.cols())
                           : GramSystem::from_dataset(stacked_inf);
  return target_informative_log_marginal(
      GramSystem::from_dataset(target), inf_sys, d_informative.local_scales,
      d_contrast.local_scales, ctx.shared_variance_prior);
}

double inclusion_probability(double log_incl, double log_excl, double kappa) {
  if (!(kappa > 0.0)) throw InputError("inclusion_probability: kappa must be positive");
  const double a = kappa * log_incl;
  const double b = kappa * log_excl;
  const double m = std::max(a, b);
  const double num = std::exp(a - m);
  return num / (num + std::exp(b - m));
}

InclusionSweepResult update_inclusion_sweep(
    ModelState& state, const StudyGrams& grams, const MarginalContext& ctx,
    const TemperingPolicy& policy, RngStream& rng,
    const std::vector<double>* prior_inclusion) {
  policy.validate();
  const std::size_t num_studies = grams.sources.size();
  if (state.inclusion.size() != num_studies) {
    throw InputError("update_inclusion_sweep: inclusion length does not match sources");
  }
  if (prior_inclusion != nullptr && prior_inclusion->size() != num_studies) {
    throw InputError("update_inclusion_sweep: prior length does not match sources");
  }

  const Eigen::Index p = grams.target.gram.rows();

  InclusionSweepResult result;
  result.probabilities = Eigen::VectorXd::Zero(num_studies);
  std::size_t flips = 0;

  // Score one hypothetical configuration: both marginal components with the
  // k'th study forced to the requested side.
  const auto config_log_marginal = [&](std::size_t k, int gamma_k) {
    GramSystem informative = GramSystem::zero(p);
    GramSystem noninformative = GramSystem::zero(p);
    for (std::size_t j = 0; j < num_studies; ++j) {
      const int g = (j == k) ? gamma_k : state.inclusion[j];
      if (g != 0) {
        informative += grams.sources[j];
      } else {
        noninformative += grams.sources[j];
      }
    }
    const double ti = target_informative_log_marginal(
        grams.target, informative, ctx.nu_w, ctx.nu_delta,
        ctx.shared_variance_prior);
    const double ni =
        noninformative.n == 0
            ? 0.0
            : noninformative_log_marginal(noninformative, ctx.nu_noninf,
                                          ctx.shared_variance_prior);
    return ti + ni;
  };

  for (std::size_t k = 0; k < num_studies; ++k) {
    const double prior_k =
        prior_inclusion != nullptr ? (*prior_inclusion)[k] : 0.5;
    if (!(prior_k > 0.0) || !(prior_k < 1.0)) {
      throw InputError("update_inclusion_sweep: prior probabilities must lie in (0,1)");
    }
    const double log_incl = config_log_marginal(k, 1) + std::log(prior_k);
    const double log_excl = config_log_marginal(k, 0) + std::log1p(-prior_k);

    double prob;
    if (!std::isfinite(log_incl) && !std::isfinite(log_excl)) {
      std::fprintf(stderr,
                   "blast: degenerate inclusion weights for study %zu; "
                   "resampling from the prior\n",
                   k + 1);
      prob = prior_k;
    } else {
      prob = inclusion_probability(log_incl, log_excl, policy.kappa);
    }
    result.probabilities[static_cast<Eigen::Index>(k)] = prob;

    const int old_value = state.inclusion[k];
    const int new_value = rng.uniform() < prob ? 1 : 0;
    state.inclusion[k] = new_value;
    if (new_value != old_value) ++flips;
  }

  result.inclusion = state.inclusion;
  result.flip_rate =
      num_studies == 0 ? 0.0
                       : static_cast<double>(flips) /
                             static_cast<double>(num_studies);
  return result;
}

TemperingPolicy adapt_kappa(const TemperingPolicy& policy,
                            double accepted_rate, std::size_t iteration) {
  if (iteration < 1) throw InputError("adapt_kappa: iteration must be >= 1");
  TemperingPolicy next = policy;
  const double gain_i =
      policy.gain / std::sqrt(static_cast<double>(iteration));
  next.kappa = std::clamp(policy.kappa +
                              gain_i * (accepted_rate - policy.target_rate),
                          policy.bounds.first, policy.bounds.second);
  return next;
}

Dataset make_pseudo_data(PseudoRole role, const Dataset& target,
                         const Dataset& all_sources,
                         const PseudoDataPolicy& policy, RngStream& rng) {
  if (!(policy.fraction > 0.0) || policy.fraction > 1.0) {
    throw InputError("make_pseudo_data: fraction must lie in (0,1]");
  }
  const Dataset& base =
      role == PseudoRole::informative ? target : all_sources;
  const Eigen::Index n = base.rows();
  if (n == 0) {
    throw InputError("make_pseudo_data: base dataset is empty");
  }

  const auto count = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(
             std::ceil(policy.fraction * static_cast<double>(n))));

  // Partial Fisher-Yates: the first `count` slots form a uniform
  // without-replacement subset.
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.uniform_index(
                           static_cast<std::size_t>(n - i)));
    std::swap(order[i], order[j]);
  }

  Dataset pseudo;
  pseudo.design.resize(count, base.cols());
  pseudo.outcome.resize(count);
  pseudo.study_id = base.study_id;
  pseudo.role = base.role;
  for (Eigen::Index i = 0; i < count; ++i) {
    pseudo.design.row(i) = base.design.row(order[i]);
    pseudo.outcome[i] = base.outcome[order[i]];
  }

  if (role == PseudoRole::noninformative) {
    // Shuffle only the outcome entries; the multiset of outcomes is kept.
    for (Eigen::Index i = count - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(
          rng.uniform_index(static_cast<std::size_t>(i + 1)));
      std::swap(pseudo.outcome[i], pseudo.outcome[j]);
    }
  }
  return pseudo;
}

}  // namespace blast
