#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "blast/kernels.hpp"
#include "blast/model.hpp"
#include "blast/rng.hpp"

namespace blast {

/// Horseshoe shrinkage state for one coefficient block, in precision
/// parameterization: eta_j = 1/lambda_j^2 (local), xi = 1/tau^2 (global).
/// The owning block's local_scales are kept equal to 1/(xi * eta_j) after
/// every sweep.
struct HorseshoeBlockState {
  Eigen::VectorXd etas;   // length p, strictly positive
  double xi = 1.0;        // global precision
  double psi = 1.0;       // half-Cauchy scale hyperparameter
  double step_size = 0.8; // log-scale random-walk sd for the xi update

  static HorseshoeBlockState initial(Eigen::Index p, double step_size = 0.8) {
    return {Eigen::VectorXd::Ones(p), 1.0, 1.0, step_size};
  }
};

/// One slice-sampling transition for a local scale, leaving
///   p(eta | xi, beta_j, sigma^2)  proportional to  exp(-c eta) / (1 + eta),
///   c = beta_j^2 xi / (2 sigma^2),
/// invariant. beta_j = 0 is handled by flooring c at 1e-12 (the density would
/// otherwise be improper). Starts from eta_current; output is strictly
/// positive and finite.
double draw_eta_local(double beta_j, double xi, double sigma2,
                      double eta_current, RngStream& rng);

/// Log of the unnormalized collapsed density of the global precision for a
/// single-block regression (coefficients and error variance integrated out):
///   -1/2 log|M| - (N+omega)/2 log(omega/2 + y'M^{-1}y / 2)
///   - 1/2 log(xi/psi) - log(1 + xi psi^2),
/// with M = I_N + xi^{-1} X Lambda X' and Lambda = diag(1/eta_j). Only the
/// design and response of `data` enter. Computed via an N x N factorization.
double xi_log_density(double xi, const Eigen::VectorXd& etas, double psi,
                      const GaussianSpec& data, double omega);

/// Log of the unnormalized conditional density of the global precision given
/// the block's current coefficients and variance:
///   (p/2) log xi - xi sum_j eta_j coef_j^2 / (2 sigma^2)
///   - 1/2 log(xi/psi) - log(1 + xi psi^2).
/// This is the exact full conditional used inside the multi-block samplers.
double xi_conditional_log_density(double xi, const Eigen::VectorXd& etas,
                                  const Eigen::VectorXd& coeffs, double sigma2,
                                  double psi);

/// Optional support restriction for the xi random walk (both ends optional).
struct XiBounds {
  std::optional<double> lower;
  std::optional<double> upper;
};

/// Log acceptance probability of a log-scale random-walk move, including the
/// Jacobian factor xi*/xi and, when bounds are set, the truncated-normal
/// proposal normalization ratio. Exposed for detailed-balance checks.
double xi_mh_log_acceptance(double xi_current, double xi_proposed,
                            const std::function<double(double)>& log_target,
                            double step, const XiBounds& bounds);

/// Draw a proposal from the (possibly truncated) log-normal random walk.
double xi_proposal_draw(double xi, double step, const XiBounds& bounds,
                        RngStream& rng);

/// Generic Metropolis-Hastings move for xi against an arbitrary log target;
/// returns whether the proposal was accepted.
bool xi_mh_update(double& xi, double step,
                  const std::function<double(double)>& log_target,
                  const XiBounds& bounds, RngStream& rng);

/// Metropolis step targeting xi_log_density (the collapsed single-block
/// density). When lower_bound is set, proposals are drawn from the normal
/// truncated to [log(lower_bound), inf). Mutates state.xi.
bool xi_mh_step(HorseshoeBlockState& state, const GaussianSpec& data,
                double omega, RngStream& rng,
                std::optional<double> lower_bound = std::nullopt);

/// Metropolis step targeting xi_conditional_log_density. Mutates state.xi.
bool xi_mh_step_given_coefficients(HorseshoeBlockState& state,
                                   const Eigen::VectorXd& coeffs,
                                   double sigma2, RngStream& rng,
                                   const XiBounds& bounds = {});

/// Joint rescaling move on (coefficients, xi): propose c from a log-normal
/// walk and map (w, xi) -> (w/sqrt(c), c xi), which keeps the Gaussian prior
/// exponent invariant and slides the state along the shrinkage funnel. The
/// acceptance ratio needs only the block's log likelihood in the
/// coefficients plus the xi prior and the map's volume factor. Out-of-bounds
/// proposals are rejected. Mutates coeffs and state.xi on acceptance.
bool xi_coefficient_rescale(
    HorseshoeBlockState& state, Eigen::VectorXd& coeffs,
    const std::function<double(const Eigen::VectorXd&)>& log_lik, double step,
    RngStream& rng, const XiBounds& bounds = {});

/// Full shrinkage sweep for one block: slice updates for every eta_j, the
/// global xi Metropolis step, then the local-scale coupling
/// local_scales = 1/(xi eta). Returns the xi acceptance flag.
bool horseshoe_sweep(HorseshoeBlockState& state, BlockShrinkage& shrink,
                     const Eigen::VectorXd& coeffs, double sigma2,
                     RngStream& rng, const XiBounds& bounds = {});

/// Multiplicative burn-in adaptation of the random-walk step size toward a
/// 23% acceptance rate: step * exp((rate - 0.23)/sqrt(iteration)), clamped
/// to [1e-3, 10].
double step_size_adapt(double step_size, double accepted_rate,
                       std::size_t iteration);

/// tau^2 draws collected over B warm-up iterations plus the sample size the
/// half-Cauchy scale is calibrated against.
struct EmpiricalBayesTrace {
  std::vector<double> tau_squared_draws;
  std::size_t sample_size = 1;
};

/// Empirical-Bayes estimate of the half-Cauchy scale: psi = exp(psi0)/sqrt(n)
/// where psi0 maximizes the summed log half-Cauchy density of the tau draws,
/// searched over psi0 in [-20, 20] to tolerance 1e-6.
double empirical_bayes_psi(const EmpiricalBayesTrace& trace);

}  // namespace blast
