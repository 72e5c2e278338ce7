#include "blast/horseshoe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blast/errors.hpp"
#include "blast/stats.hpp"

namespace blast {

namespace {

constexpr double kEtaRateFloor = 1e-12;

double require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw InputError(std::string(what) + " must be positive and finite");
  }
  return x;
}

}  // namespace

double draw_eta_local(double beta_j, double xi, double sigma2,
                      double eta_current, RngStream& rng) {
  if (!std::isfinite(beta_j)) throw InputError("draw_eta_local: beta must be finite");
  require_positive(xi, "draw_eta_local: xi");
  require_positive(sigma2, "draw_eta_local: sigma2");
  require_positive(eta_current, "draw_eta_local: current eta");

  // Target density is proportional to exp(-c eta) / (1 + eta). A beta of
  // exactly zero would make it improper, so the rate is floored.
  const double c = std::max(beta_j * beta_j * xi / (2.0 * sigma2), kEtaRateFloor);

  // Slice step: u | eta ~ U(0, 1/(1+eta)), then eta | u ~ Exp(c) truncated
  // to (0, (1-u)/u).
  const double u = rng.uniform() / (1.0 + eta_current);
  const double bound = (1.0 - u) / u;
  const double cb = c * bound;
  double eta;
  if (cb > 700.0) {
    // Truncation bound is far in the tail of Exp(c); draw untruncated.
    eta = -std::log1p(-rng.uniform()) / c;
    if (eta >= bound) eta = 0.5 * bound;
  } else {
    const double mass = -std::expm1(-cb);  // 1 - exp(-c*bound)
    eta = -std::log1p(-rng.uniform() * mass) / c;
  }
  if (!(eta > 0.0)) eta = std::numeric_limits<double>::min();
  return eta;
}

double xi_log_density(double xi, const Eigen::VectorXd& etas, double psi,
                      const GaussianSpec& data, double omega) {
  require_positive(xi, "xi_log_density: xi");
  require_positive(psi, "xi_log_density: psi");
  require_positive(omega, "xi_log_density: omega");
  if (!etas.allFinite() || (etas.array() <= 0.0).any()) {
    throw InputError("xi_log_density: etas must be positive and finite");
  }
  if (data.design.rows() != data.response.size() ||
      data.design.cols() != etas.size()) {
    throw InputError("xi_log_density: context dimensions do not match etas");
  }

  const Eigen::Index n = data.design.rows();
  const Eigen::VectorXd lambda_diag = (xi * etas.array()).inverse();
  Eigen::MatrixXd m =
      data.design * lambda_diag.asDiagonal() * data.design.transpose();
  m.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("xi_log_density: data-space matrix factorization failed");
  }
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
  }
  const double quad = data.response.dot(llt.solve(data.response));

  return -0.5 * log_det -
         0.5 * (static_cast<double>(n) + omega) *
             std::log(0.5 * omega + 0.5 * quad) -
         0.5 * std::log(xi / psi) - std::log1p(xi * psi * psi);
}

double xi_conditional_log_density(double xi, const Eigen::VectorXd& etas,
                                  const Eigen::VectorXd& coeffs, double sigma2,
                                  double psi) {
  require_positive(xi, "xi_conditional_log_density: xi");
  require_positive(psi, "xi_conditional_log_density: psi");
  require_positive(sigma2, "xi_conditional_log_density: sigma2");
  const double s = (etas.array() * coeffs.array().square()).sum();
  const double p = static_cast<double>(coeffs.size());
  return 0.5 * p * std::log(xi) - xi * s / (2.0 * sigma2) -
         0.5 * std::log(xi / psi) - std::log1p(xi * psi * psi);
}

namespace {

// Probability mass the log-scale proposal centered at log(xi) assigns to
// [log lower, log upper].
double proposal_mass(double xi, double step, const XiBounds& bounds) {
  double mass = 1.0;
  if (bounds.upper) {
    mass = normal_cdf((std::log(*bounds.upper) - std::log(xi)) / step);
  }
  if (bounds.lower) {
    mass -= normal_cdf((std::log(*bounds.lower) - std::log(xi)) / step);
  }
  return mass;
}

double truncated_standard_normal(double a, double b, RngStream& rng) {
  if (a > -b) {
    // Mirror so the interval sits in the lower tail where the CDF is accurate.
    return -truncated_standard_normal(-b, -a, rng);
  }
  const double pa = normal_cdf(a);
  const double pb = normal_cdf(b);
  const double p = pa + rng.uniform() * (pb - pa);
  return normal_quantile(std::min(std::max(p, 1e-300), 1.0 - 1e-16));
}

}  // namespace

double xi_proposal_draw(double xi, double step, const XiBounds& bounds,
                        RngStream& rng) {
  double a = -std::numeric_limits<double>::infinity();
  double b = std::numeric_limits<double>::infinity();
  if (bounds.lower) a = (std::log(*bounds.lower) - std::log(xi)) / step;
  if (bounds.upper) b = (std::log(*bounds.upper) - std::log(xi)) / step;
  double z;
  if (bounds.lower || bounds.upper) {
    z = truncated_standard_normal(a, b, rng);
  } else {
    z = rng.normal();
  }
  return xi * std::exp(step * z);
}

double xi_mh_log_acceptance(double xi_current, double xi_proposed,
                            const std::function<double(double)>& log_target,
                            double step, const XiBounds& bounds) {
  if (bounds.lower && xi_current < *bounds.lower) return 0.0;  // always accept
  if (bounds.upper && xi_current > *bounds.upper) return 0.0;
  double log_alpha = log_target(xi_proposed) - log_target(xi_current) +
                     std::log(xi_proposed) - std::log(xi_current);
  if (bounds.lower || bounds.upper) {
    log_alpha += std::log(proposal_mass(xi_current, step, bounds)) -
                 std::log(proposal_mass(xi_proposed, step, bounds));
  }
  return std::min(log_alpha, 0.0);
}

bool xi_mh_update(double& xi, double step,
                  const std::function<double(double)>& log_target,
                  const XiBounds& bounds, RngStream& rng) {
  require_positive(step, "xi_mh_update: step size");
  const double proposal = xi_proposal_draw(xi, step, bounds, rng);
  const double log_alpha =
      xi_mh_log_acceptance(xi, proposal, log_target, step, bounds);
  if (std::log(rng.uniform()) < log_alpha) {
    xi = proposal;
    return true;
  }
  return false;
}

bool xi_mh_step(HorseshoeBlockState& state, const GaussianSpec& data,
                double omega, RngStream& rng,
                std::optional<double> lower_bound) {
  XiBounds bounds;
  bounds.lower = lower_bound;
  const auto target = [&](double xi) {
    return xi_log_density(xi, state.etas, state.psi, data, omega);
  };
  return xi_mh_update(state.xi, state.step_size, target, bounds, rng);
}

bool xi_mh_step_given_coefficients(HorseshoeBlockState& state,
                                   const Eigen::VectorXd& coeffs,
                                   double sigma2, RngStream& rng,
                                   const XiBounds& bounds) {
  const auto target = [&](double xi) {
    return xi_conditional_log_density(xi, state.etas, coeffs, sigma2,
                                      state.psi);
  };
  return xi_mh_update(state.xi, state.step_size, target, bounds, rng);
}

bool xi_coefficient_rescale(
    HorseshoeBlockState& state, Eigen::VectorXd& coeffs,
    const std::function<double(const Eigen::VectorXd&)>& log_lik, double step,
    RngStream& rng, const XiBounds& bounds) {
  require_positive(step, "xi_coefficient_rescale: step size");
  const double c = std::exp(step * rng.normal());
  const double xi_new = state.xi * c;
  if (bounds.lower && xi_new < *bounds.lower) return false;
  if (bounds.upper && xi_new > *bounds.upper) return false;

  const Eigen::VectorXd coeffs_new = coeffs / std::sqrt(c);
  const auto log_prior = [&](double xi) {
    return -0.5 * std::log(xi / state.psi) -
           std::log1p(xi * state.psi * state.psi);
  };
  // The prior exponent and the local scales are invariant under the map;
  // what remains is the likelihood ratio, the xi prior ratio and the
  // volume factor c (Jacobian c^{1-p/2} times the prior normalization
  // c^{p/2}).
  const double log_alpha = log_lik(coeffs_new) - log_lik(coeffs) +
                           std::log(c) + log_prior(xi_new) -
                           log_prior(state.xi);
  if (std::log(rng.uniform()) < log_alpha) {
    state.xi = xi_new;
    coeffs = coeffs_new;
    return true;
  }
  return false;
}

bool horseshoe_sweep(HorseshoeBlockState& state, BlockShrinkage& shrink,
                     const Eigen::VectorXd& coeffs, double sigma2,
                     RngStream& rng, const XiBounds& bounds) {
  if (coeffs.size() != state.etas.size()) {
    throw InputError("horseshoe_sweep: coefficient/eta length mismatch");
  }
  for (Eigen::Index j = 0; j < coeffs.size(); ++j) {
    state.etas[j] =
        draw_eta_local(coeffs[j], state.xi, sigma2, state.etas[j], rng);
  }
  const bool accepted =
      xi_mh_step_given_coefficients(state, coeffs, sigma2, rng, bounds);
  shrink.local_scales = (state.xi * state.etas.array()).inverse();
  return accepted;
}

double step_size_adapt(double step_size, double accepted_rate,
                       std::size_t iteration) {
  if (iteration < 1) throw InputError("step_size_adapt: iteration must be >= 1");
  const double next =
      step_size * std::exp((accepted_rate - 0.23) /
                           std::sqrt(static_cast<double>(iteration)));
  return std::clamp(next, 1e-3, 10.0);
}

double empirical_bayes_psi(const EmpiricalBayesTrace& trace) {
  if (trace.tau_squared_draws.empty()) {
    throw InputError("empirical_bayes_psi: empty trace");
  }
  if (trace.sample_size < 1) {
    throw InputError("empirical_bayes_psi: sample size must be positive");
  }
  std::vector<double> tau(trace.tau_squared_draws.size());
  for (std::size_t j = 0; j < tau.size(); ++j) {
    const double t2 = trace.tau_squared_draws[j];
    if (!(t2 > 0.0) || !std::isfinite(t2)) {
      throw InputError("empirical_bayes_psi: tau^2 draws must be positive");
    }
    tau[j] = std::sqrt(t2);
  }
  const double sqrt_n = std::sqrt(static_cast<double>(trace.sample_size));

  // Summed log half-Cauchy density of the tau draws under scale
  // s = exp(psi0)/sqrt(n); f(tau; s) = 2s / (pi (s^2 + tau^2)).
  const auto objective = [&](double psi0) {
    const double s = std::exp(psi0) / sqrt_n;
    double total = 0.0;
    for (double t : tau) total += std::log(s) - std::log(s * s + t * t);
    return total;
  };

  // Golden-section maximization; the objective has a monotone derivative in
  // psi0, so it is unimodal on the search interval.
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = -20.0, hi = 20.0;
  double x1 = hi - golden * (hi - lo);
  double x2 = lo + golden * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (hi - lo > 1e-6) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + golden * (hi - lo);
      f2 = objective(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - golden * (hi - lo);
      f1 = objective(x1);
    }
  }
  const double psi0_hat = 0.5 * (lo + hi);
  return std::exp(psi0_hat) / sqrt_n;
}

}  // namespace blast
