#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "blast/errors.hpp"
#include "blast/horseshoe.hpp"
#include "blast/stats.hpp"
#include "support/oracles.hpp"

using blast::GaussianSpec;
using blast::HorseshoeBlockState;
using blast::RngStream;
using blast::XiBounds;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Run the local-scale slice chain at a fixed rate c (beta^2 xi / (2 sigma2)).
std::vector<double> eta_chain(double c, std::size_t draws, std::uint64_t seed) {
  RngStream rng(seed, 0);
  const double beta = std::sqrt(2.0 * c);
  std::vector<double> out;
  out.reserve(draws);
  double eta = 1.0;
  for (std::size_t burn = 0; burn < 2000; ++burn) {
    eta = blast::draw_eta_local(beta, 1.0, 1.0, eta, rng);
  }
  for (std::size_t i = 0; i < draws; ++i) {
    eta = blast::draw_eta_local(beta, 1.0, 1.0, eta, rng);
    out.push_back(eta);
  }
  return out;
}

// The tiny fixed problem used for the global-precision chain checks.
GaussianSpec tiny_xi_problem() {
  GaussianSpec data;
  data.design.resize(2, 1);
  data.design << 0.7, -0.4;
  data.response.resize(2);
  data.response << 1.2, 0.5;
  data.prior_scale_diag = VectorXd::Ones(1);
  data.noise_scale = 1.0;
  return data;
}

}  // namespace

TEST_CASE("slice chain concentrates near zero for a huge rate") {
  const auto draws = eta_chain(1000.0, 100000, 7);
  double sum = 0.0;
  for (double v : draws) {
    CHECK(v > 0.0);
    CHECK(std::isfinite(v));
    sum += v;
  }
  CHECK(sum / draws.size() < 0.005);
}

TEST_CASE("slice chain mean matches the quadrature oracle at c = 1") {
  const auto draws = eta_chain(1.0, 1000000, 11);
  const oracles::EtaDensity density(1.0);
  const double expected = density.mean();
  double sum = 0.0;
  for (double v : draws) sum += v;
  const double mean = sum / draws.size();
  const double se = oracles::batch_means_se(draws);
  CHECK(std::abs(mean - expected) < 3.0 * se);
}

TEST_CASE("slice chain quantiles match quadrature-inverted quantiles") {
  // Checked in CDF space: the empirical CDF at the quadrature quantile must
  // sit within Monte Carlo error of the target level.
  for (double c : {0.1, 1.0, 10.0, 100.0}) {
    const auto draws = eta_chain(c, 200000, 13 + static_cast<int>(c * 10));
    const oracles::EtaDensity density(c);
    for (double level : {0.1, 0.5, 0.9}) {
      const double q = density.quantile(level);
      std::vector<double> indicator(draws.size());
      for (std::size_t i = 0; i < draws.size(); ++i) {
        indicator[i] = draws[i] <= q ? 1.0 : 0.0;
      }
      double hit = 0.0;
      for (double v : indicator) hit += v;
      const double fraction = hit / indicator.size();
      const double se = oracles::batch_means_se(indicator);
      CHECK(std::abs(fraction - level) < 3.5 * se);
    }
  }
}

TEST_CASE("degenerate rate keeps the slice kernel proper") {
  RngStream rng(17, 0);
  double eta = 1.0;
  for (int i = 0; i < 1000; ++i) {
    eta = blast::draw_eta_local(0.0, 1.0, 1.0, eta, rng);
    CHECK(eta > 0.0);
    CHECK(std::isfinite(eta));
  }
}

TEST_CASE("xi log density: zero design leaves only the prior term varying") {
  GaussianSpec data;
  data.design = MatrixXd::Zero(3, 2);
  data.response.resize(3);
  data.response << 1.0, -0.5, 0.25;
  data.prior_scale_diag = VectorXd::Ones(2);
  const VectorXd etas = VectorXd::Constant(2, 0.7);
  const double psi = 1.3;
  const auto prior_term = [&](double xi) {
    return -0.5 * std::log(xi / psi) - std::log1p(xi * psi * psi);
  };
  const double g1 = blast::xi_log_density(0.5, etas, psi, data, 1.0);
  const double g2 = blast::xi_log_density(4.0, etas, psi, data, 1.0);
  CHECK(g1 - g2 ==
        doctest::Approx(prior_term(0.5) - prior_term(4.0)).epsilon(1e-12));
}

TEST_CASE("xi log density integrates consistently across quadrature routes") {
  const GaussianSpec data = tiny_xi_problem();
  const VectorXd etas = VectorXd::Constant(1, 0.9);
  const auto log_density = [&](double xi) {
    return blast::xi_log_density(xi, etas, 1.0, data, 1.0);
  };
  // Route 1: adaptive Simpson on the log scale.
  const double z1 = oracles::integrate(
      [&](double t) { return std::exp(log_density(std::exp(t)) + t); }, -30.0,
      30.0, 1e-10);
  // Route 2: fixed-grid Simpson sum.
  double z2 = 0.0;
  {
    const int cells = 20000;
    const double lo = -30.0, hi = 30.0, dt = (hi - lo) / cells;
    const auto g = [&](double t) {
      return std::exp(log_density(std::exp(t)) + t);
    };
    for (int i = 0; i < cells; ++i) {
      const double t0 = lo + i * dt;
      z2 += dt / 6.0 * (g(t0) + 4.0 * g(t0 + 0.5 * dt) + g(t0 + dt));
    }
  }
  CHECK(z1 == doctest::Approx(z2).epsilon(0.005));
  const oracles::PositiveDensityCdf cdf(log_density, -30.0, 30.0);
  CHECK(cdf(1e14) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("xi log density tail goes to minus infinity") {
  const GaussianSpec data = tiny_xi_problem();
  const VectorXd etas = VectorXd::Constant(1, 0.9);
  const double mid = blast::xi_log_density(1.0, etas, 1.0, data, 1.0);
  const double far = blast::xi_log_density(1e12, etas, 1.0, data, 1.0);
  CHECK(far < mid - 20.0);
}

TEST_CASE("vanishing step size proposes the current state and accepts") {
  HorseshoeBlockState state = HorseshoeBlockState::initial(1);
  state.etas[0] = 0.9;
  state.xi = 2.5;
  state.step_size = 1e-300;
  RngStream rng(19, 0);
  const bool accepted = blast::xi_mh_step(state, tiny_xi_problem(), 1.0, rng);
  CHECK(accepted);
  CHECK(state.xi == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("xi chain matches the quadrature-normalized density (smoke)") {
  const GaussianSpec data = tiny_xi_problem();
  HorseshoeBlockState state = HorseshoeBlockState::initial(1);
  state.etas[0] = 0.9;
  state.step_size = 2.0;
  RngStream rng(23, 0);
  for (int burn = 0; burn < 5000; ++burn) {
    blast::xi_mh_step(state, data, 1.0, rng);
  }
  std::vector<double> draws;
  draws.reserve(30000);
  for (int i = 0; i < 30000; ++i) {
    blast::xi_mh_step(state, data, 1.0, rng);
    draws.push_back(state.xi);
  }
  const VectorXd etas = state.etas;
  const oracles::PositiveDensityCdf cdf(
      [&](double xi) { return blast::xi_log_density(xi, etas, 1.0, data, 1.0); },
      -30.0, 30.0);
  CHECK(oracles::ks_statistic(draws, cdf) < 0.05);
}

TEST_CASE("truncated chain never drops below the bound") {
  const GaussianSpec data = tiny_xi_problem();
  HorseshoeBlockState state = HorseshoeBlockState::initial(1);
  state.etas[0] = 0.9;
  state.xi = 3.0;
  state.step_size = 1.5;
  RngStream rng(29, 0);
  const double bound = 2.0;
  for (int i = 0; i < 20000; ++i) {
    blast::xi_mh_step(state, data, 1.0, rng, bound);
    CHECK(state.xi >= bound);
  }
}

TEST_CASE("detailed balance holds for the truncated log-normal walk") {
  const GaussianSpec data = tiny_xi_problem();
  const VectorXd etas = VectorXd::Constant(1, 0.9);
  const auto log_target = [&](double xi) {
    return blast::xi_log_density(xi, etas, 1.0, data, 1.0);
  };
  const double step = 1.1;

  for (const auto bounds :
       {XiBounds{}, XiBounds{0.5, std::nullopt}, XiBounds{0.5, 40.0}}) {
    // Log proposal density matching xi_proposal_draw.
    const auto log_q = [&](double from, double to) {
      const double z = (std::log(to) - std::log(from)) / step;
      double mass = 1.0;
      if (bounds.upper) {
        mass = blast::normal_cdf((std::log(*bounds.upper) - std::log(from)) /
                                 step);
      }
      if (bounds.lower) {
        mass -= blast::normal_cdf((std::log(*bounds.lower) - std::log(from)) /
                                  step);
      }
      return -0.5 * z * z - std::log(step * to) - std::log(mass) -
             0.5 * std::log(2.0 * M_PI);
    };

    RngStream rng(31, 0);
    double x = 1.7;
    for (int i = 0; i < 500; ++i) {
      const double y = blast::xi_proposal_draw(x, step, bounds, rng);
      const double forward =
          blast::xi_mh_log_acceptance(x, y, log_target, step, bounds) +
          log_target(x) + log_q(x, y);
      const double backward =
          blast::xi_mh_log_acceptance(y, x, log_target, step, bounds) +
          log_target(y) + log_q(y, x);
      CHECK(forward == doctest::Approx(backward).epsilon(1e-10));
      if (i % 3 == 0) x = y;  // wander around the support
    }
  }
}

TEST_CASE("conditional-density xi step targets its stated density") {
  // Histogram check against quadrature for the conditional (given
  // coefficients) target used inside the block sweeps.
  const VectorXd etas = (VectorXd(3) << 0.5, 1.0, 2.0).finished();
  const VectorXd coeffs = (VectorXd(3) << 0.4, -0.1, 0.05).finished();
  const double sigma2 = 0.8;
  HorseshoeBlockState state = HorseshoeBlockState::initial(3);
  state.etas = etas;
  state.step_size = 1.6;
  RngStream rng(37, 0);
  for (int burn = 0; burn < 5000; ++burn) {
    blast::xi_mh_step_given_coefficients(state, coeffs, sigma2, rng);
  }
  std::vector<double> draws;
  draws.reserve(40000);
  for (int i = 0; i < 40000; ++i) {
    blast::xi_mh_step_given_coefficients(state, coeffs, sigma2, rng);
    draws.push_back(state.xi);
  }
  const oracles::PositiveDensityCdf cdf(
      [&](double xi) {
        return blast::xi_conditional_log_density(xi, etas, coeffs, sigma2, 1.0);
      },
      -30.0, 30.0);
  CHECK(oracles::ks_statistic(draws, cdf) < 0.05);
}

TEST_CASE("horseshoe sweep keeps the local-scale coupling exact") {
  HorseshoeBlockState state = HorseshoeBlockState::initial(4);
  blast::BlockShrinkage shrink{VectorXd::Ones(4),
                               blast::BlockLabel::informative};
  const VectorXd coeffs = (VectorXd(4) << 0.3, 0.0, -1.2, 0.01).finished();
  RngStream rng(41, 0);
  for (int i = 0; i < 200; ++i) {
    blast::horseshoe_sweep(state, shrink, coeffs, 1.3, rng);
    for (int j = 0; j < 4; ++j) {
      CHECK(shrink.local_scales[j] ==
            doctest::Approx(1.0 / (state.xi * state.etas[j])).epsilon(1e-14));
    }
  }
}

TEST_CASE("step size adaptation") {
  CHECK(blast::step_size_adapt(0.8, 0.23, 5) == doctest::Approx(0.8));
  CHECK(blast::step_size_adapt(1.0, 1.0, 1) ==
        doctest::Approx(std::exp(0.77)).epsilon(1e-12));
  CHECK(blast::step_size_adapt(9.9, 1.0, 1) == 10.0);  // clamp
  CHECK(blast::step_size_adapt(1e-3, 0.0, 1) == doctest::Approx(1e-3));
  CHECK_THROWS_AS(blast::step_size_adapt(1.0, 0.5, 0), blast::InputError);
}

TEST_CASE("empirical Bayes scale: analytic single-point case") {
  for (double t0 : {0.25, 1.0, 3.7}) {
    blast::EmpiricalBayesTrace trace;
    trace.tau_squared_draws.assign(8, t0 * t0);
    trace.sample_size = 1;
    CHECK(blast::empirical_bayes_psi(trace) ==
          doctest::Approx(t0).epsilon(1e-4));
  }
}

TEST_CASE("empirical Bayes scale: duplication invariance") {
  std::mt19937_64 gen(5);
  blast::EmpiricalBayesTrace trace;
  trace.sample_size = 50;
  for (int i = 0; i < 100; ++i) {
    const double t = oracles::half_cauchy(0.2, gen);
    trace.tau_squared_draws.push_back(t * t);
  }
  const double psi1 = blast::empirical_bayes_psi(trace);
  blast::EmpiricalBayesTrace doubled = trace;
  doubled.tau_squared_draws.insert(doubled.tau_squared_draws.end(),
                                   trace.tau_squared_draws.begin(),
                                   trace.tau_squared_draws.end());
  CHECK(blast::empirical_bayes_psi(doubled) ==
        doctest::Approx(psi1).epsilon(1e-8));
}

TEST_CASE("empirical Bayes scale agrees with an exhaustive grid search") {
  std::mt19937_64 gen(9);
  blast::EmpiricalBayesTrace trace;
  trace.sample_size = 40;
  for (int i = 0; i < 500; ++i) {
    const double t = oracles::half_cauchy(0.15, gen);
    trace.tau_squared_draws.push_back(t * t);
  }
  const double psi_hat = blast::empirical_bayes_psi(trace);

  const double sqrt_n = std::sqrt(40.0);
  double best = -1e300, best_psi0 = 0.0;
  for (double psi0 = -20.0; psi0 <= 20.0; psi0 += 1e-4) {
    const double s = std::exp(psi0) / sqrt_n;
    double total = 0.0;
    for (double t2 : trace.tau_squared_draws) {
      total += std::log(s) - std::log(s * s + t2);
    }
    if (total > best) {
      best = total;
      best_psi0 = psi0;
    }
  }
  CHECK(psi_hat ==
        doctest::Approx(std::exp(best_psi0) / sqrt_n).epsilon(1e-3));
  blast::EmpiricalBayesTrace empty;
  CHECK_THROWS_AS(blast::empirical_bayes_psi(empty), blast::InputError);
}
