#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "blast/driver.hpp"
#include "blast/errors.hpp"
#include "blast/simbench.hpp"
#include "support/geweke.hpp"

using blast::Dataset;
using blast::PosteriorDraws;
using blast::RngStream;
using blast::SamplerConfig;
using blast::SamplerMode;
using blast::StudyRole;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Dataset gaussian_study(const VectorXd& coeffs, int n, double noise_sd, int id,
                       std::uint64_t seed,
                       StudyRole role = StudyRole::source) {
  RngStream rng(seed, 0);
  Dataset d;
  const auto p = coeffs.size();
  d.design.resize(n, p);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) d.design(i, j) = rng.normal();
  }
  d.outcome = d.design * coeffs;
  for (int i = 0; i < n; ++i) d.outcome[i] += noise_sd * rng.normal();
  d.study_id = id;
  d.role = role;
  return d;
}

bool draws_equal(const PosteriorDraws& a, const PosteriorDraws& b) {
  if (a.chains.size() != b.chains.size()) return false;
  for (std::size_t c = 0; c < a.chains.size(); ++c) {
    if (a.chains[c].beta != b.chains[c].beta) return false;
    if (a.chains[c].gamma != b.chains[c].gamma) return false;
    if (a.chains[c].variances != b.chains[c].variances) return false;
    if (a.chains[c].global_shrink != b.chains[c].global_shrink) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("oracle run stores every iteration and retains past burn-in") {
  VectorXd beta = VectorXd::Zero(3);
  beta[0] = 0.5;
  const Dataset target = gaussian_study(beta, 20, 1.0, 0, 1, StudyRole::target);
  const Dataset source = gaussian_study(beta, 15, 1.0, 1, 2);

  SamplerConfig cfg;
  cfg.iterations = 3000;
  cfg.burn_in = 1000;
  cfg.oracle_informative_ids = {1};
  cfg.seed = 11;
  const PosteriorDraws draws = blast::run_oracle(target, {source}, cfg);
  CHECK(draws.stored_per_chain() == 3000);
  CHECK(draws.retained_per_chain() == 2000);
  CHECK(draws.chains.front().beta.rows() == 3000);
  CHECK(draws.chains.front().variances.cols() == 2);
}

TEST_CASE("identical seeds give bit-identical posterior draws") {
  VectorXd beta = VectorXd::Zero(4);
  beta.head(2).setConstant(0.6);
  const Dataset target = gaussian_study(beta, 25, 1.0, 0, 3, StudyRole::target);
  const Dataset source = gaussian_study(beta, 20, 1.0, 1, 4);

  SamplerConfig cfg;
  cfg.iterations = 400;
  cfg.burn_in = 100;
  cfg.oracle_informative_ids = {1};
  cfg.seed = 77;
  const PosteriorDraws a = blast::run_oracle(target, {source}, cfg);
  const PosteriorDraws b = blast::run_oracle(target, {source}, cfg);
  CHECK(draws_equal(a, b));

  cfg.mode = SamplerMode::selection;
  const PosteriorDraws c = blast::run_selection(target, {source}, cfg);
  const PosteriorDraws d = blast::run_selection(target, {source}, cfg);
  CHECK(draws_equal(c, d));
}

TEST_CASE("well-specified oracle run recovers the truth") {
  const Eigen::Index p = 10;
  VectorXd beta = VectorXd::Zero(p);
  beta[0] = 0.5;
  beta[1] = 0.5;
  const Dataset target =
      gaussian_study(beta, 200, 1.0, 0, 5, StudyRole::target);
  const Dataset source = gaussian_study(beta, 200, 1.0, 1, 6);  // delta = 0

  SamplerConfig cfg;
  cfg.iterations = 2000;
  cfg.burn_in = 500;
  cfg.oracle_informative_ids = {1};
  cfg.seed = 13;
  const PosteriorDraws draws = blast::run_oracle(target, {source}, cfg);
  const blast::PosteriorSummary summary = blast::summarize(draws, 0.95);
  for (Eigen::Index j = 0; j < p; ++j) {
    CHECK(std::abs(summary.beta_mean[j] - beta[j]) < 0.1);
  }
}

TEST_CASE("selection identifies a source generated from the target") {
  const Eigen::Index p = 20;
  VectorXd beta = VectorXd::Zero(p);
  beta.head(3).setConstant(0.5);
  const Dataset target =
      gaussian_study(beta, 100, 1.0, 0, 7, StudyRole::target);
  const Dataset source = gaussian_study(beta, 100, 1.0, 1, 8);

  SamplerConfig cfg;
  cfg.mode = SamplerMode::selection;
  cfg.iterations = 1200;
  cfg.burn_in = 400;
  cfg.seed = 17;
  // Tempering suited to this problem's log-marginal scale (tens of nats).
  cfg.tempering.kappa = 0.1;
  const PosteriorDraws draws = blast::run_selection(target, {source}, cfg);
  const blast::PosteriorSummary summary = blast::summarize(draws, 0.95);
  CHECK(summary.inclusion_probs[0] > 0.5);
}

TEST_CASE("selection chain initialization matches the documented start") {
  blast::TemperingPolicy policy;
  const auto chain = blast::SelectionChainState::initial(3, 4, policy);
  CHECK(chain.model.inclusion == std::vector<int>{1, 1, 1, 1});
  CHECK(chain.model.w_informative.isZero());
  CHECK(chain.model.contrast.isZero());
  CHECK(chain.model.var_target == 1.0);
  CHECK(chain.hs_informative.xi == 1.0);
  CHECK(chain.model.shrink_contrast.local_scales ==
        Eigen::VectorXd::Ones(3));
}

TEST_CASE("selection requires at least one source") {
  VectorXd beta = VectorXd::Zero(2);
  const Dataset target = gaussian_study(beta, 10, 1.0, 0, 9, StudyRole::target);
  SamplerConfig cfg;
  cfg.mode = SamplerMode::selection;
  cfg.iterations = 10;
  cfg.burn_in = 1;
  CHECK_THROWS_AS(blast::run_selection(target, {}, cfg), blast::InputError);
}

TEST_CASE("oracle with an empty informative set runs target-only") {
  VectorXd beta = VectorXd::Zero(3);
  beta[0] = 0.8;
  const Dataset target =
      gaussian_study(beta, 60, 1.0, 0, 10, StudyRole::target);
  const Dataset junk = gaussian_study(VectorXd::Constant(3, 5.0), 40, 1.0, 1, 11);

  SamplerConfig cfg;
  cfg.iterations = 600;
  cfg.burn_in = 200;
  cfg.oracle_informative_ids = {};
  cfg.pseudo_data.mode = blast::PseudoDataMode::prior_draw;
  cfg.seed = 21;
  const PosteriorDraws with_junk = blast::run_oracle(target, {junk}, cfg);

  // The junk source must not influence the fit at all.
  const Dataset other_junk =
      gaussian_study(VectorXd::Constant(3, -9.0), 40, 1.0, 1, 12);
  const PosteriorDraws with_other = blast::run_oracle(target, {other_junk}, cfg);
  CHECK(draws_equal(with_junk, with_other));

  const blast::PosteriorSummary summary = blast::summarize(with_junk, 0.95);
  CHECK(std::abs(summary.beta_mean[0] - 0.8) < 0.15);
}

TEST_CASE("sparsity ordering keeps the contrast precision above the w block") {
  VectorXd beta = VectorXd::Zero(4);
  beta[0] = 0.5;
  const Dataset target =
      gaussian_study(beta, 40, 1.0, 0, 23, StudyRole::target);
  const Dataset source = gaussian_study(beta, 40, 1.0, 1, 24);

  SamplerConfig cfg;
  cfg.iterations = 800;
  cfg.burn_in = 300;
  cfg.oracle_informative_ids = {1};
  cfg.enforce_contrast_sparsity = true;
  cfg.seed = 29;
  const PosteriorDraws draws = blast::run_oracle(target, {source}, cfg);
  const auto& shrink = draws.chains.front().global_shrink;
  for (Eigen::Index r = 0; r < shrink.rows(); ++r) {
    CHECK(shrink(r, 1) >= shrink(r, 0));  // xi_delta >= xi_w
  }

  cfg.mode = SamplerMode::selection;
  const PosteriorDraws sel = blast::run_selection(target, {source}, cfg);
  const auto& shrink_sel = sel.chains.front().global_shrink;
  for (Eigen::Index r = 0; r < shrink_sel.rows(); ++r) {
    CHECK(shrink_sel(r, 1) >= shrink_sel(r, 0));
  }
}

TEST_CASE("summarize handles degenerate and exact quantile cases") {
  PosteriorDraws draws;
  draws.mode = SamplerMode::oracle;
  draws.iterations = 100;
  draws.burn_in = 0;
  draws.thin = 1;
  draws.p = 2;
  draws.num_studies = 0;
  draws.variance_names = {"target", "informative"};
  blast::ChainDraws chain;
  chain.beta.resize(100, 2);
  for (int i = 0; i < 100; ++i) {
    chain.beta(i, 0) = 4.25;                        // constant draws
    chain.beta(i, 1) = static_cast<double>(i + 1);  // sorted grid 1..100
  }
  chain.variances = Eigen::MatrixXd::Ones(100, 2);
  chain.global_shrink = Eigen::MatrixXd::Ones(100, 2);
  chain.gamma.resize(100, 0);
  draws.chains.push_back(chain);

  const blast::PosteriorSummary summary = blast::summarize(draws, 0.95);
  CHECK(summary.intervals(0, 0) == 4.25);
  CHECK(summary.intervals(0, 1) == 4.25);
  // Linear-interpolation quantiles: h = 99 * 0.025 = 2.475 -> 3.475, and
  // h = 99 * 0.975 = 96.525 -> 97.525.
  CHECK(summary.intervals(1, 0) == doctest::Approx(3.475).epsilon(1e-12));
  CHECK(summary.intervals(1, 1) == doctest::Approx(97.525).epsilon(1e-12));

  CHECK_THROWS_AS(blast::summarize(draws, 1.0), blast::InputError);
  CHECK_THROWS_AS(blast::summarize(draws, 0.0), blast::InputError);

  PosteriorDraws too_short = draws;
  too_short.iterations = 1;
  too_short.chains.front().beta.conservativeResize(1, 2);
  too_short.chains.front().variances.conservativeResize(1, 2);
  too_short.chains.front().global_shrink.conservativeResize(1, 2);
  CHECK_THROWS_AS(blast::summarize(too_short, 0.95), blast::InputError);
}

TEST_CASE("all-ones gamma column gives inclusion probability one") {
  PosteriorDraws draws;
  draws.mode = SamplerMode::selection;
  draws.iterations = 50;
  draws.burn_in = 10;
  draws.thin = 1;
  draws.p = 1;
  draws.num_studies = 2;
  draws.variance_names = {"target", "informative", "noninformative"};
  blast::ChainDraws chain;
  chain.beta = Eigen::MatrixXd::Zero(50, 1);
  chain.gamma.resize(50, 2);
  chain.gamma.col(0).setOnes();
  for (int i = 0; i < 50; ++i) chain.gamma(i, 1) = i % 2;
  chain.variances = Eigen::MatrixXd::Ones(50, 3);
  chain.global_shrink = Eigen::MatrixXd::Ones(50, 3);
  draws.chains.push_back(chain);
  const blast::PosteriorSummary summary = blast::summarize(draws, 0.9);
  CHECK(summary.inclusion_probs[0] == 1.0);
  CHECK(summary.inclusion_probs[1] == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("multiple chains pool retained draws and report split ratios") {
  VectorXd beta = VectorXd::Zero(2);
  const Dataset target = gaussian_study(beta, 30, 1.0, 0, 31, StudyRole::target);
  const Dataset source = gaussian_study(beta, 30, 1.0, 1, 32);
  SamplerConfig cfg;
  cfg.iterations = 400;
  cfg.burn_in = 100;
  cfg.oracle_informative_ids = {1};
  cfg.chains = 2;
  cfg.seed = 37;
  const PosteriorDraws draws = blast::run_oracle(target, {source}, cfg);
  CHECK(draws.chains.size() == 2);
  CHECK_FALSE(draws_equal(draws, [&] {
                PosteriorDraws copy = draws;
                copy.chains[1] = copy.chains[0];
                return copy;
              }()));
  const blast::PosteriorSummary summary = blast::summarize(draws, 0.95);
  CHECK(summary.split_chain_beta.size() == 2);
  for (Eigen::Index j = 0; j < 2; ++j) {
    CHECK(summary.split_chain_beta[j] < 1.2);  // well-mixed tiny problem
  }
}

TEST_CASE("chain-parallel runs match the serial reference") {
  VectorXd beta = VectorXd::Zero(3);
  beta[0] = 0.4;
  const Dataset target = gaussian_study(beta, 30, 1.0, 0, 51, StudyRole::target);
  const Dataset source = gaussian_study(beta, 25, 1.0, 1, 52);
  SamplerConfig cfg;
  cfg.iterations = 300;
  cfg.burn_in = 100;
  cfg.oracle_informative_ids = {1};
  cfg.chains = 3;
  cfg.seed = 53;
  cfg.threads = 1;
  const PosteriorDraws serial = blast::run_oracle(target, {source}, cfg);
  cfg.threads = 3;
  const PosteriorDraws parallel = blast::run_oracle(target, {source}, cfg);
  CHECK(draws_equal(serial, parallel));
}

TEST_CASE("thinning stores every k'th iteration") {
  VectorXd beta = VectorXd::Zero(2);
  const Dataset target = gaussian_study(beta, 20, 1.0, 0, 61, StudyRole::target);
  const Dataset source = gaussian_study(beta, 20, 1.0, 1, 62);
  SamplerConfig cfg;
  cfg.iterations = 300;
  cfg.burn_in = 90;
  cfg.thin = 3;
  cfg.oracle_informative_ids = {1};
  cfg.seed = 63;
  const PosteriorDraws draws = blast::run_oracle(target, {source}, cfg);
  CHECK(draws.stored_per_chain() == 100);
  CHECK(draws.retained_begin() == 30);
  CHECK(draws.retained_per_chain() == 70);
  CHECK(draws.chains.front().beta.rows() == 100);
}

TEST_CASE("config validation") {
  SamplerConfig cfg;
  cfg.iterations = 100;
  cfg.burn_in = 100;
  CHECK_THROWS_AS(cfg.validate(), blast::InputError);
  cfg.burn_in = 10;
  cfg.thin = 0;
  CHECK_THROWS_AS(cfg.validate(), blast::InputError);
  cfg.thin = 1;
  cfg.chains = 0;
  CHECK_THROWS_AS(cfg.validate(), blast::InputError);
}

TEST_CASE("successive-conditional calibration stays near the prior (smoke)") {
  const auto chain = geweke::run_chain(20000, 7101);
  const auto prior = geweke::run_prior(1000000, 7102);
  const std::vector<double> levels{0.1, 0.25, 0.5, 0.75, 0.9};
  CHECK(geweke::max_quantile_discrepancy_se(chain.sigma2_target,
                                            prior.sigma2_target, levels) < 4.0);
  CHECK(geweke::max_quantile_discrepancy_se(chain.beta_first,
                                            prior.beta_first, levels) < 4.0);
}
