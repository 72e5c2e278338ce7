#include "blast/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "blast/errors.hpp"

namespace blast {

namespace {

// Factor the n x n data-space matrix M = I + X P X'. On breakdown retry once
// with a jittered diagonal and log a warning to stderr.
Eigen::LLT<Eigen::MatrixXd> factor_data_space(Eigen::MatrixXd m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  std::fprintf(stderr,
               "blast: data-space factorization failed; retrying with 1e-10 "
               "diagonal regularization\n");
  m.diagonal().array() += 1e-10;
  llt.compute(m);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "fast_gaussian_draw: M factorization failed even after "
           "regularization (n="
        << m.rows() << ", diagonal range [" << m.diagonal().minCoeff() << ", "
        << m.diagonal().maxCoeff() << "])";
    throw NumericalError(msg.str());
  }
  return llt;
}

}  // namespace

void GaussianSpec::validate() const {
  if (cols() < 1) throw InputError("GaussianSpec: p must be at least 1");
  if (rows() != response.size()) {
    throw InputError("GaussianSpec: design rows must equal response length");
  }
  if (prior_scale_diag.size() != cols()) {
    throw InputError("GaussianSpec: prior scale length must equal design columns");
  }
  if (!design.allFinite() || !response.allFinite()) {
    throw InputError("GaussianSpec: non-finite matrix or response entries");
  }
  if (!prior_scale_diag.allFinite() || (prior_scale_diag.array() <= 0.0).any()) {
    throw InputError("GaussianSpec: prior scale entries must be positive and finite");
  }
  if (!(noise_scale > 0.0) || !std::isfinite(noise_scale)) {
    throw InputError("GaussianSpec: noise scale must be positive and finite");
  }
}

Eigen::VectorXd fast_gaussian_draw_with(const GaussianSpec& spec,
                                        const Eigen::VectorXd& u_std,
                                        const Eigen::VectorXd& f_std) {
  spec.validate();
  const Eigen::Index n = spec.rows();
  const Eigen::Index p = spec.cols();
  if (n < 1) throw InputError("fast_gaussian_draw: needs at least one row");
  if (u_std.size() != p || f_std.size() != n) {
    throw InputError("fast_gaussian_draw: driver vector lengths do not match");
  }

  const Eigen::VectorXd u = spec.prior_scale_diag.array().sqrt() * u_std.array();
  const Eigen::VectorXd v = spec.design * u + f_std;

  Eigen::MatrixXd m = spec.design * spec.prior_scale_diag.asDiagonal() *
                      spec.design.transpose();
  m.diagonal().array() += 1.0;
  const auto llt = factor_data_space(std::move(m));

  const Eigen::VectorXd rhs = spec.response / spec.noise_scale - v;
  const Eigen::VectorXd v_star = llt.solve(rhs);
  const Eigen::VectorXd correction =
      spec.prior_scale_diag.array() *
      (spec.design.transpose() * v_star).array();
  return spec.noise_scale * (u + correction);
}

Eigen::VectorXd fast_gaussian_draw(const GaussianSpec& spec, RngStream& rng) {
  Eigen::VectorXd u_std(spec.cols());
  for (Eigen::Index j = 0; j < u_std.size(); ++j) u_std[j] = rng.normal();
  Eigen::VectorXd f_std(spec.rows());
  for (Eigen::Index i = 0; i < f_std.size(); ++i) f_std[i] = rng.normal();
  return fast_gaussian_draw_with(spec, u_std, f_std);
}

Eigen::VectorXd direct_gaussian_draw_with(const GaussianSpec& spec,
                                          const Eigen::VectorXd& z_std) {
  spec.validate();
  const Eigen::Index p = spec.cols();
  if (z_std.size() != p) {
    throw InputError("direct_gaussian_draw: driver vector length must equal p");
  }

  Eigen::MatrixXd q = spec.design.transpose() * spec.design;
  q.diagonal() += spec.prior_scale_diag.cwiseInverse();
  Eigen::LLT<Eigen::MatrixXd> llt(q);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(
        "direct_gaussian_draw: posterior precision is not positive definite");
  }
  const Eigen::VectorXd mean =
      llt.solve(spec.design.transpose() * spec.response);
  // Draw = mean + sigma * L^{-T} z with Q = L L'.
  const Eigen::VectorXd noise =
      llt.matrixU().solve(z_std);
  return mean + spec.noise_scale * noise;
}

Eigen::VectorXd direct_gaussian_draw(const GaussianSpec& spec, RngStream& rng) {
  Eigen::VectorXd z_std(spec.cols());
  for (Eigen::Index j = 0; j < z_std.size(); ++j) z_std[j] = rng.normal();
  return direct_gaussian_draw_with(spec, z_std);
}

double draw_inverse_gamma(double shape, double scale, RngStream& rng) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw InputError("draw_inverse_gamma: shape must be positive");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InputError("draw_inverse_gamma: scale must be positive");
  }
  // If G ~ Gamma(shape, rate = scale) then 1/G ~ IG(shape, scale).
  return scale / rng.gamma(shape);
}

}  // namespace blast
