#pragma once

#include <Eigen/Dense>

#include "blast/rng.hpp"

namespace blast {

/// One structured Gaussian sampling problem: draw from
///   N( (X'X + P^{-1})^{-1} X'y,  sigma^2 (X'X + P^{-1})^{-1} )
/// where P = diag(prior_scale_diag) holds the per-coefficient prior variance
/// multipliers and sigma is the noise scale.
struct GaussianSpec {
  Eigen::MatrixXd design;            // n x p
  Eigen::VectorXd prior_scale_diag;  // length p, strictly positive and finite
  Eigen::VectorXd response;          // length n
  double noise_scale = 1.0;          // sigma > 0

  Eigen::Index rows() const { return design.rows(); }
  Eigen::Index cols() const { return design.cols(); }

  /// Throws InputError on dimension mismatch or non-finite/non-positive entries.
  void validate() const;
};

/// Structured draw working in the n-dimensional data space: cost O(n^2 p)
/// plus one n x n factorization, never a p x p factorization. Prefer this
/// path when p > n.
Eigen::VectorXd fast_gaussian_draw(const GaussianSpec& spec, RngStream& rng);

/// Same draw with injected standard-normal driver vectors (u_std length p,
/// f_std length n), making the path deterministic for exact-value tests.
Eigen::VectorXd fast_gaussian_draw_with(const GaussianSpec& spec,
                                        const Eigen::VectorXd& u_std,
                                        const Eigen::VectorXd& f_std);

/// Dense p x p reference path sampling from the identical distribution.
Eigen::VectorXd direct_gaussian_draw(const GaussianSpec& spec, RngStream& rng);

/// Dense path with an injected standard-normal driver vector (length p).
Eigen::VectorXd direct_gaussian_draw_with(const GaussianSpec& spec,
                                          const Eigen::VectorXd& z_std);

/// Inverse-Gamma(shape, scale) draw under the convention with density
/// proportional to x^{-(shape+1)} exp(-scale/x), so mean = scale/(shape-1)
/// for shape > 1.
double draw_inverse_gamma(double shape, double scale, RngStream& rng);

}  // namespace blast
