#pragma once

#include <set>
#include <vector>

#include <Eigen/Dense>

#include "blast/kernels.hpp"
#include "blast/rng.hpp"

namespace blast {

enum class StudyRole { target, source };

/// One study's design matrix and outcome vector. study_id 0 is conventionally
/// the target; all studies in a problem share the same p.
struct Dataset {
  Eigen::MatrixXd design;   // n_k x p
  Eigen::VectorXd outcome;  // n_k
  int study_id = 0;
  StudyRole role = StudyRole::source;

  Eigen::Index rows() const { return design.rows(); }
  Eigen::Index cols() const { return design.cols(); }

  void validate() const;
};

enum class BlockLabel { informative, contrast, noninformative };

/// Local shrinkage scales (nu) for one coefficient block. The diagonal matrix
/// view diag(local_scales) is the per-block prior covariance multiplier.
struct BlockShrinkage {
  Eigen::VectorXd local_scales;  // length p, strictly positive
  BlockLabel label = BlockLabel::informative;
};

/// Full parameter state of the transfer-regression model: the three
/// coefficient blocks, their error variances, the source inclusion vector and
/// the per-block shrinkage scales.
struct ModelState {
  Eigen::VectorXd w_informative;     // w over the informative stack
  Eigen::VectorXd contrast;          // delta; target coefficients = w + delta
  Eigen::VectorXd w_noninformative;  // w over the noninformative stack
  double var_target = 1.0;
  double var_informative = 1.0;
  double var_noninformative = 1.0;
  std::vector<int> inclusion;  // gamma, entries in {0,1}, length K
  BlockShrinkage shrink_informative;
  BlockShrinkage shrink_contrast;
  BlockShrinkage shrink_noninformative;

  /// All-zero coefficients, unit variances and unit shrinkage scales
  /// (the samplers' documented starting point).
  static ModelState initial(Eigen::Index p, std::size_t num_sources);
};

/// Partition of source study ids into informative / noninformative sets.
struct Partition {
  std::set<int> informative_ids;
  std::set<int> noninformative_ids;
};

/// Derive the partition implied by an inclusion vector over studies 1..K.
Partition partition_from_inclusion(const std::vector<int>& inclusion);

/// Row-concatenate the studies whose ids appear in `ids`, in ascending id
/// order. An empty id set yields a 0-row dataset. Throws InputError when the
/// requested ids are missing or the studies disagree on p.
Dataset stack_studies(const std::vector<Dataset>& datasets,
                      const std::set<int>& ids);

struct VariancePrior {
  double shape = 0.5;  // defaults to IG(omega/2, omega/2) with omega = 1
  double scale = 0.5;
};

/// Conditional draw of the informative-block coefficients given everything
/// else. Both the informative stack and the target contribute; the two data
/// blocks are whitened by their own noise scales before forming the joint
/// Gaussian system. Zero-row stacks are legal and reduce toward the prior.
Eigen::VectorXd draw_w_informative(const ModelState& state,
                                   const Dataset& target,
                                   const Dataset& stacked_inf, RngStream& rng);

/// Conditional draw of the contrast block; the working response is the
/// target residual y0 - X0 w.
Eigen::VectorXd draw_contrast(const ModelState& state, const Dataset& target,
                              RngStream& rng);

/// Conditional draw of the noninformative-block coefficients; only the
/// noninformative stack contributes. A 0-row stack gives a prior draw.
Eigen::VectorXd draw_w_noninformative(const ModelState& state,
                                      const Dataset& stacked_noninf,
                                      RngStream& rng);

enum class VarianceBlock { target, informative, noninformative };

/// Inverse-Gamma conditional draw for the named block's error variance:
/// shape = prior.shape + (n + p)/2,
/// scale = prior.scale + (residual sum of squares + coef' D^{-1} coef)/2.
double draw_variance(VarianceBlock block, const ModelState& state,
                     const Dataset& data, const VariancePrior& prior,
                     RngStream& rng);

/// Target coefficients beta = w + delta.
Eigen::VectorXd compose_beta(const ModelState& state);

}  // namespace blast
