#include "blast/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "blast/errors.hpp"

namespace blast {

void Dataset::validate() const {
  if (cols() < 1) throw InputError("Dataset: p must be at least 1");
  if (rows() != outcome.size()) {
    throw InputError("Dataset: design rows must equal outcome length");
  }
  if (study_id < 0) throw InputError("Dataset: study id must be non-negative");
  if (!design.allFinite() || !outcome.allFinite()) {
    std::ostringstream msg;
    msg << "Dataset: study " << study_id << " contains non-finite entries";
    throw InputError(msg.str());
  }
}

ModelState ModelState::initial(Eigen::Index p, std::size_t num_sources) {
  if (p < 1) throw InputError("ModelState: p must be at least 1");
  ModelState s;
  s.w_informative = Eigen::VectorXd::Zero(p);
  s.contrast = Eigen::VectorXd::Zero(p);
  s.w_noninformative = Eigen::VectorXd::Zero(p);
  s.inclusion.assign(num_sources, 1);
  s.shrink_informative = {Eigen::VectorXd::Ones(p), BlockLabel::informative};
  s.shrink_contrast = {Eigen::VectorXd::Ones(p), BlockLabel::contrast};
  s.shrink_noninformative = {Eigen::VectorXd::Ones(p),
                             BlockLabel::noninformative};
  return s;
}

Partition partition_from_inclusion(const std::vector<int>& inclusion) {
  Partition part;
  for (std::size_t k = 0; k < inclusion.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (inclusion[k] != 0) {
      part.informative_ids.insert(id);
    } else {
      part.noninformative_ids.insert(id);
    }
  }
  return part;
}

Dataset stack_studies(const std::vector<Dataset>& datasets,
                      const std::set<int>& ids) {
  if (datasets.empty()) {
    throw InputError("stack_studies: no datasets supplied");
  }
  const Eigen::Index p = datasets.front().cols();
  for (const auto& d : datasets) {
    if (d.cols() != p) {
      throw InputError("stack_studies: studies disagree on the number of predictors");
    }
  }

  std::vector<const Dataset*> picked;
  for (int id : ids) {
    const Dataset* found = nullptr;
    for (const auto& d : datasets) {
      if (d.study_id == id) {
        found = &d;
        break;
      }
    }
    if (found == nullptr) {
      std::ostringstream msg;
      msg << "stack_studies: study id " << id << " not present";
      throw InputError(msg.str());
    }
    picked.push_back(found);
  }
  std::sort(picked.begin(), picked.end(),
            [](const Dataset* a, const Dataset* b) {
              return a->study_id < b->study_id;
            });

  Eigen::Index total = 0;
  for (const auto* d : picked) total += d->rows();

  Dataset out;
  out.design.resize(total, p);
  out.outcome.resize(total);
  out.study_id = picked.empty() ? 0 : picked.front()->study_id;
  out.role = StudyRole::source;
  Eigen::Index row = 0;
  for (const auto* d : picked) {
    out.design.middleRows(row, d->rows()) = d->design;
    out.outcome.segment(row, d->rows()) = d->outcome;
    row += d->rows();
  }
  return out;
}

namespace {

void check_coefficient_state(const Eigen::VectorXd& coeffs,
                             const Eigen::VectorXd& scales, double variance,
                             const char* where) {
  if (!coeffs.allFinite()) {
    throw InputError(std::string(where) + ": non-finite coefficient state");
  }
  if (!scales.allFinite() || (scales.array() <= 0.0).any()) {
    throw InputError(std::string(where) + ": local scales must be positive and finite");
  }
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw InputError(std::string(where) + ": variance must be positive and finite");
  }
}

/// Draw from N((X'X + P^{-1})^{-1} X'y, (X'X + P^{-1})^{-1}) on an already
/// whitened system (unit noise). Picks the data-space path when p > n;
/// 0-row systems reduce to the prior N(0, P).
Eigen::VectorXd whitened_draw(const Eigen::MatrixXd& design,
                              const Eigen::VectorXd& response,
                              const Eigen::VectorXd& prior_diag,
                              RngStream& rng) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (n == 0) {
    Eigen::VectorXd draw(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      draw[j] = std::sqrt(prior_diag[j]) * rng.normal();
    }
    return draw;
  }
  GaussianSpec spec{design, prior_diag, response, 1.0};
  if (p > n) return fast_gaussian_draw(spec, rng);
  return direct_gaussian_draw(spec, rng);
}

}  // namespace

Eigen::VectorXd draw_w_informative(const ModelState& state,
                                   const Dataset& target,
                                   const Dataset& stacked_inf,
                                   RngStream& rng) {
  const Eigen::Index p = state.w_informative.size();
  check_coefficient_state(state.contrast,
                          state.shrink_informative.local_scales,
                          state.var_informative, "draw_w_informative");
  if (!(state.var_target > 0.0)) {
    throw InputError("draw_w_informative: target variance must be positive");
  }

  const double sd_inf = std::sqrt(state.var_informative);
  const double sd_tgt = std::sqrt(state.var_target);
  const Eigen::Index n = stacked_inf.rows() + target.rows();

  Eigen::MatrixXd design(n, p);
  Eigen::VectorXd response(n);
  design.topRows(stacked_inf.rows()) = stacked_inf.design / sd_inf;
  response.head(stacked_inf.rows()) = stacked_inf.outcome / sd_inf;
  design.bottomRows(target.rows()) = target.design / sd_tgt;
  response.tail(target.rows()) =
      (target.outcome - target.design * state.contrast) / sd_tgt;

  const Eigen::VectorXd prior_diag =
      state.var_informative * state.shrink_informative.local_scales;
  return whitened_draw(design, response, prior_diag, rng);
}

Eigen::VectorXd draw_contrast(const ModelState& state, const Dataset& target,
                              RngStream& rng) {
  check_coefficient_state(state.w_informative,
                          state.shrink_contrast.local_scales,
                          state.var_target, "draw_contrast");
  const double sd = std::sqrt(state.var_target);
  const Eigen::MatrixXd design = target.design / sd;
  const Eigen::VectorXd response =
      (target.outcome - target.design * state.w_informative) / sd;
  const Eigen::VectorXd prior_diag =
      state.var_target * state.shrink_contrast.local_scales;
  return whitened_draw(design, response, prior_diag, rng);
}

Eigen::VectorXd draw_w_noninformative(const ModelState& state,
                                      const Dataset& stacked_noninf,
                                      RngStream& rng) {
  check_coefficient_state(state.w_noninformative,
                          state.shrink_noninformative.local_scales,
                          state.var_noninformative, "draw_w_noninformative");
  const double sd = std::sqrt(state.var_noninformative);
  const Eigen::MatrixXd design = stacked_noninf.design / sd;
  const Eigen::VectorXd response = stacked_noninf.outcome / sd;
  const Eigen::VectorXd prior_diag =
      state.var_noninformative * state.shrink_noninformative.local_scales;
  return whitened_draw(design, response, prior_diag, rng);
}

double draw_variance(VarianceBlock block, const ModelState& state,
                     const Dataset& data, const VariancePrior& prior,
                     RngStream& rng) {
  if (!(prior.shape > 0.0) || !(prior.scale > 0.0)) {
    throw InputError("draw_variance: prior shape and scale must be positive");
  }

  const Eigen::VectorXd* coeffs = nullptr;
  const Eigen::VectorXd* scales = nullptr;
  Eigen::VectorXd residual;
  switch (block) {
    case VarianceBlock::target:
      coeffs = &state.contrast;
      scales = &state.shrink_contrast.local_scales;
      residual = data.outcome -
                 data.design * (state.w_informative + state.contrast);
      break;
    case VarianceBlock::informative:
      coeffs = &state.w_informative;
      scales = &state.shrink_informative.local_scales;
      residual = data.outcome - data.design * state.w_informative;
      break;
    case VarianceBlock::noninformative:
      coeffs = &state.w_noninformative;
      scales = &state.shrink_noninformative.local_scales;
      residual = data.outcome - data.design * state.w_noninformative;
      break;
  }

  const double rss = residual.squaredNorm();
  const double quad = (coeffs->array().square() / scales->array()).sum();
  const double scale = prior.scale + 0.5 * (rss + quad);
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw NumericalError("draw_variance: computed scale is not positive");
  }
  const double shape =
      prior.shape + 0.5 * (static_cast<double>(data.rows()) +
                           static_cast<double>(coeffs->size()));
  return draw_inverse_gamma(shape, scale, rng);
}

Eigen::VectorXd compose_beta(const ModelState& state) {
  return state.w_informative + state.contrast;
}

}  // namespace blast
