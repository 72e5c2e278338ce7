#pragma once

#include <vector>

namespace blast {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile (Acklam's rational approximation plus one
/// Halley refinement; accurate to near machine precision on (0,1)).
double normal_quantile(double p);

/// Linear-interpolation quantile of an already sorted sample:
/// h = (n-1) q, result = v[floor(h)] + frac(h) * (v[floor(h)+1] - v[floor(h)]).
/// This exact rule is part of the documented output contract.
double quantile_sorted(const std::vector<double>& sorted, double q);

/// Effective sample size via the initial-positive-sequence truncation of the
/// autocorrelation sum (pairs of consecutive autocorrelations are summed
/// until a pair goes non-positive).
double effective_sample_size(const std::vector<double>& draws);

/// Split-chain convergence ratio (potential scale reduction): each chain is
/// split in half and the usual between/within variance ratio is returned.
/// Values near 1 indicate agreement.
double split_chain_ratio(const std::vector<std::vector<double>>& chains);

}  // namespace blast
