#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string_view>

namespace synlik {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stage, index). Streams are derived by
/// hashing, so re-running one stage never perturbs another.
Rng substream(std::uint64_t seed, std::string_view stage, std::uint64_t index = 0);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

namespace rand {

/// Uniform on the open interval (0, 1).
double uniform_open(Rng& rng);
double standard_normal(Rng& rng);

/// N(mean, var) truncated to (0, inf). Inverse-CDF when the truncation point
/// is at most 4 standard deviations above the mean, otherwise Robert's
/// exponential rejection sampler.
double truncated_normal_positive(Rng& rng, double mean, double var);

/// Inverse Gaussian with the given mean and shape (Michael, Schucany & Haas).
double inverse_gaussian(Rng& rng, double mean, double shape);

/// Wishart(dof, scale) via the Bartlett decomposition. Requires dof > d - 1.
Eigen::MatrixXd wishart(Rng& rng, double dof, const Eigen::MatrixXd& scale);

}  // namespace rand

namespace stats {

/// Standard normal CDF and its logarithm. log_normal_cdf stays finite and
/// accurate far into the lower tail.
double normal_cdf(double z);
double log_normal_cdf(double z);
double normal_quantile(double p);

/// log W(x | dof, scale) including all normalizing constants.
double wishart_log_pdf(const Eigen::MatrixXd& x, double dof, const Eigen::MatrixXd& scale);

/// log of the multivariate gamma function Gamma_d(a).
double log_multigamma(double a, int d);

}  // namespace stats

}  // namespace synlik
