#include "synlik/random.hpp"

#include <array>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>

#include "synlik/errors.hpp"
#include "synlik/linalg.hpp"

namespace synlik {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng substream(std::uint64_t seed, std::string_view stage, std::uint64_t index) {
  std::uint64_t state = splitmix64(seed) ^ splitmix64(fnv1a64(stage) + 0x632be59bd9b4e019ULL);
  state = splitmix64(state ^ splitmix64(index + 0x1d8e4e27c47d124fULL));
  std::array<std::uint32_t, 8> words{};
  for (std::size_t i = 0; i < words.size(); i += 2) {
    state = splitmix64(state);
    words[i] = static_cast<std::uint32_t>(state);
    words[i + 1] = static_cast<std::uint32_t>(state >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

namespace rand {

double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(Rng& rng) {
  // Marsaglia polar method; spelled out so streams do not depend on the
  // standard library's distribution implementation.
  while (true) {
    const double u = 2.0 * uniform_open(rng) - 1.0;
    const double v = 2.0 * uniform_open(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

namespace {

double standard_gamma(Rng& rng, double shape) {
  // Marsaglia & Tsang.
  if (shape < 1.0) {
    const double u = uniform_open(rng);
    return standard_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double chi_squared(Rng& rng, double dof) { return 2.0 * standard_gamma(rng, 0.5 * dof); }

}  // namespace

double truncated_normal_positive(Rng& rng, double mean, double var) {
  if (!(var > 0.0) || !std::isfinite(var) || !std::isfinite(mean))
    throw InputError("truncated_normal_positive: need finite mean and positive variance");
  const double sd = std::sqrt(var);
  const double alpha = -mean / sd;  // standardized lower truncation point
  double z;
  if (alpha <= 4.0) {
    // Upper tail mass beyond alpha, then invert inside it.
    const double tail = 0.5 * std::erfc(alpha / std::numbers::sqrt2);
    const double u = uniform_open(rng);
    z = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u * tail);
    if (z < alpha) z = alpha;
  } else {
    const double rate = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
    while (true) {
      z = alpha - std::log(uniform_open(rng)) / rate;
      const double diff = z - rate;
      if (uniform_open(rng) <= std::exp(-0.5 * diff * diff)) break;
    }
  }
  double x = mean + sd * z;
  if (!(x > 0.0)) x = std::nextafter(0.0, 1.0);
  return x;
}

double inverse_gaussian(Rng& rng, double mean, double shape) {
  if (!(mean > 0.0) || !(shape > 0.0))
    throw InputError("inverse_gaussian: mean and shape must be positive");
  const double nu = standard_normal(rng);
  const double w = mean * nu * nu / shape;
  // mean * (1 + w/2 - sqrt(w + w^2/4)) without cancellation.
  const double x = mean / (1.0 + 0.5 * w + std::sqrt(w + 0.25 * w * w));
  const double u = uniform_open(rng);
  if (u * (mean + x) <= mean) return x;
  return mean * mean / x;
}

Eigen::MatrixXd wishart(Rng& rng, double dof, const Eigen::MatrixXd& scale) {
  const Eigen::Index d = scale.rows();
  if (scale.cols() != d) throw InputError("wishart: scale must be square");
  if (!(dof > static_cast<double>(d) - 1.0)) throw InputError("wishart: dof must exceed d - 1");
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("wishart: scale is not positive definite");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(chi_squared(rng, dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = standard_normal(rng);
  }
  const Eigen::MatrixXd la = llt.matrixL() * a;
  return linalg::symmetrize(la * la.transpose());
}

}  // namespace rand

namespace stats {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double log_normal_cdf(double z) {
  if (z > -35.0) return std::log(normal_cdf(z));
  // Asymptotic series of the Mills ratio.
  const double z2 = z * z;
  const double inv = 1.0 / z2;
  const double series = 1.0 - inv + 3.0 * inv * inv - 15.0 * inv * inv * inv + 105.0 * inv * inv * inv * inv;
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("normal_quantile: p must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double log_multigamma(double a, int d) {
  double out = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
  for (int j = 0; j < d; ++j) out += std::lgamma(a - 0.5 * j);
  return out;
}

double wishart_log_pdf(const Eigen::MatrixXd& x, double dof, const Eigen::MatrixXd& scale) {
  const Eigen::Index d = scale.rows();
  Eigen::LLT<Eigen::MatrixXd> lx(x);
  Eigen::LLT<Eigen::MatrixXd> ls(scale);
  if (lx.info() != Eigen::Success || ls.info() != Eigen::Success)
    throw NotPositiveDefiniteError("wishart_log_pdf: argument or scale not positive definite");
  const double logdet_x = 2.0 * lx.matrixLLT().diagonal().array().log().sum();
  const double logdet_s = 2.0 * ls.matrixLLT().diagonal().array().log().sum();
  const double trace = ls.solve(x).trace();
  const double dd = static_cast<double>(d);
  return 0.5 * (dof - dd - 1.0) * logdet_x - 0.5 * trace - 0.5 * dof * dd * std::log(2.0) -
         0.5 * dof * logdet_s - log_multigamma(0.5 * dof, static_cast<int>(d));
}

}  // namespace stats

}  // namespace synlik
