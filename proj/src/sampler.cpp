#include "synlik/sampler.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "synlik/errors.hpp"

namespace synlik {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success || !llt.matrixL().toDenseMatrix().diagonal().allFinite() ||
      llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0)
    throw NotPositiveDefiniteError(std::string(what) + " is not positive definite");
  return llt;
}

bool cholesky_ok(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
  return diag.allFinite() && diag.minCoeff() > 0.0;
}

double log_sigmoid_sum(double logit) {
  // log(1 / (1 + exp(-x))) without overflow.
  return logit >= 0 ? -std::log1p(std::exp(-logit)) : logit - std::log1p(std::exp(logit));
}

}  // namespace

std::string to_string(SigmaMode m) { return m == SigmaMode::Sampled ? "sampled" : "fixed"; }

SigmaMode parse_sigma_mode(const std::string& text) {
  if (text == "sampled") return SigmaMode::Sampled;
  if (text == "fixed") return SigmaMode::Fixed;
  throw InputError("unknown sigma mode '" + text + "' (expected sampled or fixed)");
}

Eigen::VectorXd SamplerSpec::beta_sum() const {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d());
  for (const auto& b : beta_hats) sum += b;
  return sum;
}

void SamplerSpec::validate() const {
  const int dd = d(), rr = r();
  if (dd == 0 || rr == 0) throw InputError("sampler: Q must be non-empty");
  if (beta_hats.empty()) throw InputError("sampler: at least one summary statistic is required");
  for (const auto& b : beta_hats)
    if (b.size() != dd || !b.allFinite()) throw InputError("sampler: summary statistic has the wrong length or is not finite");
  if (!(n > 0.0)) throw InputError("sampler: volume must be positive");
  if (omega.size() != rr || lambda.size() != rr) throw InputError("sampler: omega and lambda need one entry per rate");
  for (int k = 0; k < rr; ++k) {
    if (!(omega(k) >= 0.0 && omega(k) <= 1.0)) throw InputError("sampler: omega must lie in [0, 1]");
    if (!(lambda(k) > 0.0) || !std::isfinite(lambda(k))) throw InputError("sampler: lambda must be positive and finite");
  }
  if (sigma_mode == SigmaMode::Sampled) {
    if (!(v > dd - 1)) throw InputError("sampler: prior degrees of freedom must exceed d - 1");
    if (!(v_prop > dd - 1)) throw InputError("sampler: proposal degrees of freedom must exceed d - 1");
    if (Psi.rows() != dd || Psi.cols() != dd || !cholesky_ok(Psi))
      throw InputError("sampler: Psi must be a positive definite d x d matrix");
  }
  if (sigma0.rows() != dd || sigma0.cols() != dd || !cholesky_ok(sigma0))
    throw InputError("sampler: the initial or fixed Sigma must be a positive definite d x d matrix");
  if (kappa0.size() != 0 && (kappa0.size() != rr || (kappa0.array() < 0.0).any()))
    throw InputError("sampler: initial rates must be non-negative with one entry per rate");
  if (iterations < 0 || burn_in < 0) throw InputError("sampler: iterations and burn-in must be non-negative");
  if (burn_in > iterations) throw InputError("sampler: burn-in exceeds the number of iterations");
  if (thin_sigma < 1) throw InputError("sampler: Sigma thinning must be at least 1");
}

SamplerSpec unimodal_preset(const Eigen::MatrixXd& Q, const std::vector<Eigen::VectorXd>& beta_hats, double n,
                            const Eigen::VectorXd& omega, const Eigen::MatrixXd& Psi) {
  SamplerSpec spec;
  spec.Q = Q;
  spec.beta_hats = beta_hats;
  spec.n = n;
  spec.omega = omega;
  spec.lambda = (1.0 - omega.array()) / omega.array();
  spec.v = static_cast<double>(spec.N() + spec.d() + 1);
  spec.Psi = Psi;
  spec.v_prop = n;
  spec.sigma0 = Psi;
  return spec;
}

void refresh_state(ChainState& state, const SamplerSpec& spec) {
  const auto llt = checked_llt(state.Sigma, "Sigma");
  state.Sigma_inv = llt.solve(Eigen::MatrixXd::Identity(spec.d(), spec.d()));
  state.Sigma_inv = 0.5 * (state.Sigma_inv + state.Sigma_inv.transpose()).eval();
  const Eigen::MatrixXd siq = llt.solve(spec.Q);
  state.U = spec.n * spec.N() * spec.Q.transpose() * siq;
  state.U = 0.5 * (state.U + state.U.transpose()).eval();
  state.S = spec.n * siq.transpose() * spec.beta_sum();
}

ChainState initial_state(const SamplerSpec& spec) {
  spec.validate();
  ChainState state;
  state.kappa = spec.kappa0.size() ? spec.kappa0 : Eigen::VectorXd::Ones(spec.r());
  state.tau_sq = Eigen::VectorXd::Ones(spec.r());
  state.Sigma = spec.sigma0;
  refresh_state(state, spec);
  state.log_post = log_posterior(state.kappa, state.Sigma, spec);
  return state;
}

double synthetic_loglik(const Eigen::VectorXd& kappa, const Eigen::MatrixXd& Sigma, const SamplerSpec& spec) {
  const int d = spec.d();
  const auto llt = checked_llt(Sigma, "Sigma");
  const Eigen::VectorXd mean = spec.Q * kappa;
  const double log_det_sigma = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  // log|Sigma / n| = log|Sigma| - d log n
  const double log_det = log_det_sigma - d * std::log(spec.n);
  double total = 0.0;
  for (const auto& b : spec.beta_hats) {
    const Eigen::VectorXd z = llt.matrixL().solve(b - mean);
    total += -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * log_det - 0.5 * spec.n * z.squaredNorm();
  }
  return total;
}

double log_posterior(const Eigen::VectorXd& kappa, const Eigen::MatrixXd& Sigma, const SamplerSpec& spec) {
  double prior = 0.0;
  for (int k = 0; k < spec.r(); ++k) {
    if (kappa(k) < 0.0) return kNegInf;
    if (kappa(k) == 0.0)
      prior += std::log1p(-spec.omega(k));
    else
      prior += std::log(spec.omega(k) * spec.lambda(k)) - spec.lambda(k) * kappa(k);
  }
  if (prior == kNegInf) return kNegInf;
  double sigma_prior = 0.0;
  if (spec.sigma_mode == SigmaMode::Sampled) {
    const auto llt = checked_llt(Sigma, "Sigma");
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const Eigen::LLT<Eigen::MatrixXd> psi(spec.Psi);
    sigma_prior = 0.5 * (spec.v - spec.d() - 1) * log_det - 0.5 * psi.solve(Sigma).trace();
  }
  return synthetic_loglik(kappa, Sigma, spec) + prior + sigma_prior;
}

SlabProbability slab_probability(double offset, double u_kk, double tau_sq, double omega) {
  const double precision = u_kk + 1.0 / tau_sq;
  if (!(tau_sq > 0.0) || !(precision > 0.0))
    throw InputError("slab probability needs tau^2 > 0 and u_kk + 1/tau^2 > 0");
  SlabProbability out;
  out.a = offset / precision;
  out.b = 1.0 / precision;
  out.log_M = std::log(2.0) - 0.5 * std::log(tau_sq * precision) + offset * offset / (2.0 * precision) +
              stats::log_normal_cdf(out.a / std::sqrt(out.b));
  if (omega <= 0.0) {
    out.omega_star = 0.0;
  } else if (omega >= 1.0) {
    out.omega_star = 1.0;
  } else {
    const double logit = std::log(omega) - std::log1p(-omega) + out.log_M;
    out.omega_star = std::exp(log_sigmoid_sum(logit));
  }
  return out;
}

SlabProbability slab_probability(const ChainState& state, int k, const SamplerSpec& spec) {
  const double offset = state.S(k) - state.U.row(k).dot(state.kappa) + state.U(k, k) * state.kappa(k);
  return slab_probability(offset, state.U(k, k), state.tau_sq(k), spec.omega(k));
}

void update_kappa_sweep(ChainState& state, const SamplerSpec& spec, Rng& rng, Eigen::VectorXd* omega_star) {
  if (omega_star) omega_star->resize(spec.r());
  for (int k = 0; k < spec.r(); ++k) {
    const auto slab = slab_probability(state, k, spec);
    if (omega_star) (*omega_star)(k) = slab.omega_star;
    if (rand::uniform_open(rng) >= slab.omega_star) {
      state.kappa(k) = 0.0;
      continue;
    }
    state.kappa(k) = rand::truncated_normal_positive(rng, slab.a, slab.b);
    const double lambda = spec.lambda(k);
    state.tau_sq(k) = 1.0 / rand::inverse_gaussian(rng, lambda / state.kappa(k), lambda * lambda);
  }
}

double sigma_log_acceptance(const ChainState& state, const Eigen::MatrixXd& proposal, const SamplerSpec& spec) {
  const double vp = spec.v_prop;
  const double target = log_posterior(state.kappa, proposal, spec) - log_posterior(state.kappa, state.Sigma, spec);
  const double correction = stats::wishart_log_pdf(state.Sigma, vp, proposal / vp) -
                            stats::wishart_log_pdf(proposal, vp, state.Sigma / vp);
  return target + correction;
}

SigmaStep update_sigma(ChainState& state, const SamplerSpec& spec, Rng& rng) {
  SigmaStep step;
  if (spec.sigma_mode == SigmaMode::Fixed) return step;
  Eigen::MatrixXd proposal = rand::wishart(rng, spec.v_prop, state.Sigma / spec.v_prop);
  proposal = 0.5 * (proposal + proposal.transpose()).eval();
  if (!cholesky_ok(proposal)) {
    step.rejected_not_pd = true;
    rand::uniform_open(rng);
    return step;
  }
  try {
    step.log_alpha = sigma_log_acceptance(state, proposal, spec);
  } catch (const NotPositiveDefiniteError&) {
    // Near-singular current Sigma: a rescaled copy can fail its factorization.
    step.rejected_not_pd = true;
    rand::uniform_open(rng);
    return step;
  }
  const double u = rand::uniform_open(rng);
  if (std::log(u) < step.log_alpha) {
    state.Sigma = std::move(proposal);
    refresh_state(state, spec);
    step.accepted = true;
  }
  return step;
}

double Chain::acceptance_rate() const {
  const int total = size() - burn_in;
  if (total <= 0) return 0.0;
  int hits = 0;
  for (int i = burn_in; i < size(); ++i) hits += accept[static_cast<std::size_t>(i)];
  return static_cast<double>(hits) / total;
}

Chain run_chain(const SamplerSpec& spec) {
  Rng rng = substream(spec.seed, "sampler");
  return run_chain(spec, rng);
}

Chain run_chain(const SamplerSpec& spec, Rng& rng) {
  ChainState state = initial_state(spec);
  Chain chain;
  chain.burn_in = spec.burn_in;
  chain.sigma_sampled = spec.sigma_mode == SigmaMode::Sampled;
  chain.kappa.resize(spec.iterations, spec.r());
  chain.omega_star.resize(spec.iterations, spec.r());
  chain.accept.assign(static_cast<std::size_t>(spec.iterations), 0);
  Eigen::VectorXd omega_star(spec.r());
  for (int it = 0; it < spec.iterations; ++it) {
    update_kappa_sweep(state, spec, rng, &omega_star);
    const SigmaStep step = update_sigma(state, spec, rng);
    if (step.rejected_not_pd) ++chain.not_pd_rejections;
    chain.kappa.row(it) = state.kappa.transpose();
    chain.omega_star.row(it) = omega_star.transpose();
    chain.accept[static_cast<std::size_t>(it)] = step.accepted ? 1 : 0;
    if (spec.sigma_mode == SigmaMode::Sampled && (it + 1) % spec.thin_sigma == 0) {
      chain.sigma_iterations.push_back(it + 1);
      chain.sigma_samples.push_back(state.Sigma);
    }
  }
  if (chain.not_pd_rejections > 0)
    spdlog::warn("{} Sigma proposals were rejected as numerically not positive definite", chain.not_pd_rejections);
  state.log_post = log_posterior(state.kappa, state.Sigma, spec);
  chain.final_sigma = state.Sigma;
  return chain;
}

}  // namespace synlik
