#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "synlik/random.hpp"

namespace synlik {

enum class SigmaMode { Sampled, Fixed };

std::string to_string(SigmaMode m);
SigmaMode parse_sigma_mode(const std::string& text);

struct SamplerSpec {
  Eigen::MatrixXd Q;                       // d x r
  std::vector<Eigen::VectorXd> beta_hats;  // N statistics of length d
  double n = 1.0;                          // system volume
  Eigen::VectorXd omega;                   // prior slab probabilities
  Eigen::VectorXd lambda;                  // slab exponential rates
  double v = 0.0;                          // Wishart prior degrees of freedom
  Eigen::MatrixXd Psi;                     // Wishart prior scale
  double v_prop = 0.0;                     // proposal degrees of freedom
  SigmaMode sigma_mode = SigmaMode::Sampled;
  Eigen::MatrixXd sigma0;  // the fixed value, or the starting value when sampled
  Eigen::VectorXd kappa0;  // starting rates (default all ones)
  int iterations = 0;
  int burn_in = 0;
  int thin_sigma = 100;
  std::uint64_t seed = 0;

  int d() const { return static_cast<int>(Q.rows()); }
  int r() const { return static_cast<int>(Q.cols()); }
  int N() const { return static_cast<int>(beta_hats.size()); }
  Eigen::VectorXd beta_sum() const;
  void validate() const;
};

/// lambda_k = (1 - omega_k) / omega_k, v = N + d + 1, v' = n.
SamplerSpec unimodal_preset(const Eigen::MatrixXd& Q, const std::vector<Eigen::VectorXd>& beta_hats, double n,
                            const Eigen::VectorXd& omega, const Eigen::MatrixXd& Psi);

struct ChainState {
  Eigen::VectorXd kappa;
  Eigen::VectorXd tau_sq;
  Eigen::MatrixXd Sigma;
  Eigen::MatrixXd Sigma_inv;
  Eigen::MatrixXd U;  // n N Q^T Sigma^{-1} Q
  Eigen::VectorXd S;  // n Q^T Sigma^{-1} sum_j beta_hat_j
  double log_post = 0.0;
};

ChainState initial_state(const SamplerSpec& spec);
/// Recomputes Sigma_inv, U and S from Sigma.
void refresh_state(ChainState& state, const SamplerSpec& spec);

/// sum_j log N(beta_hat_j; Q kappa, Sigma / n), including all constants.
double synthetic_loglik(const Eigen::VectorXd& kappa, const Eigen::MatrixXd& Sigma, const SamplerSpec& spec);

/// Unnormalized log posterior of (kappa, Sigma) against the spike-and-slab
/// dominating measure.
double log_posterior(const Eigen::VectorXd& kappa, const Eigen::MatrixXd& Sigma, const SamplerSpec& spec);

struct SlabProbability {
  double omega_star = 0.0;
  double a = 0.0;  // truncated-normal location
  double b = 0.0;  // truncated-normal variance
  double log_M = 0.0;
};

SlabProbability slab_probability(const ChainState& state, int k, const SamplerSpec& spec);
/// Same formula from its scalar inputs: offset = s_k - sum_{i != k} u_ik kappa_i.
SlabProbability slab_probability(double offset, double u_kk, double tau_sq, double omega);

/// One systematic sweep over the rates. Writes omega* per reaction when
/// `omega_star` is non-null.
void update_kappa_sweep(ChainState& state, const SamplerSpec& spec, Rng& rng, Eigen::VectorXd* omega_star = nullptr);

/// log MH ratio for moving from state.Sigma to `proposal`.
double sigma_log_acceptance(const ChainState& state, const Eigen::MatrixXd& proposal, const SamplerSpec& spec);

struct SigmaStep {
  bool accepted = false;
  bool rejected_not_pd = false;
  double log_alpha = 0.0;
};

SigmaStep update_sigma(ChainState& state, const SamplerSpec& spec, Rng& rng);

struct Chain {
  Eigen::MatrixXd kappa;       // iterations x r
  Eigen::MatrixXd omega_star;  // iterations x r
  std::vector<std::uint8_t> accept;
  std::vector<int> sigma_iterations;
  std::vector<Eigen::MatrixXd> sigma_samples;
  int burn_in = 0;
  bool sigma_sampled = false;
  int not_pd_rejections = 0;
  Eigen::MatrixXd final_sigma;

  int size() const { return static_cast<int>(kappa.rows()); }
  /// Fraction of accepted Sigma proposals after burn-in (0 when fixed).
  double acceptance_rate() const;
};

Chain run_chain(const SamplerSpec& spec);
Chain run_chain(const SamplerSpec& spec, Rng& rng);

}  // namespace synlik
