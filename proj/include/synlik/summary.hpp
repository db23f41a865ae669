#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "synlik/network.hpp"
#include "synlik/ode.hpp"
#include "synlik/ssa.hpp"

namespace synlik {

enum class FitMethod { Lse, Mef };
enum class WeightMode { Identity, Lna, Marginal, Empirical };

std::string to_string(FitMethod m);
std::string to_string(WeightMode w);
FitMethod parse_fit_method(const std::string& text);
WeightMode parse_weight_mode(const std::string& text);

struct FitConfig {
  int max_iterations = 200;
  double step_tolerance = 1e-8;
  double ef_tolerance = 1e-6;
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 10.0;
  WeightMode weights = WeightMode::Lna;
  OdeOptions ode{1e-10, 1e-12};

  void validate() const;
};

struct SummaryStatistic {
  Eigen::VectorXd beta_hat;
  FitMethod method = FitMethod::Mef;
  WeightMode weights = WeightMode::Lna;
  Eigen::MatrixXd asym_cov;  // covariance of sqrt(n) (beta_hat - beta)
  double objective_value = 0.0;
  double ef_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string label;
};

/// Regression of finite-difference slopes on monomials at interval midpoints.
Eigen::VectorXd init_beta(const Trajectory& traj, const MonomialBasis& basis);

SummaryStatistic lse_fit(const Trajectory& traj, const MonomialBasis& basis, const FitConfig& config = {});
SummaryStatistic mef_fit(const Trajectory& traj, const MonomialBasis& basis, const FitConfig& config = {});
SummaryStatistic fit(FitMethod method, const Trajectory& traj, const MonomialBasis& basis,
                     const FitConfig& config = {});

/// Sum of squared distances between the data and the ODE solution from the
/// first observation.
double lse_objective(const Trajectory& traj, const MonomialBasis& basis, const Eigen::VectorXd& beta,
                     const OdeOptions& ode = {1e-10, 1e-12});

/// Estimating function of the least-squares statistic,
/// sum_i dc(t_i)^T (C(t_i) - c(t_i)).
Eigen::VectorXd lse_estimating_function(const Trajectory& traj, const MonomialBasis& basis,
                                        const Eigen::VectorXd& beta, const OdeOptions& ode = {1e-10, 1e-12});

/// Martingale estimating function with weights frozen at `beta_weights`.
Eigen::VectorXd mef_estimating_function(const Trajectory& traj, const MonomialBasis& basis,
                                        const Eigen::VectorXd& beta, const Eigen::VectorXd& beta_weights,
                                        WeightMode mode, const OdeOptions& ode = {1e-10, 1e-12});

/// (sum_i S_i^T V_i^{-1} S_i)^{-1}; points whose V is numerically zero are
/// skipped and a singular total falls back to a pseudo-inverse.
Eigen::MatrixXd inverse_information(const std::vector<Eigen::MatrixXd>& sensitivities,
                                    const std::vector<Eigen::MatrixXd>& variances, bool* singular = nullptr);

/// Asymptotic covariance of sqrt(n)(beta_hat - beta) at the fitted value.
Eigen::MatrixXd sandwich_covariance(const SummaryStatistic& stat, const Trajectory& traj,
                                    const MonomialBasis& basis, const OdeOptions& ode = {1e-10, 1e-12});

/// Between-trajectory covariance of the statistics.
Eigen::MatrixXd empirical_psi(const std::vector<SummaryStatistic>& stats);

// Plain-text summary file: one `stat` row per trajectory followed by its
// covariance block.
std::string format_summary_file(const std::vector<SummaryStatistic>& stats, double volume);
std::vector<SummaryStatistic> parse_summary_file(const std::string& text, double* volume = nullptr);
void write_summary_file(const std::string& path, const std::vector<SummaryStatistic>& stats, double volume);
std::vector<SummaryStatistic> read_summary_file(const std::string& path, double* volume = nullptr);

}  // namespace synlik
