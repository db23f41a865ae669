#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "synlik/network.hpp"

namespace synlik {

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  std::size_t max_steps = 200000;
  /// Optional first step; 0 selects it automatically.
  double initial_step = 0.0;
};

struct OdeSolution {
  std::vector<double> grid;
  Eigen::MatrixXd values;                     // m x s
  std::vector<Eigen::MatrixXd> sensitivities;  // m blocks of s x d (empty unless requested)
  std::vector<Eigen::MatrixXd> covariances;    // m blocks of s x s (empty unless requested)
  Eigen::VectorXd beta;
  Eigen::VectorXd c0;
  std::size_t steps = 0;
};

struct ProcessCovariance {
  std::vector<double> grid;
  std::vector<Eigen::MatrixXd> matrices;  // V(t_i), volume-free
};

/// Adaptive Dormand-Prince 5(4) integrator with PI step control and
/// continuous output. `post_step` may modify an accepted state in place and
/// returns true when it did.
class Dopri5 {
 public:
  using Rhs = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;
  using PostStep = std::function<bool(Eigen::VectorXd&)>;

  Dopri5(Rhs rhs, OdeOptions options, PostStep post_step = nullptr);

  /// Integrates from (grid[0], y0) and returns the state at every grid
  /// point as the columns of the result.
  Eigen::MatrixXd solve(const Eigen::VectorXd& y0, const std::vector<double>& grid);

  std::size_t steps() const { return steps_; }
  std::size_t rejected() const { return rejected_; }

 private:
  double initial_step(double t, const Eigen::VectorXd& y, const Eigen::VectorXd& f0, double t_end);

  Rhs rhs_;
  OdeOptions opt_;
  PostStep post_;
  std::size_t steps_ = 0;
  std::size_t rejected_ = 0;
};

OdeSolution integrate(const MonomialBasis& basis, const Eigen::VectorXd& beta, const Eigen::VectorXd& c0,
                      const std::vector<double>& grid, const OdeOptions& options = {});

OdeSolution integrate_with_sensitivities(const MonomialBasis& basis, const Eigen::VectorXd& beta,
                                         const Eigen::VectorXd& c0, const std::vector<double>& grid,
                                         const OdeOptions& options = {});

ProcessCovariance lna_covariance(const MonomialBasis& basis, const Eigen::VectorXd& beta, const Eigen::VectorXd& c0,
                                 const std::vector<double>& grid, const OdeOptions& options = {});

Eigen::MatrixXd transition_covariance(const MonomialBasis& basis, const Eigen::VectorXd& beta,
                                      const Eigen::VectorXd& c_start, double t_start, double t_end,
                                      const OdeOptions& options = {});

/// General entry point: state always, sensitivities and/or LNA covariance
/// on request. `kappa` feeds the diffusion matrix; when empty it is
/// recovered from beta by non-negative least squares.
OdeSolution solve_system(const MonomialBasis& basis, const Eigen::VectorXd& beta, const Eigen::VectorXd& c0,
                         const std::vector<double>& grid, const OdeOptions& options, bool with_sensitivities,
                         bool with_covariance, const Eigen::VectorXd& kappa = Eigen::VectorXd());

/// D(c) = sum_k kappa_k m_k(c) delta_k delta_k^T.
Eigen::MatrixXd diffusion_matrix(const MonomialBasis& basis, const Eigen::VectorXd& kappa, const Eigen::VectorXd& c);

}  // namespace synlik
