#include "synlik/ode.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "synlik/errors.hpp"
#include "synlik/linalg.hpp"

namespace synlik {

namespace {

constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kSafe = 0.9;
constexpr double kFacc1 = 5.0;   // 1 / fac1, fac1 = 0.2
constexpr double kFacc2 = 0.1;   // 1 / fac2, fac2 = 10

}  // namespace

Dopri5::Dopri5(Rhs rhs, OdeOptions options, PostStep post_step)
    : rhs_(std::move(rhs)), opt_(options), post_(std::move(post_step)) {
  if (!(opt_.rtol > 0.0) || !(opt_.atol > 0.0)) throw InputError("ODE tolerances must be positive");
}

double Dopri5::initial_step(double t, const Eigen::VectorXd& y, const Eigen::VectorXd& f0, double t_end) {
  const Eigen::ArrayXd sk = opt_.atol + opt_.rtol * y.array().abs();
  const double dnf = (f0.array() / sk).square().sum();
  const double dny = (y.array() / sk).square().sum();
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, t_end - t);
  Eigen::VectorXd y1 = y + h * f0, f1(y.size());
  rhs_(t + h, y1, f1);
  const double der2 = std::sqrt(((f1 - f0).array() / sk).square().sum()) / h;
  const double der12 = std::max(der2, std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.2);
  return std::min({100.0 * h, h1, t_end - t});
}

Eigen::MatrixXd Dopri5::solve(const Eigen::VectorXd& y0, const std::vector<double>& grid) {
  const Eigen::Index n = y0.size();
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(grid.size()));
  if (grid.empty()) return out;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw InputError("ODE grid must be strictly increasing");
  out.col(0) = y0;
  if (grid.size() == 1) return out;

  double t = grid.front();
  const double t_end = grid.back();
  Eigen::VectorXd y = y0, y1(n), ysti(n), k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), err(n);
  Eigen::VectorXd r1(n), r2(n), r3(n), r4(n), r5(n);
  rhs_(t, y, k1);
  if (!k1.allFinite()) throw StiffnessError(fmt::format("non-finite derivative at t={}", t), t);

  double h = opt_.initial_step > 0.0 ? std::min(opt_.initial_step, t_end - t) : initial_step(t, y, k1, t_end);
  double facold = 1e-4;
  bool last_rejected = false;
  std::size_t next = 1;

  while (next < grid.size()) {
    if (steps_ + rejected_ >= opt_.max_steps)
      throw StiffnessError(fmt::format("ODE step limit exceeded at t={}", t), t);
    if (std::abs(h) <= 1e-14 * std::max(1.0, std::abs(t)))
      throw StiffnessError(fmt::format("ODE step size underflow at t={}", t), t);
    bool final_step = false;
    if (t + 1.01 * h >= t_end) {
      h = t_end - t;
      final_step = true;
    }

    ysti = y + h * a21 * k1;
    rhs_(t + c2 * h, ysti, k2);
    ysti = y + h * (a31 * k1 + a32 * k2);
    rhs_(t + c3 * h, ysti, k3);
    ysti = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs_(t + c4 * h, ysti, k4);
    ysti = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs_(t + c5 * h, ysti, k5);
    ysti = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    const double t_new = final_step ? t_end : t + h;
    rhs_(t_new, ysti, k6);
    y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    rhs_(t_new, y1, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double e = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sk = opt_.atol + opt_.rtol * std::max(std::abs(y(i)), std::abs(y1(i)));
      e += (err(i) / sk) * (err(i) / sk);
    }
    e = n > 0 ? std::sqrt(e / static_cast<double>(n)) : 0.0;

    if (!std::isfinite(e) || !y1.allFinite()) {
      ++rejected_;
      h *= 0.1;
      last_rejected = true;
      continue;
    }

    const double fac11 = std::pow(e, kExpo);
    double fac = fac11 / std::pow(facold, kBeta);
    fac = std::max(kFacc2, std::min(kFacc1, fac / kSafe));
    double h_new = h / fac;

    if (e <= 1.0) {
      facold = std::max(e, 1e-4);
      ++steps_;
      // Continuous output coefficients.
      const Eigen::VectorXd ydiff = y1 - y;
      const Eigen::VectorXd bspl = h * k1 - ydiff;
      r1 = y;
      r2 = ydiff;
      r3 = bspl;
      r4 = ydiff - h * k7 - bspl;
      r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      while (next < grid.size() && grid[next] <= t_new) {
        if (grid[next] == t_new) {
          out.col(static_cast<Eigen::Index>(next)) = y1;
        } else {
          const double theta = (grid[next] - t) / h;
          const double theta1 = 1.0 - theta;
          out.col(static_cast<Eigen::Index>(next)) =
              r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
        }
        ++next;
      }
      y = y1;
      t = t_new;
      k1 = k7;
      if (post_ && post_(y)) rhs_(t, y, k1);
      if (!y.allFinite()) throw StiffnessError(fmt::format("non-finite state at t={}", t), t);
      if (last_rejected) h_new = std::min(h_new, h);
      last_rejected = false;
      h = h_new;
    } else {
      h_new = h / std::min(kFacc1, fac11 / kSafe);
      ++rejected_;
      last_rejected = true;
      h = h_new;
    }
  }
  // The post-step hook is also applied to interpolated outputs.
  if (post_) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      Eigen::VectorXd col = out.col(j);
      if (post_(col)) out.col(j) = col;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd diffusion_matrix(const MonomialBasis& basis, const Eigen::VectorXd& kappa, const Eigen::VectorXd& c) {
  Eigen::MatrixXd dm = Eigen::MatrixXd::Zero(basis.s, basis.s);
  const Eigen::VectorXd mv = basis.monomial_values(c);
  for (int k = 0; k < basis.r; ++k) {
    const double flux = kappa(k) * mv(basis.reaction_monomial[static_cast<std::size_t>(k)]);
    if (flux == 0.0) continue;
    const Eigen::VectorXd delta = basis.stoichiometry.col(k);
    dm.noalias() += flux * delta * delta.transpose();
  }
  return dm;
}

namespace {

struct ClampTracker {
  double worst = 0.0;
};

Eigen::VectorXd clamp_nonnegative(const Eigen::VectorXd& c, ClampTracker& tracker) {
  Eigen::VectorXd out = c;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (c(i) < 0.0) {
      tracker.worst = std::max(tracker.worst, -c(i));
      out(i) = 0.0;
    }
  }
  return out;
}

}  // namespace

OdeSolution solve_system(const MonomialBasis& basis, const Eigen::VectorXd& beta, const Eigen::VectorXd& c0,
                         const std::vector<double>& grid, const OdeOptions& options, bool with_sens, bool with_cov,
                         const Eigen::VectorXd& kappa_in) {
  const int s = basis.s;
  const int d = basis.d;
  if (beta.size() != d) throw InputError("beta has wrong length");
  if (c0.size() != s) throw InputError("initial concentration has wrong length");
  for (Eigen::Index i = 0; i < c0.size(); ++i)
    if (!(c0(i) >= 0.0)) throw InputError("initial concentration must be non-negative");
  if (grid.empty()) throw InputError("ODE grid must not be empty");

  Eigen::VectorXd kappa;
  if (with_cov) {
    kappa = kappa_in.size() == basis.r ? kappa_in : kappa_from_beta(basis, beta);
  }

  const Eigen::Index sens_off = s;
  const Eigen::Index cov_off = s + (with_sens ? static_cast<Eigen::Index>(s) * d : 0);
  const Eigen::Index dim = cov_off + (with_cov ? static_cast<Eigen::Index>(s) * s : 0);

  ClampTracker tracker;
  Eigen::VectorXd f(s);
  Eigen::MatrixXd jc(s, s), jb(s, d);
  auto rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.resize(dim);
    const Eigen::VectorXd c = clamp_nonnegative(y.head(s), tracker);
    basis.evaluate(beta, c, &f, (with_sens || with_cov) ? &jc : nullptr, with_sens ? &jb : nullptr);
    dy.head(s) = f;
    if (with_sens) {
      Eigen::Map<const Eigen::MatrixXd> sm(y.data() + sens_off, s, d);
      Eigen::Map<Eigen::MatrixXd> dsm(dy.data() + sens_off, s, d);
      dsm.noalias() = jc * sm;
      dsm += jb;
    }
    if (with_cov) {
      Eigen::Map<const Eigen::MatrixXd> vm(y.data() + cov_off, s, s);
      Eigen::Map<Eigen::MatrixXd> dvm(dy.data() + cov_off, s, s);
      const Eigen::MatrixXd jv = jc * vm;
      dvm = jv + jv.transpose() + diffusion_matrix(basis, kappa, c);
    }
  };
  Dopri5::PostStep post = nullptr;
  if (with_cov) {
    post = [&](Eigen::VectorXd& y) {
      Eigen::Map<Eigen::MatrixXd> vm(y.data() + cov_off, s, s);
      const Eigen::MatrixXd sym = 0.5 * (vm + vm.transpose());
      vm = sym;
      return true;
    };
  }

  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(dim);
  y0.head(s) = c0;
  Dopri5 solver(rhs, options, post);
  const Eigen::MatrixXd raw = solver.solve(y0, grid);

  if (tracker.worst > options.atol) {
    // First occurrence at warning level, repeats at debug level.
    static std::atomic<std::uint64_t> clamp_events{0};
    const auto level = clamp_events++ == 0 ? spdlog::level::warn : spdlog::level::debug;
    spdlog::log(level, "ODE state went negative by {:.3g}; monomials were evaluated at zero", tracker.worst);
  }

  OdeSolution sol;
  sol.grid = grid;
  sol.beta = beta;
  sol.c0 = c0;
  sol.steps = solver.steps();
  sol.values = raw.topRows(s).transpose();
  const auto m = raw.cols();
  if (with_sens) {
    sol.sensitivities.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j)
      sol.sensitivities.push_back(Eigen::Map<const Eigen::MatrixXd>(raw.col(j).data() + sens_off, s, d));
  }
  if (with_cov) {
    sol.covariances.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j)
      sol.covariances.push_back(
          linalg::symmetrize(Eigen::Map<const Eigen::MatrixXd>(raw.col(j).data() + cov_off, s, s)));
  }
  return sol;
}

OdeSolution integrate(const MonomialBasis& basis, const Eigen::VectorXd& beta, const Eigen::VectorXd& c0,
                      const std::vector<double>& grid, const OdeOptions& options) {
  return solve_system(basis, beta, c0, grid, options, false, false);
}

OdeSolution integrate_with_sensitivities(const MonomialBasis& basis, const Eigen::VectorXd& beta,
                                         const Eigen::VectorXd& c0, const std::vector<double>& grid,
                                         const OdeOptions& options) {
  return solve_system(basis, beta, c0, grid, options, true, false);
}

ProcessCovariance lna_covariance(const MonomialBasis& basis, const Eigen::VectorXd& beta, const Eigen::VectorXd& c0,
                                 const std::vector<double>& grid, const OdeOptions& options) {
  OdeSolution sol = solve_system(basis, beta, c0, grid, options, false, true);
  return ProcessCovariance{grid, std::move(sol.covariances)};
}

Eigen::MatrixXd transition_covariance(const MonomialBasis& basis, const Eigen::VectorXd& beta,
                                      const Eigen::VectorXd& c_start, double t_start, double t_end,
                                      const OdeOptions& options) {
  if (t_end < t_start) throw InputError("transition_covariance: t_end precedes t_start");
  if (t_end == t_start) return Eigen::MatrixXd::Zero(basis.s, basis.s);
  OdeSolution sol = solve_system(basis, beta, c_start, {t_start, t_end}, options, false, true);
  return sol.covariances.back();
}

}  // namespace synlik
