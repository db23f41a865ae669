#include "synlik/summary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "synlik/errors.hpp"
#include "synlik/linalg.hpp"

namespace synlik {

std::string to_string(FitMethod m) { return m == FitMethod::Lse ? "lse" : "mef"; }

std::string to_string(WeightMode w) {
  switch (w) {
    case WeightMode::Identity: return "identity";
    case WeightMode::Lna: return "lna";
    case WeightMode::Marginal: return "marginal";
    case WeightMode::Empirical: return "empirical";
  }
  return "lna";
}

FitMethod parse_fit_method(const std::string& text) {
  if (text == "lse") return FitMethod::Lse;
  if (text == "mef") return FitMethod::Mef;
  throw InputError("unknown fit method '" + text + "' (expected lse or mef)");
}

WeightMode parse_weight_mode(const std::string& text) {
  if (text == "identity") return WeightMode::Identity;
  if (text == "lna") return WeightMode::Lna;
  if (text == "marginal") return WeightMode::Marginal;
  if (text == "empirical") return WeightMode::Empirical;
  throw InputError("unknown weight mode '" + text + "'");
}

void FitConfig::validate() const {
  if (max_iterations < 1) throw InputError("max_iterations must be positive");
  if (!(step_tolerance > 0.0) || !(ef_tolerance > 0.0)) throw InputError("fit tolerances must be positive");
  if (!(initial_damping > 0.0) || !(damping_up > 1.0) || !(damping_down > 1.0))
    throw InputError("invalid damping parameters");
}

namespace {

void check_trajectory(const Trajectory& traj, const MonomialBasis& basis) {
  traj.validate();
  if (traj.size() < 2) throw InputError("trajectory needs at least two time points");
  if (static_cast<int>(traj.species.size()) != basis.s)
    throw InputError("trajectory species count differs from the network");
}

Eigen::VectorXd row(const Eigen::MatrixXd& m, std::size_t i) { return m.row(static_cast<Eigen::Index>(i)).transpose(); }

}  // namespace

Eigen::VectorXd init_beta(const Trajectory& traj, const MonomialBasis& basis) {
  check_trajectory(traj, basis);
  const Eigen::MatrixXd c = traj.concentrations();
  const std::size_t m = traj.size();
  const int s = basis.s, d = basis.d;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>((m - 1) * static_cast<std::size_t>(s)), d);
  Eigen::VectorXd b(a.rows());
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double dt = traj.times[i + 1] - traj.times[i];
    const Eigen::VectorXd mid = 0.5 * (row(c, i) + row(c, i + 1));
    const Eigen::VectorXd slope = (row(c, i + 1) - row(c, i)) / dt;
    Eigen::MatrixXd jb;
    basis.evaluate(Eigen::VectorXd::Zero(d), mid, nullptr, nullptr, &jb);
    a.middleRows(static_cast<Eigen::Index>(i) * s, s) = jb;
    b.segment(static_cast<Eigen::Index>(i) * s, s) = slope;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < d) {
    spdlog::warn("init_beta: regression design is singular (rank {} < {}); starting from ones", qr.rank(), d);
    return Eigen::VectorXd::Ones(d);
  }
  std::vector<bool> nonneg(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) nonneg[static_cast<std::size_t>(j)] = basis.Q.row(j).minCoeff() >= 0.0;
  return linalg::bounded_least_squares(a, b, nonneg);
}

// ---------------------------------------------------------------------------
// Damped Gauss-Newton core shared by both statistics.

namespace {

struct LmResult {
  Eigen::VectorXd beta;
  bool converged = false;
  int iterations = 0;
  double merit = 0.0;
  double ef = 0.0;
};

// `eval` fills residual r and Jacobian J (of r) and returns false on
// integration failure. The merit is ||r||^2; `ef` maps (r, J) to the norm of
// the estimating function.
using EvalFn = std::function<bool(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>;
using EfFn = std::function<double(const Eigen::VectorXd&, const Eigen::MatrixXd&)>;

LmResult levenberg(const Eigen::VectorXd& start, const EvalFn& eval, const EfFn& ef_of, const FitConfig& cfg,
                   int max_iterations) {
  LmResult res;
  res.beta = start;
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  if (!eval(res.beta, r, jac)) throw StiffnessError("fit: integration failed at the starting value", 0.0);
  double merit = r.squaredNorm();
  double ef = ef_of(r, jac);
  double mu = cfg.initial_damping;
  const Eigen::Index d = start.size();

  for (int it = 0; it < max_iterations; ++it) {
    res.iterations = it + 1;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    Eigen::VectorXd scale = jtj.diagonal();
    const double floor = std::max(1e-12 * scale.maxCoeff(), 1e-300);
    for (Eigen::Index j = 0; j < d; ++j) scale(j) = std::max(scale(j), floor);
    Eigen::MatrixXd lhs = jtj;
    lhs.diagonal() += mu * scale;
    Eigen::VectorXd step = lhs.ldlt().solve(-jtr);
    if (!step.allFinite()) step = linalg::pseudo_inverse_symmetric(lhs) * (-jtr);

    if (step.lpNorm<Eigen::Infinity>() < cfg.step_tolerance && ef < cfg.ef_tolerance) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd trial = res.beta + step, r_new;
    Eigen::MatrixXd j_new;
    bool ok = false;
    try {
      ok = eval(trial, r_new, j_new) && r_new.allFinite() && j_new.allFinite();
    } catch (const StiffnessError&) {
      ok = false;
    }
    if (ok && r_new.squaredNorm() < merit) {
      res.beta = trial;
      r = std::move(r_new);
      jac = std::move(j_new);
      merit = r.squaredNorm();
      ef = ef_of(r, jac);
      mu = std::max(mu / cfg.damping_down, 1e-12);
      if (step.lpNorm<Eigen::Infinity>() < cfg.step_tolerance && ef < cfg.ef_tolerance) {
        res.converged = true;
        break;
      }
    } else {
      mu *= cfg.damping_up;
      if (mu > 1e16) break;
    }
  }
  res.merit = merit;
  res.ef = ef;
  return res;
}

struct IntervalModel {
  std::vector<Eigen::VectorXd> mean;   // F_i, i = 1..m-1 (index i-1)
  std::vector<Eigen::MatrixXd> sens;   // dF_i / dbeta
  std::vector<Eigen::MatrixXd> cov;    // transition covariances when requested
};

// One-step predictions from each observation to the next.
IntervalModel interval_model(const Trajectory& traj, const MonomialBasis& basis, const Eigen::VectorXd& beta,
                             const Eigen::MatrixXd& conc, const OdeOptions& ode, bool with_sens, bool with_cov) {
  IntervalModel out;
  const Eigen::VectorXd kappa = with_cov ? kappa_from_beta(basis, beta) : Eigen::VectorXd();
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const auto sol = solve_system(basis, beta, row(conc, i - 1), {traj.times[i - 1], traj.times[i]}, ode, with_sens,
                                  with_cov, kappa);
    out.mean.push_back(sol.values.row(1).transpose());
    if (with_sens) out.sens.push_back(sol.sensitivities[1]);
    if (with_cov) out.cov.push_back(sol.covariances[1]);
  }
  return out;
}

// Marginal model from the first observation.
IntervalModel marginal_model(const Trajectory& traj, const MonomialBasis& basis, const Eigen::VectorXd& beta,
                             const Eigen::MatrixXd& conc, const OdeOptions& ode, bool with_sens, bool with_cov) {
  IntervalModel out;
  const auto sol = solve_system(basis, beta, row(conc, 0), traj.times, ode, with_sens, with_cov);
  for (std::size_t i = 1; i < traj.size(); ++i) {
    out.mean.push_back(row(sol.values, i));
    if (with_sens) out.sens.push_back(sol.sensitivities[i]);
    if (with_cov) out.cov.push_back(sol.covariances[i]);
  }
  return out;
}

// Frozen weights g_i = Fdot_i^T rho_i^{-1} (d x s).
std::vector<Eigen::MatrixXd> mef_weights(const Trajectory& traj, const MonomialBasis& basis,
                                         const Eigen::VectorXd& beta, const Eigen::MatrixXd& conc, WeightMode mode,
                                         const OdeOptions& ode) {
  const int s = basis.s;
  const bool marginal = mode == WeightMode::Marginal;
  const bool need_cov = mode == WeightMode::Lna || marginal;
  const IntervalModel model = marginal ? marginal_model(traj, basis, beta, conc, ode, true, true)
                                       : interval_model(traj, basis, beta, conc, ode, true, need_cov);
  const std::size_t intervals = model.mean.size();
  std::vector<Eigen::MatrixXd> g(intervals);

  Eigen::MatrixXd pooled = Eigen::MatrixXd::Identity(s, s);
  if (mode == WeightMode::Empirical) {
    Eigen::VectorXd msq = Eigen::VectorXd::Zero(s);
    for (std::size_t i = 0; i < intervals; ++i) msq += (row(conc, i + 1) - model.mean[i]).array().square().matrix();
    msq /= static_cast<double>(intervals);
    pooled = msq.cwiseMax(1e-8).asDiagonal();
  }
  int ridged_count = 0;
  for (std::size_t i = 0; i < intervals; ++i) {
    Eigen::MatrixXd rho_inv;
    if (mode == WeightMode::Identity) {
      rho_inv = Eigen::MatrixXd::Identity(s, s);
    } else if (mode == WeightMode::Empirical) {
      rho_inv = pooled.diagonal().cwiseInverse().asDiagonal();
    } else {
      bool ridged = false;
      rho_inv = linalg::ridged_inverse(model.cov[i], 1e-8, &ridged);
      ridged_count += ridged ? 1 : 0;
    }
    g[i] = model.sens[i].transpose() * rho_inv;
  }
  if (ridged_count > 0)
    spdlog::warn("mef_fit: {} singular covariance matrices regularized with a 1e-8 ridge", ridged_count);
  return g;
}

}  // namespace

double lse_objective(const Trajectory& traj, const MonomialBasis& basis, const Eigen::VectorXd& beta,
                     const OdeOptions& ode) {
  check_trajectory(traj, basis);
  const Eigen::MatrixXd conc = traj.concentrations();
  const auto sol = integrate(basis, beta, row(conc, 0), traj.times, ode);
  return (conc.bottomRows(conc.rows() - 1) - sol.values.bottomRows(conc.rows() - 1)).squaredNorm();
}

Eigen::VectorXd lse_estimating_function(const Trajectory& traj, const MonomialBasis& basis,
                                        const Eigen::VectorXd& beta, const OdeOptions& ode) {
  check_trajectory(traj, basis);
  const Eigen::MatrixXd conc = traj.concentrations();
  const auto sol = integrate_with_sensitivities(basis, beta, row(conc, 0), traj.times, ode);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(basis.d);
  for (std::size_t i = 1; i < traj.size(); ++i)
    g += sol.sensitivities[i].transpose() * (row(conc, i) - row(sol.values, i));
  return g;
}

Eigen::VectorXd mef_estimating_function(const Trajectory& traj, const MonomialBasis& basis,
                                        const Eigen::VectorXd& beta, const Eigen::VectorXd& beta_weights,
                                        WeightMode mode, const OdeOptions& ode) {
  check_trajectory(traj, basis);
  const Eigen::MatrixXd conc = traj.concentrations();
  const auto g = mef_weights(traj, basis, beta_weights, conc, mode, ode);
  const IntervalModel model = mode == WeightMode::Marginal ? marginal_model(traj, basis, beta, conc, ode, false, false)
                                                           : interval_model(traj, basis, beta, conc, ode, false, false);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(basis.d);
  for (std::size_t i = 0; i < g.size(); ++i) out += g[i] * (row(conc, i + 1) - model.mean[i]);
  return out;
}

SummaryStatistic lse_fit(const Trajectory& traj, const MonomialBasis& basis, const FitConfig& config) {
  config.validate();
  check_trajectory(traj, basis);
  const Eigen::MatrixXd conc = traj.concentrations();
  const Eigen::Index m = conc.rows();
  const int s = basis.s, d = basis.d;

  EvalFn eval = [&](const Eigen::VectorXd& beta, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    const auto sol = integrate_with_sensitivities(basis, beta, row(conc, 0), traj.times, config.ode);
    r.resize((m - 1) * s);
    jac.resize((m - 1) * s, d);
    for (Eigen::Index i = 1; i < m; ++i) {
      r.segment((i - 1) * s, s) = sol.values.row(i).transpose() - conc.row(i).transpose();
      jac.middleRows((i - 1) * s, s) = sol.sensitivities[static_cast<std::size_t>(i)];
    }
    return true;
  };
  EfFn ef = [](const Eigen::VectorXd& r, const Eigen::MatrixXd& jac) { return (jac.transpose() * r).norm(); };

  const LmResult lm = levenberg(init_beta(traj, basis), eval, ef, config, config.max_iterations);
  SummaryStatistic stat;
  stat.beta_hat = lm.beta;
  stat.method = FitMethod::Lse;
  stat.weights = WeightMode::Marginal;
  stat.objective_value = lm.merit;
  stat.ef_norm = lm.ef;
  stat.converged = lm.converged;
  stat.iterations = lm.iterations;
  if (!stat.converged) spdlog::warn("lse_fit did not converge (estimating-function norm {:.3g})", lm.ef);
  stat.asym_cov = sandwich_covariance(stat, traj, basis, config.ode);
  return stat;
}

SummaryStatistic mef_fit(const Trajectory& traj, const MonomialBasis& basis, const FitConfig& config) {
  config.validate();
  check_trajectory(traj, basis);
  const Eigen::MatrixXd conc = traj.concentrations();
  const int d = basis.d;
  const WeightMode mode = config.weights;
  const bool marginal = mode == WeightMode::Marginal;

  Eigen::VectorXd beta = init_beta(traj, basis);
  int total_iterations = 0;
  bool converged = false;
  LmResult lm;
  for (int outer = 0; outer < config.max_iterations && total_iterations < config.max_iterations * 5; ++outer) {
    std::vector<Eigen::MatrixXd> g;
    try {
      g = mef_weights(traj, basis, beta, conc, mode, config.ode);
    } catch (const StiffnessError&) {
      if (outer == 0) throw;
      break;
    }
    EvalFn eval = [&](const Eigen::VectorXd& b, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
      const IntervalModel model = marginal ? marginal_model(traj, basis, b, conc, config.ode, true, false)
                                           : interval_model(traj, basis, b, conc, config.ode, true, false);
      r = Eigen::VectorXd::Zero(d);
      jac = Eigen::MatrixXd::Zero(d, d);
      for (std::size_t i = 0; i < g.size(); ++i) {
        r += g[i] * (row(conc, i + 1) - model.mean[i]);
        jac -= g[i] * model.sens[i];
      }
      return true;
    };
    EfFn ef = [](const Eigen::VectorXd& r, const Eigen::MatrixXd&) { return r.norm(); };
    const Eigen::VectorXd before = beta;
    lm = levenberg(beta, eval, ef, config, config.max_iterations);
    total_iterations += lm.iterations;
    beta = lm.beta;
    if (lm.converged && (beta - before).lpNorm<Eigen::Infinity>() < config.step_tolerance) {
      converged = true;
      break;
    }
    if (!lm.converged && (beta - before).lpNorm<Eigen::Infinity>() == 0.0) break;
  }

  SummaryStatistic stat;
  stat.beta_hat = beta;
  stat.method = FitMethod::Mef;
  stat.weights = mode;
  stat.converged = converged;
  stat.iterations = total_iterations;
  stat.ef_norm = lm.ef;
  // Weighted one-step residual sum of squares under the final weights.
  {
    const IntervalModel model = marginal ? marginal_model(traj, basis, beta, conc, config.ode, false, false)
                                         : interval_model(traj, basis, beta, conc, config.ode, false, false);
    double obj = 0.0;
    for (std::size_t i = 0; i < model.mean.size(); ++i) obj += (row(conc, i + 1) - model.mean[i]).squaredNorm();
    stat.objective_value = obj;
  }
  if (!converged) spdlog::warn("mef_fit did not converge (estimating-function norm {:.3g})", lm.ef);
  stat.asym_cov = sandwich_covariance(stat, traj, basis, config.ode);
  return stat;
}

SummaryStatistic fit(FitMethod method, const Trajectory& traj, const MonomialBasis& basis, const FitConfig& config) {
  return method == FitMethod::Lse ? lse_fit(traj, basis, config) : mef_fit(traj, basis, config);
}

Eigen::MatrixXd inverse_information(const std::vector<Eigen::MatrixXd>& sens, const std::vector<Eigen::MatrixXd>& vars,
                                    bool* singular) {
  if (sens.size() != vars.size()) throw InputError("inverse_information: length mismatch");
  if (sens.empty()) throw InputError("inverse_information: no points");
  const Eigen::Index d = sens.front().cols();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < sens.size(); ++i) {
    const double tr = vars[i].trace();
    if (!(tr > 1e-14)) continue;
    bool ridged = false;
    const Eigen::MatrixXd vinv = linalg::ridged_inverse(vars[i], 1e-8, &ridged);
    b += sens[i].transpose() * vinv * sens[i];
  }
  b = linalg::symmetrize(b);
  Eigen::LLT<Eigen::MatrixXd> llt(b);
  bool bad = llt.info() != Eigen::Success;
  if (!bad) {
    const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
    bad = !(diag.minCoeff() > 1e-7 * diag.maxCoeff());
  }
  if (singular) *singular = bad;
  if (bad) {
    spdlog::warn("information matrix is singular; using its pseudo-inverse");
    return linalg::symmetrize(linalg::pseudo_inverse_symmetric(b, 1e-12));
  }
  return linalg::symmetrize(llt.solve(Eigen::MatrixXd::Identity(d, d)));
}

Eigen::MatrixXd sandwich_covariance(const SummaryStatistic& stat, const Trajectory& traj, const MonomialBasis& basis,
                                    const OdeOptions& ode) {
  check_trajectory(traj, basis);
  const Eigen::MatrixXd conc = traj.concentrations();
  const Eigen::VectorXd& beta = stat.beta_hat;
  if (stat.method == FitMethod::Lse || stat.weights == WeightMode::Marginal) {
    const IntervalModel model = marginal_model(traj, basis, beta, conc, ode, true, true);
    return inverse_information(model.sens, model.cov);
  }
  // Martingale statistic: Godambe form H^{-1} M H^{-T} with the weights the
  // statistic was computed with; it reduces to B^{-1} for the LNA weights.
  const IntervalModel model = interval_model(traj, basis, beta, conc, ode, true, true);
  if (stat.weights == WeightMode::Lna) return inverse_information(model.sens, model.cov);
  const auto g = mef_weights(traj, basis, beta, conc, stat.weights, ode);
  const int d = basis.d;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d), mid = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < g.size(); ++i) {
    h += g[i] * model.sens[i];
    mid += g[i] * model.cov[i] * g[i].transpose();
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
  Eigen::MatrixXd h_inv;
  if (lu.rank() < d) {
    spdlog::warn("sensitivity matrix of the estimating function is singular; using a pseudo-inverse");
    h_inv = h.completeOrthogonalDecomposition().pseudoInverse();
  } else {
    h_inv = lu.inverse();
  }
  return linalg::symmetrize(h_inv * mid * h_inv.transpose());
}

Eigen::MatrixXd empirical_psi(const std::vector<SummaryStatistic>& stats) {
  if (stats.empty()) throw InputError("empirical_psi: no statistics");
  const Eigen::Index d = stats.front().beta_hat.size();
  for (const auto& st : stats)
    if (st.beta_hat.size() != d) throw InputError("empirical_psi: statistics differ in dimension");
  if (stats.size() == 1) {
    const auto& st = stats.front();
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(d);
    if (st.asym_cov.rows() == d && st.asym_cov.cols() == d) diag = st.asym_cov.diagonal().cwiseMax(0.0);
    Eigen::MatrixXd out = diag.asDiagonal();
    out.diagonal().array() += 1e-5;
    return out;
  }
  const auto n = static_cast<double>(stats.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& st : stats) mean += st.beta_hat;
  mean /= n;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& st : stats) {
    const Eigen::VectorXd c = st.beta_hat - mean;
    cov += c * c.transpose();
  }
  cov /= (n - 1.0);
  cov = linalg::symmetrize(cov);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
  const bool full_rank = stats.size() > static_cast<std::size_t>(d) && es.eigenvalues().minCoeff() > 1e-12 * top &&
                         top > 0.0;
  if (!full_rank) cov.diagonal().array() += 1e-5;
  return cov;
}

// ---------------------------------------------------------------------------
// Summary file

std::string format_summary_file(const std::vector<SummaryStatistic>& stats, double volume) {
  std::string out =
      "# synlik summary statistics\n"
      "# stat <label> <method> <weights> <converged> <iterations> <objective> <ef_norm> <d> <beta_1..beta_d>\n"
      "# each stat row is followed by d rows: cov <row> <entries...>\n";
  out += fmt::format("volume {:.17g}\n", volume);
  for (const auto& st : stats) {
    const auto d = st.beta_hat.size();
    out += fmt::format("stat {} {} {} {} {} {:.17g} {:.17g} {}", st.label.empty() ? "-" : st.label,
                       to_string(st.method), to_string(st.weights), st.converged ? 1 : 0, st.iterations,
                       st.objective_value, st.ef_norm, d);
    for (Eigen::Index j = 0; j < d; ++j) out += fmt::format(" {:.17g}", st.beta_hat(j));
    out += "\n";
    for (Eigen::Index j = 0; j < d; ++j) {
      out += fmt::format("cov {}", j + 1);
      for (Eigen::Index k = 0; k < d; ++k)
        out += fmt::format(" {:.17g}", st.asym_cov.size() ? st.asym_cov(j, k) : 0.0);
      out += "\n";
    }
  }
  return out;
}

std::vector<SummaryStatistic> parse_summary_file(const std::string& text, double* volume) {
  std::vector<SummaryStatistic> out;
  std::istringstream in(text);
  std::string line;
  std::size_t row_no = 0;
  Eigen::Index pending_cov = 0;
  bool have_volume = false;
  auto number = [&](std::istringstream& ls, const char* what) {
    std::string tok;
    if (!(ls >> tok)) throw ParseError(fmt::format("row {}: missing {}", row_no, what), row_no);
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(fmt::format("row {}: invalid {} '{}'", row_no, what, tok), row_no);
    }
  };
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "volume") {
      const double v = number(ls, "volume");
      if (volume) *volume = v;
      have_volume = true;
    } else if (kind == "stat") {
      if (pending_cov != 0) throw ParseError(fmt::format("row {}: covariance block incomplete", row_no), row_no);
      SummaryStatistic st;
      std::string method, weights;
      int conv = 0;
      if (!(ls >> st.label >> method >> weights >> conv >> st.iterations))
        throw ParseError(fmt::format("row {}: malformed stat row", row_no), row_no);
      if (st.label == "-") st.label.clear();
      try {
        st.method = parse_fit_method(method);
        st.weights = parse_weight_mode(weights);
      } catch (const InputError& e) {
        throw ParseError(fmt::format("row {}: {}", row_no, e.what()), row_no);
      }
      st.converged = conv != 0;
      st.objective_value = number(ls, "objective");
      st.ef_norm = number(ls, "estimating-function norm");
      const double dd = number(ls, "dimension");
      if (dd < 1 || dd != std::floor(dd)) throw ParseError(fmt::format("row {}: invalid dimension", row_no), row_no);
      const auto d = static_cast<Eigen::Index>(dd);
      st.beta_hat.resize(d);
      for (Eigen::Index j = 0; j < d; ++j) st.beta_hat(j) = number(ls, "beta");
      std::string extra;
      if (ls >> extra) throw ParseError(fmt::format("row {}: trailing fields", row_no), row_no);
      st.asym_cov = Eigen::MatrixXd::Zero(d, d);
      out.push_back(std::move(st));
      pending_cov = d;
    } else if (kind == "cov") {
      if (out.empty() || pending_cov == 0)
        throw ParseError(fmt::format("row {}: covariance row without stat", row_no), row_no);
      auto& st = out.back();
      const auto d = st.beta_hat.size();
      const Eigen::Index j = d - pending_cov;
      const double idx = number(ls, "row index");
      if (idx != static_cast<double>(j + 1)) throw ParseError(fmt::format("row {}: covariance rows out of order", row_no), row_no);
      for (Eigen::Index k = 0; k < d; ++k) st.asym_cov(j, k) = number(ls, "covariance entry");
      std::string extra;
      if (ls >> extra) throw ParseError(fmt::format("row {}: trailing fields", row_no), row_no);
      --pending_cov;
    } else {
      throw ParseError(fmt::format("row {}: unknown record '{}'", row_no, kind), row_no);
    }
  }
  if (pending_cov != 0) throw ParseError("summary file ends inside a covariance block", row_no);
  if (out.empty()) throw ParseError("summary file contains no statistics", row_no);
  if (!have_volume) throw ParseError("summary file lacks a volume line", row_no);
  return out;
}

void write_summary_file(const std::string& path, const std::vector<SummaryStatistic>& stats, double volume) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << format_summary_file(stats, volume);
}

std::vector<SummaryStatistic> read_summary_file(const std::string& path, double* volume) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open summary file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_summary_file(ss.str(), volume);
}

}  // namespace synlik
