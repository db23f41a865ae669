#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "synlik/errors.hpp"
#include "synlik/linalg.hpp"
#include "synlik/ode.hpp"
#include "synlik/ssa.hpp"
#include "synlik/summary.hpp"

using namespace synlik;

namespace {

// Counts from the ODE solution at a huge volume, so the data are noiseless
// to about 1e-12 in concentration.
Trajectory noiseless(const ReactionNetwork& net, const Eigen::VectorXd& beta, const Eigen::VectorXd& c0,
                     const std::vector<double>& grid, double volume = 1e12) {
  const auto basis = build_monomial_basis(net);
  OdeOptions tight;
  tight.rtol = 1e-12;
  tight.atol = 1e-14;
  const auto sol = integrate(basis, beta, c0, grid, tight);
  Trajectory tr;
  tr.species = net.species;
  tr.volume = volume;
  tr.times = grid;
  for (Eigen::Index i = 0; i < sol.values.rows(); ++i) {
    State x;
    for (Eigen::Index k = 0; k < sol.values.cols(); ++k) x.push_back(std::llround(sol.values(i, k) * volume));
    tr.counts.push_back(x);
  }
  return tr;
}

SummaryStatistic stat_with(std::initializer_list<double> beta) {
  SummaryStatistic s;
  s.beta_hat.resize(static_cast<Eigen::Index>(beta.size()));
  Eigen::Index i = 0;
  for (double b : beta) s.beta_hat(i++) = b;
  return s;
}

}  // namespace

TEST_CASE("initial guess from midpoint regression") {
  const auto net = test::single("A -> 0 @ k=1");
  const auto basis = build_monomial_basis(net);
  Eigen::VectorXd beta(1);
  beta << 2.0;
  const auto tr = noiseless(net, beta, Eigen::VectorXd::Ones(1), linspace(0.0, 2.0, 201));
  const Eigen::VectorXd b0 = init_beta(tr, basis);
  CHECK(b0(0) == doctest::Approx(2.0).epsilon(1e-3));

  const auto sir = test::eyam();
  const auto sb = build_monomial_basis(sir);
  Eigen::VectorXd truth(3);
  truth << 5.3, 4.2, 0.1;
  Eigen::VectorXd c0(2);
  c0 << 0.98, 0.02;
  const auto st = noiseless(sir, truth, c0, linspace(0.0, 2.0, 401));
  CHECK((init_beta(st, sb) - truth).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("noiseless data are recovered by both statistics") {
  const auto sir = test::eyam();
  const auto basis = build_monomial_basis(sir);
  Eigen::VectorXd truth(3);
  truth << 5.3, 4.2, 0.1;
  Eigen::VectorXd c0(2);
  c0 << 0.98, 0.02;
  const auto tr = noiseless(sir, truth, c0, linspace(0.0, 3.0, 31));
  const auto lse = lse_fit(tr, basis);
  const auto mef = mef_fit(tr, basis);
  CHECK(lse.converged);
  CHECK(mef.converged);
  CHECK((lse.beta_hat - truth).cwiseAbs().maxCoeff() < 1e-5);
  CHECK((mef.beta_hat - truth).cwiseAbs().maxCoeff() < 1e-5);
  CHECK((lse.beta_hat - mef.beta_hat).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(lse.asym_cov.rows() == 3);
  CHECK(linalg::is_psd(lse.asym_cov));
  CHECK(linalg::is_psd(mef.asym_cov));
}

TEST_CASE("least squares statistic is a minimum of its objective") {
  const auto net = test::eyam();
  const auto basis = build_monomial_basis(net);
  Trajectory tr;
  tr.species = net.species;
  tr.volume = 613;
  tr.times = {0, 1, 2, 3, 4, 5};
  tr.counts = {{612, 1}, {593, 7}, {540, 22}, {460, 20}, {436, 8}, {422, 0}};
  const auto st = lse_fit(tr, basis);
  REQUIRE(st.converged);
  const double f0 = lse_objective(tr, basis, st.beta_hat);
  CHECK(f0 == doctest::Approx(st.objective_value).epsilon(1e-8));
  CHECK(lse_estimating_function(tr, basis, st.beta_hat).norm() < 1e-5);
  for (int j = 0; j < 3; ++j)
    for (double h : {-1e-3, 1e-3}) {
      Eigen::VectorXd b = st.beta_hat;
      b(j) += h;
      CHECK(lse_objective(tr, basis, b) >= f0 - 1e-12);
    }
}

TEST_CASE("least squares statistic matches a grid-search oracle on the decay network") {
  const auto net = test::single("A -> 0 @ k=1", 100.0);
  const auto basis = build_monomial_basis(net);
  Rng rng = substream(11, "grid-oracle");
  const auto tr = simulate_on_grid(net, {100}, linspace(0.0, 2.0, 11), rng);
  const auto st = lse_fit(tr, basis);
  double best = 0.0, best_val = 1e300;
  for (int i = 0; i <= 4000; ++i) {
    Eigen::VectorXd b(1);
    b << 0.2 + i * 0.0005;
    const double v = lse_objective(tr, basis, b);
    if (v < best_val) {
      best_val = v;
      best = b(0);
    }
  }
  CHECK(std::abs(st.beta_hat(0) - best) <= 5e-4);
}

TEST_CASE("identity-weighted martingale statistic minimizes the one-step squared error") {
  const auto net = test::eyam();
  const auto basis = build_monomial_basis(net);
  Trajectory tr;
  tr.species = net.species;
  tr.volume = 613;
  tr.times = {0, 1, 2, 3, 4, 5};
  tr.counts = {{612, 1}, {593, 7}, {540, 22}, {460, 20}, {436, 8}, {422, 0}};
  FitConfig cfg;
  cfg.weights = WeightMode::Identity;
  const auto st = mef_fit(tr, basis, cfg);
  REQUIRE(st.converged);
  const Eigen::MatrixXd c = tr.concentrations();
  auto one_step = [&](const Eigen::VectorXd& b) {
    double total = 0.0;
    for (std::size_t i = 1; i < tr.size(); ++i) {
      const auto sol = integrate(basis, b, c.row(static_cast<Eigen::Index>(i - 1)).transpose(),
                                 {tr.times[i - 1], tr.times[i]}, cfg.ode);
      total += (c.row(static_cast<Eigen::Index>(i)) - sol.values.row(1)).squaredNorm();
    }
    return total;
  };
  const double f0 = one_step(st.beta_hat);
  CHECK(f0 == doctest::Approx(st.objective_value).epsilon(1e-8));
  for (int j = 0; j < 3; ++j) {
    const double h = 1e-4;
    Eigen::VectorXd up = st.beta_hat, dn = st.beta_hat;
    up(j) += h;
    dn(j) -= h;
    const double grad = (one_step(up) - one_step(dn)) / (2 * h);
    CHECK(std::abs(grad) < 1e-6);
    CHECK(one_step(up) >= f0 - 1e-14);
    CHECK(one_step(dn) >= f0 - 1e-14);
  }
}

TEST_CASE("martingale estimating function vanishes at the statistic") {
  const auto net = test::heat_shock();
  const auto basis = build_monomial_basis(net);
  const auto tr = simulate_ensemble(net, net.initial, linspace(0.0, 3.0, 30), 1, 5)[0];
  FitConfig cfg;
  cfg.weights = WeightMode::Identity;
  const auto st = mef_fit(tr, basis, cfg);
  REQUIRE(st.converged);
  CHECK(mef_estimating_function(tr, basis, st.beta_hat, st.beta_hat, WeightMode::Identity, cfg.ode).norm() < 1e-6);
}

TEST_CASE("inverse information for toy sensitivities") {
  // Each of m points contributes S^T V^{-1} S = 1.
  for (int m : {1, 2, 5, 10}) {
    std::vector<Eigen::MatrixXd> sens(static_cast<std::size_t>(m), Eigen::MatrixXd::Ones(1, 1));
    std::vector<Eigen::MatrixXd> vars(static_cast<std::size_t>(m), Eigen::MatrixXd::Ones(1, 1));
    CHECK(inverse_information(sens, vars)(0, 0) == doctest::Approx(1.0 / m));
  }
  // Doubling every variance doubles the covariance.
  std::vector<Eigen::MatrixXd> sens, vars, vars2;
  for (int i = 0; i < 4; ++i) {
    Eigen::MatrixXd s(2, 2);
    s << 1.0 + i, 0.5, -0.3 * i, 2.0;
    Eigen::MatrixXd v(2, 2);
    v << 1.0 + 0.1 * i, 0.2, 0.2, 0.5;
    sens.push_back(s);
    vars.push_back(v);
    vars2.push_back(2.0 * v);
  }
  CHECK((inverse_information(sens, vars2) - 2.0 * inverse_information(sens, vars)).cwiseAbs().maxCoeff() < 1e-12);
  bool singular = true;
  inverse_information(sens, vars, &singular);
  CHECK_FALSE(singular);
  CHECK_THROWS_AS(inverse_information({}, {}), InputError);
}

TEST_CASE("empirical Psi") {
  const auto psi = empirical_psi({stat_with({1, 0}), stat_with({0, 1}), stat_with({0, 0})});
  CHECK(psi(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(psi(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(psi(0, 1) == doctest::Approx(-1.0 / 6.0));

  const auto same = empirical_psi({stat_with({1, 2}), stat_with({1, 2}), stat_with({1, 2})});
  CHECK((same - 1e-5 * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);

  // Fewer statistics than dimensions: rank deficient, ridge added.
  const auto two = empirical_psi({stat_with({1, 0, 0}), stat_with({0, 1, 0})});
  CHECK(two(2, 2) == doctest::Approx(1e-5));
  CHECK(two(0, 0) == doctest::Approx(0.5 + 1e-5));

  auto single = stat_with({1, 2});
  single.asym_cov = Eigen::MatrixXd(2, 2);
  single.asym_cov << 4, 1, 1, 9;
  const auto one = empirical_psi({single});
  CHECK(one(0, 1) == 0.0);
  CHECK(one(0, 0) == doctest::Approx(4 + 1e-5));
  CHECK(one(1, 1) == doctest::Approx(9 + 1e-5));
  CHECK_THROWS_AS(empirical_psi({}), InputError);
}

TEST_CASE("asymptotic covariance gives calibrated intervals on the decay network") {
  const auto net = test::single("A -> 0 @ k=1", 1000.0);
  const auto basis = build_monomial_basis(net);
  const auto grid = linspace(0.0, 2.0, 11);
  const int reps = 200;
  const auto ens = simulate_ensemble(net, {1000}, grid, reps, 2024);
  int covered = 0;
  for (const auto& tr : ens) {
    const auto st = mef_fit(tr, basis);
    const double se = std::sqrt(st.asym_cov(0, 0) / net.volume);
    if (std::abs(st.beta_hat(0) - 1.0) <= 1.96 * se) ++covered;
  }
  const double rate = static_cast<double>(covered) / reps;
  CHECK(rate >= 0.88);
  CHECK(rate <= 0.99);
}

TEST_CASE("summary file round trip") {
  auto a = stat_with({1.0 / 3.0, -2.5e-7, 4.0});
  a.method = FitMethod::Mef;
  a.weights = WeightMode::Lna;
  a.asym_cov = Eigen::MatrixXd::Identity(3, 3) * 0.1;
  a.asym_cov(0, 2) = a.asym_cov(2, 0) = 1.0 / 7.0;
  a.converged = true;
  a.iterations = 17;
  a.objective_value = 0.123456789;
  a.ef_norm = 1e-9;
  a.label = "traj_001.csv";
  auto b = a;
  b.method = FitMethod::Lse;
  b.weights = WeightMode::Marginal;
  b.converged = false;
  b.label = "traj_002.csv";
  const auto text = format_summary_file({a, b}, 50.0);
  double volume = 0.0;
  const auto back = parse_summary_file(text, &volume);
  CHECK(volume == 50.0);
  REQUIRE(back.size() == 2);
  CHECK(back[0].beta_hat == a.beta_hat);
  CHECK(back[0].asym_cov == a.asym_cov);
  CHECK(back[0].label == a.label);
  CHECK(back[0].iterations == 17);
  CHECK(back[0].objective_value == a.objective_value);
  CHECK(back[0].ef_norm == a.ef_norm);
  CHECK(back[1].method == FitMethod::Lse);
  CHECK(back[1].weights == WeightMode::Marginal);
  CHECK_FALSE(back[1].converged);
  CHECK(format_summary_file(back, volume) == text);
  CHECK_THROWS_AS(parse_summary_file("volume 1\nstat x mef lna 1 1 0 0 2 1\n"), ParseError);
}

TEST_CASE("option parsing") {
  CHECK(parse_fit_method("lse") == FitMethod::Lse);
  CHECK(parse_weight_mode("empirical") == WeightMode::Empirical);
  CHECK_THROWS_AS(parse_fit_method("mle"), InputError);
  CHECK_THROWS_AS(parse_weight_mode("diag"), InputError);
  FitConfig bad;
  bad.step_tolerance = -1.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}
