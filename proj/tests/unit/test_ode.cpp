#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "synlik/errors.hpp"
#include "synlik/linalg.hpp"
#include "synlik/ode.hpp"
#include "synlik/ssa.hpp"

using namespace synlik;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("closed-form decay and growth") {
  const auto decay = build_monomial_basis(test::single("A -> 0 @ k=1"));
  OdeOptions tight;
  tight.rtol = 1e-10;
  tight.atol = 1e-12;
  const auto sol = integrate(decay, vec({1.0}), vec({1.0}), {0.0, 0.5, 1.0}, tight);
  CHECK(sol.values(0, 0) == 1.0);
  CHECK(std::abs(sol.values(2, 0) - std::exp(-1.0)) < 1e-8);
  CHECK(std::abs(sol.values(1, 0) - std::exp(-0.5)) < 1e-8);

  const auto growth = build_monomial_basis(test::single("0 -> A @ k=1"));
  const auto g = integrate(growth, vec({2.0}), vec({0.0}), linspace(0.0, 3.0, 13));
  for (int i = 0; i < 13; ++i) CHECK(std::abs(g.values(i, 0) - 2.0 * g.grid[static_cast<std::size_t>(i)]) < 1e-10);
}

TEST_CASE("SIR solution is qualitatively correct") {
  const auto basis = build_monomial_basis(test::eyam());
  const auto grid = linspace(0.0, 5.0, 501);
  const auto sol = integrate(basis, vec({5.30, 4.22, 0.0}), vec({612.0 / 613.0, 1.0 / 613.0}), grid);
  Eigen::Index peak = 0;
  sol.values.col(1).maxCoeff(&peak);
  CHECK(peak > 0);
  CHECK(peak < 500);
  for (Eigen::Index i = 1; i < 501; ++i) {
    CHECK(sol.values(i, 0) <= sol.values(i - 1, 0));
    if (i <= peak) CHECK(sol.values(i, 1) >= sol.values(i - 1, 1));
    if (i > peak) CHECK(sol.values(i, 1) <= sol.values(i - 1, 1));
  }
  // Fine fixed-step RK4 reference.
  Eigen::VectorXd c = vec({612.0 / 613.0, 1.0 / 613.0});
  const Eigen::VectorXd beta = vec({5.30, 4.22, 0.0});
  const int steps = 50000;
  const double h = 5.0 / steps;
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd k1 = ode_rhs_beta(basis, beta, c);
    const Eigen::VectorXd k2 = ode_rhs_beta(basis, beta, c + 0.5 * h * k1);
    const Eigen::VectorXd k3 = ode_rhs_beta(basis, beta, c + 0.5 * h * k2);
    const Eigen::VectorXd k4 = ode_rhs_beta(basis, beta, c + h * k3);
    c += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  CHECK((sol.values.row(500).transpose() - c).norm() < 1e-7);
}

TEST_CASE("halving tolerances changes grid values by less than the coarse tolerance") {
  const auto basis = build_monomial_basis(test::heat_shock());
  const Eigen::VectorXd beta = basis.Q * test::heat_shock().rates();
  const auto grid = linspace(0.0, 3.0, 30);
  OdeOptions coarse;
  coarse.rtol = 1e-6;
  coarse.atol = 1e-8;
  OdeOptions fine;
  fine.rtol = 5e-7;
  fine.atol = 5e-9;
  const auto a = integrate(basis, beta, Eigen::VectorXd::Ones(3), grid, coarse);
  const auto b = integrate(basis, beta, Eigen::VectorXd::Ones(3), grid, fine);
  const double tol = coarse.rtol * a.values.cwiseAbs().maxCoeff() + coarse.atol;
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() < tol);
}

TEST_CASE("sensitivities") {
  const auto decay = build_monomial_basis(test::single("A -> 0 @ k=1"));
  const auto sol = integrate_with_sensitivities(decay, vec({1.0}), vec({1.0}), {0.0, 1.0});
  REQUIRE(sol.sensitivities.size() == 2);
  CHECK(sol.sensitivities[0].isZero());
  CHECK(std::abs(sol.sensitivities[1](0, 0) + std::exp(-1.0)) < 1e-6);

  const auto net = test::heat_shock();
  const auto basis = build_monomial_basis(net);
  const auto grid = linspace(0.0, 3.0, 30);
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> unif(0.2, 1.5);
  OdeOptions tight;
  tight.rtol = 1e-11;
  tight.atol = 1e-13;
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd beta(11), c0(3);
    for (int j = 0; j < 11; ++j) beta(j) = unif(gen);
    for (int i = 0; i < 3; ++i) c0(i) = unif(gen);
    const auto s = integrate_with_sensitivities(basis, beta, c0, grid, tight);
    CHECK(s.sensitivities.size() == 30);
    CHECK(s.sensitivities[5].rows() == 3);
    CHECK(s.sensitivities[5].cols() == 11);
    const double h = 1e-5;
    for (int j = 0; j < 11; ++j) {
      Eigen::VectorXd bp = beta, bm = beta;
      bp(j) += h;
      bm(j) -= h;
      const auto up = integrate(basis, bp, c0, grid, tight);
      const auto dn = integrate(basis, bm, c0, grid, tight);
      for (std::size_t i = 1; i < grid.size(); ++i) {
        const Eigen::VectorXd fd = (up.values.row(static_cast<Eigen::Index>(i)) -
                                    dn.values.row(static_cast<Eigen::Index>(i))).transpose() / (2 * h);
        const Eigen::VectorXd an = s.sensitivities[i].col(j);
        CHECK((fd - an).norm() <= 1e-4 * std::max(an.norm(), 1e-3));
      }
    }
  }
}

TEST_CASE("LNA covariance closed forms") {
  const auto birth = build_monomial_basis(test::single("0 -> A @ k=1"));
  const auto vb = lna_covariance(birth, vec({1.0}), vec({0.0}), {0.0, 0.5, 1.0, 2.0});
  CHECK(std::abs(vb.matrices[1](0, 0) - 0.5) < 1e-9);
  CHECK(std::abs(vb.matrices[3](0, 0) - 2.0) < 1e-9);

  const auto death = build_monomial_basis(test::single("A -> 0 @ k=1"));
  const auto vd = lna_covariance(death, vec({1.0}), vec({1.0}), {0.0, 1.0});
  const double expected = std::exp(-2.0) * (std::exp(1.0) - 1.0);
  CHECK(std::abs(vd.matrices[1](0, 0) - expected) < 1e-8);
  CHECK(expected == doctest::Approx(0.2325).epsilon(1e-3));

  const auto hs = build_monomial_basis(test::heat_shock());
  const auto vz = lna_covariance(hs, Eigen::VectorXd::Zero(11), Eigen::VectorXd::Ones(3), linspace(0, 3, 5));
  for (const auto& m : vz.matrices) CHECK(m.isZero());

  const auto vh = lna_covariance(hs, hs.Q * test::heat_shock().rates(), Eigen::VectorXd::Ones(3), linspace(0, 3, 30));
  for (const auto& m : vh.matrices) CHECK(linalg::is_psd(m));
}

TEST_CASE("transition covariance") {
  const auto birth = build_monomial_basis(test::single("0 -> A @ k=1"));
  CHECK(transition_covariance(birth, vec({1.0}), vec({0.3}), 2.0, 2.0).isZero());
  CHECK(std::abs(transition_covariance(birth, vec({1.0}), vec({0.3}), 2.0, 3.0)(0, 0) - 1.0) < 1e-9);
  CHECK_THROWS_AS(transition_covariance(birth, vec({1.0}), vec({0.3}), 2.0, 1.0), InputError);

  const auto sir = build_monomial_basis(test::eyam());
  const Eigen::MatrixXd v =
      transition_covariance(sir, vec({5.30, 4.22, 0.0}), vec({612.0 / 613.0, 1.0 / 613.0}), 0.0, 1.0);
  CHECK(linalg::is_psd(v));
  CHECK(v(0, 1) < 0.0);
}

TEST_CASE("integrator reports failures") {
  // dc/dt = c^2 blows up at t = 1.
  auto net = parse_network("species: A\nvolume: 1\n2A -> 3A @ k=1\n");
  const auto basis = build_monomial_basis(net);
  CHECK_THROWS_AS(integrate(basis, vec({1.0}), vec({1.0}), {0.0, 2.0}), StiffnessError);
  try {
    integrate(basis, vec({1.0}), vec({1.0}), {0.0, 2.0});
  } catch (const StiffnessError& e) {
    CHECK(e.time() == doctest::Approx(1.0).epsilon(0.05));
  }
}
