#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "synlik/errors.hpp"
#include "synlik/ode.hpp"
#include "synlik/ssa.hpp"

using namespace synlik;

TEST_CASE("zero rates give an empty path") {
  auto net = test::heat_shock();
  net.set_rates(Eigen::VectorXd::Zero(12));
  Rng rng = substream(1, "t");
  const auto path = simulate_gillespie(net, net.initial, 5.0, rng);
  CHECK(path.event_times.empty());
  const auto traj = sample_on_grid(path, {0.0, 2.5, 5.0}, net);
  for (const auto& row : traj.counts) CHECK(row == net.initial);
}

TEST_CASE("pure birth count follows the Poisson law") {
  auto net = test::single("0 -> A @ k=1", 50.0);
  const int reps = 10000;
  double sum = 0.0;
  for (int j = 0; j < reps; ++j) {
    Rng rng = substream(7, "birth", static_cast<std::uint64_t>(j));
    sum += static_cast<double>(simulate_on_grid(net, {0}, {0.0, 1.0}, rng).counts[1][0]);
  }
  CHECK(std::abs(sum / reps - 50.0) < 3.0 * std::sqrt(50.0 / reps));
}

TEST_CASE("pure death count follows binomial thinning") {
  auto net = test::single("A -> 0 @ k=1", 1.0);
  const int reps = 10000;
  double sum = 0.0;
  const double p = std::exp(-1.0);
  for (int j = 0; j < reps; ++j) {
    Rng rng = substream(8, "death", static_cast<std::uint64_t>(j));
    sum += static_cast<double>(simulate_on_grid(net, {50}, {0.0, 1.0}, rng).counts[1][0]);
  }
  CHECK(std::abs(sum / reps - 50.0 * p) < 3.0 * std::sqrt(50.0 * p * (1 - p) / reps));
}

TEST_CASE("paths are valid jump processes") {
  auto net = test::heat_shock();
  Rng rng = substream(2, "path");
  const auto path = simulate_gillespie(net, net.initial, 3.0, rng);
  REQUIRE(path.event_times.size() > 100);
  State prev = path.initial;
  double t_prev = 0.0;
  for (std::size_t e = 0; e < path.event_times.size(); ++e) {
    CHECK(path.event_times[e] > t_prev);
    CHECK(path.event_times[e] <= 3.0);
    const auto delta = net.change(static_cast<std::size_t>(path.reactions[e]));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(path.states[e][i] - prev[i] == delta[i]);
      CHECK(path.states[e][i] >= 0);
    }
    prev = path.states[e];
    t_prev = path.event_times[e];
  }
}

TEST_CASE("grid sampling is right-continuous") {
  auto net = test::single("A -> 0 @ k=1", 1.0);
  JumpPath path;
  path.initial = {50};
  path.event_times = {0.5};
  path.states = {{49}};
  path.reactions = {0};
  path.t_end = 1.0;
  auto traj = sample_on_grid(path, {0.25, 0.75}, net);
  CHECK(traj.counts[0][0] == 50);
  CHECK(traj.counts[1][0] == 49);
  traj = sample_on_grid(path, {0.0, 0.5}, net);
  CHECK(traj.counts[0][0] == 50);
  CHECK(traj.counts[1][0] == 49);
  CHECK_THROWS_AS(sample_on_grid(path, {0.5, 1.5}, net), InputError);
}

TEST_CASE("streaming grid simulation matches the stored path") {
  auto net = test::heat_shock();
  const auto grid = linspace(0.0, 3.0, 30);
  Rng a = substream(5, "x"), b = substream(5, "x");
  const auto path = simulate_gillespie(net, net.initial, 3.0, a);
  const auto t1 = sample_on_grid(path, grid, net);
  const auto t2 = simulate_on_grid(net, net.initial, grid, b);
  CHECK(t1.counts == t2.counts);
}

TEST_CASE("event cap keeps grid snapshots") {
  auto net = test::single("0 -> A @ k=1", 1000.0);
  Rng a = substream(6, "cap"), b = substream(6, "cap");
  SimulationOptions opt;
  opt.max_events = 10;
  opt.snapshot_grid = {0.0, 0.5, 1.0};
  const auto path = simulate_gillespie(net, {0}, 1.0, a, opt);
  CHECK(path.truncated);
  CHECK(path.event_times.size() == 10);
  CHECK(path.total_events > 10);
  const auto traj = sample_on_grid(path, opt.snapshot_grid, net);
  const auto ref = simulate_on_grid(net, {0}, opt.snapshot_grid, b);
  CHECK(traj.counts == ref.counts);
  CHECK_THROWS_AS(sample_on_grid(path, {0.7}, net), InputError);
}

TEST_CASE("ensembles are reproducible and distinct") {
  auto net = test::heat_shock();
  const auto grid = linspace(0.0, 3.0, 30);
  CHECK(simulate_ensemble(net, net.initial, grid, 0, 1).empty());
  const auto e1 = simulate_ensemble(net, net.initial, grid, 5, 42);
  const auto e2 = simulate_ensemble(net, net.initial, grid, 5, 42);
  REQUIRE(e1.size() == 5);
  for (std::size_t j = 0; j < 5; ++j) CHECK(e1[j].counts == e2[j].counts);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) CHECK(e1[i].counts != e1[j].counts);
}

TEST_CASE("conserved totals are constant along paths") {
  auto sir = parse_network("species: S I R\nvolume: 613\nS + I -> 2I @ a=5.3\nI -> R @ b=4.2\n");
  Rng rng = substream(3, "sir");
  const auto path = simulate_gillespie(sir, {600, 13, 0}, 5.0, rng);
  for (const auto& x : path.states) CHECK(x[0] + x[1] + x[2] == 613);
}

TEST_CASE("large-volume ensemble mean follows the reaction-rate equation") {
  auto net = test::heat_shock();
  net.volume = 1e4;
  const State x0 = {10000, 10000, 10000};
  const auto grid = linspace(0.0, 3.0, 7);
  const int paths = 200;
  const auto ens = simulate_ensemble(net, x0, grid, paths, 99);
  const auto basis = build_monomial_basis(net);
  Eigen::VectorXd c0 = Eigen::VectorXd::Ones(3);
  const auto ode = integrate(basis, basis.Q * net.rates(), c0, grid);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      double m = 0.0, m2 = 0.0;
      for (const auto& tr : ens) {
        const double c = static_cast<double>(tr.counts[i][static_cast<std::size_t>(k)]) / net.volume;
        m += c;
        m2 += c * c;
      }
      m /= paths;
      const double se = std::sqrt((m2 / paths - m * m) / (paths - 1));
      CHECK(std::abs(m - ode.values(static_cast<Eigen::Index>(i), k)) < 5.0 * se);
    }
  }
}

TEST_CASE("trajectory CSV round trip and errors") {
  auto net = test::eyam();
  Trajectory tr;
  tr.species = net.species;
  tr.volume = 613;
  tr.times = {0.0, 0.1, 1.0 / 3.0};
  tr.counts = {{612, 1}, {600, 13}, {590, 2}};
  const auto text = format_trajectory_csv(tr);
  CHECK(text.rfind("# volume=613\ntime,S,I\n", 0) == 0);
  const auto back = parse_trajectory_csv(text);
  CHECK(back.times == tr.times);
  CHECK(back.counts == tr.counts);
  CHECK(back.species == tr.species);
  CHECK(back.volume == tr.volume);

  auto row_of = [](const std::string& s) -> std::size_t {
    try {
      parse_trajectory_csv(s);
    } catch (const ParseError& e) {
      return e.location();
    }
    return 0;
  };
  CHECK(row_of("# volume=10\ntime,A\n0,1\n1,x\n") == 4);
  CHECK(row_of("# volume=10\ntime,A\n0,1\n0,2\n") == 4);
  CHECK(row_of("# volume=10\ntime,A\n0,1,2\n") == 3);
  CHECK(row_of("# volume=10\ntime,A\n0,-1\n") == 3);
  CHECK_THROWS_AS(parse_trajectory_csv(""), ParseError);
  CHECK_THROWS_AS(parse_trajectory_csv("# volume=10\ntime,A\n"), ParseError);
}
