#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "synlik/network.hpp"
#include "synlik/random.hpp"

namespace synlik {

inline constexpr std::size_t kMaxStoredEvents = 10'000'000;

struct JumpPath {
  State initial;
  std::vector<double> event_times;
  std::vector<State> states;  // state after each stored event
  std::vector<int> reactions;
  double t_end = 0.0;
  /// Set when more than `max_events` events fired; only `snapshot_grid`
  /// values remain trustworthy after the last stored event.
  bool truncated = false;
  std::size_t total_events = 0;
  std::vector<double> snapshot_grid;
  std::vector<State> snapshots;
};

struct Trajectory {
  std::vector<std::string> species;
  std::vector<double> times;
  std::vector<State> counts;  // one row per time point
  double volume = 1.0;

  std::size_t size() const { return times.size(); }
  /// m x s matrix of counts / volume.
  Eigen::MatrixXd concentrations() const;
  void validate() const;
};

struct SimulationOptions {
  std::size_t max_events = kMaxStoredEvents;
  /// Grid whose states are recorded during simulation regardless of the
  /// event cap. May be empty.
  std::vector<double> snapshot_grid;
};

JumpPath simulate_gillespie(const ReactionNetwork& net, const State& initial, double t_end, Rng& rng,
                            const SimulationOptions& options = {});

Trajectory sample_on_grid(const JumpPath& path, const std::vector<double>& grid,
                          const ReactionNetwork& net);

/// Simulates directly onto a grid without keeping the event list. Consumes
/// the random stream exactly as simulate_gillespie does.
Trajectory simulate_on_grid(const ReactionNetwork& net, const State& initial, const std::vector<double>& grid,
                            Rng& rng);

/// N independent trajectories; trajectory j uses substream(seed, "simulate", j).
std::vector<Trajectory> simulate_ensemble(const ReactionNetwork& net, const State& initial,
                                          const std::vector<double>& grid, std::size_t count,
                                          std::uint64_t seed);

std::vector<double> linspace(double a, double b, std::size_t points);

std::string format_trajectory_csv(const Trajectory& traj);
Trajectory parse_trajectory_csv(const std::string& text);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

}  // namespace synlik
