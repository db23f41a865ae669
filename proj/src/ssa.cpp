#include "synlik/ssa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "synlik/errors.hpp"

namespace synlik {

Eigen::MatrixXd Trajectory::concentrations() const {
  const auto m = static_cast<Eigen::Index>(times.size());
  const auto s = static_cast<Eigen::Index>(species.size());
  Eigen::MatrixXd c(m, s);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index k = 0; k < s; ++k)
      c(i, k) = static_cast<double>(counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]) / volume;
  return c;
}

void Trajectory::validate() const {
  if (!(volume > 0.0)) throw InputError("trajectory volume must be positive");
  if (counts.size() != times.size()) throw InputError("trajectory has mismatched times and counts");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i])) throw InputError("trajectory time is not finite");
    if (i > 0 && !(times[i] > times[i - 1])) throw InputError("trajectory times must be strictly increasing");
    if (counts[i].size() != species.size()) throw InputError("trajectory row has wrong number of species");
    for (auto x : counts[i])
      if (x < 0) throw InputError("trajectory counts must be non-negative");
  }
}

namespace {

// Shared direct-method stepper. `on_event(t, state, k)` fires after each
// event; `on_grid(i, state)` fires for each grid point passed.
template <class OnEvent, class OnGrid>
void run_direct_method(const ReactionNetwork& net, const State& initial, double t_end,
                       const std::vector<double>& grid, Rng& rng, OnEvent&& on_event, OnGrid&& on_grid) {
  const std::size_t s = net.species.size();
  const std::size_t r = net.reactions.size();
  if (initial.size() != s) throw InputError("initial state has wrong length");
  for (auto x : initial)
    if (x < 0) throw InputError("initial counts must be non-negative");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InputError("t_end must be positive and finite");

  std::vector<std::vector<int>> delta(r);
  for (std::size_t k = 0; k < r; ++k) delta[k] = net.change(k);

  State x = initial;
  double t = 0.0;
  std::size_t next_grid = 0;
  auto flush_grid = [&](double upto, bool inclusive) {
    while (next_grid < grid.size() && (grid[next_grid] < upto || (inclusive && grid[next_grid] <= upto))) {
      on_grid(next_grid, x);
      ++next_grid;
    }
  };

  while (true) {
    const Eigen::VectorXd a = propensity(net, x);
    const double a0 = a.sum();
    if (!std::isfinite(a0)) throw SimulationError(fmt::format("total propensity is not finite at t={}", t));
    if (a0 <= 0.0) break;
    const double dt = -std::log(rand::uniform_open(rng)) / a0;
    const double target = rand::uniform_open(rng) * a0;
    const double t_next = t + dt;
    if (t_next > t_end) break;

    std::size_t k = 0;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (; k < r; ++k) {
      if (a(static_cast<Eigen::Index>(k)) > 0.0) last_positive = k;
      acc += a(static_cast<Eigen::Index>(k));
      if (target < acc) break;
    }
    if (k == r) k = last_positive;

    // State before the event holds on [t, t_next); grid points equal to
    // t_next see the post-event state.
    flush_grid(t_next, false);
    t = t_next;
    for (std::size_t i = 0; i < s; ++i) {
      x[i] += delta[k][i];
      if (x[i] < 0) throw SimulationError("simulation produced a negative count");
    }
    on_event(t, x, static_cast<int>(k));
  }
  flush_grid(t_end, true);
}

void check_grid(const std::vector<double>& grid, double t_end) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || grid[i] < 0.0) throw InputError("grid points must be finite and >= 0");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw InputError("grid must be strictly increasing");
    if (grid[i] > t_end) throw InputError(fmt::format("grid point {} lies beyond t_end {}", grid[i], t_end));
  }
}

}  // namespace

JumpPath simulate_gillespie(const ReactionNetwork& net, const State& initial, double t_end, Rng& rng,
                            const SimulationOptions& options) {
  check_grid(options.snapshot_grid, t_end);
  JumpPath path;
  path.initial = initial;
  path.t_end = t_end;
  path.snapshot_grid = options.snapshot_grid;
  path.snapshots.resize(options.snapshot_grid.size());
  run_direct_method(
      net, initial, t_end, options.snapshot_grid, rng,
      [&](double t, const State& x, int k) {
        ++path.total_events;
        if (path.event_times.size() < options.max_events) {
          path.event_times.push_back(t);
          path.states.push_back(x);
          path.reactions.push_back(k);
        } else {
          path.truncated = true;
        }
      },
      [&](std::size_t i, const State& x) { path.snapshots[i] = x; });
  return path;
}

Trajectory sample_on_grid(const JumpPath& path, const std::vector<double>& grid, const ReactionNetwork& net) {
  check_grid(grid, path.t_end);
  Trajectory traj;
  traj.species = net.species;
  traj.volume = net.volume;
  traj.times = grid;
  traj.counts.reserve(grid.size());
  const double last_stored = path.event_times.empty() ? 0.0 : path.event_times.back();
  for (double g : grid) {
    if (path.truncated && g >= last_stored) {
      auto it = std::find(path.snapshot_grid.begin(), path.snapshot_grid.end(), g);
      if (it == path.snapshot_grid.end())
        throw InputError("event list was truncated; grid point is only available as a snapshot");
      traj.counts.push_back(path.snapshots[static_cast<std::size_t>(it - path.snapshot_grid.begin())]);
      continue;
    }
    const auto it = std::upper_bound(path.event_times.begin(), path.event_times.end(), g);
    if (it == path.event_times.begin())
      traj.counts.push_back(path.initial);
    else
      traj.counts.push_back(path.states[static_cast<std::size_t>(it - path.event_times.begin() - 1)]);
  }
  return traj;
}

Trajectory simulate_on_grid(const ReactionNetwork& net, const State& initial, const std::vector<double>& grid,
                            Rng& rng) {
  if (grid.empty()) throw InputError("grid must not be empty");
  check_grid(grid, grid.back());
  Trajectory traj;
  traj.species = net.species;
  traj.volume = net.volume;
  traj.times = grid;
  traj.counts.resize(grid.size());
  const double t_end = grid.back() > 0.0 ? grid.back() : 1.0;
  run_direct_method(
      net, initial, t_end, grid, rng, [](double, const State&, int) {},
      [&](std::size_t i, const State& x) { traj.counts[i] = x; });
  return traj;
}

std::vector<Trajectory> simulate_ensemble(const ReactionNetwork& net, const State& initial,
                                          const std::vector<double>& grid, std::size_t count,
                                          std::uint64_t seed) {
  std::vector<Trajectory> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    Rng rng = substream(seed, "simulate", j);
    out.push_back(simulate_on_grid(net, initial, grid, rng));
  }
  return out;
}

std::vector<double> linspace(double a, double b, std::size_t points) {
  std::vector<double> out(points);
  if (points == 1) {
    out[0] = a;
    return out;
  }
  for (std::size_t i = 0; i < points; ++i)
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
  if (points > 0) out.back() = b;
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_trajectory_csv(const Trajectory& traj) {
  std::string out = fmt::format("# volume={}\ntime", traj.volume);
  for (const auto& s : traj.species) out += "," + s;
  out += "\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out += fmt::format("{}", traj.times[i]);
    for (auto x : traj.counts[i]) out += fmt::format(",{}", x);
    out += "\n";
  }
  return out;
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

}  // namespace

Trajectory parse_trajectory_csv(const std::string& text) {
  Trajectory traj;
  bool have_volume = false, have_header = false;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') {
      const auto pos = line.find("volume=");
      if (pos != std::string::npos) {
        try {
          traj.volume = std::stod(line.substr(pos + 7));
        } catch (const std::exception&) {
          throw ParseError(fmt::format("row {}: invalid volume", row), row);
        }
        if (!(traj.volume > 0.0)) throw ParseError(fmt::format("row {}: volume must be positive", row), row);
        have_volume = true;
      }
      continue;
    }
    const auto fields = split_commas(line);
    if (!have_header) {
      if (fields.size() < 2 || fields[0] != "time")
        throw ParseError(fmt::format("row {}: expected header 'time,<species>...'", row), row);
      traj.species.assign(fields.begin() + 1, fields.end());
      have_header = true;
      continue;
    }
    if (fields.size() != traj.species.size() + 1)
      throw ParseError(fmt::format("row {}: expected {} fields, found {}", row, traj.species.size() + 1, fields.size()),
                       row);
    double t;
    std::size_t used = 0;
    try {
      t = std::stod(fields[0], &used);
    } catch (const std::exception&) {
      throw ParseError(fmt::format("row {}: invalid time '{}'", row, fields[0]), row);
    }
    if (used != fields[0].size()) throw ParseError(fmt::format("row {}: invalid time '{}'", row, fields[0]), row);
    if (!traj.times.empty() && !(t > traj.times.back()))
      throw ParseError(fmt::format("row {}: times must be strictly increasing", row), row);
    State counts;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      long long v;
      try {
        v = std::stoll(fields[k], &used);
      } catch (const std::exception&) {
        throw ParseError(fmt::format("row {}: invalid count '{}'", row, fields[k]), row);
      }
      if (used != fields[k].size() || v < 0)
        throw ParseError(fmt::format("row {}: counts must be non-negative integers", row), row);
      counts.push_back(v);
    }
    traj.times.push_back(t);
    traj.counts.push_back(std::move(counts));
  }
  if (!have_header) throw ParseError("trajectory file has no header", row);
  if (traj.times.empty()) throw ParseError("trajectory file has no data rows", row);
  if (!have_volume) throw ParseError("trajectory file lacks a '# volume=' line", row);
  return traj;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << format_trajectory_csv(traj);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open trajectory file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trajectory_csv(ss.str());
}

}  // namespace synlik
