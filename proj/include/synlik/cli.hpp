#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "synlik/network.hpp"
#include "synlik/sampler.hpp"
#include "synlik/summary.hpp"

namespace synlik::cli {

struct RunConfig {
  std::string network;
  std::vector<std::string> data;
  std::string out = ".";
  std::uint64_t seed = 1;

  // simulate
  int trajectories = 1;
  double t_end = 0.0;
  int points = 0;

  // fit
  FitMethod method = FitMethod::Mef;
  WeightMode weights = WeightMode::Lna;
  double rtol = 1e-10;
  double atol = 1e-12;

  // infer
  int iters = 1000;
  int burnin = 0;
  std::optional<SigmaMode> sigma;
  std::optional<double> vprop;
  double omega = 0.5;
  bool compat_psi_diag = false;

  // diagnose
  int acf_lag = 50;
};

/// Sampler inputs for the free reactions of `net`. Fixed-rate reactions are
/// moved to the data side: beta_hat_j - Q_fixed kappa_fixed.
struct InferSetup {
  SamplerSpec spec;
  std::vector<int> free_reactions;
  std::vector<std::string> names;
};

InferSetup build_infer_setup(const ReactionNetwork& net, const std::vector<SummaryStatistic>& stats,
                             const RunConfig& config);

/// Expands directories into their sorted `*.csv` entries.
std::vector<std::string> trajectory_files(const std::vector<std::string>& paths);

void cmd_simulate(const RunConfig& config);
void cmd_fit(const RunConfig& config);
void cmd_infer(const RunConfig& config);
void cmd_diagnose(const RunConfig& config);

/// Parses arguments, dispatches the subcommand and maps errors to exit codes:
/// 0 success, 1 runtime or numerical failure, 2 usage or validation.
int run(int argc, const char* const* argv);

}  // namespace synlik::cli
