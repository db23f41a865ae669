#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "synlik/sampler.hpp"

namespace synlik {

/// Linear interpolation between order statistics (R type 7). Throws on an
/// empty sample or p outside [0, 1].
double quantile(std::vector<double> values, double p);

struct Interval {
  double median = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Post-burn-in samples of rate k.
std::vector<double> kept_samples(const Chain& chain, int k);

Interval posterior_median_and_ci(const std::vector<double>& samples, double level = 0.95);
Interval posterior_median_and_ci(const Chain& chain, int k, double level = 0.95);

struct EdgeProbabilities {
  Eigen::VectorXd rao_blackwell;  // mean of omega* over kept iterations
  Eigen::VectorXd naive;          // fraction of kept samples that are nonzero
};

EdgeProbabilities edge_probabilities(const Chain& chain);

struct Autocorrelation {
  std::vector<double> values;  // lags 0..max_lag
  bool degenerate = false;     // constant input
};

Autocorrelation autocorrelation(const std::vector<double>& x, int max_lag);

struct EffectiveSampleSize {
  double value = 0.0;
  bool degenerate = false;
};

/// Geyer's initial positive sequence estimator, capped at the chain length.
EffectiveSampleSize effective_sample_size(const std::vector<double>& x);

struct ReactionSummary {
  std::string name;
  Interval interval;
  double edge_rao_blackwell = 0.0;
  double edge_naive = 0.0;
  double ess = 0.0;
  bool ess_degenerate = false;
};

struct PosteriorSummary {
  std::vector<ReactionSummary> reactions;
  double level = 0.95;
  int samples = 0;
  int burn_in = 0;
  double acceptance_rate = 0.0;
  bool sigma_sampled = true;
  double runtime_seconds = -1.0;  // negative when unknown
};

PosteriorSummary summarize(const Chain& chain, const std::vector<std::string>& names, bool sigma_sampled,
                           double runtime_seconds = -1.0, double level = 0.95);

std::string format_summary_table(const PosteriorSummary& summary);
std::string format_summary_csv(const PosteriorSummary& summary);

/// One column per rate: `lag,<name>...`.
std::string format_acf_csv(const Chain& chain, const std::vector<std::string>& names, int max_lag);

// Chain CSV: a `# burn_in=B` line, an optional `# sigma=sampled|fixed` line, then `iter,kappa_1..,omegastar_1..,accept`.
// Parse errors report the byte offset of the offending field.
std::string format_chain_csv(const Chain& chain);
Chain parse_chain_csv(const std::string& text);
void write_chain_csv(const std::string& path, const Chain& chain);
Chain read_chain_csv(const std::string& path);

}  // namespace synlik
