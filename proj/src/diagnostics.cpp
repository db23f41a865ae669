#include "synlik/diagnostics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "synlik/errors.hpp"

namespace synlik {

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InputError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("quantile probability must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> kept_samples(const Chain& chain, int k) {
  if (k < 0 || k >= chain.kappa.cols()) throw InputError("rate index out of range");
  std::vector<double> out;
  for (int i = chain.burn_in; i < chain.size(); ++i) out.push_back(chain.kappa(i, k));
  return out;
}

Interval posterior_median_and_ci(const std::vector<double>& samples, double level) {
  if (samples.empty()) throw InputError("posterior summary needs a non-empty chain after burn-in");
  if (!(level > 0.0 && level < 1.0)) throw InputError("credible level must lie in (0, 1)");
  const double tail = 0.5 * (1.0 - level);
  return {quantile(samples, 0.5), quantile(samples, tail), quantile(samples, 1.0 - tail)};
}

Interval posterior_median_and_ci(const Chain& chain, int k, double level) {
  return posterior_median_and_ci(kept_samples(chain, k), level);
}

EdgeProbabilities edge_probabilities(const Chain& chain) {
  const auto r = chain.kappa.cols();
  EdgeProbabilities out{Eigen::VectorXd::Zero(r), Eigen::VectorXd::Zero(r)};
  const int kept = chain.size() - chain.burn_in;
  if (kept <= 0) return out;
  for (int i = chain.burn_in; i < chain.size(); ++i) {
    out.rao_blackwell += chain.omega_star.row(i).transpose();
    for (Eigen::Index k = 0; k < r; ++k)
      if (chain.kappa(i, k) != 0.0) out.naive(k) += 1.0;
  }
  out.rao_blackwell /= kept;
  out.naive /= kept;
  out.rao_blackwell = out.rao_blackwell.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

Autocorrelation autocorrelation(const std::vector<double>& x, int max_lag) {
  if (max_lag < 0 || static_cast<std::size_t>(max_lag) >= x.size())
    throw InputError("autocorrelation needs a chain longer than the maximum lag");
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = x[i] - mean;
  double c0 = 0.0;
  for (double v : c) c0 += v * v;

  Autocorrelation out;
  out.values.assign(static_cast<std::size_t>(max_lag) + 1, 0.0);
  out.values[0] = 1.0;
  if (!(c0 > 0.0)) {
    out.degenerate = true;
    return out;
  }
  for (int lag = 1; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + static_cast<std::size_t>(lag) < n; ++i) s += c[i] * c[i + static_cast<std::size_t>(lag)];
    out.values[static_cast<std::size_t>(lag)] = s / c0;
  }
  return out;
}

EffectiveSampleSize effective_sample_size(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) return {static_cast<double>(n), true};
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> c(n);
  double c0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = x[i] - mean;
    c0 += c[i] * c[i];
  }
  if (!(c0 > 0.0)) return {static_cast<double>(n), true};

  auto rho = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
    return s / c0;
  };
  // Sum of consecutive pairs while they stay positive.
  double tau = -1.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double gamma = rho(2 * m) + rho(2 * m + 1);
    if (!(gamma > 0.0)) break;
    tau += 2.0 * gamma;
  }
  const double ess = tau > 0.0 ? static_cast<double>(n) / tau : static_cast<double>(n);
  return {std::min(ess, static_cast<double>(n)), false};
}

PosteriorSummary summarize(const Chain& chain, const std::vector<std::string>& names, bool sigma_sampled,
                           double runtime_seconds, double level) {
  if (names.size() != static_cast<std::size_t>(chain.kappa.cols()))
    throw InputError("summary needs one name per rate");
  PosteriorSummary out;
  out.level = level;
  out.samples = chain.size() - chain.burn_in;
  out.burn_in = chain.burn_in;
  out.sigma_sampled = sigma_sampled;
  out.acceptance_rate = sigma_sampled ? chain.acceptance_rate() : 0.0;
  out.runtime_seconds = runtime_seconds;
  const auto edges = edge_probabilities(chain);
  for (std::size_t k = 0; k < names.size(); ++k) {
    const int kk = static_cast<int>(k);
    const auto samples = kept_samples(chain, kk);
    ReactionSummary rs;
    rs.name = names[k];
    rs.interval = posterior_median_and_ci(samples, level);
    rs.edge_rao_blackwell = edges.rao_blackwell(kk);
    rs.edge_naive = edges.naive(kk);
    const auto ess = effective_sample_size(samples);
    rs.ess = ess.value;
    rs.ess_degenerate = ess.degenerate;
    out.reactions.push_back(std::move(rs));
  }
  return out;
}

std::string format_summary_table(const PosteriorSummary& s) {
  std::size_t width = 8;
  for (const auto& r : s.reactions) width = std::max(width, r.name.size());
  const int pct = static_cast<int>(std::lround(100 * s.level));
  std::string out = fmt::format("{:<{}}  {:>12}  {:>12}  {:>12}  {:>8}  {:>8}  {:>10}\n", "reaction", width, "median",
                                fmt::format("lo{}", pct), fmt::format("hi{}", pct), "P(edge)", "naive", "ESS");
  for (const auto& r : s.reactions) {
    out += fmt::format("{:<{}}  {:>12.6g}  {:>12.6g}  {:>12.6g}  {:>8.4f}  {:>8.4f}  {:>10}\n", r.name, width,
                       r.interval.median, r.interval.lo, r.interval.hi, r.edge_rao_blackwell, r.edge_naive,
                       r.ess_degenerate ? std::string("constant") : fmt::format("{:.1f}", r.ess));
  }
  out += fmt::format("samples after burn-in: {} (burn-in {})\n", s.samples, s.burn_in);
  if (s.sigma_sampled)
    out += fmt::format("Sigma acceptance rate: {:.4f}\n", s.acceptance_rate);
  else
    out += "Sigma acceptance rate: n/a (fixed)\n";
  if (s.runtime_seconds >= 0) out += fmt::format("runtime seconds: {:.3f}\n", s.runtime_seconds);
  return out;
}

std::string format_summary_csv(const PosteriorSummary& s) {
  std::string out = "reaction,median,lo,hi,edge_rao_blackwell,edge_naive,ess,ess_degenerate\n";
  for (const auto& r : s.reactions)
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", r.name, r.interval.median,
                       r.interval.lo, r.interval.hi, r.edge_rao_blackwell, r.edge_naive, r.ess,
                       r.ess_degenerate ? 1 : 0);
  out += fmt::format("# samples={} burn_in={} acceptance_rate={} sigma={}", s.samples, s.burn_in,
                     s.sigma_sampled ? fmt::format("{:.17g}", s.acceptance_rate) : std::string("na"),
                     s.sigma_sampled ? "sampled" : "fixed");
  if (s.runtime_seconds >= 0) out += fmt::format(" runtime_seconds={:.3f}", s.runtime_seconds);
  out += "\n";
  return out;
}

std::string format_acf_csv(const Chain& chain, const std::vector<std::string>& names, int max_lag) {
  const int kept = chain.size() - chain.burn_in;
  max_lag = std::min(max_lag, kept - 1);
  if (max_lag < 0) throw InputError("autocorrelation needs a non-empty chain after burn-in");
  std::vector<Autocorrelation> acfs;
  std::string out = "lag";
  for (std::size_t k = 0; k < names.size(); ++k) {
    acfs.push_back(autocorrelation(kept_samples(chain, static_cast<int>(k)), max_lag));
    out += "," + names[k];
  }
  out += "\n";
  for (int lag = 0; lag <= max_lag; ++lag) {
    out += fmt::format("{}", lag);
    for (const auto& a : acfs) out += fmt::format(",{:.17g}", a.values[static_cast<std::size_t>(lag)]);
    out += "\n";
  }
  return out;
}

std::string format_chain_csv(const Chain& chain) {
  const auto r = chain.kappa.cols();
  std::string out = fmt::format("# burn_in={}\n# sigma={}\niter", chain.burn_in,
                                chain.sigma_sampled ? "sampled" : "fixed");
  for (Eigen::Index k = 0; k < r; ++k) out += fmt::format(",kappa_{}", k + 1);
  for (Eigen::Index k = 0; k < r; ++k) out += fmt::format(",omegastar_{}", k + 1);
  out += ",accept\n";
  fmt::memory_buffer buf;
  for (int i = 0; i < chain.size(); ++i) {
    fmt::format_to(std::back_inserter(buf), "{}", i + 1);
    for (Eigen::Index k = 0; k < r; ++k) fmt::format_to(std::back_inserter(buf), ",{:.17g}", chain.kappa(i, k));
    for (Eigen::Index k = 0; k < r; ++k) fmt::format_to(std::back_inserter(buf), ",{:.17g}", chain.omega_star(i, k));
    fmt::format_to(std::back_inserter(buf), ",{}\n", chain.accept[static_cast<std::size_t>(i)]);
  }
  out.append(buf.data(), buf.size());
  return out;
}

namespace {

struct Field {
  std::string_view text;
  std::size_t offset;
};

std::vector<Field> split_line(std::string_view line, std::size_t offset) {
  std::vector<Field> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back({line.substr(start, i - start), offset + start});
      start = i + 1;
    }
  }
  return out;
}

double parse_double(const Field& f) {
  double v = 0.0;
  const auto* end = f.text.data() + f.text.size();
  const auto res = std::from_chars(f.text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || f.text.empty())
    throw ParseError(fmt::format("byte {}: invalid number '{}'", f.offset, f.text), f.offset);
  return v;
}

long long parse_int(const Field& f) {
  long long v = 0;
  const auto* end = f.text.data() + f.text.size();
  const auto res = std::from_chars(f.text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || f.text.empty())
    throw ParseError(fmt::format("byte {}: invalid integer '{}'", f.offset, f.text), f.offset);
  return v;
}

}  // namespace

Chain parse_chain_csv(const std::string& text) {
  Chain chain;
  std::vector<std::vector<double>> kappa, omega;
  long long r = -1;
  std::size_t pos = 0;
  bool burn_seen = false;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos)
      throw ParseError(fmt::format("byte {}: chain file is truncated (last line has no newline)", text.size()),
                       text.size());
    std::string_view line(text.data() + pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t line_start = pos;
    pos = nl + 1;
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto at = line.find("burn_in=");
      if (at != std::string_view::npos) {
        const Field f{line.substr(at + 8), line_start + at + 8};
        const long long b = parse_int(f);
        if (b < 0) throw ParseError(fmt::format("byte {}: burn-in must be non-negative", f.offset), f.offset);
        chain.burn_in = static_cast<int>(b);
        burn_seen = true;
      }
      if (line == "# sigma=sampled") chain.sigma_sampled = true;
      continue;
    }
    const auto fields = split_line(line, line_start);
    if (r < 0) {
      if (fields.size() < 4 || (fields.size() - 2) % 2 != 0 || fields.front().text != "iter" ||
          fields.back().text != "accept")
        throw ParseError(fmt::format("byte {}: expected header 'iter,kappa_..,omegastar_..,accept'", line_start),
                         line_start);
      r = static_cast<long long>(fields.size() - 2) / 2;
      continue;
    }
    if (fields.size() != static_cast<std::size_t>(2 * r + 2))
      throw ParseError(fmt::format("byte {}: expected {} fields, found {}", line_start, 2 * r + 2, fields.size()),
                       line_start);
    if (parse_int(fields[0]) != static_cast<long long>(kappa.size()) + 1)
      throw ParseError(fmt::format("byte {}: iterations must be consecutive from 1", fields[0].offset),
                       fields[0].offset);
    std::vector<double> kr, orow;
    for (long long k = 0; k < r; ++k) kr.push_back(parse_double(fields[static_cast<std::size_t>(1 + k)]));
    for (long long k = 0; k < r; ++k) orow.push_back(parse_double(fields[static_cast<std::size_t>(1 + r + k)]));
    const long long acc = parse_int(fields.back());
    if (acc != 0 && acc != 1)
      throw ParseError(fmt::format("byte {}: accept must be 0 or 1", fields.back().offset), fields.back().offset);
    kappa.push_back(std::move(kr));
    omega.push_back(std::move(orow));
    chain.accept.push_back(static_cast<std::uint8_t>(acc));
  }
  if (r < 0) throw ParseError("chain file has no header", text.size());
  if (!burn_seen) throw ParseError("chain file lacks a '# burn_in=' line", 0);
  const auto rows = static_cast<Eigen::Index>(kappa.size());
  if (chain.burn_in > rows) throw ParseError("burn-in exceeds the number of rows", text.size());
  chain.kappa.resize(rows, r);
  chain.omega_star.resize(rows, r);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < r; ++k) {
      chain.kappa(i, k) = kappa[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      chain.omega_star(i, k) = omega[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
  return chain;
}

void write_chain_csv(const std::string& path, const Chain& chain) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << format_chain_csv(chain);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Chain read_chain_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open chain file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_chain_csv(ss.str());
}

}  // namespace synlik
