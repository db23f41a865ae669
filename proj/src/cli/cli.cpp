#include "synlik/cli.hpp"

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <fstream>
#include <iostream>

#include "synlik/diagnostics.hpp"
#include "synlik/errors.hpp"
#include "synlik/ssa.hpp"

namespace fs = std::filesystem;

namespace synlik::cli {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

fs::path prepare_out(const RunConfig& config) {
  fs::path dir(config.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + config.out + "': " + ec.message());
  return dir;
}

ReactionNetwork load_network(const RunConfig& config) {
  if (config.network.empty()) throw InputError("--network is required");
  if (!fs::exists(config.network)) throw InputError("network file not found: '" + config.network + "'");
  return read_network_file(config.network);
}

std::string single_input(const RunConfig& config, const std::string& default_name) {
  if (config.data.size() != 1) throw InputError("--data expects exactly one path");
  fs::path p(config.data.front());
  if (fs::is_directory(p)) p /= default_name;
  if (!fs::exists(p)) throw InputError("input file not found: '" + p.string() + "'");
  return p.string();
}

std::string grid_text(const std::vector<double>& grid) {
  std::string out;
  for (std::size_t i = 0; i < grid.size(); ++i) out += fmt::format("{}{:.17g}", i ? "," : "", grid[i]);
  return out;
}

}  // namespace

std::vector<std::string> trajectory_files(const std::vector<std::string>& paths) {
  std::vector<std::string> files;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& entry : fs::directory_iterator(p))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") found.push_back(entry.path().string());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      if (!fs::exists(p)) throw InputError("trajectory file not found: '" + p + "'");
      files.push_back(p);
    }
  }
  if (files.empty()) throw InputError("no trajectory files given");
  return files;
}

void cmd_simulate(const RunConfig& config) {
  const auto net = load_network(config);
  if (net.initial.empty()) throw InputError("network file has no 'initial:' line");
  if (!(config.t_end > 0.0)) throw InputError("--t-end must be positive");
  if (config.points < 2) throw InputError("--points must be at least 2");
  if (config.trajectories < 1) throw InputError("--trajectories must be at least 1");
  const auto grid = linspace(0.0, config.t_end, static_cast<std::size_t>(config.points));
  const auto out = prepare_out(config);

  const auto ensemble =
      simulate_ensemble(net, net.initial, grid, static_cast<std::size_t>(config.trajectories), config.seed);
  std::string manifest = fmt::format("seed = {}\nnetwork_hash = {:016x}\ntrajectories = {}\ngrid = {}\n",
                                     config.seed, network_hash(net), ensemble.size(), grid_text(grid));
  for (std::size_t j = 0; j < ensemble.size(); ++j) {
    const auto name = fmt::format("traj_{:03d}.csv", j + 1);
    write_trajectory_csv((out / name).string(), ensemble[j]);
    manifest += fmt::format("file = {}\n", name);
  }
  write_text(out / "manifest.txt", manifest);
  write_text(out / "network.txt", format_network(net));
  spdlog::info("simulate: wrote {} trajectories to {}", ensemble.size(), out.string());
}

void cmd_fit(const RunConfig& config) {
  const auto net = load_network(config);
  const auto basis = build_monomial_basis(net);
  const auto files = trajectory_files(config.data);
  FitConfig fc;
  fc.weights = config.weights;
  fc.ode = OdeOptions{config.rtol, config.atol};
  fc.validate();

  std::vector<SummaryStatistic> stats;
  int failures = 0;
  for (const auto& file : files) {
    const auto traj = read_trajectory_csv(file);
    if (traj.species != net.species)
      throw InputError(fmt::format("'{}': species columns do not match the network", file));
    try {
      auto stat = fit(config.method, traj, basis, fc);
      stat.label = fs::path(file).filename().string();
      if (!stat.converged) {
        spdlog::warn("fit: '{}' did not converge (|G| = {:.3g})", file, stat.ef_norm);
        ++failures;
      }
      stats.push_back(std::move(stat));
    } catch (const std::runtime_error& e) {
      spdlog::error("fit: '{}' failed: {}", file, e.what());
      ++failures;
    }
  }
  if (stats.empty() || failures == static_cast<int>(files.size()))
    throw std::runtime_error("fit: every trajectory failed to fit");
  const auto out = prepare_out(config);
  write_summary_file((out / "summary.txt").string(), stats, net.volume);
  spdlog::info("fit: {} statistics ({} flagged) written to {}", stats.size(), failures,
               (out / "summary.txt").string());
}

InferSetup build_infer_setup(const ReactionNetwork& net, const std::vector<SummaryStatistic>& stats,
                             const RunConfig& config) {
  if (stats.empty()) throw InputError("infer: no summary statistics");
  const auto basis = build_monomial_basis(net);
  for (const auto& s : stats)
    if (s.beta_hat.size() != basis.d)
      throw InputError(fmt::format("infer: statistic has {} entries but the network basis has d = {}",
                                   s.beta_hat.size(), basis.d));
  if (!(config.omega > 0.0 && config.omega < 1.0)) throw InputError("--omega must lie in (0, 1)");

  InferSetup setup;
  setup.free_reactions = net.free_reactions();
  if (setup.free_reactions.empty()) throw InputError("infer: every reaction is fixed");
  const auto fixed = net.fixed_reactions();
  const int r = static_cast<int>(setup.free_reactions.size());
  Eigen::MatrixXd Q(basis.d, r);
  for (int k = 0; k < r; ++k) {
    Q.col(k) = basis.Q.col(setup.free_reactions[static_cast<std::size_t>(k)]);
    setup.names.push_back(net.reactions[static_cast<std::size_t>(setup.free_reactions[static_cast<std::size_t>(k)])].name);
  }
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(basis.d);
  for (int k : fixed) offset += basis.Q.col(k) * net.reactions[static_cast<std::size_t>(k)].rate;

  std::vector<Eigen::VectorXd> betas;
  Eigen::MatrixXd cov_mean = Eigen::MatrixXd::Zero(basis.d, basis.d);
  for (const auto& s : stats) {
    betas.push_back(s.beta_hat - offset);
    if (s.asym_cov.rows() == basis.d && s.asym_cov.cols() == basis.d) cov_mean += s.asym_cov;
  }
  cov_mean /= static_cast<double>(stats.size());
  const bool have_cov = cov_mean.squaredNorm() > 0.0 && Eigen::LLT<Eigen::MatrixXd>(cov_mean).info() == Eigen::Success;

  const Eigen::MatrixXd psi = config.compat_psi_diag ? Eigen::MatrixXd(Eigen::MatrixXd::Identity(basis.d, basis.d) * 1e-4)
                                                     : empirical_psi(stats);
  setup.spec = unimodal_preset(Q, betas, net.volume, Eigen::VectorXd::Constant(r, config.omega), psi);
  setup.spec.sigma_mode = config.sigma.value_or(stats.size() == 1 ? SigmaMode::Fixed : SigmaMode::Sampled);
  if (setup.spec.sigma_mode == SigmaMode::Fixed && !have_cov)
    throw InputError("infer: fixed sigma mode needs a positive definite covariance in the summary file");
  setup.spec.sigma0 = have_cov ? cov_mean : psi;
  if (config.vprop) setup.spec.v_prop = *config.vprop;
  setup.spec.iterations = config.iters;
  setup.spec.burn_in = config.burnin;
  setup.spec.seed = config.seed;
  setup.spec.validate();
  return setup;
}

void cmd_infer(const RunConfig& config) {
  const auto net = load_network(config);
  double volume = 0.0;
  const auto stats = read_summary_file(single_input(config, "summary.txt"), &volume);
  if (volume != net.volume)
    throw InputError(fmt::format("infer: summary volume {} differs from network volume {}", volume, net.volume));
  const auto setup = build_infer_setup(net, stats, config);
  const auto out = prepare_out(config);

  const auto start = std::chrono::steady_clock::now();
  const auto chain = run_chain(setup.spec);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const bool sampled = setup.spec.sigma_mode == SigmaMode::Sampled;
  const auto summary = summarize(chain, setup.names, sampled);
  write_chain_csv((out / "chain.csv").string(), chain);
  write_text(out / "posterior.txt", format_summary_table(summary));
  write_text(out / "posterior.csv", format_summary_csv(summary));
  if (chain.size() > chain.burn_in + 1)
    write_text(out / "acf.csv",
               format_acf_csv(chain, setup.names, std::min(config.acf_lag, chain.size() - chain.burn_in - 1)));
  write_text(out / "run.txt",
             fmt::format("seed = {}\nnetwork_hash = {:016x}\niterations = {}\nburn_in = {}\nsigma = {}\n"
                         "v = {:.17g}\nvprop = {:.17g}\nomega = {:.17g}\nN = {}\nd = {}\nr = {}\n"
                         "not_pd_rejections = {}\n",
                         config.seed, network_hash(net), setup.spec.iterations, setup.spec.burn_in,
                         to_string(setup.spec.sigma_mode), setup.spec.v, setup.spec.v_prop, config.omega,
                         setup.spec.N(), setup.spec.d(), setup.spec.r(), chain.not_pd_rejections));
  std::cout << format_summary_table(summary);
  std::cout << fmt::format("runtime: {:.3f} s ({:.1f} us/iteration)\n", seconds,
                           chain.size() ? 1e6 * seconds / chain.size() : 0.0);
}

void cmd_diagnose(const RunConfig& config) {
  const auto chain = read_chain_csv(single_input(config, "chain.csv"));
  std::vector<std::string> names;
  if (!config.network.empty()) {
    const auto net = load_network(config);
    for (int k : net.free_reactions()) names.push_back(net.reactions[static_cast<std::size_t>(k)].name);
    if (static_cast<Eigen::Index>(names.size()) != chain.kappa.cols())
      throw InputError("diagnose: chain columns do not match the network's free reactions");
  } else {
    for (Eigen::Index k = 0; k < chain.kappa.cols(); ++k) names.push_back(fmt::format("kappa_{}", k + 1));
  }
  const auto summary = summarize(chain, names, chain.sigma_sampled);
  const auto out = prepare_out(config);
  write_text(out / "posterior.txt", format_summary_table(summary));
  write_text(out / "posterior.csv", format_summary_csv(summary));
  if (chain.size() > chain.burn_in + 1)
    write_text(out / "acf.csv", format_acf_csv(chain, names, std::min(config.acf_lag, chain.size() - chain.burn_in - 1)));
  std::cout << format_summary_table(summary);
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Bayesian inference of stochastic mass-action reaction networks"};
  app.set_config("--config", "", "Read options from a key = value file");
  app.require_subcommand(1);

  RunConfig cfg;
  std::string method = "mef", weights = "lna", sigma, level = "info";
  double vprop = 0.0;

  app.add_option("--network", cfg.network, "Network definition file");
  app.add_option("--data", cfg.data, "Input files or directories");
  app.add_option("--out", cfg.out, "Output directory");
  app.add_option("--seed", cfg.seed, "Master seed");
  app.add_option("--trajectories", cfg.trajectories, "Number of trajectories to simulate");
  app.add_option("--t-end", cfg.t_end, "Final observation time");
  app.add_option("--points", cfg.points, "Number of equispaced observation times on [0, t_end]");
  app.add_option("--method", method, "Summary statistic")->check(CLI::IsMember({"lse", "mef"}, CLI::ignore_case));
  app.add_option("--weights", weights, "MEF weight mode")
      ->check(CLI::IsMember({"identity", "lna", "marginal", "empirical"}, CLI::ignore_case));
  app.add_option("--rtol", cfg.rtol, "ODE relative tolerance")->check(CLI::PositiveNumber);
  app.add_option("--atol", cfg.atol, "ODE absolute tolerance")->check(CLI::PositiveNumber);
  app.add_option("--iters", cfg.iters, "MCMC iterations")->check(CLI::NonNegativeNumber);
  app.add_option("--burnin", cfg.burnin, "Burn-in iterations")->check(CLI::NonNegativeNumber);
  app.add_option("--sigma", sigma, "Covariance handling")->check(CLI::IsMember({"sampled", "fixed"}, CLI::ignore_case));
  auto* vprop_opt = app.add_option("--vprop", vprop, "Wishart proposal degrees of freedom");
  app.add_option("--omega", cfg.omega, "Prior edge probability");
  app.add_flag("--compat-psi-diag", cfg.compat_psi_diag, "Use Psi = 1e-4 I instead of the empirical Psi");
  app.add_option("--acf-lag", cfg.acf_lag, "Maximum autocorrelation lag")->check(CLI::PositiveNumber);
  app.add_option("--log-level", level, "trace, debug, info, warn, error or off");

  auto* simulate = app.add_subcommand("simulate", "Simulate trajectories with the Gillespie algorithm");
  auto* fit_cmd = app.add_subcommand("fit", "Fit LSE or MEF summary statistics to trajectories");
  auto* infer = app.add_subcommand("infer", "Run the spike-and-slab sampler on summary statistics");
  auto* diagnose = app.add_subcommand("diagnose", "Summarize an existing chain");
  for (auto* sub : {simulate, fit_cmd, infer, diagnose}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    spdlog::set_level(spdlog::level::from_str(level));
    cfg.method = parse_fit_method(method);
    cfg.weights = parse_weight_mode(weights);
    if (!sigma.empty()) cfg.sigma = parse_sigma_mode(sigma);
    if (vprop_opt->count() > 0) cfg.vprop = vprop;
    if (simulate->parsed()) cmd_simulate(cfg);
    else if (fit_cmd->parsed()) cmd_fit(cfg);
    else if (infer->parsed()) cmd_infer(cfg);
    else cmd_diagnose(cfg);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << " (at " << e.location() << ")\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace synlik::cli
