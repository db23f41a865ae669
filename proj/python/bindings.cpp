#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "synlik/cli.hpp"
#include "synlik/diagnostics.hpp"
#include "synlik/errors.hpp"
#include "synlik/network.hpp"
#include "synlik/sampler.hpp"
#include "synlik/ssa.hpp"
#include "synlik/summary.hpp"

namespace py = pybind11;
using namespace synlik;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian inference of stochastic mass-action reaction networks";

  auto input_error = py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", input_error.ptr());
  py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);
  py::register_exception<StiffnessError>(m, "StiffnessError", PyExc_RuntimeError);
  py::register_exception<NotPositiveDefiniteError>(m, "NotPositiveDefiniteError", PyExc_ArithmeticError);

  py::class_<Reaction>(m, "Reaction")
      .def_readonly("name", &Reaction::name)
      .def_readonly("consumed", &Reaction::consumed)
      .def_readonly("produced", &Reaction::produced)
      .def_readonly("rate", &Reaction::rate)
      .def_readonly("fixed", &Reaction::fixed);

  py::class_<ReactionNetwork>(m, "ReactionNetwork")
      .def_readonly("species", &ReactionNetwork::species)
      .def_readonly("reactions", &ReactionNetwork::reactions)
      .def_readonly("volume", &ReactionNetwork::volume)
      .def_readonly("initial", &ReactionNetwork::initial)
      .def_property_readonly("rates", &ReactionNetwork::rates)
      .def("stoichiometry", &ReactionNetwork::stoichiometry)
      .def("hash", [](const ReactionNetwork& n) { return network_hash(n); })
      .def("__str__", [](const ReactionNetwork& n) { return format_network(n); });

  m.def("parse_network", [](const std::string& text) { return parse_network(text); }, py::arg("text"));
  m.def("read_network_file", &read_network_file, py::arg("path"));
  m.def("propensity", &propensity, py::arg("network"), py::arg("state"));

  py::class_<MonomialBasis>(m, "MonomialBasis")
      .def_readonly("d", &MonomialBasis::d)
      .def_readonly("r", &MonomialBasis::r)
      .def_readonly("Q", &MonomialBasis::Q)
      .def_readonly("monomials", &MonomialBasis::monomials)
      .def("describe_beta", &MonomialBasis::describe_beta, py::arg("j"), py::arg("reaction_names"));
  m.def("build_monomial_basis", &build_monomial_basis, py::arg("network"));

  py::class_<Trajectory>(m, "Trajectory")
      .def(py::init([](std::vector<std::string> species, std::vector<double> times, std::vector<State> counts,
                       double volume) {
             Trajectory t{std::move(species), std::move(times), std::move(counts), volume};
             t.validate();
             return t;
           }),
           py::arg("species"), py::arg("times"), py::arg("counts"), py::arg("volume"))
      .def_readonly("species", &Trajectory::species)
      .def_readonly("times", &Trajectory::times)
      .def_readonly("counts", &Trajectory::counts)
      .def_readonly("volume", &Trajectory::volume)
      .def("concentrations", &Trajectory::concentrations)
      .def("__len__", &Trajectory::size)
      .def("to_csv", [](const Trajectory& t) { return format_trajectory_csv(t); });
  m.def("parse_trajectory_csv", &parse_trajectory_csv, py::arg("text"));
  m.def("read_trajectory_csv", &read_trajectory_csv, py::arg("path"));
  m.def("write_trajectory_csv", &write_trajectory_csv, py::arg("path"), py::arg("trajectory"));
  m.def("linspace", &linspace, py::arg("a"), py::arg("b"), py::arg("points"));
  m.def(
      "simulate",
      [](const ReactionNetwork& net, const std::vector<double>& grid, std::size_t count, std::uint64_t seed,
         std::optional<State> initial) {
        py::gil_scoped_release release;
        return simulate_ensemble(net, initial.value_or(net.initial), grid, count, seed);
      },
      py::arg("network"), py::arg("grid"), py::arg("count") = 1, py::arg("seed") = 1,
      py::arg("initial") = py::none());

  py::class_<SummaryStatistic>(m, "SummaryStatistic")
      .def_readonly("beta_hat", &SummaryStatistic::beta_hat)
      .def_readonly("asym_cov", &SummaryStatistic::asym_cov)
      .def_readonly("objective_value", &SummaryStatistic::objective_value)
      .def_readonly("ef_norm", &SummaryStatistic::ef_norm)
      .def_readonly("converged", &SummaryStatistic::converged)
      .def_readonly("iterations", &SummaryStatistic::iterations)
      .def_property_readonly("method", [](const SummaryStatistic& s) { return to_string(s.method); })
      .def_property_readonly("weights", [](const SummaryStatistic& s) { return to_string(s.weights); });
  m.def(
      "fit",
      [](const Trajectory& traj, const ReactionNetwork& net, const std::string& method, const std::string& weights,
         double rtol, double atol) {
        FitConfig config;
        config.weights = parse_weight_mode(weights);
        config.ode = OdeOptions{rtol, atol};
        const auto basis = build_monomial_basis(net);
        py::gil_scoped_release release;
        return fit(parse_fit_method(method), traj, basis, config);
      },
      py::arg("trajectory"), py::arg("network"), py::arg("method") = "mef", py::arg("weights") = "lna",
      py::arg("rtol") = 1e-10, py::arg("atol") = 1e-12);
  m.def("empirical_psi", &empirical_psi, py::arg("stats"));
  m.def("read_summary_file", [](const std::string& path) {
    double volume = 0.0;
    auto stats = read_summary_file(path, &volume);
    return py::make_tuple(stats, volume);
  });

  py::enum_<SigmaMode>(m, "SigmaMode").value("sampled", SigmaMode::Sampled).value("fixed", SigmaMode::Fixed);

  py::class_<SamplerSpec>(m, "SamplerSpec")
      .def(py::init<>())
      .def_readwrite("Q", &SamplerSpec::Q)
      .def_readwrite("beta_hats", &SamplerSpec::beta_hats)
      .def_readwrite("n", &SamplerSpec::n)
      .def_readwrite("omega", &SamplerSpec::omega)
      .def_readwrite("lambda_", &SamplerSpec::lambda)
      .def_readwrite("v", &SamplerSpec::v)
      .def_readwrite("Psi", &SamplerSpec::Psi)
      .def_readwrite("v_prop", &SamplerSpec::v_prop)
      .def_readwrite("sigma_mode", &SamplerSpec::sigma_mode)
      .def_readwrite("sigma0", &SamplerSpec::sigma0)
      .def_readwrite("kappa0", &SamplerSpec::kappa0)
      .def_readwrite("iterations", &SamplerSpec::iterations)
      .def_readwrite("burn_in", &SamplerSpec::burn_in)
      .def_readwrite("thin_sigma", &SamplerSpec::thin_sigma)
      .def_readwrite("seed", &SamplerSpec::seed)
      .def("validate", &SamplerSpec::validate);
  m.def("unimodal_preset", &unimodal_preset, py::arg("Q"), py::arg("beta_hats"), py::arg("n"), py::arg("omega"),
        py::arg("Psi"));
  m.def("synthetic_loglik", &synthetic_loglik, py::arg("kappa"), py::arg("Sigma"), py::arg("spec"));
  m.def("log_posterior", &log_posterior, py::arg("kappa"), py::arg("Sigma"), py::arg("spec"));

  py::class_<Chain>(m, "Chain")
      .def_readonly("kappa", &Chain::kappa)
      .def_readonly("omega_star", &Chain::omega_star)
      .def_readonly("accept", &Chain::accept)
      .def_readonly("burn_in", &Chain::burn_in)
      .def_readonly("sigma_sampled", &Chain::sigma_sampled)
      .def_readonly("sigma_samples", &Chain::sigma_samples)
      .def_readonly("final_sigma", &Chain::final_sigma)
      .def("acceptance_rate", &Chain::acceptance_rate)
      .def("__len__", &Chain::size)
      .def("to_csv", [](const Chain& c) { return format_chain_csv(c); });
  m.def(
      "run_chain",
      [](const SamplerSpec& spec) {
        py::gil_scoped_release release;
        return run_chain(spec);
      },
      py::arg("spec"));
  m.def("parse_chain_csv", &parse_chain_csv, py::arg("text"));

  py::class_<Interval>(m, "Interval")
      .def_readonly("median", &Interval::median)
      .def_readonly("lo", &Interval::lo)
      .def_readonly("hi", &Interval::hi);
  m.def("posterior_median_and_ci",
        py::overload_cast<const Chain&, int, double>(&posterior_median_and_ci), py::arg("chain"), py::arg("k"),
        py::arg("level") = 0.95);
  m.def(
      "edge_probabilities",
      [](const Chain& c) {
        const auto e = edge_probabilities(c);
        return py::make_tuple(e.rao_blackwell, e.naive);
      },
      py::arg("chain"));
  m.def(
      "effective_sample_size", [](const std::vector<double>& x) { return effective_sample_size(x).value; },
      py::arg("x"));
  m.def(
      "summary_table",
      [](const Chain& c, const std::vector<std::string>& names) {
        return format_summary_table(summarize(c, names, c.sigma_sampled));
      },
      py::arg("chain"), py::arg("names"));

  m.def(
      "cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "synlik");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        return cli::run(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command-line interface and returns its exit code.");
}
