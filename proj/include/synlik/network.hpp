#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace synlik {

using State = std::vector<std::int64_t>;

inline constexpr int kMaxStoichiometry = 10;

struct Reaction {
  std::string name;
  std::vector<int> consumed;  // nu_k
  std::vector<int> produced;  // nu'_k
  double rate = 0.0;
  bool fixed = false;

  int order() const;  // |nu_k|
};

struct ReactionNetwork {
  std::vector<std::string> species;
  std::vector<Reaction> reactions;
  double volume = 1.0;
  State initial;  // optional; empty when the file gives none

  std::size_t num_species() const { return species.size(); }
  std::size_t num_reactions() const { return reactions.size(); }

  /// Throws InputError when any structural invariant fails.
  void validate() const;

  Eigen::VectorXd rates() const;
  void set_rates(const Eigen::VectorXd& kappa);
  std::vector<int> free_reactions() const;
  std::vector<int> fixed_reactions() const;

  /// (s x r) matrix of nu'_k - nu_k.
  Eigen::MatrixXd stoichiometry() const;
  std::vector<int> change(std::size_t k) const;

  int species_index(std::string_view name) const;  // -1 when absent
};

/// lambda_k^(n)(x) for every reaction, using the rates stored in the network.
Eigen::VectorXd propensity(const ReactionNetwork& net, const State& state);

/// Mass-action reaction-rate RHS with the network's rates, or with `kappa`.
Eigen::VectorXd ode_rhs_kappa(const ReactionNetwork& net, const Eigen::VectorXd& concentration);
Eigen::VectorXd ode_rhs_kappa(const ReactionNetwork& net, const Eigen::VectorXd& kappa,
                              const Eigen::VectorXd& concentration);

struct MonomialTerm {
  int species = 0;
  int monomial = 0;  // index into MonomialBasis::monomials
  int beta = 0;      // index of the beta coefficient
  int sign = 1;      // contribution is sign * beta * monomial
};

struct MonomialBasis {
  int s = 0;
  int r = 0;
  int d = 0;
  std::vector<std::vector<int>> monomials;  // distinct exponent vectors
  std::vector<MonomialTerm> terms;
  Eigen::MatrixXd Q;  // d x r

  // Reaction structure kept for the diffusion matrix of the LNA.
  std::vector<std::vector<int>> reactant_exponents;  // r entries, each length s
  std::vector<int> reaction_monomial;                // r entries
  Eigen::MatrixXd stoichiometry;                     // s x r

  Eigen::VectorXd monomial_values(const Eigen::VectorXd& c) const;
  /// (num_monomials x s) matrix of partial derivatives.
  Eigen::MatrixXd monomial_gradients(const Eigen::VectorXd& c) const;

  /// RHS, its Jacobian in c (s x s) and its derivative in beta (s x d).
  /// Null outputs are skipped.
  void evaluate(const Eigen::VectorXd& beta, const Eigen::VectorXd& c, Eigen::VectorXd* f,
                Eigen::MatrixXd* jac_c, Eigen::MatrixXd* jac_beta) const;

  /// Human-readable form of coefficient j, e.g. "k7 - k8 + k10".
  std::string describe_beta(int j, const std::vector<std::string>& reaction_names) const;
};

MonomialBasis build_monomial_basis(const ReactionNetwork& net);

Eigen::VectorXd ode_rhs_beta(const MonomialBasis& basis, const Eigen::VectorXd& beta,
                             const Eigen::VectorXd& concentration);

/// Non-negative kappa minimizing ||Q kappa - beta||.
Eigen::VectorXd kappa_from_beta(const MonomialBasis& basis, const Eigen::VectorXd& beta);

/// Text format: `species:`, `volume:`, optional `initial:` and one reaction
/// per line as `A + 2B -> C @ name[=value|=free] [fixed]`.
ReactionNetwork parse_network(std::string_view text);
ReactionNetwork read_network_file(const std::string& path);
std::string format_network(const ReactionNetwork& net);
std::uint64_t network_hash(const ReactionNetwork& net);

}  // namespace synlik
