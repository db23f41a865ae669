#include "synlik/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "synlik/errors.hpp"
#include "synlik/linalg.hpp"
#include "synlik/random.hpp"

namespace synlik {

int Reaction::order() const {
  int total = 0;
  for (int v : consumed) total += v;
  return total;
}

void ReactionNetwork::validate() const {
  const std::size_t s = species.size();
  if (s == 0) throw InputError("network has no species");
  if (reactions.empty()) throw InputError("network has no reactions");
  std::set<std::string> seen;
  for (const auto& name : species) {
    if (name.empty()) throw InputError("empty species name");
    if (!seen.insert(name).second) throw InputError("duplicate species name '" + name + "'");
  }
  if (!(volume > 0.0) || !std::isfinite(volume)) throw InputError("volume must be positive and finite");
  if (!initial.empty()) {
    if (initial.size() != s) throw InputError("initial state has wrong length");
    for (auto x : initial)
      if (x < 0) throw InputError("initial counts must be non-negative");
  }
  for (std::size_t k = 0; k < reactions.size(); ++k) {
    const auto& rx = reactions[k];
    const std::string label = rx.name.empty() ? fmt::format("reaction {}", k + 1) : rx.name;
    if (rx.consumed.size() != s || rx.produced.size() != s)
      throw InputError(label + ": stoichiometry length differs from species count");
    for (std::size_t i = 0; i < s; ++i) {
      if (rx.consumed[i] < 0 || rx.produced[i] < 0) throw InputError(label + ": negative stoichiometry");
      if (rx.consumed[i] > kMaxStoichiometry || rx.produced[i] > kMaxStoichiometry)
        throw InputError(label + ": stoichiometric coefficient exceeds 10");
    }
    if (rx.consumed == rx.produced) throw InputError(label + ": reaction does not change the state");
    if (!(rx.rate >= 0.0) || !std::isfinite(rx.rate)) throw InputError(label + ": rate must be finite and >= 0");
  }
}

Eigen::VectorXd ReactionNetwork::rates() const {
  Eigen::VectorXd k(static_cast<Eigen::Index>(reactions.size()));
  for (std::size_t j = 0; j < reactions.size(); ++j) k(static_cast<Eigen::Index>(j)) = reactions[j].rate;
  return k;
}

void ReactionNetwork::set_rates(const Eigen::VectorXd& kappa) {
  if (kappa.size() != static_cast<Eigen::Index>(reactions.size()))
    throw InputError("set_rates: wrong number of rates");
  for (std::size_t j = 0; j < reactions.size(); ++j) reactions[j].rate = kappa(static_cast<Eigen::Index>(j));
}

std::vector<int> ReactionNetwork::free_reactions() const {
  std::vector<int> out;
  for (std::size_t k = 0; k < reactions.size(); ++k)
    if (!reactions[k].fixed) out.push_back(static_cast<int>(k));
  return out;
}

std::vector<int> ReactionNetwork::fixed_reactions() const {
  std::vector<int> out;
  for (std::size_t k = 0; k < reactions.size(); ++k)
    if (reactions[k].fixed) out.push_back(static_cast<int>(k));
  return out;
}

Eigen::MatrixXd ReactionNetwork::stoichiometry() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(species.size()), static_cast<Eigen::Index>(reactions.size()));
  for (std::size_t k = 0; k < reactions.size(); ++k)
    for (std::size_t i = 0; i < species.size(); ++i)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          reactions[k].produced[i] - reactions[k].consumed[i];
  return m;
}

std::vector<int> ReactionNetwork::change(std::size_t k) const {
  const auto& rx = reactions.at(k);
  std::vector<int> out(rx.consumed.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rx.produced[i] - rx.consumed[i];
  return out;
}

int ReactionNetwork::species_index(std::string_view name) const {
  for (std::size_t i = 0; i < species.size(); ++i)
    if (species[i] == name) return static_cast<int>(i);
  return -1;
}

Eigen::VectorXd propensity(const ReactionNetwork& net, const State& state) {
  const std::size_t s = net.species.size();
  if (state.size() != s) throw InputError("propensity: state length differs from species count");
  for (auto x : state)
    if (x < 0) throw InputError("propensity: negative count");
  const double n = net.volume;
  Eigen::VectorXd lambda(static_cast<Eigen::Index>(net.reactions.size()));
  for (std::size_t k = 0; k < net.reactions.size(); ++k) {
    const auto& rx = net.reactions[k];
    double value = n * rx.rate;
    for (std::size_t i = 0; i < s && value != 0.0; ++i) {
      const int nu = rx.consumed[i];
      // nu! * C(x, nu) is the falling factorial x (x-1) ... (x-nu+1).
      for (int m = 0; m < nu; ++m) value *= static_cast<double>(state[i] - m);
      if (static_cast<std::int64_t>(nu) > state[i]) value = 0.0;
    }
    const int order = rx.order();
    if (value != 0.0 && order > 0) value /= std::pow(n, order);
    lambda(static_cast<Eigen::Index>(k)) = value;
  }
  return lambda;
}

namespace {

double monomial(const std::vector<int>& exponent, const Eigen::VectorXd& c) {
  double v = 1.0;
  for (std::size_t i = 0; i < exponent.size(); ++i)
    for (int p = 0; p < exponent[i]; ++p) v *= c(static_cast<Eigen::Index>(i));
  return v;
}

void check_concentration(const Eigen::VectorXd& c, std::size_t s) {
  if (c.size() != static_cast<Eigen::Index>(s)) throw InputError("concentration has wrong length");
  for (Eigen::Index i = 0; i < c.size(); ++i)
    if (c(i) < 0.0) throw InputError("concentration must be non-negative");
}

}  // namespace

Eigen::VectorXd ode_rhs_kappa(const ReactionNetwork& net, const Eigen::VectorXd& concentration) {
  return ode_rhs_kappa(net, net.rates(), concentration);
}

Eigen::VectorXd ode_rhs_kappa(const ReactionNetwork& net, const Eigen::VectorXd& kappa,
                              const Eigen::VectorXd& concentration) {
  const std::size_t s = net.species.size();
  check_concentration(concentration, s);
  if (kappa.size() != static_cast<Eigen::Index>(net.reactions.size()))
    throw InputError("ode_rhs_kappa: wrong number of rates");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s));
  for (std::size_t k = 0; k < net.reactions.size(); ++k) {
    const auto& rx = net.reactions[k];
    const double flux = kappa(static_cast<Eigen::Index>(k)) * monomial(rx.consumed, concentration);
    if (flux == 0.0) continue;
    for (std::size_t i = 0; i < s; ++i) {
      const int delta = rx.produced[i] - rx.consumed[i];
      if (delta != 0) out(static_cast<Eigen::Index>(i)) += flux * delta;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monomial basis

namespace {

bool graded_lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  int da = 0, db = 0;
  for (int v : a) da += v;
  for (int v : b) db += v;
  if (da != db) return da < db;
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

struct RawTerm {
  int species;
  std::vector<int> exponent;
  std::map<int, int> coef;  // reaction -> integer coefficient
};

}  // namespace

MonomialBasis build_monomial_basis(const ReactionNetwork& net) {
  net.validate();
  const int s = static_cast<int>(net.species.size());
  const int r = static_cast<int>(net.reactions.size());

  // (species, exponent) -> coefficient map
  std::map<std::pair<int, std::vector<int>>, std::map<int, int>> raw;
  for (int k = 0; k < r; ++k) {
    const auto& rx = net.reactions[static_cast<std::size_t>(k)];
    for (int i = 0; i < s; ++i) {
      const int delta = rx.produced[static_cast<std::size_t>(i)] - rx.consumed[static_cast<std::size_t>(i)];
      if (delta == 0) continue;
      raw[{i, rx.consumed}][k] += delta;
    }
  }

  // Sign-normalize each term so that its lowest reaction carries a positive
  // coefficient; terms with equal normalized maps share one beta.
  struct Group {
    std::map<int, int> coef;
    std::vector<std::pair<RawTerm, int>> members;  // term, sign
  };
  std::map<std::map<int, int>, Group> groups;
  for (auto& [key, coef] : raw) {
    std::map<int, int> pruned;
    for (auto [k, v] : coef)
      if (v != 0) pruned[k] = v;
    if (pruned.empty()) continue;
    const int sign = pruned.begin()->second > 0 ? 1 : -1;
    std::map<int, int> normalized;
    for (auto [k, v] : pruned) normalized[k] = sign * v;
    auto& g = groups[normalized];
    g.coef = normalized;
    g.members.push_back({RawTerm{key.first, key.second, pruned}, sign});
  }

  std::vector<Group*> order;
  for (auto& [k, g] : groups) order.push_back(&g);
  auto group_key_less = [](const Group* a, const Group* b) {
    const int ra = a->coef.begin()->first, rb = b->coef.begin()->first;
    if (ra != rb) return ra < rb;
    const auto& ta = a->members.front().first;
    const auto& tb = b->members.front().first;
    if (ta.species != tb.species) return ta.species < tb.species;
    if (ta.exponent != tb.exponent) return graded_lex_less(ta.exponent, tb.exponent);
    return a->coef < b->coef;
  };
  for (auto* g : order)
    std::sort(g->members.begin(), g->members.end(), [](const auto& x, const auto& y) {
      if (x.first.species != y.first.species) return x.first.species < y.first.species;
      return graded_lex_less(x.first.exponent, y.first.exponent);
    });
  std::sort(order.begin(), order.end(), group_key_less);

  MonomialBasis basis;
  basis.s = s;
  basis.r = r;
  basis.d = static_cast<int>(order.size());
  basis.Q = Eigen::MatrixXd::Zero(basis.d, r);

  auto monomial_index = [&](const std::vector<int>& e) {
    for (std::size_t m = 0; m < basis.monomials.size(); ++m)
      if (basis.monomials[m] == e) return static_cast<int>(m);
    basis.monomials.push_back(e);
    return static_cast<int>(basis.monomials.size() - 1);
  };

  basis.reaction_monomial.resize(static_cast<std::size_t>(r));
  basis.reactant_exponents.resize(static_cast<std::size_t>(r));
  for (int k = 0; k < r; ++k) {
    basis.reactant_exponents[static_cast<std::size_t>(k)] = net.reactions[static_cast<std::size_t>(k)].consumed;
    basis.reaction_monomial[static_cast<std::size_t>(k)] =
        monomial_index(net.reactions[static_cast<std::size_t>(k)].consumed);
  }

  for (int j = 0; j < basis.d; ++j) {
    const Group& g = *order[static_cast<std::size_t>(j)];
    for (auto [k, v] : g.coef) basis.Q(j, k) = v;
    for (const auto& [term, sign] : g.members)
      basis.terms.push_back(MonomialTerm{term.species, monomial_index(term.exponent), j, sign});
  }
  basis.stoichiometry = net.stoichiometry();

  for (int k : net.free_reactions())
    if (basis.Q.col(k).isZero()) throw InputError("reaction '" + net.reactions[static_cast<std::size_t>(k)].name +
                                                  "' has no effect on the reaction-rate equation");
  return basis;
}

Eigen::VectorXd MonomialBasis::monomial_values(const Eigen::VectorXd& c) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(monomials.size()));
  for (std::size_t m = 0; m < monomials.size(); ++m) out(static_cast<Eigen::Index>(m)) = monomial(monomials[m], c);
  return out;
}

Eigen::MatrixXd MonomialBasis::monomial_gradients(const Eigen::VectorXd& c) const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(monomials.size()), s);
  for (std::size_t m = 0; m < monomials.size(); ++m) {
    const auto& e = monomials[m];
    for (int l = 0; l < s; ++l) {
      if (e[static_cast<std::size_t>(l)] == 0) continue;
      double v = e[static_cast<std::size_t>(l)];
      for (int i = 0; i < s; ++i) {
        const int p = e[static_cast<std::size_t>(i)] - (i == l ? 1 : 0);
        for (int q = 0; q < p; ++q) v *= c(i);
      }
      g(static_cast<Eigen::Index>(m), l) = v;
    }
  }
  return g;
}

void MonomialBasis::evaluate(const Eigen::VectorXd& beta, const Eigen::VectorXd& c, Eigen::VectorXd* f,
                             Eigen::MatrixXd* jac_c, Eigen::MatrixXd* jac_beta) const {
  if (beta.size() != d) throw InputError("beta has wrong length");
  if (c.size() != s) throw InputError("concentration has wrong length");
  const Eigen::VectorXd mv = monomial_values(c);
  if (f) {
    f->setZero(s);
    for (const auto& t : terms) (*f)(t.species) += t.sign * beta(t.beta) * mv(t.monomial);
  }
  if (jac_beta) {
    jac_beta->setZero(s, d);
    for (const auto& t : terms) (*jac_beta)(t.species, t.beta) += t.sign * mv(t.monomial);
  }
  if (jac_c) {
    const Eigen::MatrixXd mg = monomial_gradients(c);
    jac_c->setZero(s, s);
    for (const auto& t : terms) jac_c->row(t.species) += (t.sign * beta(t.beta)) * mg.row(t.monomial);
  }
}

std::string MonomialBasis::describe_beta(int j, const std::vector<std::string>& names) const {
  std::string out;
  for (int k = 0; k < r; ++k) {
    const double q = Q(j, k);
    if (q == 0.0) continue;
    const std::string name = static_cast<std::size_t>(k) < names.size() && !names[static_cast<std::size_t>(k)].empty()
                                 ? names[static_cast<std::size_t>(k)]
                                 : fmt::format("k{}", k + 1);
    const double mag = std::abs(q);
    const std::string term = mag == 1.0 ? name : fmt::format("{}*{}", mag, name);
    if (out.empty())
      out = (q < 0 ? "-" : "") + term;
    else
      out += (q < 0 ? " - " : " + ") + term;
  }
  return out;
}

Eigen::VectorXd ode_rhs_beta(const MonomialBasis& basis, const Eigen::VectorXd& beta,
                             const Eigen::VectorXd& concentration) {
  Eigen::VectorXd f;
  basis.evaluate(beta, concentration, &f, nullptr, nullptr);
  return f;
}

Eigen::VectorXd kappa_from_beta(const MonomialBasis& basis, const Eigen::VectorXd& beta) {
  if (beta.size() != basis.d) throw InputError("kappa_from_beta: beta has wrong length");
  return linalg::nnls(basis.Q, beta);
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::string_view trim(std::string_view v) {
  const auto ws = " \t\r\n";
  const auto b = v.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = v.find_last_not_of(ws);
  return v.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view v) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < v.size()) {
    while (i < v.size() && (v[i] == ' ' || v[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < v.size() && v[i] != ' ' && v[i] != '\t') ++i;
    if (i > start) out.push_back(v.substr(start, i - start));
  }
  return out;
}

double parse_double(std::string_view v, std::size_t line, const char* what) {
  std::string tmp(trim(v));
  if (tmp.empty()) throw ParseError(fmt::format("line {}: missing {}", line, what), line);
  std::size_t used = 0;
  double out;
  try {
    out = std::stod(tmp, &used);
  } catch (const std::exception&) {
    throw ParseError(fmt::format("line {}: invalid {} '{}'", line, what, tmp), line);
  }
  if (used != tmp.size()) throw ParseError(fmt::format("line {}: invalid {} '{}'", line, what, tmp), line);
  return out;
}

std::vector<int> parse_side(std::string_view side, const std::vector<std::string>& species, std::size_t line) {
  std::vector<int> counts(species.size(), 0);
  side = trim(side);
  if (side.empty()) throw ParseError(fmt::format("line {}: empty reaction side (use 0 for nothing)", line), line);
  if (side == "0") return counts;
  std::size_t pos = 0;
  while (pos <= side.size()) {
    const std::size_t plus = side.find('+', pos);
    const std::string_view item = trim(side.substr(pos, plus == std::string_view::npos ? std::string_view::npos : plus - pos));
    if (item.empty()) throw ParseError(fmt::format("line {}: empty term in reaction", line), line);
    std::size_t digits = 0;
    while (digits < item.size() && std::isdigit(static_cast<unsigned char>(item[digits]))) ++digits;
    int mult = 1;
    if (digits > 0) {
      std::from_chars(item.data(), item.data() + digits, mult);
    }
    const std::string_view name = trim(item.substr(digits));
    if (name.empty()) throw ParseError(fmt::format("line {}: missing species name in '{}'", line, item), line);
    auto it = std::find(species.begin(), species.end(), name);
    if (it == species.end()) throw ParseError(fmt::format("line {}: unknown species '{}'", line, name), line);
    if (mult <= 0 || mult > kMaxStoichiometry)
      throw ParseError(fmt::format("line {}: multiplicity {} out of range 1..10", line, mult), line);
    counts[static_cast<std::size_t>(it - species.begin())] += mult;
    if (plus == std::string_view::npos) break;
    pos = plus + 1;
  }
  return counts;
}

}  // namespace

ReactionNetwork parse_network(std::string_view text) {
  ReactionNetwork net;
  bool have_species = false, have_volume = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.rfind("species:", 0) == 0) {
      if (have_species) throw ParseError(fmt::format("line {}: species declared twice", line_no), line_no);
      for (auto tok : split_ws(line.substr(8))) {
        if (std::find(net.species.begin(), net.species.end(), tok) != net.species.end())
          throw ParseError(fmt::format("line {}: duplicate species '{}'", line_no, tok), line_no);
        if (tok == "0" || std::isdigit(static_cast<unsigned char>(tok[0])))
          throw ParseError(fmt::format("line {}: species names must not start with a digit", line_no), line_no);
        net.species.emplace_back(tok);
      }
      if (net.species.empty()) throw ParseError(fmt::format("line {}: no species listed", line_no), line_no);
      have_species = true;
      continue;
    }
    if (line.rfind("volume:", 0) == 0) {
      net.volume = parse_double(line.substr(7), line_no, "volume");
      if (!(net.volume > 0.0)) throw ParseError(fmt::format("line {}: volume must be positive", line_no), line_no);
      have_volume = true;
      continue;
    }
    if (line.rfind("initial:", 0) == 0) {
      if (!have_species) throw ParseError(fmt::format("line {}: initial before species", line_no), line_no);
      net.initial.clear();
      for (auto tok : split_ws(line.substr(8))) {
        const double v = parse_double(tok, line_no, "initial count");
        if (v < 0 || v != std::floor(v))
          throw ParseError(fmt::format("line {}: initial counts must be non-negative integers", line_no), line_no);
        net.initial.push_back(static_cast<std::int64_t>(v));
      }
      if (net.initial.size() != net.species.size())
        throw ParseError(fmt::format("line {}: expected {} initial counts", line_no, net.species.size()), line_no);
      continue;
    }

    if (!have_species) throw ParseError(fmt::format("line {}: reaction before species declaration", line_no), line_no);
    const auto arrow = line.find("->");
    const auto at = line.find('@');
    if (arrow == std::string_view::npos || at == std::string_view::npos || at < arrow)
      throw ParseError(fmt::format("line {}: expected 'reactants -> products @ name'", line_no), line_no);
    Reaction rx;
    rx.consumed = parse_side(line.substr(0, arrow), net.species, line_no);
    rx.produced = parse_side(line.substr(arrow + 2, at - arrow - 2), net.species, line_no);
    auto tail = split_ws(line.substr(at + 1));
    if (tail.empty()) throw ParseError(fmt::format("line {}: missing rate name", line_no), line_no);
    if (tail.size() > 2 || (tail.size() == 2 && tail[1] != "fixed"))
      throw ParseError(fmt::format("line {}: unexpected text after rate", line_no), line_no);
    rx.fixed = tail.size() == 2;
    const std::string_view spec = tail[0];
    const auto eq = spec.find('=');
    rx.name = std::string(spec.substr(0, eq));
    if (rx.name.empty()) throw ParseError(fmt::format("line {}: empty rate name", line_no), line_no);
    if (eq != std::string_view::npos) {
      const auto value = spec.substr(eq + 1);
      if (value == "free") {
        if (rx.fixed) throw ParseError(fmt::format("line {}: a free rate cannot be fixed", line_no), line_no);
        rx.rate = 0.0;
      } else {
        rx.rate = parse_double(value, line_no, "rate");
        if (!(rx.rate >= 0.0)) throw ParseError(fmt::format("line {}: rate must be >= 0", line_no), line_no);
      }
    } else if (rx.fixed) {
      throw ParseError(fmt::format("line {}: a fixed rate needs a value", line_no), line_no);
    }
    if (rx.consumed == rx.produced)
      throw ParseError(fmt::format("line {}: reaction does not change the state", line_no), line_no);
    for (const auto& other : net.reactions)
      if (other.name == rx.name) throw ParseError(fmt::format("line {}: duplicate rate name '{}'", line_no, rx.name), line_no);
    net.reactions.push_back(std::move(rx));
  }
  if (!have_species) throw ParseError("missing 'species:' line", line_no);
  if (!have_volume) throw ParseError("missing 'volume:' line", line_no);
  if (net.reactions.empty()) throw ParseError("no reactions", line_no);
  net.validate();
  return net;
}

ReactionNetwork read_network_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open network file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

std::string format_network(const ReactionNetwork& net) {
  std::string out = "species:";
  for (const auto& s : net.species) out += " " + s;
  out += fmt::format("\nvolume: {}\n", net.volume);
  if (!net.initial.empty()) {
    out += "initial:";
    for (auto x : net.initial) out += fmt::format(" {}", x);
    out += "\n";
  }
  auto side = [&](const std::vector<int>& v) {
    std::string t;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == 0) continue;
      if (!t.empty()) t += " + ";
      if (v[i] > 1) t += std::to_string(v[i]);
      t += net.species[i];
    }
    return t.empty() ? std::string("0") : t;
  };
  for (const auto& rx : net.reactions) {
    out += fmt::format("{} -> {} @ {}={}{}\n", side(rx.consumed), side(rx.produced), rx.name, rx.rate,
                       rx.fixed ? " fixed" : "");
  }
  return out;
}

std::uint64_t network_hash(const ReactionNetwork& net) { return fnv1a64(format_network(net)); }

}  // namespace synlik
