#include <cmath>
#include <random>

#include "doctest.h"
#include "synlik/diagnostics.hpp"
#include "synlik/errors.hpp"

using namespace synlik;

namespace {

Chain chain_from(const std::vector<std::vector<double>>& columns, int burn_in = 0, double omega = 0.5) {
  Chain c;
  const auto rows = static_cast<Eigen::Index>(columns.front().size());
  const auto r = static_cast<Eigen::Index>(columns.size());
  c.kappa.resize(rows, r);
  c.omega_star = Eigen::MatrixXd::Constant(rows, r, omega);
  for (Eigen::Index k = 0; k < r; ++k)
    for (Eigen::Index i = 0; i < rows; ++i) c.kappa(i, k) = columns[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
  c.accept.assign(static_cast<std::size_t>(rows), 0);
  c.burn_in = burn_in;
  return c;
}

}  // namespace

TEST_CASE("quantiles and medians") {
  CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile({4, 1, 3, 2}, 0.0) == 1.0);
  CHECK(quantile({4, 1, 3, 2}, 1.0) == 4.0);
  CHECK(quantile({1, 2, 3, 4, 5}, 0.1) == doctest::Approx(1.4));
  CHECK_THROWS_AS(quantile({}, 0.5), InputError);
  CHECK_THROWS_AS(quantile({1.0}, 1.5), InputError);

  CHECK(posterior_median_and_ci({0, 0, 0, 1, 2}).median == 0.0);
  CHECK(posterior_median_and_ci({1, 2, 3}).median == 2.0);
  const auto iv = posterior_median_and_ci({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.8);
  CHECK(iv.lo == doctest::Approx(1.0));
  CHECK(iv.hi == doctest::Approx(9.0));
  CHECK_THROWS_AS(posterior_median_and_ci(std::vector<double>{}), InputError);

  // Burn-in rows are excluded.
  const auto c = chain_from({{100, 100, 1, 2, 3}}, 2);
  CHECK(posterior_median_and_ci(c, 0).median == 2.0);
}

TEST_CASE("median is zero exactly when most samples are zero") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int len = 5 + trial % 20;
    std::vector<double> x;
    int zeros = 0;
    const double p = u(gen);
    for (int i = 0; i < len; ++i) {
      if (u(gen) < p) {
        x.push_back(0.0);
        ++zeros;
      } else {
        x.push_back(0.1 + u(gen));
      }
    }
    const bool zero_median = posterior_median_and_ci(x).median == 0.0;
    // With interpolation an even-length tie at the middle gives a positive median.
    CHECK(zero_median == (2 * zeros > len));
  }
}

TEST_CASE("edge probabilities") {
  const auto c = chain_from({{0, 1, 2, 0}, {1, 1, 1, 1}}, 0, 0.5);
  const auto e = edge_probabilities(c);
  CHECK(e.rao_blackwell(0) == 0.5);
  CHECK(e.naive(0) == 0.5);
  CHECK(e.naive(1) == 1.0);
  auto ones = chain_from({{1, 2, 3}}, 0, 1.0);
  CHECK(edge_probabilities(ones).rao_blackwell(0) == 1.0);
}

TEST_CASE("autocorrelation") {
  std::vector<double> alt;
  for (int i = 0; i < 1000; ++i) alt.push_back(i % 2 ? 1.0 : -1.0);
  const auto a = autocorrelation(alt, 5);
  CHECK(a.values[0] == 1.0);
  CHECK(a.values[1] == doctest::Approx(-1.0).epsilon(2e-3));
  CHECK_FALSE(a.degenerate);

  std::mt19937_64 gen(9);
  std::normal_distribution<double> z;
  std::vector<double> white(4000);
  for (double& v : white) v = z(gen);
  const auto w = autocorrelation(white, 100);
  int outside = 0;
  for (int lag = 1; lag <= 100; ++lag)
    if (std::abs(w.values[static_cast<std::size_t>(lag)]) >= 3.0 / std::sqrt(4000.0)) ++outside;
  CHECK(outside <= 5);

  const auto flat = autocorrelation(std::vector<double>(50, 2.0), 3);
  CHECK(flat.degenerate);
  CHECK(flat.values == std::vector<double>{1.0, 0.0, 0.0, 0.0});
  CHECK_THROWS_AS(autocorrelation({1.0, 2.0}, 2), InputError);
}

TEST_CASE("effective sample size") {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> z;
  const int len = 20000;
  std::vector<double> iid(len);
  for (double& v : iid) v = z(gen);
  const auto e = effective_sample_size(iid);
  CHECK(std::abs(e.value - len) < 0.2 * len);
  CHECK(e.value <= len);

  std::vector<double> ar(len);
  const double rho = 0.9;
  ar[0] = z(gen);
  for (int i = 1; i < len; ++i) ar[static_cast<std::size_t>(i)] = rho * ar[static_cast<std::size_t>(i - 1)] + z(gen);
  const double expected = len * (1 - rho) / (1 + rho);
  CHECK(std::abs(effective_sample_size(ar).value - expected) < 0.3 * expected);

  const auto flat = effective_sample_size(std::vector<double>(100, 1.0));
  CHECK(flat.degenerate);
  CHECK(flat.value == 100.0);
}

TEST_CASE("summaries and chain files") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u;
  std::vector<double> a(300), b(300, 0.0);
  for (double& v : a) v = u(gen) < 0.3 ? 0.0 : u(gen) * 3;
  Chain c = chain_from({a, b}, 30);
  for (Eigen::Index i = 0; i < c.omega_star.rows(); ++i) c.omega_star(i, 0) = u(gen);
  for (std::size_t i = 0; i < c.accept.size(); ++i) c.accept[i] = u(gen) < 0.2 ? 1 : 0;
  c.sigma_sampled = true;

  const auto s1 = summarize(c, {"k1", "k2"}, true, 1.5);
  const auto s2 = summarize(c, {"k1", "k2"}, true, 1.5);
  CHECK(format_summary_table(s1) == format_summary_table(s2));
  CHECK(format_summary_csv(s1) == format_summary_csv(s2));
  CHECK(s1.reactions[0].interval.lo <= s1.reactions[0].interval.median);
  CHECK(s1.reactions[0].interval.median <= s1.reactions[0].interval.hi);
  CHECK(s1.reactions[1].ess_degenerate);
  CHECK(s1.samples == 270);
  CHECK_THROWS_AS(summarize(c, {"only"}, true), InputError);

  const auto text = format_chain_csv(c);
  CHECK(text.rfind("# burn_in=30\n# sigma=sampled\niter,kappa_1,kappa_2,omegastar_1,omegastar_2,accept\n", 0) == 0);
  const auto back = parse_chain_csv(text);
  CHECK(back.kappa == c.kappa);
  CHECK(back.omega_star == c.omega_star);
  CHECK(back.accept == c.accept);
  CHECK(back.burn_in == 30);
  CHECK(back.sigma_sampled);
  CHECK(format_chain_csv(back) == text);
  CHECK(format_summary_csv(summarize(back, {"k1", "k2"}, true, 1.5)) == format_summary_csv(s1));

  const auto acf = format_acf_csv(c, {"k1", "k2"}, 10);
  CHECK(acf.rfind("lag,k1,k2\n0,1,1\n", 0) == 0);

  auto offset_of = [](const std::string& t) -> std::size_t {
    try {
      parse_chain_csv(t);
    } catch (const ParseError& e) {
      return e.location();
    }
    return 0;
  };
  // Truncated mid-row.
  const std::string cut = text.substr(0, text.size() - 7);
  CHECK(offset_of(cut) == cut.size());
  const std::string head = "# burn_in=0\niter,kappa_1,omegastar_1,accept\n";
  CHECK(offset_of(head + "1,0.5,x,0\n") == head.size() + 6);
  CHECK(offset_of(head + "1,0.5,0.2\n") == head.size());
  CHECK(offset_of(head + "2,0.5,0.2,0\n") == head.size());
  CHECK(offset_of(head + "1,0.5,0.2,3\n") == head.size() + 10);
  CHECK_THROWS_AS(parse_chain_csv("iter,kappa_1,omegastar_1,accept\n1,0,0,0\n"), ParseError);
  CHECK_THROWS_AS(read_chain_csv("/nonexistent/chain.csv"), InputError);
}
