#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "rfim/fields.hpp"
#include "rfim/gibbs.hpp"

using namespace rfim;

namespace {

std::vector<double> keyed_field(const Box& b, std::uint64_t seed, double H) {
  return effective_field(sample_field(FieldDistribution::gaussian(), b, seed), H);
}

}  // namespace

TEST_CASE("single site law in closed form") {
  const BoxGraph g(Box::cube(0, 2));
  for (int eta : {-1, 1})
    for (double h : {-0.7, 0.0, 1.3}) {
      const double beta = 0.4;
      const std::vector<double> f{h};
      const auto p = exact_measure(g, SpinBoundary::constant(g, eta), beta, f);
      const double a = beta * 4 * eta + h;
      CHECK(p.prob[1] == doctest::Approx(std::exp(a) / (std::exp(a) + std::exp(-a))).epsilon(1e-13));
      CHECK(magnetization(p, 0) == doctest::Approx(std::tanh(a)).epsilon(1e-13));
    }
}

TEST_CASE("exact law normalises and matches log weights") {
  const BoxGraph g(Box::cube(1, 2));
  const auto f = keyed_field(g.box(), 4, 0.8);
  const auto eta = SpinBoundary::all_plus(g);
  const auto p = exact_measure(g, eta, 0.3, f);
  double s = 0;
  for (double v : p.prob) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t c : {std::size_t{0}, std::size_t{77}, p.size() - 1}) {
    SpinConfig sigma(9);
    for (int i = 0; i < 9; ++i) sigma[static_cast<std::size_t>(i)] = static_cast<Spin>(p.ising_spin(c, i));
    CHECK(std::log(p.prob[c]) == doctest::Approx(ising_log_weight(g, sigma, eta, 0.3, f) - p.log_z).epsilon(1e-10));
  }
  CHECK_THROWS(exact_measure(g, eta, 0.3, f, 8));
}

TEST_CASE("two-state Potts is Ising") {
  // Potts state 1 plays +1; digit 0 is state 1, Ising digit 1 is +1.
  const BoxGraph g(Box::cube(1, 2));
  const double beta = 0.35, H = 0.2;
  std::vector<int> ising_b(static_cast<std::size_t>(g.num_exterior())), potts_b(ising_b.size());
  for (std::size_t k = 0; k < ising_b.size(); ++k) {
    ising_b[k] = (k % 3 == 0) ? -1 : 1;
    potts_b[k] = ising_b[k] == 1 ? 1 : 2;
  }
  const auto pi = exact_measure(g, SpinBoundary{ising_b}, beta, std::vector<double>(9, H));
  const auto pp = potts_exact_measure(g, SpinBoundary{potts_b}, beta, H, 2);
  const std::size_t mask = pi.size() - 1;
  for (std::size_t c = 0; c < pi.size(); ++c) CHECK(pp.prob[c ^ mask] == doctest::Approx(pi.prob[c]).epsilon(1e-11));
}

TEST_CASE("spin flip symmetry") {
  const BoxGraph g(Box::cube(1, 2));
  auto f = keyed_field(g.box(), 8, 1.0);
  std::vector<double> nf(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) nf[i] = -f[i];
  const auto a = exact_measure(g, SpinBoundary::all_plus(g), 0.5, f);
  const auto b = exact_measure(g, SpinBoundary::all_minus(g), 0.5, nf);
  for (int x = 0; x < 9; ++x) CHECK(magnetization(a, x) == doctest::Approx(-magnetization(b, x)).epsilon(1e-12));
  const std::vector<int> delta{4};
  CHECK(tv_marginal(g, delta, SpinBoundary::all_plus(g), SpinBoundary::all_plus(g), 0.5, f) == 0.0);
  CHECK(truncated_two_point(a, 0, 8) == doctest::Approx(truncated_two_point(b, 0, 8)).epsilon(1e-10));
}

TEST_CASE("heat bath probability in closed form") {
  const BoxGraph g(Box::cube(1, 2));
  SpinConfig sigma(9, -1);
  sigma[1] = 1;
  const auto eta = SpinBoundary::all_plus(g);
  const std::vector<double> f(9, 0.3);
  // Site 0 = (-1,-1): two plus exterior neighbours, site 1 (+) and site 3 (-).
  CHECK(neighbor_sum(g, sigma, eta, 0) == 2);
  CHECK(heat_bath_plus_probability(g, sigma, eta, 0.2, f, 0) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-2.0 * (0.2 * 2 + 0.3)))).epsilon(1e-14));
}

TEST_CASE("heat bath chain samples the exact law") {
  const BoxGraph g(Box::from_sites(2, {Site{0, 0}, Site{0, 1}, Site{1, 0}, Site{1, 1}}));
  const auto f = keyed_field(g.box(), 2, 0.7);
  std::vector<int> eta_v(static_cast<std::size_t>(g.num_exterior()), 1);
  eta_v[0] = eta_v[3] = -1;
  const SpinBoundary eta{eta_v};
  const auto p = exact_measure(g, eta, 0.45, f);
  for (auto order : {SweepOrder::Raster, SweepOrder::RandomSequential}) {
    HeatBathChain chain(g, eta, 0.45, f, 17, order);
    chain.sweeps(100);
    std::vector<double> hist(16, 0.0);
    const int n = 40000;
    for (int t = 0; t < n; ++t) {
      chain.sweep();
      std::size_t c = 0;
      for (int i = 0; i < 4; ++i)
        if (chain.state()[static_cast<std::size_t>(i)] > 0) c |= std::size_t{1} << i;
      hist[c] += 1.0 / n;
    }
    double tv = 0;
    for (std::size_t c = 0; c < 16; ++c) tv += 0.5 * std::abs(hist[c] - p.prob[c]);
    CHECK(tv < 0.02);
  }
}

TEST_CASE("pair correlation stream tracks the exact value") {
  const BoxGraph g(Box::cube(1, 1));
  const std::vector<double> f{0.1, -0.2, 0.3};
  const auto eta = SpinBoundary{{1, -1}};
  const auto p = exact_measure(g, eta, 0.6, f);
  HeatBathChain chain(g, eta, 0.6, f, 5);
  PairCorrelationStream s(0, 2);
  chain.sweeps(50);
  for (int t = 0; t < 100000; ++t) {
    chain.sweep();
    s.add(chain.state());
  }
  const auto e = s.truncated();
  CHECK(std::abs(e.value - truncated_two_point(p, 0, 2)) < 4 * e.stderr_ + 1e-3);
  const auto m = s.magnetization_x();
  CHECK(std::abs(m.value - magnetization(p, 0)) < 5 * m.stderr_ + 0.01);
}

TEST_CASE("observables csv layout") {
  std::ostringstream os;
  const std::vector<ObservableRow> rows{{Site{0, 0}, Site{1, -2}, Estimate{0.5, 0.01, 100}}};
  write_observables_csv(os, rows);
  const std::string s = os.str();
  CHECK(s.rfind("# schema_version 1\nx, y, estimate, stderr, n_samples\n", 0) == 0);
  CHECK(s.find("0:0, 1:-2, 0.5, ") != std::string::npos);
}
