#include "rfim/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace rfim {

void ModelParams::validate() const {
  if (!std::isfinite(beta) || beta < 0) throw std::invalid_argument("beta must be finite and >= 0");
  if (!std::isfinite(H) || H < 0) throw std::invalid_argument("H must be finite and >= 0");
  if (q < 2) throw std::invalid_argument("q must be >= 2");
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
}

SpinBoundary SpinBoundary::constant(const BoxGraph& g, int value) {
  return SpinBoundary{std::vector<int>(static_cast<std::size_t>(g.num_exterior()), value)};
}

int ExactDistribution::digit(std::size_t config, int var) const {
  if (num_states == 2) return static_cast<int>((config >> var) & 1U);
  for (int k = 0; k < var; ++k) config /= static_cast<std::size_t>(num_states);
  return static_cast<int>(config % static_cast<std::size_t>(num_states));
}

namespace {

void check_domains(const BoxGraph& g, const SpinBoundary& eta, std::span<const double> field) {
  if (static_cast<int>(eta.values.size()) != g.num_exterior())
    throw std::invalid_argument("boundary size " + std::to_string(eta.values.size()) + " does not match exterior size " +
                                std::to_string(g.num_exterior()));
  if (static_cast<int>(field.size()) != g.num_sites())
    throw std::invalid_argument("field size " + std::to_string(field.size()) + " does not match box size " +
                                std::to_string(g.num_sites()));
}

void check_cap(int n, int cap) {
  if (n > cap) throw std::length_error("enumeration over " + std::to_string(n) + " sites exceeds cap " + std::to_string(cap));
}

void normalize_log(ExactDistribution& out, std::vector<double>& logw) {
  const double mx = *std::max_element(logw.begin(), logw.end());
  double z = 0;
  out.prob.resize(logw.size());
  for (std::size_t c = 0; c < logw.size(); ++c) {
    out.prob[c] = std::exp(logw[c] - mx);
    z += out.prob[c];
  }
  for (double& p : out.prob) p /= z;
  out.log_z = mx + std::log(z);
}

}  // namespace

double ising_log_weight(const BoxGraph& g, const SpinConfig& sigma, const SpinBoundary& eta, double beta,
                        std::span<const double> field) {
  check_domains(g, eta, field);
  if (static_cast<int>(sigma.size()) != g.num_sites()) throw std::invalid_argument("configuration size mismatch");
  double bond = 0;
  for (auto [i, j] : g.internal_edges()) bond += sigma[static_cast<std::size_t>(i)] * sigma[static_cast<std::size_t>(j)];
  for (auto [i, k] : g.boundary_links()) bond += sigma[static_cast<std::size_t>(i)] * eta.values[static_cast<std::size_t>(k)];
  double f = 0;
  for (int i = 0; i < g.num_sites(); ++i) f += field[static_cast<std::size_t>(i)] * sigma[static_cast<std::size_t>(i)];
  return beta * bond + f;
}

ExactDistribution exact_measure(const BoxGraph& g, const SpinBoundary& eta, double beta, std::span<const double> field,
                                int cap) {
  check_domains(g, eta, field);
  const int n = g.num_sites();
  check_cap(n, cap);
  // Per-site effective field including boundary links.
  std::vector<double> h(field.begin(), field.end());
  for (auto [i, k] : g.boundary_links()) h[static_cast<std::size_t>(i)] += beta * eta.values[static_cast<std::size_t>(k)];
  const std::size_t states = std::size_t{1} << n;
  std::vector<double> logw(states);
  for (std::size_t c = 0; c < states; ++c) {
    double w = 0;
    for (auto [i, j] : g.internal_edges()) w += (((c >> i) ^ (c >> j)) & 1U) ? -beta : beta;
    for (int i = 0; i < n; ++i) w += ((c >> i) & 1U) ? h[static_cast<std::size_t>(i)] : -h[static_cast<std::size_t>(i)];
    logw[c] = w;
  }
  ExactDistribution out;
  out.num_vars = n;
  out.num_states = 2;
  normalize_log(out, logw);
  return out;
}

ExactDistribution potts_exact_measure(const BoxGraph& g, const SpinBoundary& eta, double beta, double H, int q, int cap) {
  if (q < 2) throw std::invalid_argument("q must be >= 2");
  if (static_cast<int>(eta.values.size()) != g.num_exterior()) throw std::invalid_argument("boundary size mismatch");
  for (int v : eta.values)
    if (v < 1 || v > q) throw std::invalid_argument("Potts boundary value " + std::to_string(v) + " outside 1..q");
  const int n = g.num_sites();
  const double bits = n * std::log2(static_cast<double>(q));
  if (bits > cap) throw std::length_error("Potts enumeration exceeds cap");
  std::size_t states = 1;
  for (int i = 0; i < n; ++i) states *= static_cast<std::size_t>(q);
  std::vector<int> s(static_cast<std::size_t>(n), 0);  // 0-based states
  std::vector<double> logw(states);
  for (std::size_t c = 0; c < states; ++c) {
    std::size_t r = c;
    for (int i = 0; i < n; ++i) {
      s[static_cast<std::size_t>(i)] = static_cast<int>(r % static_cast<std::size_t>(q));
      r /= static_cast<std::size_t>(q);
    }
    double w = 0;
    for (auto [i, j] : g.internal_edges())
      if (s[static_cast<std::size_t>(i)] == s[static_cast<std::size_t>(j)]) w += 2 * beta;
    for (auto [i, k] : g.boundary_links())
      if (s[static_cast<std::size_t>(i)] + 1 == eta.values[static_cast<std::size_t>(k)]) w += 2 * beta;
    for (int i = 0; i < n; ++i)
      if (s[static_cast<std::size_t>(i)] == 0) w += 2 * H;
    logw[c] = w;
  }
  ExactDistribution out;
  out.num_vars = n;
  out.num_states = q;
  normalize_log(out, logw);
  return out;
}

int neighbor_sum(const BoxGraph& g, const SpinConfig& sigma, const SpinBoundary& eta, int x) {
  int m = 0;
  for (int code : g.neighbors(x))
    m += BoxGraph::is_exterior(code) ? eta.values[static_cast<std::size_t>(BoxGraph::exterior_of(code))]
                                     : sigma[static_cast<std::size_t>(code)];
  return m;
}

double heat_bath_plus_probability(const BoxGraph& g, const SpinConfig& sigma, const SpinBoundary& eta, double beta,
                                  std::span<const double> field, int x) {
  const double a = beta * neighbor_sum(g, sigma, eta, x) + field[static_cast<std::size_t>(x)];
  // e^a / (e^a + e^-a)
  return 1.0 / (1.0 + std::exp(-2.0 * a));
}

Spin heat_bath_step(const BoxGraph& g, SpinConfig& sigma, int x, double u, const SpinBoundary& eta, double beta,
                    std::span<const double> field) {
  if (x < 0 || x >= g.num_sites()) throw std::out_of_range("site index outside box");
  const Spin s = u < heat_bath_plus_probability(g, sigma, eta, beta, field, x) ? Spin{1} : Spin{-1};
  sigma[static_cast<std::size_t>(x)] = s;
  return s;
}

HeatBathChain::HeatBathChain(const BoxGraph& g, SpinBoundary eta, double beta, std::vector<double> field,
                             std::uint64_t seed, SweepOrder order)
    : g_(&g), eta_(std::move(eta)), beta_(beta), field_(std::move(field)), order_(order), rng_(seed),
      sigma_(static_cast<std::size_t>(g.num_sites()), Spin{1}) {
  check_domains(g, eta_, field_);
}

void HeatBathChain::sweep() {
  const int n = g_->num_sites();
  if (order_ == SweepOrder::Raster) {
    for (int x = 0; x < n; ++x) heat_bath_step(*g_, sigma_, x, rng_.uniform(), eta_, beta_, field_);
  } else {
    for (int k = 0; k < n; ++k) {
      const int x = static_cast<int>(rng_.below(static_cast<std::uint64_t>(n)));
      heat_bath_step(*g_, sigma_, x, rng_.uniform(), eta_, beta_, field_);
    }
  }
}

double magnetization(const ExactDistribution& p, int x) {
  double m = 0;
  for (std::size_t c = 0; c < p.size(); ++c) m += p.prob[c] * p.ising_spin(c, x);
  return m;
}

double two_point(const ExactDistribution& p, int x, int y) {
  double m = 0;
  for (std::size_t c = 0; c < p.size(); ++c) m += p.prob[c] * p.ising_spin(c, x) * p.ising_spin(c, y);
  return m;
}

double truncated_two_point(const ExactDistribution& p, int x, int y) {
  return two_point(p, x, y) - magnetization(p, x) * magnetization(p, y);
}

Estimate PairCorrelationStream::magnetization_x() const { return batch_means(sx_); }
Estimate PairCorrelationStream::magnetization_y() const { return batch_means(sy_); }

Estimate PairCorrelationStream::two_point() const {
  std::vector<double> prod(sx_.size());
  for (std::size_t i = 0; i < sx_.size(); ++i) prod[i] = sx_[i] * sy_[i];
  return batch_means(prod);
}

Estimate PairCorrelationStream::truncated(std::size_t batches) const {
  const std::size_t n = sx_.size();
  Estimate e;
  e.n = n;
  if (n == 0) return e;
  auto block = [&](std::size_t lo, std::size_t hi) {
    double a = 0, b = 0, ab = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      a += sx_[i];
      b += sy_[i];
      ab += sx_[i] * sy_[i];
    }
    const double m = static_cast<double>(hi - lo);
    return ab / m - (a / m) * (b / m);
  };
  e.value = block(0, n);
  if (n < 2 * batches) batches = n / 2;
  if (batches < 2) return e;
  const std::size_t per = n / batches;
  MeanAccumulator acc;
  for (std::size_t k = 0; k < batches; ++k) acc.add(block(k * per, (k + 1) * per));
  e.stderr_ = std::sqrt(acc.variance() / static_cast<double>(batches));
  return e;
}

std::vector<double> marginal(const ExactDistribution& p, std::span<const int> vars) {
  std::size_t m = 1;
  for (std::size_t k = 0; k < vars.size(); ++k) m *= static_cast<std::size_t>(p.num_states);
  std::vector<double> out(m, 0.0);
  for (std::size_t c = 0; c < p.size(); ++c) {
    std::size_t idx = 0, mult = 1;
    for (int v : vars) {
      idx += mult * static_cast<std::size_t>(p.digit(c, v));
      mult *= static_cast<std::size_t>(p.num_states);
    }
    out[idx] += p.prob[c];
  }
  return out;
}

double tv_marginal(const ExactDistribution& p, const ExactDistribution& q, std::span<const int> vars) {
  if (p.num_vars != q.num_vars || p.num_states != q.num_states) throw std::invalid_argument("incompatible distributions");
  const auto a = marginal(p, vars);
  const auto b = marginal(q, vars);
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

double tv_marginal(const BoxGraph& g, std::span<const int> delta, const SpinBoundary& eta, const SpinBoundary& eta2,
                   double beta, std::span<const double> field, int cap) {
  if (eta == eta2) return 0.0;
  return tv_marginal(exact_measure(g, eta, beta, field, cap), exact_measure(g, eta2, beta, field, cap), delta);
}

Estimate tv_marginal_sampled(const BoxGraph& g, std::span<const int> delta, const SpinBoundary& eta,
                             const SpinBoundary& eta2, double beta, std::span<const double> field,
                             const SamplingBudget& budget, std::uint64_t seed) {
  if (delta.size() > 20) throw std::length_error("sampled TV limited to |delta| <= 20");
  if (budget.samples < 2) throw std::invalid_argument("need at least two samples");
  std::vector<double> fv(field.begin(), field.end());
  HeatBathChain c1(g, eta, beta, fv, key_hash({stream::kChain, seed, 1}));
  HeatBathChain c2(g, eta2, beta, fv, key_hash({stream::kChain, seed, 2}));
  c1.sweeps(budget.burn_in);
  c2.sweeps(budget.burn_in);
  auto code = [&](const SpinConfig& s) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < delta.size(); ++k)
      if (s[static_cast<std::size_t>(delta[k])] > 0) idx |= std::size_t{1} << k;
    return idx;
  };
  std::vector<std::size_t> a(static_cast<std::size_t>(budget.samples)), b(a.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    c1.sweeps(budget.gap);
    c2.sweeps(budget.gap);
    a[t] = code(c1.state());
    b[t] = code(c2.state());
  }
  auto tv = [&](std::size_t lo, std::size_t hi) {
    std::map<std::size_t, double> diff;
    for (std::size_t t = lo; t < hi; ++t) {
      diff[a[t]] += 1;
      diff[b[t]] -= 1;
    }
    double s = 0;
    for (auto& [k, v] : diff) s += std::abs(v);
    return 0.5 * s / static_cast<double>(hi - lo);
  };
  Estimate e;
  e.n = a.size();
  e.value = tv(0, a.size());
  const std::size_t batches = std::min<std::size_t>(16, a.size() / 2);
  if (batches >= 2) {
    const std::size_t per = a.size() / batches;
    MeanAccumulator acc;
    for (std::size_t k = 0; k < batches; ++k) acc.add(tv(k * per, (k + 1) * per));
    e.stderr_ = std::sqrt(acc.variance() / static_cast<double>(batches));
  }
  return e;
}

void write_observables_csv(std::ostream& os, std::span<const ObservableRow> rows) {
  auto coords = [](const Site& s) {
    std::string out;
    for (int k = 0; k < s.dim(); ++k) {
      if (k) out += ':';
      out += std::to_string(s[k]);
    }
    return out;
  };
  os << "# schema_version 1\n";
  os << "x, y, estimate, stderr, n_samples\n";
  char buf[64];
  for (const auto& r : rows) {
    os << coords(r.x) << ", " << coords(r.y) << ", ";
    std::snprintf(buf, sizeof buf, "%.10g", r.estimate.value);
    os << buf << ", ";
    std::snprintf(buf, sizeof buf, "%.10g", r.estimate.stderr_);
    os << buf << ", " << r.estimate.n << '\n';
  }
}

}  // namespace rfim
