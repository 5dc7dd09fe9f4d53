#include "rfim/sw_chain.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace rfim {

SwChain::SwChain(const BoxGraph& g, SpinBoundary eta, double beta, std::vector<double> field, std::uint64_t seed)
    : g_(&g), eta_(std::move(eta)), p_bond_(-std::expm1(-2.0 * beta)), field_(std::move(field)), rng_(seed),
      sigma_(static_cast<std::size_t>(g.num_sites()), Spin{1}) {
  if (static_cast<int>(eta_.values.size()) != g.num_exterior()) throw std::invalid_argument("boundary size mismatch");
  if (static_cast<int>(field_.size()) != g.num_sites()) throw std::invalid_argument("field size mismatch");
  if (!(beta >= 0)) throw std::invalid_argument("beta must be >= 0");
  p_ghost_.resize(field_.size());
  for (std::size_t i = 0; i < field_.size(); ++i) p_ghost_[i] = -std::expm1(-2.0 * std::abs(field_[i]));
  internal_open_.assign(g.internal_edges().size(), 0);
  link_open_.assign(g.boundary_links().size(), 0);
  ghost_open_.assign(field_.size(), 0);
  uf_.reset(g.num_sites() + 2);
}

void SwChain::set_state(SpinConfig s) {
  if (s.size() != sigma_.size()) throw std::invalid_argument("configuration size mismatch");
  sigma_ = std::move(s);
}

void SwChain::bond_step() {
  const auto& ie = g_->internal_edges();
  for (std::size_t e = 0; e < ie.size(); ++e) {
    const auto [i, j] = ie[e];
    internal_open_[e] = sigma_[static_cast<std::size_t>(i)] == sigma_[static_cast<std::size_t>(j)] && rng_.uniform() < p_bond_;
  }
  const auto& bl = g_->boundary_links();
  for (std::size_t e = 0; e < bl.size(); ++e) {
    const auto [i, k] = bl[e];
    link_open_[e] = sigma_[static_cast<std::size_t>(i)] == eta_.values[static_cast<std::size_t>(k)] && rng_.uniform() < p_bond_;
  }
  for (std::size_t i = 0; i < field_.size(); ++i) {
    const double h = field_[i];
    const int sgn = h > 0 ? 1 : (h < 0 ? -1 : 0);
    ghost_open_[i] = sgn != 0 && sigma_[i] == sgn && rng_.uniform() < p_ghost_[i];
  }
}

void SwChain::spin_step() {
  const int n = g_->num_sites();
  const int plus = n, minus = n + 1;
  uf_.reset(n + 2);
  const auto& ie = g_->internal_edges();
  for (std::size_t e = 0; e < ie.size(); ++e)
    if (internal_open_[e]) uf_.unite(ie[e].first, ie[e].second);
  const auto& bl = g_->boundary_links();
  for (std::size_t e = 0; e < bl.size(); ++e)
    if (link_open_[e]) uf_.unite(bl[e].first, eta_.values[static_cast<std::size_t>(bl[e].second)] > 0 ? plus : minus);
  for (int i = 0; i < n; ++i)
    if (ghost_open_[static_cast<std::size_t>(i)]) uf_.unite(i, field_[static_cast<std::size_t>(i)] > 0 ? plus : minus);
  const int rp = uf_.find(plus), rm = uf_.find(minus);
  if (rp == rm) throw std::logic_error("ES alternation joined the plus and minus terminals");
  std::vector<Spin> coin(static_cast<std::size_t>(n + 2), 0);
  for (int i = 0; i < n; ++i) {
    const int r = uf_.find(i);
    Spin s;
    if (r == rp) s = 1;
    else if (r == rm) s = -1;
    else {
      Spin& c = coin[static_cast<std::size_t>(r)];
      if (c == 0) c = rng_.coin() ? Spin{1} : Spin{-1};
      s = c;
    }
    sigma_[static_cast<std::size_t>(i)] = s;
  }
}

bool reaches_internal(const BoxGraph& g, std::span<const std::uint8_t> internal_open, int from,
                      std::span<const std::uint8_t> target) {
  if (target[static_cast<std::size_t>(from)]) return true;
  UnionFind uf(g.num_sites());
  const auto& ie = g.internal_edges();
  for (std::size_t e = 0; e < ie.size(); ++e)
    if (internal_open[e]) uf.unite(ie[e].first, ie[e].second);
  const int r = uf.find(from);
  for (int x = 0; x < g.num_sites(); ++x)
    if (target[static_cast<std::size_t>(x)] && uf.find(x) == r) return true;
  return false;
}

Estimate theta_n_estimate(double beta, double H, int n, int d, const ThetaBudget& budget, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("n must be >= 0");
  if (!(H >= 0)) throw std::invalid_argument("H must be >= 0");
  if (budget.chains < 1 || budget.samples_per_chain < 1 || budget.gap < 1 || budget.burn_in < 0)
    throw std::invalid_argument("invalid theta budget");
  Estimate out;
  out.n = static_cast<std::size_t>(budget.replicas());
  if (n == 0) {
    out.value = 1.0;
    return out;
  }
  BoxGraph g(Box::cube(n, d));
  const int origin = g.box().index_of(Site(std::vector<int>(static_cast<std::size_t>(d), 0)));
  std::vector<std::uint8_t> target(static_cast<std::size_t>(g.num_sites()), 0);
  for (const auto& s : interior_boundary(g.box())) target[static_cast<std::size_t>(g.box().index_of(s))] = 1;
  std::vector<double> field(static_cast<std::size_t>(g.num_sites()), H);
  MeanAccumulator between;
  for (int c = 0; c < budget.chains; ++c) {
    SwChain chain(g, SpinBoundary::all_plus(g), beta, field, key_hash({stream::kChain, seed, static_cast<std::uint64_t>(c)}));
    for (int t = 0; t < budget.burn_in; ++t) chain.step();
    int hits = 0;
    for (int s = 0; s < budget.samples_per_chain; ++s) {
      for (int t = 0; t < budget.gap - 1; ++t) chain.step();
      chain.bond_step();
      hits += reaches_internal(g, chain.internal_open(), origin, target);
      chain.spin_step();
    }
    between.add(static_cast<double>(hits) / budget.samples_per_chain);
  }
  out.value = between.mean();
  out.stderr_ = budget.chains > 1 ? std::sqrt(between.variance() / budget.chains) : 0.0;
  return out;
}

void write_theta_csv(std::ostream& os, std::span<const ThetaRow> rows) {
  os << "# schema_version 1\n";
  os << "beta, H, q, n, estimate, stderr, replicas, sweeps, seed\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6g, %.6g, %d, %d, %.10g, %.10g, %d, %d, %llu\n", r.beta, r.H, r.q, r.n,
                  r.estimate.value, r.estimate.stderr_, r.replicas, r.sweeps, static_cast<unsigned long long>(r.seed));
    os << buf;
  }
}

}  // namespace rfim
