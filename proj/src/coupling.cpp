#include "rfim/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "rfim/union_find.hpp"

namespace rfim {

namespace {

std::vector<int> vertex_ranks(const Box& box) {
  std::vector<int> rank(static_cast<std::size_t>(box.size()));
  const auto order = vertex_order(box);
  for (std::size_t r = 0; r < order.size(); ++r) rank[static_cast<std::size_t>(box.index_of(order[r]))] = static_cast<int>(r);
  return rank;
}

std::string vertex_name(const RcGraph& g, int v) {
  if (g.is_site(v)) return to_string(g.box().site(v));
  if (g.is_exterior(v)) return to_string(g.box_graph().exterior()[static_cast<std::size_t>(v - g.num_sites())]);
  if (g.ghost_mode() == GhostMode::Single) return "g";
  return v == g.ghost_plus() ? "g+" : "g-";
}

SpinConfig es_spins(const RcGraph& g, const BondConfig& omega, const SpinBoundary& eta, const UniformStream& us,
                    const std::vector<int>& rank) {
  if (static_cast<int>(omega.size()) != g.num_edges()) throw std::invalid_argument("bond configuration size mismatch");
  if (static_cast<int>(eta.values.size()) != g.num_exterior()) throw std::invalid_argument("boundary size mismatch");
  const int nv = g.num_vertices();
  UnionFind uf(nv);
  for (int id = 0; id < g.num_edges(); ++id)
    if (omega[static_cast<std::size_t>(id)]) uf.unite(g.edge(id).u, g.edge(id).v);
  // Terminal sign and witness per root.
  std::vector<int> sign(static_cast<std::size_t>(nv), 0), witness(static_cast<std::size_t>(nv), -1);
  auto assign = [&](int v, int s) {
    const auto r = static_cast<std::size_t>(uf.find(v));
    if (sign[r] == 0) {
      sign[r] = s;
      witness[r] = v;
    } else if (sign[r] != s) {
      throw std::domain_error("bond configuration connects " + vertex_name(g, witness[r]) + " and " + vertex_name(g, v) +
                              " which carry different signs");
    }
  };
  for (int k = 0; k < g.num_exterior(); ++k) assign(g.exterior_vertex(k), eta.values[static_cast<std::size_t>(k)]);
  assign(g.ghost_plus(), 1);
  if (g.ghost_mode() == GhostMode::Two) assign(g.ghost_minus(), -1);
  std::vector<int> min_rank(static_cast<std::size_t>(nv), g.num_sites());
  for (int i = 0; i < g.num_sites(); ++i) {
    auto& m = min_rank[static_cast<std::size_t>(uf.find(i))];
    m = std::min(m, rank[static_cast<std::size_t>(i)]);
  }
  SpinConfig sigma(static_cast<std::size_t>(g.num_sites()));
  for (int i = 0; i < g.num_sites(); ++i) {
    const auto r = static_cast<std::size_t>(uf.find(i));
    sigma[static_cast<std::size_t>(i)] = static_cast<Spin>(sign[r] != 0 ? sign[r] : us.cluster_coin(min_rank[r]));
  }
  return sigma;
}

}  // namespace

void CouplingTrace::write_jsonl(std::ostream& os) const {
  using nlohmann::json;
  for (const auto& s : steps) {
    json j;
    j["t"] = s.t;
    j["phase"] = s.before_tau ? "pre" : "post";
    j["id"] = s.id;
    j["element"] = s.element;
    j["key"] = s.key;
    j["u"] = s.u;
    j["probs"] = s.probs;
    j["values"] = s.values;
    os << j.dump() << '\n';
  }
  json f;
  f["schema_version"] = 1;
  f["kind"] = kind;
  f["measures"] = measures;
  f["tau"] = tau;
  f["steps"] = steps.size();
  f["approximate"] = approximate;
  f["violations"] = violations;
  os << f.dump() << '\n';
}

GrandCoupler::GrandCoupler(const RcGraph& g, const BondBoundary& rho, const BondBoundary& rho2, std::vector<int> delta)
    : g_(&g),
      e_rho_(g, rho, RcMode::WithIndicator),
      e_rho2_(g, rho2, RcMode::WithIndicator),
      e_w_(g, BondBoundary::wired(g), RcMode::Abs),
      delta_(std::move(delta)) {
  if (g.ghost_mode() != GhostMode::Two) throw std::invalid_argument("grand coupling needs a two-ghost graph");
  for (int x : delta_)
    if (x < 0 || x >= g.num_sites()) throw std::out_of_range("delta site outside box");
}

GrandCouplingResult GrandCoupler::run(std::uint64_t seed) {
  const RcGraph& g = *g_;
  const UniformStream us{seed};
  RcSpinEngine* eng[3] = {&e_rho_, &e_rho2_, &e_w_};
  for (auto* e : eng) e->reset();
  const int m = g.num_edges();
  GrandCouplingResult res;
  res.omega_rho.assign(static_cast<std::size_t>(m), 0);
  res.omega_rho2.assign(static_cast<std::size_t>(m), 0);
  res.omega_w.assign(static_cast<std::size_t>(m), 0);
  BondConfig* out[3] = {&res.omega_rho, &res.omega_rho2, &res.omega_w};
  auto& tr = res.trace;
  tr.kind = "grand_rc";
  tr.measures = {"rho", "rho'", "w"};
  std::vector<std::uint8_t> revealed(static_cast<std::size_t>(m), 0);
  std::vector<std::uint8_t> in_v(static_cast<std::size_t>(g.num_vertices()), 0);
  for (int k = 0; k < g.num_exterior(); ++k) in_v[static_cast<std::size_t>(g.exterior_vertex(k))] = 1;

  int t = 0;
  auto reveal = [&](int id, bool pre) {
    RevealStep st;
    st.t = t;
    st.before_tau = pre;
    st.id = id;
    st.element = to_string(g.edge(id).edge);
    st.key = us.edge_key(id);
    st.u = bits_to_unit(st.key);
    for (int k = 0; k < 3; ++k) {
      const double p = eng[k]->prob_open(id);
      const int v = st.u < p ? 1 : 0;
      eng[k]->reveal(id, v);
      (*out[k])[static_cast<std::size_t>(id)] = static_cast<std::uint8_t>(v);
      st.probs.push_back(p);
      st.values.push_back(v);
    }
    revealed[static_cast<std::size_t>(id)] = 1;
    if (pre) {
      if (st.values[0] > st.values[2] || st.values[1] > st.values[2])
        tr.violations.push_back("monotonicity: edge " + st.element + " at t=" + std::to_string(t));
    } else if (st.values[0] != st.values[1]) {
      tr.violations.push_back("post-tau agreement: edge " + st.element + " at t=" + std::to_string(t));
    }
    tr.steps.push_back(std::move(st));
    ++t;
  };

  for (;;) {
    int next = -1;
    for (int id = 0; id < m && next < 0; ++id) {
      if (revealed[static_cast<std::size_t>(id)]) continue;
      const auto& e = g.edge(id);
      if (in_v[static_cast<std::size_t>(e.u)] || in_v[static_cast<std::size_t>(e.v)]) next = id;
    }
    if (next < 0) break;
    reveal(next, true);
    const auto& e = g.edge(next);
    if (!e.external() && res.omega_w[static_cast<std::size_t>(next)]) {
      in_v[static_cast<std::size_t>(e.u)] = 1;
      in_v[static_cast<std::size_t>(e.v)] = 1;
    }
  }
  tr.tau = t;
  for (int id = 0; id < m; ++id)
    if (!revealed[static_cast<std::size_t>(id)]) reveal(id, false);

  if (!delta_.empty()) {
    std::vector<std::uint8_t> in_delta(static_cast<std::size_t>(g.num_vertices()), 0);
    for (int x : delta_) in_delta[static_cast<std::size_t>(x)] = 1;
    bool differ = false;
    for (int id = 0; id < m && !differ; ++id) {
      const auto& e = g.edge(id);
      if ((in_delta[static_cast<std::size_t>(e.u)] || in_delta[static_cast<std::size_t>(e.v)]) &&
          res.omega_rho[static_cast<std::size_t>(id)] != res.omega_rho2[static_cast<std::size_t>(id)])
        differ = true;
    }
    if (differ) {
      std::vector<int> inner;
      for (int x : delta_) {
        for (int code : g.box_graph().neighbors(x))
          if (BoxGraph::is_exterior(code) || !in_delta[static_cast<std::size_t>(code)]) {
            inner.push_back(x);
            break;
          }
      }
      std::vector<int> ext;
      for (int k = 0; k < g.num_exterior(); ++k) ext.push_back(g.exterior_vertex(k));
      if (!connected_sets(g, res.omega_w, inner, ext, lattice_only_mask(g)))
        tr.violations.push_back("disagreement percolation: delta edges differ without a boundary path in w");
    }
  }
  return res;
}

GrandCouplingResult grand_rc_coupling(const RcGraph& g, const BondBoundary& rho, const BondBoundary& rho2,
                                      std::uint64_t seed, std::vector<int> delta) {
  return GrandCoupler(g, rho, rho2, std::move(delta)).run(seed);
}

SpinConfig es_conditional_spins(const RcGraph& g, const BondConfig& omega, const SpinBoundary& eta, std::uint64_t seed) {
  return es_spins(g, omega, eta, UniformStream{seed}, vertex_ranks(g.box()));
}

IsingBcCoupler::IsingBcCoupler(const RcGraph& g, const SpinBoundary& eta, const SpinBoundary& eta2)
    : g_(&g), eta_(eta), eta2_(eta2),
      grand_(std::make_unique<GrandCoupler>(g, BondBoundary::eta_wired(g, eta), BondBoundary::eta_wired(g, eta2))),
      rank_(vertex_ranks(g.box())) {}

IsingCouplingResult IsingBcCoupler::run(std::uint64_t seed) {
  const RcGraph& g = *g_;
  IsingCouplingResult res;
  res.bonds = grand_->run(seed);
  res.bonds.trace.kind = "ising_bc";
  res.bonds.trace.measures = {"eta", "eta'", "+"};
  UnionFind uf(g.num_vertices());
  for (int id = 0; id < g.num_edges(); ++id)
    if (!g.edge(id).external() && res.bonds.omega_w[static_cast<std::size_t>(id)]) uf.unite(g.edge(id).u, g.edge(id).v);
  std::vector<std::uint8_t> ext_root(static_cast<std::size_t>(g.num_vertices()), 0);
  for (int k = 0; k < g.num_exterior(); ++k) ext_root[static_cast<std::size_t>(uf.find(g.exterior_vertex(k)))] = 1;
  res.c_plus.assign(static_cast<std::size_t>(g.num_sites()), 0);
  for (int i = 0; i < g.num_sites(); ++i) res.c_plus[static_cast<std::size_t>(i)] = ext_root[static_cast<std::size_t>(uf.find(i))];
  const UniformStream us{seed};
  res.sigma_eta = es_spins(g, res.bonds.omega_rho, eta_, us, rank_);
  res.sigma_eta2 = es_spins(g, res.bonds.omega_rho2, eta2_, us, rank_);
  for (int i = 0; i < g.num_sites(); ++i)
    if (!res.c_plus[static_cast<std::size_t>(i)] &&
        res.sigma_eta[static_cast<std::size_t>(i)] != res.sigma_eta2[static_cast<std::size_t>(i)])
      res.bonds.trace.violations.push_back("spin agreement off C+: site " + to_string(g.box().site(i)));
  return res;
}

IsingCouplingResult ising_bc_coupling(const RcGraph& g, const SpinBoundary& eta, const SpinBoundary& eta2,
                                      std::uint64_t seed) {
  return IsingBcCoupler(g, eta, eta2).run(seed);
}

SiteCoupler::SiteCoupler(const BoxGraph& g, const SpinBoundary& eta, const SpinBoundary& eta2, double beta,
                         std::vector<double> field, SiteCouplingOptions opt)
    : g_(&g), eta_{eta, eta2}, beta_(beta), field_(std::move(field)), opt_(opt) {
  if (static_cast<int>(field_.size()) != g.num_sites()) throw std::invalid_argument("field size mismatch");
  for (const auto& e : eta_)
    if (static_cast<int>(e.values.size()) != g.num_exterior()) throw std::invalid_argument("boundary size mismatch");
  if (opt_.strict)
    for (int i = 0; i < g.num_sites(); ++i)
      if (field_[static_cast<std::size_t>(i)] == 0)
        throw std::domain_error("zero field at " + to_string(g.box().site(i)) + " (strict mode)");
  if (!opt_.approximate) {
    if (g.num_sites() > 63) throw std::length_error("exact site coupling limited to 63 sites");
    for (int k = 0; k < 2; ++k) exact_[k] = exact_measure(g, eta_[k], beta_, field_, opt_.cap);
  }
  for (const auto& s : vertex_order(g.box())) order_.push_back(g.box().index_of(s));
}

double SiteCoupler::conditional_plus(int which, int x, std::uint64_t mask, std::uint64_t values,
                                     const SpinConfig& partial, std::uint64_t seed) const {
  if (!opt_.approximate) {
    const auto& p = exact_[which];
    double num = 0, den = 0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      if ((c & mask) != values) continue;
      den += p.prob[c];
      if ((c >> x) & 1U) num += p.prob[c];
    }
    if (!(den > 0)) throw std::domain_error("revealed spins have probability zero");
    return num / den;
  }
  // Heat-bath estimate with revealed sites clamped.
  const BoxGraph& g = *g_;
  Rng rng(key_hash({stream::kChain, seed, static_cast<std::uint64_t>(which), static_cast<std::uint64_t>(x)}));
  SpinConfig s = partial;
  std::vector<int> free_sites;
  for (int i = 0; i < g.num_sites(); ++i)
    if (!((mask >> i) & 1U) || i >= 64) free_sites.push_back(i);
  const int burn = opt_.approx_sweeps / 4;
  int plus = 0, count = 0;
  for (int sweep = 0; sweep < opt_.approx_sweeps; ++sweep) {
    for (int i : free_sites) heat_bath_step(g, s, i, rng.uniform(), eta_[which], beta_, field_);
    if (sweep >= burn) {
      plus += s[static_cast<std::size_t>(x)] > 0;
      ++count;
    }
  }
  return count ? static_cast<double>(plus) / count : 0.5;
}

SiteCouplingResult SiteCoupler::run(std::uint64_t seed) {
  const BoxGraph& g = *g_;
  const int n = g.num_sites();
  if (opt_.approximate && n > 64) throw std::length_error("approximate site coupling limited to 64 sites");
  const UniformStream us{seed};
  SiteCouplingResult res;
  auto& tr = res.trace;
  tr.kind = "site_exploration";
  tr.measures = {"eta", "eta'"};
  tr.approximate = opt_.approximate;
  res.sigma_eta.assign(static_cast<std::size_t>(n), 1);
  res.sigma_eta2.assign(static_cast<std::size_t>(n), 1);
  res.s.assign(static_cast<std::size_t>(n), 0);
  SpinConfig* sig[2] = {&res.sigma_eta, &res.sigma_eta2};
  const auto ext_open = disagreement_boundary(eta_[0], eta_[1]);
  std::vector<std::uint8_t> explored(static_cast<std::size_t>(n), 0);
  std::uint64_t mask = 0, vals[2] = {0, 0};

  auto adjacent_to_v = [&](int x) {
    for (int code : g.neighbors(x)) {
      if (BoxGraph::is_exterior(code) ? ext_open[static_cast<std::size_t>(BoxGraph::exterior_of(code))]
                                      : res.s[static_cast<std::size_t>(code)])
        return true;
    }
    return false;
  };
  int t = 0;
  auto reveal = [&](int x, bool pre) {
    RevealStep st;
    st.t = t;
    st.before_tau = pre;
    st.id = x;
    st.element = to_string(g.box().site(x));
    st.key = us.site_key(x);
    st.u = bits_to_unit(st.key);
    for (int k = 0; k < 2; ++k) {
      const double p = conditional_plus(k, x, mask, vals[k], *sig[k], seed);
      const int v = st.u < p ? 1 : -1;
      (*sig[k])[static_cast<std::size_t>(x)] = static_cast<Spin>(v);
      if (v > 0 && x < 64) vals[k] |= std::uint64_t{1} << x;
      st.probs.push_back(p);
      st.values.push_back(v);
    }
    if (x < 64) mask |= std::uint64_t{1} << x;
    explored[static_cast<std::size_t>(x)] = 1;
    res.s[static_cast<std::size_t>(x)] = st.values[0] != st.values[1];
    if (!pre && res.s[static_cast<std::size_t>(x)])
      tr.violations.push_back("post-tau agreement: site " + st.element + " at t=" + std::to_string(t));
    tr.steps.push_back(std::move(st));
    ++t;
  };
  for (;;) {
    int next = -1;
    for (int x : order_)
      if (!explored[static_cast<std::size_t>(x)] && adjacent_to_v(x)) {
        next = x;
        break;
      }
    if (next < 0) break;
    reveal(next, true);
  }
  tr.tau = t;
  // Outer boundary of V_tau inside the closure must agree.
  for (int x = 0; x < n; ++x)
    if (!res.s[static_cast<std::size_t>(x)] && adjacent_to_v(x) && !explored[static_cast<std::size_t>(x)])
      tr.violations.push_back("boundary of V_tau: site " + to_string(g.box().site(x)) + " unexplored");
  for (int x : order_)
    if (!explored[static_cast<std::size_t>(x)]) reveal(x, false);
  return res;
}

SiteCouplingResult site_exploration_coupling(const BoxGraph& g, const SpinBoundary& eta, const SpinBoundary& eta2,
                                             double beta, std::span<const double> field, std::uint64_t seed,
                                             SiteCouplingOptions opt) {
  return SiteCoupler(g, eta, eta2, beta, std::vector<double>(field.begin(), field.end()), opt).run(seed);
}

double sign_bound_a(double beta, double H, double abs_h, int d) {
  if (beta < 0 || H < 0 || abs_h < 0 || d < 1) throw std::invalid_argument("sign bound needs nonnegative arguments");
  return 1.0 / (1.0 + std::exp(4.0 * d * beta - 2.0 * H * abs_h));
}

double domination_p(double beta, double H, double abs_h, int d) {
  const double a = sign_bound_a(beta, H, abs_h, d);
  return 1.0 - a * a;
}

std::vector<std::uint8_t> dominating_site_sample(std::span<const double> p, std::uint64_t seed) {
  std::vector<std::uint8_t> t(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0 && p[i] <= 1)) throw std::invalid_argument("site probability outside [0,1]");
    t[i] = keyed_uniform({stream::kPercolation, seed, static_cast<std::uint64_t>(i)}) < p[i];
  }
  return t;
}

std::vector<std::uint8_t> disagreement_boundary(const SpinBoundary& eta, const SpinBoundary& eta2) {
  if (eta.values.size() != eta2.values.size()) throw std::invalid_argument("boundary size mismatch");
  std::vector<std::uint8_t> s(eta.values.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = eta.values[k] != eta2.values[k];
  return s;
}

bool site_path_to_delta(const BoxGraph& g, std::span<const std::uint8_t> open_sites,
                        std::span<const std::uint8_t> open_exterior, std::span<const int> delta) {
  const int n = g.num_sites();
  std::vector<std::uint8_t> in_delta(static_cast<std::size_t>(n), 0);
  for (int x : delta) in_delta[static_cast<std::size_t>(x)] = 1;
  // Exterior boundary of delta: box sites outside delta next to it, and exterior sites next to it.
  std::vector<std::uint8_t> target(static_cast<std::size_t>(n), 0), ext_target(open_exterior.size(), 0);
  for (int x : delta)
    for (int code : g.neighbors(x)) {
      if (BoxGraph::is_exterior(code)) ext_target[static_cast<std::size_t>(BoxGraph::exterior_of(code))] = 1;
      else if (!in_delta[static_cast<std::size_t>(code)]) target[static_cast<std::size_t>(code)] = 1;
    }
  for (std::size_t k = 0; k < ext_target.size(); ++k)
    if (ext_target[k] && open_exterior[k]) return true;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  for (auto [i, k] : g.boundary_links())
    if (open_exterior[static_cast<std::size_t>(k)] && open_sites[static_cast<std::size_t>(i)] &&
        !in_delta[static_cast<std::size_t>(i)] && !seen[static_cast<std::size_t>(i)]) {
      seen[static_cast<std::size_t>(i)] = 1;
      stack.push_back(i);
    }
  while (!stack.empty()) {
    const int x = stack.back();
    stack.pop_back();
    if (target[static_cast<std::size_t>(x)]) return true;
    for (int code : g.neighbors(x)) {
      if (BoxGraph::is_exterior(code)) continue;
      const auto y = static_cast<std::size_t>(code);
      if (seen[y] || !open_sites[y] || in_delta[y]) continue;
      seen[y] = 1;
      stack.push_back(code);
    }
  }
  return false;
}

double product_connectivity(const BoxGraph& g, std::span<const double> p, std::span<const std::uint8_t> open_exterior,
                            std::span<const int> delta, int cap) {
  const int n = g.num_sites();
  if (n > cap) throw std::length_error("product connectivity over " + std::to_string(n) + " sites exceeds cap");
  if (static_cast<int>(p.size()) != n) throw std::invalid_argument("one probability per site required");
  std::vector<std::uint8_t> open(static_cast<std::size_t>(n));
  double total = 0;
  for (std::size_t c = 0; c < (std::size_t{1} << n); ++c) {
    double w = 1;
    for (int i = 0; i < n; ++i) {
      open[static_cast<std::size_t>(i)] = (c >> i) & 1U;
      w *= open[static_cast<std::size_t>(i)] ? p[static_cast<std::size_t>(i)] : 1.0 - p[static_cast<std::size_t>(i)];
    }
    if (w > 0 && site_path_to_delta(g, open, open_exterior, delta)) total += w;
  }
  return total;
}

}  // namespace rfim
