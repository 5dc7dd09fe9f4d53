#include "rfim/cluster.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "rfim/stats.hpp"

namespace rfim {

double RcEdge::p() const { return -std::expm1(-2.0 * strength); }
double RcEdge::log_open() const { return strength > 0 ? std::log(p()) : kNegInf; }
double RcEdge::log_closed() const { return -2.0 * strength; }

RcGraph::RcGraph(const Box& box, GhostMode mode, double beta) : bg_(box), mode_(mode), beta_(beta) {
  if (!(beta >= 0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be finite and >= 0");
}

void RcGraph::build(std::span<const double> field_for_order, std::span<const double> strengths) {
  const Box& b = bg_.box();
  auto vertex = [&](const Site& s) {
    const int i = b.index_of(s);
    return i >= 0 ? i : exterior_vertex(bg_.exterior_index(s));
  };
  for (auto& e : edge_order(b, field_for_order, mode_)) {
    RcEdge r;
    if (e.kind == EdgeKind::Internal) {
      r.u = vertex(e.a);
      r.v = vertex(e.b);
      r.strength = beta_;
    } else {
      r.u = b.index_of(e.a);
      r.v = e.ghost == GhostTag::Minus ? ghost_minus() : ghost_plus();
      r.strength = strengths[static_cast<std::size_t>(r.u)];
    }
    if (!(r.strength >= 0) || !std::isfinite(r.strength)) throw std::invalid_argument("edge strength must be finite and >= 0");
    r.edge = std::move(e);
    edges_.push_back(std::move(r));
  }
  incident_.assign(static_cast<std::size_t>(num_vertices()), {});
  for (int id = 0; id < num_edges(); ++id) {
    incident_[static_cast<std::size_t>(edges_[static_cast<std::size_t>(id)].u)].push_back(id);
    incident_[static_cast<std::size_t>(edges_[static_cast<std::size_t>(id)].v)].push_back(id);
  }
}

RcGraph RcGraph::single_ghost(const Box& box, double beta, double H) {
  std::vector<double> s(static_cast<std::size_t>(box.size()), H);
  return single_ghost(box, beta, s);
}

RcGraph RcGraph::single_ghost(const Box& box, double beta, std::span<const double> strengths) {
  if (static_cast<int>(strengths.size()) != box.size()) throw std::invalid_argument("one strength per site required");
  RcGraph g(box, GhostMode::Single, beta);
  g.build({}, strengths);
  return g;
}

RcGraph RcGraph::two_ghost(const Box& box, double beta, double H, std::span<const double> h) {
  if (static_cast<int>(h.size()) != box.size()) throw std::invalid_argument("one field value per site required");
  if (!(H >= 0)) throw std::invalid_argument("H must be >= 0");
  std::vector<double> s(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) s[i] = H * std::abs(h[i]);
  RcGraph g(box, GhostMode::Two, beta);
  g.build(h, s);
  return g;
}

int RcGraph::edge_id(const Edge& e) const {
  for (int id = 0; id < num_edges(); ++id)
    if (edges_[static_cast<std::size_t>(id)].edge == e) return id;
  return -1;
}

BondBoundary BondBoundary::free(const RcGraph& g) {
  BondBoundary b;
  b.name = "free";
  for (int k = 0; k < g.num_exterior(); ++k) b.cls.push_back(k);
  b.ghost_mask.assign(b.cls.size(), 0);
  return b;
}

BondBoundary BondBoundary::wired(const RcGraph& g) {
  BondBoundary b;
  b.name = "wired";
  b.cls.assign(static_cast<std::size_t>(g.num_exterior()), 0);
  b.ghost_mask.assign(1, g.ghost_mode() == GhostMode::Two ? kPlus | kMinus : kPlus);
  return b;
}

BondBoundary BondBoundary::eta_wired(const RcGraph& g, const SpinBoundary& eta) {
  if (static_cast<int>(eta.values.size()) != g.num_exterior()) throw std::invalid_argument("boundary size mismatch");
  BondBoundary b;
  b.name = "eta";
  for (int k = 0; k < g.num_exterior(); ++k) {
    b.cls.push_back(k);
    const int v = eta.values[static_cast<std::size_t>(k)];
    if (v != 1 && v != -1) throw std::invalid_argument("eta must be +-1");
    std::uint8_t m = v > 0 ? kPlus : (g.ghost_mode() == GhostMode::Two ? kMinus : 0);
    b.ghost_mask.push_back(m);
  }
  return b;
}

void BondBoundary::validate(const RcGraph& g) const {
  if (static_cast<int>(cls.size()) != g.num_exterior()) throw std::invalid_argument("bond boundary size mismatch");
  for (int c : cls)
    if (c < 0 || c >= static_cast<int>(ghost_mask.size())) throw std::invalid_argument("bond boundary class out of range");
  if (g.ghost_mode() == GhostMode::Single)
    for (auto m : ghost_mask)
      if (m & kMinus) throw std::invalid_argument("single-ghost boundary cannot reach g-");
}

const char* rc_mode_name(RcMode m) {
  switch (m) {
    case RcMode::Plain: return "plain";
    case RcMode::WithIndicator: return "with-indicator";
    case RcMode::Abs: return "abs";
  }
  return "?";
}

namespace {

UnionFind boundary_partition(const RcGraph& g, const BondBoundary& rho, bool wire_ghosts) {
  rho.validate(g);
  UnionFind uf(g.num_vertices());
  std::vector<int> first(rho.ghost_mask.size(), -1);
  for (int k = 0; k < g.num_exterior(); ++k) {
    const int c = rho.cls[static_cast<std::size_t>(k)];
    const int v = g.exterior_vertex(k);
    if (first[static_cast<std::size_t>(c)] < 0) first[static_cast<std::size_t>(c)] = v;
    else uf.unite(first[static_cast<std::size_t>(c)], v);
    const auto m = rho.ghost_mask[static_cast<std::size_t>(c)];
    if (m & BondBoundary::kPlus) uf.unite(v, g.ghost_plus());
    if (m & BondBoundary::kMinus) uf.unite(v, g.ghost_minus());
  }
  if (wire_ghosts) uf.unite(g.ghost_plus(), g.ghost_minus());
  return uf;
}

int clusters_from(const RcGraph& g, UnionFind& uf) {
  const int gp = uf.find(g.ghost_plus());
  const int gm = uf.find(g.ghost_minus());
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(g.num_vertices()), 0);
  int k = 0;
  for (int i = 0; i < g.num_sites(); ++i) {
    const int r = uf.find(i);
    if (r == gp || r == gm || seen[static_cast<std::size_t>(r)]) continue;
    seen[static_cast<std::size_t>(r)] = 1;
    ++k;
  }
  return k;
}

void check_omega(const RcGraph& g, const BondConfig& omega) {
  if (static_cast<int>(omega.size()) != g.num_edges())
    throw std::invalid_argument("bond configuration has " + std::to_string(omega.size()) + " entries, graph has " +
                                std::to_string(g.num_edges()) + " edges");
}

}  // namespace

UnionFind rc_partition(const RcGraph& g, const BondConfig& omega, const BondBoundary& rho, bool wire_ghosts) {
  check_omega(g, omega);
  UnionFind uf = boundary_partition(g, rho, wire_ghosts);
  for (int id = 0; id < g.num_edges(); ++id)
    if (omega[static_cast<std::size_t>(id)]) uf.unite(g.edge(id).u, g.edge(id).v);
  return uf;
}

int count_clusters(const RcGraph& g, const BondConfig& omega, const BondBoundary& rho, bool wire_ghosts) {
  UnionFind uf = rc_partition(g, omega, rho, wire_ghosts);
  return clusters_from(g, uf);
}

double rc_log_weight(const RcGraph& g, const BondConfig& omega, const BondBoundary& rho, double q, RcMode mode) {
  if (!(q >= 1)) throw std::invalid_argument("q must be >= 1");
  UnionFind uf = rc_partition(g, omega, rho, mode == RcMode::Abs);
  if (mode == RcMode::WithIndicator && uf.same(g.ghost_plus(), g.ghost_minus())) return kNegInf;
  double w = 0;
  for (int id = 0; id < g.num_edges(); ++id) {
    const auto& e = g.edge(id);
    w += omega[static_cast<std::size_t>(id)] ? e.log_open() : e.log_closed();
  }
  if (w == kNegInf) return w;
  return w + clusters_from(g, uf) * std::log(q);
}

double rc_log_weight_constant(const RcGraph& g, const BondConfig& omega, const BondBoundary& rho, double q) {
  if (g.ghost_mode() != GhostMode::Single) throw std::invalid_argument("constant-field weight needs a single-ghost graph");
  return rc_log_weight(g, omega, rho, q, RcMode::Plain);
}

double rc_log_weight_general(const RcGraph& g, const BondConfig& omega, const BondBoundary& rho, double q, RcMode mode) {
  if (g.ghost_mode() != GhostMode::Two) throw std::invalid_argument("general weight needs a two-ghost graph");
  if (mode == RcMode::Plain) throw std::invalid_argument("general weight needs with-indicator or abs mode");
  return rc_log_weight(g, omega, rho, q, mode);
}

BondConfig bonds_from_index(const RcGraph& g, std::size_t index) {
  BondConfig w(static_cast<std::size_t>(g.num_edges()));
  for (int id = 0; id < g.num_edges(); ++id) w[static_cast<std::size_t>(id)] = static_cast<std::uint8_t>((index >> id) & 1U);
  return w;
}

ExactDistribution exact_rc_measure(const RcGraph& g, const BondBoundary& rho, double q, RcMode mode, int cap) {
  if (!(q >= 1)) throw std::invalid_argument("q must be >= 1");
  const int m = g.num_edges();
  if (m > cap) throw std::length_error("enumeration over " + std::to_string(m) + " edges exceeds cap " + std::to_string(cap));
  const UnionFind base = boundary_partition(g, rho, mode == RcMode::Abs);
  const double lq = std::log(q);
  const std::size_t states = std::size_t{1} << m;
  std::vector<double> logw(states);
  std::vector<double> lo(static_cast<std::size_t>(m)), lc(lo.size());
  for (int id = 0; id < m; ++id) {
    lo[static_cast<std::size_t>(id)] = g.edge(id).log_open();
    lc[static_cast<std::size_t>(id)] = g.edge(id).log_closed();
  }
  double mx = kNegInf;
  for (std::size_t c = 0; c < states; ++c) {
    double w = 0;
    for (int id = 0; id < m; ++id) w += ((c >> id) & 1U) ? lo[static_cast<std::size_t>(id)] : lc[static_cast<std::size_t>(id)];
    if (w != kNegInf) {
      UnionFind uf = base;
      for (int id = 0; id < m; ++id)
        if ((c >> id) & 1U) uf.unite(g.edge(id).u, g.edge(id).v);
      if (mode == RcMode::WithIndicator && uf.same(g.ghost_plus(), g.ghost_minus())) w = kNegInf;
      else w += clusters_from(g, uf) * lq;
    }
    logw[c] = w;
    if (w > mx) mx = w;
  }
  if (mx == kNegInf) throw std::domain_error("random cluster measure has no admissible configuration");
  ExactDistribution out;
  out.num_vars = m;
  out.num_states = 2;
  out.prob.resize(states);
  double z = 0;
  for (std::size_t c = 0; c < states; ++c) {
    out.prob[c] = logw[c] == kNegInf ? 0.0 : std::exp(logw[c] - mx);
    z += out.prob[c];
  }
  for (double& p : out.prob) p /= z;
  out.log_z = mx + std::log(z);
  return out;
}

VertexMask box_only_mask(const RcGraph& g) {
  VertexMask m(static_cast<std::size_t>(g.num_vertices()), 0);
  for (int i = 0; i < g.num_sites(); ++i) m[static_cast<std::size_t>(i)] = 1;
  return m;
}

VertexMask lattice_only_mask(const RcGraph& g) {
  VertexMask m(static_cast<std::size_t>(g.num_vertices()), 1);
  m[static_cast<std::size_t>(g.ghost_plus())] = 0;
  m[static_cast<std::size_t>(g.ghost_minus())] = 0;
  return m;
}

namespace {

UnionFind restricted_partition(const RcGraph& g, const BondConfig& omega, const VertexMask& allowed,
                               const BondBoundary* rho) {
  check_omega(g, omega);
  if (!allowed.empty() && static_cast<int>(allowed.size()) != g.num_vertices())
    throw std::invalid_argument("vertex mask size mismatch");
  auto ok = [&](int v) { return allowed.empty() || allowed[static_cast<std::size_t>(v)]; };
  UnionFind uf(g.num_vertices());
  if (rho) {
    rho->validate(g);
    // Connections carried by rho between allowed vertices.
    std::vector<int> anchor(rho->ghost_mask.size(), -1);
    for (int k = 0; k < g.num_exterior(); ++k) {
      const int v = g.exterior_vertex(k);
      if (!ok(v)) continue;
      const int c = rho->cls[static_cast<std::size_t>(k)];
      if (anchor[static_cast<std::size_t>(c)] < 0) anchor[static_cast<std::size_t>(c)] = v;
      else uf.unite(anchor[static_cast<std::size_t>(c)], v);
      const auto m = rho->ghost_mask[static_cast<std::size_t>(c)];
      if ((m & BondBoundary::kPlus) && ok(g.ghost_plus())) uf.unite(v, g.ghost_plus());
      if ((m & BondBoundary::kMinus) && ok(g.ghost_minus())) uf.unite(v, g.ghost_minus());
    }
  }
  for (int id = 0; id < g.num_edges(); ++id) {
    const auto& e = g.edge(id);
    if (omega[static_cast<std::size_t>(id)] && ok(e.u) && ok(e.v)) uf.unite(e.u, e.v);
  }
  return uf;
}

}  // namespace

bool connected(const RcGraph& g, const BondConfig& omega, int u, int v, const VertexMask& allowed,
               const BondBoundary* rho) {
  const int ids[1] = {u};
  const int jds[1] = {v};
  return connected_sets(g, omega, ids, jds, allowed, rho);
}

bool connected_sets(const RcGraph& g, const BondConfig& omega, std::span<const int> A, std::span<const int> B,
                    const VertexMask& allowed, const BondBoundary* rho) {
  UnionFind uf = restricted_partition(g, omega, allowed, rho);
  auto ok = [&](int v) { return allowed.empty() || allowed[static_cast<std::size_t>(v)]; };
  std::vector<std::uint8_t> roots(static_cast<std::size_t>(g.num_vertices()), 0);
  for (int a : A)
    if (ok(a)) roots[static_cast<std::size_t>(uf.find(a))] = 1;
  for (int b : B)
    if (ok(b) && roots[static_cast<std::size_t>(uf.find(b))]) return true;
  return false;
}

}  // namespace rfim
