#include "rfim/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "rfim/coupling.hpp"
#include "rfim/fields.hpp"
#include "rfim/rng.hpp"
#include "rfim/union_find.hpp"

namespace rfim {

namespace {

// Dinic max flow on doubles.
class MaxFlow {
 public:
  explicit MaxFlow(int n) : adj_(static_cast<std::size_t>(n)), level_(static_cast<std::size_t>(n)), it_(static_cast<std::size_t>(n)) {}

  void add(int u, int v, double cap) {
    adj_[u].push_back({v, static_cast<int>(adj_[v].size()), cap});
    adj_[v].push_back({u, static_cast<int>(adj_[u].size()) - 1, 0.0});
  }

  double run(int s, int t) {
    double flow = 0;
    while (bfs(s, t)) {
      std::fill(it_.begin(), it_.end(), 0);
      while (true) {
        const double f = dfs(s, t, std::numeric_limits<double>::infinity());
        if (f <= 0) break;
        flow += f;
      }
    }
    return flow;
  }

 private:
  struct Arc {
    int to;
    int rev;
    double cap;
  };
  static constexpr double kEps = 1e-300;

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (const auto& a : adj_[u])
        if (a.cap > kEps && level_[a.to] < 0) {
          level_[a.to] = level_[u] + 1;
          q.push(a.to);
        }
    }
    return level_[t] >= 0;
  }

  double dfs(int u, int t, double f) {
    if (u == t) return f;
    for (int& i = it_[u]; i < static_cast<int>(adj_[u].size()); ++i) {
      Arc& a = adj_[u][i];
      if (a.cap <= kEps || level_[a.to] != level_[u] + 1) continue;
      const double d = dfs(a.to, t, std::min(f, a.cap));
      if (d > 0) {
        a.cap -= d;
        adj_[a.to][a.rev].cap += d;
        return d;
      }
    }
    return 0;
  }

  std::vector<std::vector<Arc>> adj_;
  std::vector<int> level_;
  std::vector<int> it_;
};

void check_law_sizes(std::span<const double> mu, std::span<const double> nu, int bits) {
  if (bits < 0 || bits > 20) throw std::invalid_argument("bits out of range");
  const std::size_t n = std::size_t{1} << bits;
  if (mu.size() != n || nu.size() != n) throw std::invalid_argument("law size must be 2^bits");
}

std::vector<double> sample_h(const Box& box, Rng& rng) {
  const auto dist = rng.coin() ? FieldDistribution::gaussian() : FieldDistribution::bimodal();
  return sample_field(dist, box, rng.next()).values;
}

SpinBoundary random_boundary(const BoxGraph& g, Rng& rng) {
  SpinBoundary eta;
  for (int k = 0; k < g.num_exterior(); ++k) eta.values.push_back(rng.coin() ? 1 : -1);
  return eta;
}

// Flips a nonempty random subset of eta.
SpinBoundary perturbed(const SpinBoundary& eta, Rng& rng) {
  SpinBoundary out = eta;
  const auto n = out.values.size();
  out.values[rng.below(n)] *= -1;
  for (auto& v : out.values)
    if (rng.uniform() < 0.3) v *= -1;
  return out;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::logic_error("size mismatch");
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<int> center_delta(const Box& box) {
  Site c(std::vector<int>(static_cast<std::size_t>(box.dim()), 0));
  const int i = box.index_of(c);
  if (i < 0) throw std::logic_error("box does not contain the origin");
  return {i};
}

InvariantResult named(std::string name) {
  InvariantResult r;
  r.name = std::move(name);
  return r;
}

void record(InvariantResult& r, double value, bool ok, const std::string& where) {
  ++r.instances;
  if (!ok && r.passed) {
    r.passed = false;
    r.detail = where;
  }
  r.slack = r.instances == 1 ? value : std::min(r.slack, value);
}

void record_error(InvariantResult& r, double err, double tol, const std::string& where) {
  ++r.instances;
  r.slack = std::max(r.slack, err);
  if (err > tol && r.passed) {
    r.passed = false;
    r.detail = where;
  }
}

std::string describe(const Box& box, double beta, double H) {
  std::ostringstream os;
  os << "box |" << box.size() << "| d=" << box.dim() << " beta=" << beta << " H=" << H;
  return os.str();
}

}  // namespace

double min_upset_slack(std::span<const double> mu, std::span<const double> nu, int bits) {
  check_law_sizes(mu, nu, bits);
  const int n = 1 << bits;
  // Maximum-weight closure with w = mu - nu: A closed under going up.
  const int s = n, t = n + 1;
  MaxFlow mf(n + 2);
  double positive = 0;
  for (int x = 0; x < n; ++x) {
    const double w = mu[static_cast<std::size_t>(x)] - nu[static_cast<std::size_t>(x)];
    if (w > 0) {
      mf.add(s, x, w);
      positive += w;
    } else if (w < 0) {
      mf.add(x, t, -w);
    }
    for (int b = 0; b < bits; ++b)
      if (!(x & (1 << b))) mf.add(x, x | (1 << b), std::numeric_limits<double>::infinity());
  }
  const double best = positive - mf.run(s, t);
  return -best;
}

double min_upset_slack_bruteforce(std::span<const double> mu, std::span<const double> nu, int bits) {
  check_law_sizes(mu, nu, bits);
  if (bits > 4) throw std::length_error("brute-force up-set enumeration limited to 4 bits");
  const int n = 1 << bits;
  double best = 0;  // the empty event
  for (std::uint64_t A = 0; A < (std::uint64_t{1} << n); ++A) {
    bool up = true;
    for (int x = 0; x < n && up; ++x) {
      if (!((A >> x) & 1U)) continue;
      for (int b = 0; b < bits; ++b)
        if (!((A >> (x | (1 << b))) & 1U)) {
          up = false;
          break;
        }
    }
    if (!up) continue;
    double v = 0;
    for (int x = 0; x < n; ++x)
      if ((A >> x) & 1U) v += nu[static_cast<std::size_t>(x)] - mu[static_cast<std::size_t>(x)];
    best = std::min(best, v);
  }
  return best;
}

std::vector<Box> tiny_boxes(int max_edges) {
  std::vector<Box> out;
  for (int n = 1; n <= 6; ++n) {
    std::vector<Site> s;
    for (int i = 0; i < n; ++i) s.push_back(Site{i - n / 2});
    out.push_back(Box::from_sites(1, s));
  }
  out.push_back(Box::from_sites(2, {Site{0, 0}}));
  out.push_back(Box::from_sites(2, {Site{0, 0}, Site{1, 0}}));
  out.push_back(Box::from_sites(2, {Site{0, 0}, Site{1, 0}, Site{0, 1}}));
  out.push_back(Box::from_sites(2, {Site{-1, 0}, Site{0, 0}, Site{1, 0}}));
  std::erase_if(out, [&](const Box& b) {
    const BoxGraph g(b);
    const auto m = g.internal_edges().size() + g.boundary_links().size() + static_cast<std::size_t>(b.size());
    return static_cast<int>(m) > max_edges;
  });
  return out;
}

bool boundary_separation_event(const RcGraph& g, const BondConfig& omega, const SpinBoundary& eta) {
  UnionFind uf(g.num_vertices());
  for (int id = 0; id < g.num_edges(); ++id)
    if (omega[static_cast<std::size_t>(id)]) uf.unite(g.edge(id).u, g.edge(id).v);
  std::vector<int> sign(static_cast<std::size_t>(g.num_vertices()), 0);
  auto mark = [&](int v, int s) {
    int& c = sign[static_cast<std::size_t>(uf.find(v))];
    if (c == -s) return false;
    c = s;
    return true;
  };
  for (int k = 0; k < g.num_exterior(); ++k)
    if (!mark(g.exterior_vertex(k), eta.values[static_cast<std::size_t>(k)])) return false;
  if (g.ghost_mode() == GhostMode::Two) return mark(g.ghost_plus(), +1) && mark(g.ghost_minus(), -1);
  return mark(g.ghost_plus(), +1);
}

JointMarginals es_joint_marginals(const RcGraph& g, const SpinBoundary& eta, bool corrupt) {
  if (g.ghost_mode() != GhostMode::Two) throw std::invalid_argument("joint law needs the two-ghost graph");
  const int n = g.num_sites(), m = g.num_edges();
  if (n > 12 || m > 16) throw std::length_error("joint enumeration too large");
  const std::size_t nb = std::size_t{1} << m;
  // Product Bernoulli weight of each bond configuration.
  std::vector<double> pw(nb, 1.0);
  int corrupt_edge = -1;
  for (int id = 0; id < m && corrupt; ++id)
    if (!g.edge(id).external()) {
      corrupt_edge = id;
      break;
    }
  for (std::size_t w = 0; w < nb; ++w)
    for (int id = 0; id < m; ++id) {
      const double p = g.edge(id).p();
      pw[w] *= ((w >> id) & 1U) ? p : 1.0 - p;
      if (id == corrupt_edge && ((w >> id) & 1U)) pw[w] *= 1.05;
    }
  JointMarginals out;
  out.spin.assign(std::size_t{1} << n, 0.0);
  out.bond.assign(nb, 0.0);
  std::vector<int> spin(static_cast<std::size_t>(g.num_vertices()));
  for (int k = 0; k < g.num_exterior(); ++k) spin[static_cast<std::size_t>(g.exterior_vertex(k))] = eta.values[static_cast<std::size_t>(k)];
  spin[static_cast<std::size_t>(g.ghost_plus())] = +1;
  spin[static_cast<std::size_t>(g.ghost_minus())] = -1;
  double z = 0;
  for (std::size_t s = 0; s < out.spin.size(); ++s) {
    for (int i = 0; i < n; ++i) spin[static_cast<std::size_t>(i)] = ((s >> i) & 1U) ? 1 : -1;
    std::uint64_t disagree = 0;
    for (int id = 0; id < m; ++id)
      if (spin[static_cast<std::size_t>(g.edge(id).u)] != spin[static_cast<std::size_t>(g.edge(id).v)]) disagree |= 1ULL << id;
    for (std::size_t w = 0; w < nb; ++w) {
      if (w & disagree) continue;  // an open edge between unequal spins
      out.spin[s] += pw[w];
      out.bond[w] += pw[w];
      z += pw[w];
    }
  }
  for (auto& v : out.spin) v /= z;
  for (auto& v : out.bond) v /= z;
  return out;
}

std::vector<double> delta_edge_marginal(const RcGraph& g, const ExactDistribution& bonds, std::span<const int> delta) {
  std::vector<int> ids;
  for (int id = 0; id < g.num_edges(); ++id) {
    const auto& e = g.edge(id);
    if (std::find(delta.begin(), delta.end(), e.u) != delta.end() || std::find(delta.begin(), delta.end(), e.v) != delta.end())
      ids.push_back(id);
  }
  std::vector<double> out(std::size_t{1} << ids.size(), 0.0);
  for (std::size_t c = 0; c < bonds.size(); ++c) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < ids.size(); ++j)
      if ((c >> ids[j]) & 1U) k |= std::size_t{1} << j;
    out[k] += bonds.prob[c];
  }
  return out;
}

double boundary_connection_probability(const RcGraph& g, const ExactDistribution& bonds, std::span<const int> delta) {
  // Inner boundary of delta: sites of delta with a neighbour outside delta.
  const auto& bg = g.box_graph();
  std::vector<int> inner;
  for (int x : delta)
    for (int c : bg.neighbors(x))
      if (BoxGraph::is_exterior(c) || std::find(delta.begin(), delta.end(), c) == delta.end()) {
        inner.push_back(x);
        break;
      }
  std::vector<int> ext;
  for (int k = 0; k < g.num_exterior(); ++k) ext.push_back(g.exterior_vertex(k));
  const auto mask = lattice_only_mask(g);
  double total = 0;
  for (std::size_t c = 0; c < bonds.size(); ++c) {
    if (bonds.prob[c] == 0) continue;
    if (connected_sets(g, bonds_from_index(g, c), inner, ext, mask)) total += bonds.prob[c];
  }
  return total;
}

std::vector<InvariantResult> check_es_consistency(const OracleOptions& opt) {
  InvariantResult spin = named("es_spin_marginal"), verbatim = named("es_bond_marginal"), indicator = named("es_bond_indicator_form");
  Rng rng(key_hash({opt.seed, 0xe5}));
  for (const Box& box : tiny_boxes(14)) {
    for (int k = 0; k < opt.draws; ++k) {
      const double beta = 0.05 + 0.95 * rng.uniform();
      const double H = 1.5 * rng.uniform();
      const auto h = sample_h(box, rng);
      const auto g = RcGraph::two_ghost(box, beta, H, h);
      const auto eta = random_boundary(g.box_graph(), rng);
      const auto where = describe(box, beta, H);
      const auto joint = es_joint_marginals(g, eta, opt.corrupt_weight);

      std::vector<double> field(h.size());
      for (std::size_t i = 0; i < h.size(); ++i) field[i] = H * h[i];
      const auto ising = exact_measure(g.box_graph(), eta, beta, field, opt.spin_cap);
      record_error(spin, max_abs_diff(joint.spin, ising.prob), opt.tol, where);

      // Wired |h| law conditioned on the separation event.
      auto wired = exact_rc_measure(g, BondBoundary::wired(g), 2.0, RcMode::Abs, opt.edge_cap);
      double mass = 0;
      for (std::size_t c = 0; c < wired.size(); ++c) {
        if (!boundary_separation_event(g, bonds_from_index(g, c), eta)) wired.prob[c] = 0;
        mass += wired.prob[c];
      }
      for (auto& v : wired.prob) v /= mass;
      record_error(verbatim, max_abs_diff(joint.bond, wired.prob), opt.tol, where);

      const auto ind = exact_rc_measure(g, BondBoundary::eta_wired(g, eta), 2.0, RcMode::WithIndicator, opt.edge_cap);
      record_error(indicator, max_abs_diff(joint.bond, ind.prob), opt.tol, where);
    }
  }
  return {spin, verbatim, indicator};
}

std::vector<InvariantResult> check_dominations(const OracleOptions& opt) {
  InvariantResult sign = named("field_sign_domination"), boundary = named("boundary_domination");
  Rng rng(key_hash({opt.seed, 0xd0}));
  for (const Box& box : tiny_boxes(12)) {
    for (int k = 0; k < opt.draws; ++k) {
      const double beta = 0.05 + 0.95 * rng.uniform();
      const double H = 0.05 + 1.5 * rng.uniform();
      const auto h = sample_h(box, rng);
      const auto g = RcGraph::two_ghost(box, beta, H, h);
      const auto eta = random_boundary(g.box_graph(), rng);
      const auto where = describe(box, beta, H);
      const int m = g.num_edges();
      for (const auto& rho : {BondBoundary::free(g), BondBoundary::eta_wired(g, eta)}) {
        const auto mu = exact_rc_measure(g, rho, 2.0, RcMode::WithIndicator, opt.edge_cap);
        const auto nu = exact_rc_measure(g, rho, 2.0, RcMode::Abs, opt.edge_cap);
        const double s = min_upset_slack(mu.prob, nu.prob, m);
        record(sign, s, s >= -opt.tol, where + " rho=" + rho.name);
      }
      const auto mu = exact_rc_measure(g, BondBoundary::eta_wired(g, eta), 2.0, RcMode::WithIndicator, opt.edge_cap);
      const auto nu = exact_rc_measure(g, BondBoundary::wired(g), 2.0, RcMode::Abs, opt.edge_cap);
      const double s = min_upset_slack(mu.prob, nu.prob, m);
      record(boundary, s, s >= -opt.tol, where);
    }
  }
  return {sign, boundary};
}

std::vector<InvariantResult> check_tv_bounds(const OracleOptions& opt, int draws) {
  InvariantResult bond = named("bond_coupling_tv_bound"), spin = named("spin_coupling_tv_bound"), site = named("site_percolation_tv_bound");
  const std::vector<Box> rc_boxes = {
      Box::cube(3, 1),
      Box::from_sites(2, {Site{-1, 0}, Site{0, 0}, Site{1, 0}}),
      Box::from_sites(2, {Site{-1, 0}, Site{0, 0}, Site{1, 0}, Site{-1, 1}, Site{0, 1}, Site{1, 1}}),
  };
  std::vector<Site> sq4;
  for (int x = -2; x <= 1; ++x)
    for (int y = -2; y <= 1; ++y) sq4.push_back(Site{x, y});
  const std::vector<Box> site_boxes = {Box::cube(1, 2), Box::cube(4, 1), Box::from_sites(2, sq4)};
  Rng rng(key_hash({opt.seed, 0x7b}));
  for (int k = 0; k < draws; ++k) {
    const double beta = 0.05 + 0.85 * rng.uniform();
    const double H = 0.05 + 1.45 * rng.uniform();
    {
      const Box& box = rc_boxes[static_cast<std::size_t>(k) % rc_boxes.size()];
      const auto h = sample_h(box, rng);
      const auto g = RcGraph::two_ghost(box, beta, H, h);
      const auto eta = random_boundary(g.box_graph(), rng);
      const auto eta2 = perturbed(eta, rng);
      const auto delta = center_delta(box);
      const auto where = describe(box, beta, H);
      const auto wired = exact_rc_measure(g, BondBoundary::wired(g), 2.0, RcMode::Abs, opt.edge_cap);
      const double bound = boundary_connection_probability(g, wired, delta);
      const auto p1 = exact_rc_measure(g, BondBoundary::eta_wired(g, eta), 2.0, RcMode::WithIndicator, opt.edge_cap);
      const auto p2 = exact_rc_measure(g, BondBoundary::eta_wired(g, eta2), 2.0, RcMode::WithIndicator, opt.edge_cap);
      const auto m1 = delta_edge_marginal(g, p1, delta), m2 = delta_edge_marginal(g, p2, delta);
      double tv = 0;
      for (std::size_t i = 0; i < m1.size(); ++i) tv += std::abs(m1[i] - m2[i]);
      tv /= 2;
      record(bond, bound - tv, tv <= bound + opt.tol, where);

      std::vector<double> field(h.size());
      for (std::size_t i = 0; i < h.size(); ++i) field[i] = H * h[i];
      const double stv = tv_marginal(g.box_graph(), delta, eta, eta2, beta, field, opt.spin_cap);
      record(spin, bound - stv, stv <= bound + opt.tol, where);
    }
    {
      const Box& box = site_boxes[static_cast<std::size_t>(k) % site_boxes.size()];
      const BoxGraph bg(box);
      const auto h = sample_h(box, rng);
      const auto eta = random_boundary(bg, rng);
      const auto eta2 = perturbed(eta, rng);
      const auto delta = center_delta(box);
      std::vector<double> field(h.size()), p(h.size());
      for (std::size_t i = 0; i < h.size(); ++i) {
        field[i] = H * h[i];
        p[i] = domination_p(beta, H, std::abs(h[i]), box.dim());
      }
      const double bound = product_connectivity(bg, p, disagreement_boundary(eta, eta2), delta, opt.spin_cap);
      const double tv = tv_marginal(bg, delta, eta, eta2, beta, field, opt.spin_cap);
      record(site, bound - tv, tv <= bound + opt.tol, describe(box, beta, H));
    }
  }
  return {bond, spin, site};
}

InvariantResult check_truncated_identity(const OracleOptions& opt) {
  InvariantResult r = named("truncated_covariance_identity");
  Rng rng(key_hash({opt.seed, 0x7c}));
  const std::vector<Box> boxes = {Box::cube(1, 2), Box::cube(3, 1), Box::from_sites(2, {Site{0, 0}, Site{1, 0}, Site{0, 1}})};
  for (const Box& box : boxes) {
    const BoxGraph bg(box);
    for (int k = 0; k < opt.draws; ++k) {
      const double beta = 0.05 + 0.95 * rng.uniform();
      const double H = 1.5 * rng.uniform();
      const auto h = sample_h(box, rng);
      std::vector<double> field(h.size());
      for (std::size_t i = 0; i < h.size(); ++i) field[i] = H * h[i];
      const auto law = exact_measure(bg, random_boundary(bg, rng), beta, field, opt.spin_cap);
      for (int x = 0; x < box.size(); ++x)
        for (int y = 0; y < box.size(); ++y) {
          if (x == y) continue;
          double py = 0, ex_plus = 0, ex_minus = 0;
          for (std::size_t c = 0; c < law.size(); ++c) {
            const double w = law.prob[c];
            if (law.ising_spin(c, y) > 0) {
              py += w;
              ex_plus += w * law.ising_spin(c, x);
            } else {
              ex_minus += w * law.ising_spin(c, x);
            }
          }
          if (py <= 0 || py >= 1) continue;
          const double rhs = 2 * py * (1 - py) * (ex_plus / py - ex_minus / (1 - py));
          record_error(r, std::abs(truncated_two_point(law, x, y) - rhs), opt.tol, describe(box, beta, H));
        }
    }
  }
  return r;
}

}  // namespace rfim
