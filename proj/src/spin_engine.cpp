#include "rfim/spin_engine.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace rfim {

RcSpinEngine::RcSpinEngine(const RcGraph& g, const BondBoundary& rho, RcMode mode, int site_cap)
    : g_(&g), n_(g.num_sites()) {
  if (n_ > site_cap) throw std::length_error("spin engine over " + std::to_string(n_) + " sites exceeds cap " + std::to_string(site_cap));
  if (mode == RcMode::Plain && g.ghost_mode() == GhostMode::Two)
    throw std::invalid_argument("spin engine needs with-indicator or abs mode on a two-ghost graph");
  rho.validate(g);
  configs_ = std::size_t{1} << n_;
  const bool separate = mode == RcMode::WithIndicator;
  pinned_.assign(static_cast<std::size_t>(g.num_vertices()), 0);
  pinned_[static_cast<std::size_t>(g.ghost_plus())] = 1;
  pinned_[static_cast<std::size_t>(g.ghost_minus())] = separate ? -1 : 1;

  // Exterior classes: pinned through ghosts or free.
  const std::size_t ncls = rho.ghost_mask.size();
  std::vector<int> class_group(ncls, -1);
  for (int k = 0; k < g.num_exterior(); ++k) {
    const int c = rho.cls[static_cast<std::size_t>(k)];
    const auto m = rho.ghost_mask[static_cast<std::size_t>(c)];
    int pin = 0;
    if (separate) {
      if ((m & BondBoundary::kPlus) && (m & BondBoundary::kMinus))
        throw std::domain_error("boundary joins g+ and g-; with-indicator measure is empty");
      if (m & BondBoundary::kPlus) pin = 1;
      if (m & BondBoundary::kMinus) pin = -1;
    } else if (m) {
      pin = 1;
    }
    pinned_[static_cast<std::size_t>(g.exterior_vertex(k))] = pin;
  }
  group_of_.assign(static_cast<std::size_t>(g.num_edges()), -1);
  for (int id = 0; id < g.num_edges(); ++id) {
    const auto& e = g.edge(id);
    int ext = -1;
    if (g.is_exterior(e.u)) ext = e.u;
    if (g.is_exterior(e.v)) ext = e.v;
    if (ext >= 0 && pinned_[static_cast<std::size_t>(ext)] == 0) {
      const int c = rho.cls[static_cast<std::size_t>(ext - g.num_sites())];
      int& grp = class_group[static_cast<std::size_t>(c)];
      if (grp < 0) {
        grp = static_cast<int>(groups_.size());
        groups_.push_back(Group{{}, true});
      }
      groups_[static_cast<std::size_t>(grp)].edges.push_back(id);
      group_of_[static_cast<std::size_t>(id)] = grp;
    } else {
      group_of_[static_cast<std::size_t>(id)] = static_cast<int>(groups_.size());
      groups_.push_back(Group{{id}, false});
    }
  }
  const std::size_t m = static_cast<std::size_t>(g.num_edges());
  p_.resize(m);
  site_end_.assign(m, -1);
  agree_.assign(m * configs_, 0);
  for (int id = 0; id < g.num_edges(); ++id) {
    const auto& e = g.edge(id);
    p_[static_cast<std::size_t>(id)] = e.p();
    if (groups_[static_cast<std::size_t>(group_of_[static_cast<std::size_t>(id)])].free_class) {
      site_end_[static_cast<std::size_t>(id)] = g.is_site(e.u) ? e.u : e.v;
    } else {
      for (std::size_t s = 0; s < configs_; ++s)
        agree_[static_cast<std::size_t>(id) * configs_ + s] = vertex_spin(e.u, s) == vertex_spin(e.v, s);
    }
  }
  state_.assign(m, -1);
  factor_.assign(groups_.size() * configs_, 1.0);
  prod_.assign(configs_, 1.0);
  zeros_.assign(configs_, 0);
  for (std::size_t gi = 0; gi < groups_.size(); ++gi)
    for (std::size_t s = 0; s < configs_; ++s) {
      const double f = group_factor(groups_[gi], s, -1, -1);
      factor_[gi * configs_ + s] = f;
      if (f == 0) ++zeros_[s];
      else prod_[s] *= f;
    }
  init_factor_ = factor_;
  init_prod_ = prod_;
  init_zeros_ = zeros_;
}

void RcSpinEngine::reset() {
  std::fill(state_.begin(), state_.end(), -1);
  factor_ = init_factor_;
  prod_ = init_prod_;
  zeros_ = init_zeros_;
}

int RcSpinEngine::vertex_spin(int v, std::size_t sigma) const {
  if (v < n_) return ((sigma >> v) & 1U) ? 1 : -1;
  return pinned_[static_cast<std::size_t>(v)];
}

double RcSpinEngine::edge_factor(int edge, int st, std::size_t sigma, int t) const {
  const auto ue = static_cast<std::size_t>(edge);
  const int x = site_end_[ue];
  const bool agree = x >= 0 ? ((((sigma >> x) & 1U) ? 1 : -1) == t) : agree_[ue * configs_ + sigma] != 0;
  const double p = p_[ue];
  if (st < 0) return agree ? 1.0 : 1.0 - p;
  if (st == 1) return agree ? p : 0.0;
  return 1.0 - p;
}

double RcSpinEngine::group_factor(const Group& grp, std::size_t sigma, int override_edge, int override_state) const {
  auto st = [&](int id) { return id == override_edge ? override_state : state_[static_cast<std::size_t>(id)]; };
  if (!grp.free_class) return edge_factor(grp.edges[0], st(grp.edges[0]), sigma, 0);
  double plus = 1, minus = 1, isolated = 1;
  for (int id : grp.edges) {
    const int s = st(id);
    plus *= edge_factor(id, s, sigma, 1);
    minus *= edge_factor(id, s, sigma, -1);
    isolated *= s == 1 ? 0.0 : 1.0 - p_[static_cast<std::size_t>(id)];
  }
  return plus + minus - isolated;
}

double RcSpinEngine::weight() const {
  double z = 0;
  for (std::size_t s = 0; s < configs_; ++s)
    if (zeros_[s] == 0) z += prod_[s];
  return z;
}

double RcSpinEngine::prob_open(int edge) const {
  if (state_.at(static_cast<std::size_t>(edge)) >= 0) throw std::logic_error("edge already revealed");
  const std::size_t gi = static_cast<std::size_t>(group_of_[static_cast<std::size_t>(edge)]);
  const Group& grp = groups_[gi];
  double num = 0, den = 0;
  if (!grp.free_class) {
    const std::uint8_t* ag = agree_.data() + static_cast<std::size_t>(edge) * configs_;
    const double* f = factor_.data() + gi * configs_;
    const double p = p_[static_cast<std::size_t>(edge)];
    for (std::size_t s = 0; s < configs_; ++s) {
      if (zeros_[s] != 0) continue;  // unrevealed edge factors are positive
      den += prod_[s];
      if (ag[s]) num += prod_[s] / f[s] * p;
    }
    if (!(den > 0)) throw std::domain_error("revealed history has probability zero");
    return std::min(1.0, num / den);
  }
  for (std::size_t s = 0; s < configs_; ++s) {
    const double cur = factor_[gi * configs_ + s];
    const int other_zeros = zeros_[s] - (cur == 0 ? 1 : 0);
    if (other_zeros > 0) continue;
    const double rest = cur == 0 ? prod_[s] : prod_[s] / cur;
    num += rest * group_factor(grp, s, edge, 1);
    if (cur != 0) den += prod_[s];
  }
  if (!(den > 0)) throw std::domain_error("revealed history has probability zero");
  const double p = num / den;
  return p < 0 ? 0.0 : (p > 1 ? 1.0 : p);
}

void RcSpinEngine::reveal(int edge, bool open) {
  if (state_.at(static_cast<std::size_t>(edge)) >= 0) throw std::logic_error("edge already revealed");
  const std::size_t gi = static_cast<std::size_t>(group_of_[static_cast<std::size_t>(edge)]);
  state_[static_cast<std::size_t>(edge)] = open ? 1 : 0;
  const Group& grp = groups_[gi];
  const std::uint8_t* ag = agree_.data() + static_cast<std::size_t>(edge) * configs_;
  const double p = p_[static_cast<std::size_t>(edge)];
  for (std::size_t s = 0; s < configs_; ++s) {
    double& f = factor_[gi * configs_ + s];
    const double nf = grp.free_class ? group_factor(grp, s, -1, -1) : (open ? (ag[s] ? p : 0.0) : 1.0 - p);
    if (f == 0) --zeros_[s];
    else prod_[s] /= f;
    if (nf == 0) ++zeros_[s];
    else prod_[s] *= nf;
    f = nf;
  }
}

}  // namespace rfim
