#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rfim/cluster.hpp"
#include "rfim/gibbs.hpp"
#include "rfim/rng.hpp"
#include "rfim/spin_engine.hpp"

namespace rfim {

/// Shared uniforms keyed by element identity and time index.
struct UniformStream {
  std::uint64_t seed = 0;

  std::uint64_t edge_key(int edge, int t = 0) const {
    return key_hash({stream::kEdgeUniform, seed, static_cast<std::uint64_t>(edge), static_cast<std::uint64_t>(t)});
  }
  std::uint64_t site_key(int site, int t = 0) const {
    return key_hash({stream::kSiteUniform, seed, static_cast<std::uint64_t>(site), static_cast<std::uint64_t>(t)});
  }
  double edge(int e, int t = 0) const { return bits_to_unit(edge_key(e, t)); }
  double site(int x, int t = 0) const { return bits_to_unit(site_key(x, t)); }
  /// Fair coin for the cluster whose minimal site has rank `rank` in vertex_order.
  int cluster_coin(int rank) const {
    return keyed_uniform({stream::kClusterCoin, seed, static_cast<std::uint64_t>(rank)}) < 0.5 ? 1 : -1;
  }
};

struct RevealStep {
  int t = 0;
  bool before_tau = true;
  int id = 0;
  std::string element;
  std::uint64_t key = 0;
  double u = 0.0;
  std::vector<double> probs;  // conditional probability of open / +1 in each coupled measure
  std::vector<int> values;    // revealed value in each coupled measure
};

struct CouplingTrace {
  std::string kind;
  std::vector<std::string> measures;
  std::vector<RevealStep> steps;
  int tau = 0;
  bool approximate = false;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  /// One JSON object per reveal step, then a summary record.
  void write_jsonl(std::ostream& os) const;
};

struct GrandCouplingResult {
  BondConfig omega_rho;
  BondConfig omega_rho2;
  BondConfig omega_w;
  CouplingTrace trace;
};

/// Grand coupling of P^h_rho, P^h_rho' (with-indicator mode) and P^|h|_w (abs
/// mode, wired). `delta` lists box sites whose edges are checked by the
/// disagreement assertion. Engines are built once and reused across runs.
class GrandCoupler {
 public:
  GrandCoupler(const RcGraph& g, const BondBoundary& rho, const BondBoundary& rho2, std::vector<int> delta = {});
  GrandCouplingResult run(std::uint64_t seed);
  const RcGraph& graph() const { return *g_; }

 private:
  const RcGraph* g_;
  RcSpinEngine e_rho_, e_rho2_, e_w_;
  std::vector<int> delta_;
};

GrandCouplingResult grand_rc_coupling(const RcGraph& g, const BondBoundary& rho, const BondBoundary& rho2,
                                      std::uint64_t seed, std::vector<int> delta = {});

/// Spins from bonds: clusters of g+ / g- get +1 / -1, clusters meeting the
/// exterior get eta, the rest get fair coins keyed by their minimal site in
/// vertex_order. Throws if omega joins terminals of different sign.
SpinConfig es_conditional_spins(const RcGraph& g, const BondConfig& omega, const SpinBoundary& eta, std::uint64_t seed);

struct IsingCouplingResult {
  SpinConfig sigma_eta;
  SpinConfig sigma_eta2;
  std::vector<std::uint8_t> c_plus;  // per box site
  GrandCouplingResult bonds;
};

class IsingBcCoupler {
 public:
  IsingBcCoupler(const RcGraph& g, const SpinBoundary& eta, const SpinBoundary& eta2);
  IsingCouplingResult run(std::uint64_t seed);

 private:
  const RcGraph* g_;
  SpinBoundary eta_, eta2_;
  std::unique_ptr<GrandCoupler> grand_;
  std::vector<int> rank_;
};

IsingCouplingResult ising_bc_coupling(const RcGraph& g, const SpinBoundary& eta, const SpinBoundary& eta2,
                                      std::uint64_t seed);

struct SiteCouplingResult {
  SpinConfig sigma_eta;
  SpinConfig sigma_eta2;
  std::vector<std::uint8_t> s;  // disagreement field on the box
  CouplingTrace trace;
};

struct SiteCouplingOptions {
  bool strict = true;           // reject zero field values
  bool approximate = false;     // heat-bath conditionals instead of enumeration
  int approx_sweeps = 200;
  int cap = kDefaultSpinCap;
};

/// Site exploration coupling of the Ising measures with boundaries eta and
/// eta' and effective field `field` (one value per box site).
class SiteCoupler {
 public:
  SiteCoupler(const BoxGraph& g, const SpinBoundary& eta, const SpinBoundary& eta2, double beta,
              std::vector<double> field, SiteCouplingOptions opt = {});
  SiteCouplingResult run(std::uint64_t seed);

 private:
  double conditional_plus(int which, int x, std::uint64_t mask, std::uint64_t values, const SpinConfig& partial,
                          std::uint64_t seed) const;

  const BoxGraph* g_;
  SpinBoundary eta_[2];
  double beta_;
  std::vector<double> field_;
  SiteCouplingOptions opt_;
  ExactDistribution exact_[2];
  std::vector<int> order_;  // box indices in vertex_order
};

SiteCouplingResult site_exploration_coupling(const BoxGraph& g, const SpinBoundary& eta, const SpinBoundary& eta2,
                                             double beta, std::span<const double> field, std::uint64_t seed,
                                             SiteCouplingOptions opt = {});

/// Worst-case lower bound on P(sigma_x = sgn h_x): 1 / (1 + exp(4 d beta - 2 H |h|)).
double sign_bound_a(double beta, double H, double abs_h, int d);
/// 1 - a^2.
double domination_p(double beta, double H, double abs_h, int d);

/// Independent Bernoulli(p_x) sites on the box (keyed by site index).
std::vector<std::uint8_t> dominating_site_sample(std::span<const double> p, std::uint64_t seed);

/// Exterior sites of the box that are open: eta_x != eta'_x.
std::vector<std::uint8_t> disagreement_boundary(const SpinBoundary& eta, const SpinBoundary& eta2);

/// True if an open site path joins an open exterior site of the box to the
/// exterior boundary of delta (box sites `delta`).
bool site_path_to_delta(const BoxGraph& g, std::span<const std::uint8_t> open_sites,
                        std::span<const std::uint8_t> open_exterior, std::span<const int> delta);

/// Exact probability of the event above under independent sites with probabilities p.
double product_connectivity(const BoxGraph& g, std::span<const double> p, std::span<const std::uint8_t> open_exterior,
                            std::span<const int> delta, int cap = kDefaultSpinCap);

}  // namespace rfim
