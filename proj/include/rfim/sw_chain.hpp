#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "rfim/gibbs.hpp"
#include "rfim/lattice.hpp"
#include "rfim/rng.hpp"
#include "rfim/stats.hpp"
#include "rfim/union_find.hpp"

namespace rfim {

/// Edwards-Sokal alternation for the Ising model on a box with spin boundary
/// eta and effective field (one value per site). Bonds are resampled given
/// spins, then spins given bonds. q = 2 only. The graph must outlive the chain.
class SwChain {
 public:
  SwChain(const BoxGraph& g, SpinBoundary eta, double beta, std::vector<double> field, std::uint64_t seed);

  void bond_step();
  void spin_step();
  void step() {
    bond_step();
    spin_step();
  }

  const SpinConfig& state() const { return sigma_; }
  void set_state(SpinConfig s);
  const BoxGraph& graph() const { return *g_; }

  // Bonds from the last bond_step.
  const std::vector<std::uint8_t>& internal_open() const { return internal_open_; }  // aligned with internal_edges()
  const std::vector<std::uint8_t>& link_open() const { return link_open_; }          // aligned with boundary_links()
  const std::vector<std::uint8_t>& ghost_open() const { return ghost_open_; }        // per site

 private:
  const BoxGraph* g_;
  SpinBoundary eta_;
  double p_bond_;
  std::vector<double> field_;
  std::vector<double> p_ghost_;
  Rng rng_;
  SpinConfig sigma_;
  std::vector<std::uint8_t> internal_open_, link_open_, ghost_open_;
  UnionFind uf_;
};

/// True if `from` reaches a site with target[x] != 0 through open internal edges.
bool reaches_internal(const BoxGraph& g, std::span<const std::uint8_t> internal_open, int from,
                      std::span<const std::uint8_t> target);

struct ThetaBudget {
  int chains = 40;            // independent chains started from all-plus
  int burn_in = 50;           // ES steps discarded per chain
  int samples_per_chain = 250;
  int gap = 1;                // ES steps between samples
  int replicas() const { return chains * samples_per_chain; }
};

/// Estimate of theta_n: probability under the wired random cluster measure on
/// [-n,n]^d with constant field H that the origin reaches the inner boundary
/// through lattice edges. Standard error from between-chain spread. q = 2.
Estimate theta_n_estimate(double beta, double H, int n, int d, const ThetaBudget& budget, std::uint64_t seed);

struct ThetaRow {
  double beta;
  double H;
  int q;
  int n;
  Estimate estimate;
  int replicas;
  int sweeps;
  std::uint64_t seed;
};

/// CSV with header `beta, H, q, n, estimate, stderr, replicas, sweeps, seed`.
void write_theta_csv(std::ostream& os, std::span<const ThetaRow> rows);

}  // namespace rfim
