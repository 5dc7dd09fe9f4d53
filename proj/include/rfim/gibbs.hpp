#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "rfim/lattice.hpp"
#include "rfim/rng.hpp"
#include "rfim/stats.hpp"

namespace rfim {

struct ModelParams {
  double beta = 0.0;
  double H = 0.0;
  int q = 2;
  int d = 2;

  void validate() const;
};

using Spin = std::int8_t;
/// Ising configuration on a box, aligned with Box::sites().
using SpinConfig = std::vector<Spin>;

/// Boundary spins on the exterior boundary, aligned with BoxGraph::exterior().
/// Ising values are +-1; Potts values are 1..q.
struct SpinBoundary {
  std::vector<int> values;

  static SpinBoundary constant(const BoxGraph& g, int value);
  static SpinBoundary all_plus(const BoxGraph& g) { return constant(g, +1); }
  static SpinBoundary all_minus(const BoxGraph& g) { return constant(g, -1); }
  bool operator==(const SpinBoundary&) const = default;
};

/// Fully enumerated law over configurations of `num_vars` variables with
/// `num_states` values each. Configuration index encodes variable k in base
/// num_states digit k; for Ising digit 1 means +1, for Potts digit s means
/// state s+1, for bonds digit 1 means open.
struct ExactDistribution {
  int num_vars = 0;
  int num_states = 2;
  std::vector<double> prob;
  double log_z = 0.0;

  std::size_t size() const { return prob.size(); }
  int digit(std::size_t config, int var) const;
  int ising_spin(std::size_t config, int var) const { return digit(config, var) ? +1 : -1; }
};

/// Unnormalized log-weight of the Ising measure with boundary eta and field.
double ising_log_weight(const BoxGraph& g, const SpinConfig& sigma, const SpinBoundary& eta, double beta,
                        std::span<const double> field);

inline constexpr int kDefaultSpinCap = 20;

/// Exact Ising law on the box by enumeration of all 2^|box| configurations.
ExactDistribution exact_measure(const BoxGraph& g, const SpinBoundary& eta, double beta,
                                std::span<const double> field, int cap = kDefaultSpinCap);

/// Exact q-state Potts law with constant field on state 1:
/// exp[2 beta sum delta + 2 beta sum_boundary delta + 2 H sum delta(sigma,1)].
ExactDistribution potts_exact_measure(const BoxGraph& g, const SpinBoundary& eta, double beta, double H, int q,
                                      int cap = kDefaultSpinCap);

/// Local field sum_{y~x} sigma_y (boundary spins from eta).
int neighbor_sum(const BoxGraph& g, const SpinConfig& sigma, const SpinBoundary& eta, int x);

/// Probability that sigma_x = +1 given its neighbours.
double heat_bath_plus_probability(const BoxGraph& g, const SpinConfig& sigma, const SpinBoundary& eta,
                                  double beta, std::span<const double> field, int x);

/// One heat-bath update of sigma_x driven by the uniform u. Returns the new spin.
Spin heat_bath_step(const BoxGraph& g, SpinConfig& sigma, int x, double u, const SpinBoundary& eta, double beta,
                    std::span<const double> field);

enum class SweepOrder { Raster, RandomSequential };

/// Single-site heat-bath chain. The graph must outlive the chain.
class HeatBathChain {
 public:
  HeatBathChain(const BoxGraph& g, SpinBoundary eta, double beta, std::vector<double> field, std::uint64_t seed,
                SweepOrder order = SweepOrder::Raster);

  void sweep();
  void sweeps(int n) {
    for (int i = 0; i < n; ++i) sweep();
  }
  const SpinConfig& state() const { return sigma_; }
  void set_state(SpinConfig s) { sigma_ = std::move(s); }
  const BoxGraph& graph() const { return *g_; }

 private:
  const BoxGraph* g_;
  SpinBoundary eta_;
  double beta_;
  std::vector<double> field_;
  SweepOrder order_;
  Rng rng_;
  SpinConfig sigma_;
};

// Exact observables.
double magnetization(const ExactDistribution& p, int x);
double two_point(const ExactDistribution& p, int x, int y);
double truncated_two_point(const ExactDistribution& p, int x, int y);

/// Streaming estimates of one-point and two-point functions for a fixed pair
/// of sites, with batch-means errors.
class PairCorrelationStream {
 public:
  PairCorrelationStream(int x, int y) : x_(x), y_(y) {}

  void add(const SpinConfig& s) {
    sx_.push_back(s[static_cast<std::size_t>(x_)]);
    sy_.push_back(s[static_cast<std::size_t>(y_)]);
  }
  std::size_t count() const { return sx_.size(); }
  Estimate magnetization_x() const;
  Estimate magnetization_y() const;
  Estimate two_point() const;
  Estimate truncated(std::size_t batches = 32) const;

 private:
  int x_, y_;
  std::vector<double> sx_, sy_;
};

/// Marginal of an exact Ising law on a subset of its variables (indices into the box).
std::vector<double> marginal(const ExactDistribution& p, std::span<const int> vars);

/// Half L1 distance between two marginals on `vars`.
double tv_marginal(const ExactDistribution& p, const ExactDistribution& q, std::span<const int> vars);

/// Exact TV between the delta-marginals under two boundary conditions.
double tv_marginal(const BoxGraph& g, std::span<const int> delta, const SpinBoundary& eta,
                   const SpinBoundary& eta2, double beta, std::span<const double> field, int cap = kDefaultSpinCap);

struct SamplingBudget {
  int burn_in = 1000;
  int gap = 10;
  int samples = 10000;
};

/// Plug-in TV estimate from two independent heat-bath chains, error from batches.
Estimate tv_marginal_sampled(const BoxGraph& g, std::span<const int> delta, const SpinBoundary& eta,
                             const SpinBoundary& eta2, double beta, std::span<const double> field,
                             const SamplingBudget& budget, std::uint64_t seed);

struct ObservableRow {
  Site x;
  Site y;
  Estimate estimate;
};

/// CSV with header `x, y, estimate, stderr, n_samples`; sites are written as colon-joined coordinates.
void write_observables_csv(std::ostream& os, std::span<const ObservableRow> rows);

}  // namespace rfim
