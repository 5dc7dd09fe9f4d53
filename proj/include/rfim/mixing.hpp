#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rfim/gibbs.hpp"
#include "rfim/lattice.hpp"
#include "rfim/stats.hpp"

namespace rfim {

/// Ising model on a w x h rectangle of Z^2 with fixed spins around it.
/// Site (i, j) has row-major index j * width + i. Boundary entries are +-1,
/// or 0 for no neighbour.
struct RectangleBlock {
  int width = 0;
  int height = 0;
  std::vector<double> field;  // effective field per site
  std::vector<int> top, bottom, left, right;
  std::vector<int> fixed;  // optional per-site clamp (+-1), 0 = free
};

inline constexpr int kMaxRectangleWidth = 16;

/// Exact <sigma_target> by a site-by-site transfer matrix. Cost ~ 2^width * width * height.
double rectangle_magnetization(const RectangleBlock& b, double beta, int target);

/// Exact truncated two-point function of a nearest-neighbour chain with
/// fields `field` and boundary spins left/right (0 = free end).
double chain_truncated_two_point(double beta, std::span<const double> field, int left, int right, int x, int y);

/// Exact <sigma_x> of the same chain.
double chain_magnetization(double beta, std::span<const double> field, int left, int right, int x);

/// `samples` counts sweeps. A pilot of `pilot` sweeps measures how often the
/// block boundary disagrees; the estimator is then recorded every k-th sweep
/// so that about `max_evaluations` block evaluations are spent.
/// With window > 0 a sweep only visits sites within that sup-distance of the
/// sites of interest, and every `local_sweeps`-th sweep visits the whole box.
/// Each single-site update preserves the Gibbs measure, so this is still exact.
struct CoupledBudget {
  int burn_in = 200;
  int samples = 20000;
  int batches = 40;
  int block_radius = 6;
  int pilot = 1000;
  int max_evaluations = 4000;
  int window = 0;
  int local_sweeps = 1;
};

struct BlockEstimate {
  Estimate estimate;
  bool exact = false;  // the block covered the whole box
  std::size_t block_evaluations = 0;
  int gap = 1;
};

/// TV between the plus- and minus-boundary marginals of sigma_center on a 2d
/// box. Monotone coupled heat-bath chains; each sample contributes
/// (f(xi+) - f(xi-)) / 2 where f is the exact conditional magnetization on a
/// block around the centre given the chains' spins on its boundary.
BlockEstimate center_tv_estimate(const BoxGraph& g, double beta, std::span<const double> field, int center,
                                 const CoupledBudget& budget, std::uint64_t seed);

/// E[sigma_x | sigma_y = +] - E[sigma_x | sigma_y = -] by the same
/// block-conditional estimator on a pair of chains clamped at y.
BlockEstimate conditional_difference_estimate(const BoxGraph& g, const SpinBoundary& eta, double beta,
                                              std::span<const double> field, int x, int y,
                                              const CoupledBudget& budget, std::uint64_t seed);

/// P(sigma_y = +) with the heat-bath conditional probability as the per-sample estimator.
Estimate plus_probability_estimate(const BoxGraph& g, const SpinBoundary& eta, double beta,
                                   std::span<const double> field, int y, const CoupledBudget& budget,
                                   std::uint64_t seed);

}  // namespace rfim
