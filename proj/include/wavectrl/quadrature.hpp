#pragma once

#include <stdexcept>
#include <vector>

#include "wavectrl/trajectory.hpp" // Side

namespace wavectrl {

// Composite quadrature on uniform grids, organised around block structures:
// a block list {j_0 < j_1 < ... < j_m} of node indices splits [j_0, j_m] into
// blocks of whole cells, and each block is integrated by the highest-order
// closed Newton-Cotes composite that fits:
//   even cell count      Simpson pairs
//   odd cell count >= 5  Simpson on the first k-3 cells, 3/8 rule on the rest
//   3 cells              3/8 rule
//   1 cell               trapezoid
// Integrands may jump or kink at the cut nodes; values there are taken from
// the side interior to each block, so a cut node carries two samples.

// Per-node weights of the single-block rule on `cells` unit cells.
std::vector<double> block_weights(int cells);

// Closed composite Simpson weights on `cells` cells of width h (cells even).
std::vector<double> simpson_weights(int cells, double h);

// Closed trapezoid weights on `cells` cells of width h.
std::vector<double> trapezoid_weights(int cells, double h);

// Side-merged per-node weights of the blocked rule: weight[j - cuts.front()]
// is the sum of the adjacent blocks' end weights at node j.  Applying these
// to single-valued samples integrates a continuous function across the whole
// range with the exact same coefficients the split rule uses.
std::vector<double> merged_weights(const std::vector<int>& cuts, double dt);

// Cumulative prefix integrals over the block structure.  sample(j, side)
// returns the integrand at node j; side is Right at a block start, Left
// elsewhere.  out[j - cuts.front()] approximates the integral from the first
// node to node j, and at each cut node it equals the exact sum of the
// preceding whole-block rules, so the final entry matches merged_weights
// applied to the side-split samples.
template <class T, class F>
std::vector<T> blocked_prefix(const std::vector<int>& cuts, double dt, F&& sample) {
  if (cuts.size() < 2 || cuts.front() >= cuts.back())
    throw std::invalid_argument("blocked_prefix needs an increasing cut list");
  const int ia = cuts.front();
  std::vector<T> out(static_cast<size_t>(cuts.back() - ia) + 1, T{});
  T acc{};
  for (size_t b = 0; b + 1 < cuts.size(); ++b) {
    const int c0 = cuts[b], c1 = cuts[b + 1];
    const int k = c1 - c0;
    if (k <= 0) throw std::invalid_argument("blocked_prefix cuts must increase");
    std::vector<T> f(static_cast<size_t>(k) + 1);
    f[0] = sample(c0, Side::Right);
    for (int i = 1; i <= k; ++i) f[i] = sample(c0 + i, Side::Left);
    std::vector<T> even(static_cast<size_t>(k) + 1, T{}); // Simpson prefix at even offsets
    for (int i = 2; i <= k; i += 2)
      even[i] = even[i - 2] + (dt / 3.0) * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
    for (int i = 1; i <= k; ++i) {
      T p;
      if (i % 2 == 0) {
        p = even[i];
      } else if (i == 1) {
        p = k >= 2 ? (dt / 12.0) * (5.0 * f[0] + 8.0 * f[1] - f[2])
                   : (dt / 2.0) * (f[0] + f[1]);
      } else {
        p = even[i - 3] +
            (3.0 * dt / 8.0) * (f[i - 3] + 3.0 * f[i - 2] + 3.0 * f[i - 1] + f[i]);
      }
      out[c0 - ia + i] = acc + p;
    }
    acc = out[c1 - ia];
  }
  return out;
}

} // namespace wavectrl
