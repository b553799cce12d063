#include "wavectrl/quadrature.hpp"

namespace wavectrl {

std::vector<double> block_weights(int cells) {
  if (cells < 0) throw std::invalid_argument("negative cell count");
  std::vector<double> w(static_cast<size_t>(cells) + 1, 0.0);
  if (cells == 0) return w;
  if (cells == 1) {
    w[0] = w[1] = 0.5;
    return w;
  }
  int simpson_cells = cells;
  if (cells % 2 == 1) {
    simpson_cells = cells - 3; // 3/8 rule on the last three cells
    const double c = 3.0 / 8.0;
    w[cells - 3] += c;
    w[cells - 2] += 3.0 * c;
    w[cells - 1] += 3.0 * c;
    w[cells] += c;
  }
  for (int i = 0; i + 2 <= simpson_cells; i += 2) {
    w[i] += 1.0 / 3.0;
    w[i + 1] += 4.0 / 3.0;
    w[i + 2] += 1.0 / 3.0;
  }
  return w;
}

std::vector<double> simpson_weights(int cells, double h) {
  if (cells < 2 || cells % 2 != 0)
    throw std::invalid_argument("Simpson rule needs an even cell count >= 2");
  std::vector<double> w(static_cast<size_t>(cells) + 1, 0.0);
  for (int i = 0; i + 2 <= cells; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  return w;
}

std::vector<double> trapezoid_weights(int cells, double h) {
  if (cells < 1) throw std::invalid_argument("trapezoid rule needs at least one cell");
  std::vector<double> w(static_cast<size_t>(cells) + 1, h);
  w.front() = w.back() = 0.5 * h;
  return w;
}

std::vector<double> merged_weights(const std::vector<int>& cuts, double dt) {
  if (cuts.size() < 2 || cuts.front() >= cuts.back())
    throw std::invalid_argument("merged_weights needs an increasing cut list");
  const int ia = cuts.front();
  std::vector<double> w(static_cast<size_t>(cuts.back() - ia) + 1, 0.0);
  for (size_t b = 0; b + 1 < cuts.size(); ++b) {
    const int c0 = cuts[b], c1 = cuts[b + 1];
    if (c1 <= c0) throw std::invalid_argument("merged_weights cuts must increase");
    const auto bw = block_weights(c1 - c0);
    for (int i = 0; i <= c1 - c0; ++i) w[c0 - ia + i] += dt * bw[i];
  }
  return w;
}

} // namespace wavectrl
