#pragma once

#include <functional>
#include <map>
#include <vector>

#include "wavectrl/spectral.hpp"

namespace wavectrl {

enum class Side { Left, Right };

class PiecewiseTrajectory;

// Delay segment x_t: sampled field history on offsets [-q, 0].  Three
// flavours share one query interface: an owning sample vector, a view into a
// trajectory at time t, and a functional view (used by re-evaluation on finer
// grids).  Queries interpolate linearly between samples; a view query that
// lands exactly on a grid node returns the one-sided limit selected by
// node_side, so integrands sampled per quadrature block see the correct
// limit across jump points.
class HistorySegment {
 public:
  HistorySegment(double delay, double dt, std::vector<SpectralField> samples);
  static HistorySegment view(const PiecewiseTrajectory& traj, double t,
                             Side node_side = Side::Left);
  static HistorySegment functional(double delay,
                                   std::function<SpectralField(double)> at_offset);

  double delay() const { return delay_; }
  double grid_step() const { return dt_; } // 0 for functional segments
  SpectralField value_at_offset(double s) const;

 private:
  HistorySegment() = default;
  double delay_ = 0.0;
  double dt_ = 0.0;
  std::vector<SpectralField> samples_;
  const PiecewiseTrajectory* traj_ = nullptr;
  double anchor_t_ = 0.0;
  Side node_side_ = Side::Left;
  std::function<SpectralField(double)> fn_;
};

// State path on [-q, T], sampled on a uniform grid of step dt aligned with
// every impulse point.  The stored sample at an interior jump node is the
// left limit (the trajectory is left-continuous there); right limits are kept
// separately.  At t = 0 the stored sample is the branch value x(0) =
// phi(0) + g(x), while the history limit phi(0-) lives in history_end.
class PiecewiseTrajectory {
 public:
  PiecewiseTrajectory() = default;
  PiecewiseTrajectory(ModeBasis basis, double delay, double horizon, double dt,
                      std::vector<SpectralField> samples, SpectralField history_end);
  static PiecewiseTrajectory constant(const ModeBasis& basis, double delay,
                                      double horizon, double dt, const SpectralField& v);

  bool empty() const { return samples_.empty(); }
  const ModeBasis& basis() const { return basis_; }
  double delay() const { return delay_; }
  double horizon() const { return horizon_; }
  double dt() const { return dt_; }
  int size() const { return static_cast<int>(samples_.size()); }
  int zero_index() const { return history_cells_; }
  int cells() const { return size() - 1 - history_cells_; } // cells on [0, T]

  double time_of(int j) const { return -delay_ + j * dt_; }
  int index_of(double t) const; // throws if t is off-grid or out of range

  const SpectralField& value(int j) const { return samples_.at(j); }
  SpectralField& mutable_value(int j) { return samples_.at(j); }
  const SpectralField& left_limit(int j) const;
  const SpectralField& right_limit(int j) const;
  void set_right_limit(int j, SpectralField f);
  const std::map<int, SpectralField>& right_limits() const { return right_limits_; }
  void clear_right_limits() { right_limits_.clear(); }
  const SpectralField& history_end() const { return history_end_; }

  // Linear interpolation of stored samples; exact at nodes (left convention,
  // or the chosen side at jump nodes).
  SpectralField value_at_time(double t, Side node_side = Side::Left) const;

 private:
  ModeBasis basis_;
  double delay_ = 0.0;
  double horizon_ = 0.0;
  double dt_ = 0.0;
  int history_cells_ = 0;
  std::vector<SpectralField> samples_;
  SpectralField history_end_;
  std::map<int, SpectralField> right_limits_;
};

// (1/q) \int_{-q}^{0} ||phi|| + sup_{[0,T]} ||x||, discrete L2 field norms.
double pc_norm(const PiecewiseTrajectory& traj);

// (1/q) \int_{-q}^{0} ||phi(s)|| ds by trapezoid rule over the samples.
double d_norm(const HistorySegment& seg);

// Segment x_t of a trajectory; t = 0 yields the initial history (anchored at
// phi(0-)), later times read the trajectory itself.
HistorySegment history_segment(const PiecewiseTrajectory& traj, double t);

} // namespace wavectrl
