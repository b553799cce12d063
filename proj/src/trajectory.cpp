#include "wavectrl/trajectory.hpp"

#include <cmath>

namespace wavectrl {

namespace {
constexpr double kSnap = 1e-7; // fraction of dt tolerated when snapping to a node

int checked_cells(double length, double dt, const char* what) {
  const double raw = length / dt;
  const int n = static_cast<int>(std::llround(raw));
  if (n < 0 || std::abs(raw - n) > 1e-6)
    throw std::invalid_argument(std::string(what) + " is not an integer multiple of dt");
  return n;
}
} // namespace

HistorySegment::HistorySegment(double delay, double dt, std::vector<SpectralField> samples) {
  if (delay <= 0.0) throw std::invalid_argument("segment delay must be positive");
  if (samples.size() < 2) throw std::invalid_argument("segment needs at least two samples");
  const int cells = checked_cells(delay, dt, "segment delay");
  if (cells + 1 != static_cast<int>(samples.size()))
    throw std::invalid_argument("segment sample count does not match delay/dt");
  delay_ = delay;
  dt_ = dt;
  samples_ = std::move(samples);
}

HistorySegment HistorySegment::view(const PiecewiseTrajectory& traj, double t, Side node_side) {
  if (traj.empty()) throw std::domain_error("history view of an empty trajectory");
  if (t < -1e-12 || t > traj.horizon() + 1e-12)
    throw std::domain_error("history view time outside [0, T]");
  HistorySegment seg;
  seg.delay_ = traj.delay();
  seg.dt_ = traj.dt();
  seg.traj_ = &traj;
  seg.anchor_t_ = t;
  seg.node_side_ = node_side;
  return seg;
}

HistorySegment HistorySegment::functional(double delay,
                                          std::function<SpectralField(double)> at_offset) {
  if (delay <= 0.0) throw std::invalid_argument("segment delay must be positive");
  HistorySegment seg;
  seg.delay_ = delay;
  seg.fn_ = std::move(at_offset);
  return seg;
}

SpectralField HistorySegment::value_at_offset(double s) const {
  if (s < -delay_ - 1e-12 || s > 1e-12)
    throw std::domain_error("segment offset outside [-q, 0]");
  s = std::min(0.0, std::max(-delay_, s));
  if (fn_) return fn_(s);
  if (traj_) {
    const double tau = anchor_t_ + s;
    const double x = (tau + traj_->delay()) / dt_;
    const int j0 = static_cast<int>(std::floor(x + kSnap));
    const double frac = x - j0;
    if (frac < kSnap) { // exact node: take the requested one-sided limit
      return node_side_ == Side::Right ? traj_->right_limit(j0)
                                       : traj_->left_limit(j0);
    }
    SpectralField out = traj_->value(j0);
    out.c = (1.0 - frac) * out.c + frac * traj_->value(j0 + 1).c;
    out.real_field = out.real_field && traj_->value(j0 + 1).real_field;
    return out;
  }
  const double x = (s + delay_) / dt_;
  int j0 = static_cast<int>(std::floor(x + kSnap));
  j0 = std::min(j0, static_cast<int>(samples_.size()) - 2);
  const double frac = x - j0;
  if (frac < kSnap) return samples_[j0];
  SpectralField out = samples_[j0];
  out.c = (1.0 - frac) * out.c + frac * samples_[j0 + 1].c;
  out.real_field = out.real_field && samples_[j0 + 1].real_field;
  return out;
}

PiecewiseTrajectory::PiecewiseTrajectory(ModeBasis basis, double delay, double horizon,
                                         double dt, std::vector<SpectralField> samples,
                                         SpectralField history_end)
    : basis_(basis), delay_(delay), horizon_(horizon), dt_(dt),
      history_end_(std::move(history_end)) {
  if (delay < 0.0 || horizon <= 0.0 || dt <= 0.0)
    throw std::invalid_argument("delay must be nonnegative, horizon and dt positive");
  history_cells_ = checked_cells(delay, dt, "delay");
  const int total = history_cells_ + checked_cells(horizon, dt, "horizon");
  if (static_cast<int>(samples.size()) != total + 1)
    throw std::invalid_argument("trajectory sample count does not match grid");
  samples_ = std::move(samples);
}

PiecewiseTrajectory PiecewiseTrajectory::constant(const ModeBasis& basis, double delay,
                                                  double horizon, double dt,
                                                  const SpectralField& v) {
  const int total = checked_cells(delay, dt, "delay") + checked_cells(horizon, dt, "horizon");
  std::vector<SpectralField> samples(total + 1, v);
  return PiecewiseTrajectory(basis, delay, horizon, dt, std::move(samples), v);
}

int PiecewiseTrajectory::index_of(double t) const {
  const double x = (t + delay_) / dt_;
  const int j = static_cast<int>(std::llround(x));
  if (j < 0 || j >= size() || std::abs(x - j) > 1e-6)
    throw std::domain_error("time is not a grid node of the trajectory");
  return j;
}

const SpectralField& PiecewiseTrajectory::left_limit(int j) const {
  if (j == zero_index()) return history_end_;
  return samples_.at(j);
}

const SpectralField& PiecewiseTrajectory::right_limit(int j) const {
  const auto it = right_limits_.find(j);
  return it != right_limits_.end() ? it->second : samples_.at(j);
}

void PiecewiseTrajectory::set_right_limit(int j, SpectralField f) {
  right_limits_[j] = std::move(f);
}

SpectralField PiecewiseTrajectory::value_at_time(double t, Side node_side) const {
  const double x = (t + delay_) / dt_;
  int j0 = static_cast<int>(std::floor(x + kSnap));
  if (j0 < 0 || j0 >= size())
    throw std::domain_error("trajectory query outside [-q, T]");
  const double frac = x - j0;
  if (frac < kSnap)
    return node_side == Side::Right ? right_limit(j0) : value(j0);
  if (j0 + 1 >= size()) throw std::domain_error("trajectory query outside [-q, T]");
  SpectralField out = samples_[j0];
  out.c = (1.0 - frac) * out.c + frac * samples_[j0 + 1].c;
  out.real_field = out.real_field && samples_[j0 + 1].real_field;
  return out;
}

double pc_norm(const PiecewiseTrajectory& traj) {
  if (traj.empty()) throw std::domain_error("pc_norm of an empty trajectory");
  const int z = traj.zero_index();
  double hist = 0.0;
  for (int j = 0; j < z; ++j) {
    const double a = l2_norm(traj.value(j));
    const double b = l2_norm(j + 1 == z ? traj.left_limit(z) : traj.value(j + 1));
    hist += 0.5 * (a + b) * traj.dt();
  }
  double sup = 0.0;
  for (int j = z; j < traj.size(); ++j) sup = std::max(sup, l2_norm(traj.value(j)));
  // Zero delay: the history average degenerates to the single left limit.
  const double avg = z == 0 ? l2_norm(traj.history_end()) : hist / traj.delay();
  return avg + sup;
}

double d_norm(const HistorySegment& seg) {
  // Sample count follows the segment's own grid when it has one; fall back to
  // a fixed resolution for functional views.
  const double q = seg.delay();
  const int cells = seg.grid_step() > 0.0
                        ? static_cast<int>(std::llround(q / seg.grid_step()))
                        : 1024;
  double acc = 0.0;
  double prev = l2_norm(seg.value_at_offset(-q));
  const double h = q / cells;
  for (int k = 1; k <= cells; ++k) {
    const double cur = l2_norm(seg.value_at_offset(-q + k * h));
    acc += 0.5 * (prev + cur) * h;
    prev = cur;
  }
  return acc / q;
}

HistorySegment history_segment(const PiecewiseTrajectory& traj, double t) {
  return HistorySegment::view(traj, t);
}

} // namespace wavectrl
