#pragma once

// Gyro integration with latency-compensated motion-capture corrections.

#include "pointfoot/estimator/attitude.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

namespace pointfoot::estimator {

struct FusionConfig {
  double dt = 1e-3;
  int latency_ticks = 15;
  int depth = 64;  ///< ring-buffer length, must exceed latency_ticks
  bool compensate_delay = true;
  LedPattern pattern = LedPattern::octahedron();
  std::optional<RegularizationWeights> weights;  ///< defaults to the half-life calibration

  void validate() const {
    if (!(dt > 0.0)) throw EstimatorError("fusion dt must be positive");
    if (latency_ticks < 0) throw EstimatorError("latency must be non-negative");
    if (depth <= latency_ticks) throw EstimatorError("buffer depth must exceed the latency in ticks");
    if (weights && !(weights->lambda1 > 0.0 && weights->lambda2 > 0.0))
      throw EstimatorError("regularization weights must be positive");
  }
};

/// One motion-capture frame: marker positions captured at `capture_tick`.
struct MocapSample {
  std::int64_t capture_tick = 0;
  LedVector leds = LedVector::Zero();
  VisibleMask visible{};
};

struct FusionDiagnostics {
  std::int64_t updates = 0;
  std::int64_t dropped = 0;
};

/// Ring buffer of per-tick gyro samples and orientation estimates. A
/// correction is applied at the capture tick and the stored gyro samples
/// are re-integrated up to the present.
class FusionBuffer {
 public:
  FusionBuffer(FusionConfig cfg, const Quat& q0, const Vec3& x0 = Vec3::Zero())
      : cfg_(std::move(cfg)), R_(build_regressor(cfg_.pattern)) {
    cfg_.validate();
    w_ = cfg_.weights ? *cfg_.weights : half_life_weights(cfg_.pattern);
    q_.assign(static_cast<size_t>(cfg_.depth), q0);
    omega_.assign(static_cast<size_t>(cfg_.depth), Vec3::Zero());
    x_ = x0;
  }

  const FusionConfig& config() const { return cfg_; }
  const RegularizationWeights& weights() const { return w_; }
  const FusionDiagnostics& diagnostics() const { return diag_; }
  std::int64_t tick() const { return tick_; }
  const Quat& estimate() const { return slot(q_, tick_); }
  const Vec3& translation() const { return x_; }
  bool last_innovation() const { return innovated_; }

  /// Advances one controller tick with the gyro sample for the interval
  /// ending now, then applies `mocap` if given.
  const Quat& fuse_tick(const Vec3& omega, const std::optional<MocapSample>& mocap) {
    const Quat prev = slot(q_, tick_);
    ++tick_;
    slot(omega_, tick_) = omega;
    slot(q_, tick_) = integrate_imu(prev, omega, cfg_.dt);
    innovated_ = false;
    if (mocap) apply(*mocap);
    return slot(q_, tick_);
  }

 private:
  template <class T>
  T& slot(std::vector<T>& v, std::int64_t t) {
    const auto n = static_cast<std::int64_t>(v.size());
    return v[static_cast<size_t>(((t % n) + n) % n)];
  }
  template <class T>
  const T& slot(const std::vector<T>& v, std::int64_t t) const {
    const auto n = static_cast<std::int64_t>(v.size());
    return v[static_cast<size_t>(((t % n) + n) % n)];
  }

  void apply(const MocapSample& m) {
    // Naive fusion treats the frame as current.
    const std::int64_t k = cfg_.compensate_delay ? m.capture_tick : tick_;
    if (k > tick_ || tick_ - k >= cfg_.depth || k < 0) {
      ++diag_.dropped;
      return;
    }
    const Quat qk = slot(q_, k);
    const Theta prior = theta_from(x_, qk.toRotationMatrix());
    const Theta th = solve_regularized(R_, m.leds, m.visible, prior, w_);
    x_ = th.head<3>();
    slot(q_, k) = closest_quaternion(matrix_part(th));
    for (std::int64_t j = k + 1; j <= tick_; ++j) slot(q_, j) = integrate_imu(slot(q_, j - 1), slot(omega_, j), cfg_.dt);
    ++diag_.updates;
    innovated_ = true;
  }

  FusionConfig cfg_;
  Regressor R_;
  RegularizationWeights w_;
  std::vector<Quat> q_;
  std::vector<Vec3> omega_;
  Vec3 x_;
  std::int64_t tick_ = 0;
  bool innovated_ = false;
  FusionDiagnostics diag_;
};

/// Observed marker vector for a body pose; `visible` masks dropouts.
inline LedVector observe_leds(const LedPattern& p, const Quat& q, const Vec3& x) {
  LedVector y;
  const Mat3 R = q.toRotationMatrix();
  for (int k = 0; k < kLedCount; ++k) y.segment<3>(3 * k) = x + R * p.z[static_cast<size_t>(k)];
  return y;
}

// ---------------------------------------------------------------------------
// Sensor traces: one row per controller tick with the gyro sample and the
// marker frame delivered at that tick (captured latency_ticks earlier), NaN
// for markers that were not seen or ticks without a frame.

struct TraceRow {
  double t = 0.0;
  Vec3 omega = Vec3::Zero();
  LedVector leds = LedVector::Constant(std::numeric_limits<double>::quiet_NaN());

  bool has_frame() const {
    for (int i = 0; i < 3 * kLedCount; i += 3)
      if (!std::isnan(leds[i])) return true;
    return false;
  }
};

struct SensorTrace {
  double dt = 1e-3;
  int latency_ticks = 15;
  std::vector<TraceRow> rows;
  std::vector<Quat> truth;  ///< true orientation per row (synthetic traces only)
};

inline std::optional<MocapSample> frame_at(const SensorTrace& tr, size_t row) {
  const TraceRow& r = tr.rows[row];
  if (!r.has_frame()) return std::nullopt;
  MocapSample m;
  m.capture_tick = static_cast<std::int64_t>(row) - tr.latency_ticks;
  for (int k = 0; k < kLedCount; ++k) {
    const bool vis = !std::isnan(r.leds[3 * k]);
    m.visible[static_cast<size_t>(k)] = vis;
    m.leds.segment<3>(3 * k) = vis ? Vec3(r.leds.segment<3>(3 * k)) : Vec3::Zero();
  }
  return m;
}

struct SyntheticTraceSpec {
  double duration = 1.0;
  double dt = 1e-3;
  int latency_ticks = 15;
  double mocap_rate = 480.0;
  std::function<Vec3(double)> omega = [](double) { return Vec3::Zero(); };  ///< true body rate
  Vec3 gyro_bias = Vec3::Zero();
  double gyro_noise = 0.0;
  double led_noise = 0.0;
  double p_visible = 1.0;
  std::vector<std::pair<double, double>> blackouts;  ///< capture-time windows with no frames
  Quat q0 = Quat::Identity();
  Vec3 position = Vec3(0, 0, 1);
  std::uint64_t seed = 1;
  LedPattern pattern = LedPattern::octahedron();
};

/// Generates a trace with known truth. Row 0 is the initial state; row n
/// carries the gyro sample for the interval (n-1, n].
inline SensorTrace synthesize_trace(const SyntheticTraceSpec& s) {
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::bernoulli_distribution vis(s.p_visible);
  const auto n = static_cast<size_t>(std::llround(s.duration / s.dt));
  SensorTrace tr;
  tr.dt = s.dt;
  tr.latency_ticks = s.latency_ticks;
  tr.rows.resize(n + 1);
  tr.truth.resize(n + 1);
  tr.truth[0] = s.q0;
  for (size_t i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) * s.dt;
    const Vec3 w = s.omega(t - 0.5 * s.dt);
    tr.truth[i] = integrate_imu(tr.truth[i - 1], w, s.dt);
    Vec3 meas = w + s.gyro_bias;
    if (s.gyro_noise > 0.0) meas += s.gyro_noise * Vec3(nd(rng), nd(rng), nd(rng));
    tr.rows[i].t = t;
    tr.rows[i].omega = meas;
  }
  // frames are captured on the first tick at or after each camera period
  std::int64_t last_frame = -1;
  for (size_t c = 0; c <= n; ++c) {
    const double tc = static_cast<double>(c) * s.dt;
    const auto frame = static_cast<std::int64_t>(std::floor(tc * s.mocap_rate + 1e-9));
    if (frame == last_frame) continue;
    last_frame = frame;
    bool dark = false;
    for (const auto& [a, b] : s.blackouts) dark |= (tc >= a && tc < b);
    const size_t deliver = c + static_cast<size_t>(s.latency_ticks);
    if (dark || deliver > n) continue;
    const LedVector y = observe_leds(s.pattern, tr.truth[c], s.position);
    LedVector out = LedVector::Constant(std::numeric_limits<double>::quiet_NaN());
    for (int k = 0; k < kLedCount; ++k) {
      if (!vis(rng)) continue;
      Vec3 p = y.segment<3>(3 * k);
      if (s.led_noise > 0.0) p += s.led_noise * Vec3(nd(rng), nd(rng), nd(rng));
      out.segment<3>(3 * k) = p;
    }
    tr.rows[deliver].leds = out;
  }
  return tr;
}

struct EstimateRow {
  double t;
  Quat q;
  bool innovation;
};

/// Runs the fusion over a whole trace (row 0 only sets the start time).
inline std::vector<EstimateRow> run_fusion(const SensorTrace& tr, FusionConfig cfg, const Quat& q0,
                                           FusionDiagnostics* diag = nullptr) {
  cfg.dt = tr.dt;
  cfg.latency_ticks = tr.latency_ticks;
  if (cfg.depth <= cfg.latency_ticks) cfg.depth = cfg.latency_ticks + 16;
  FusionBuffer fb(cfg, q0);
  std::vector<EstimateRow> out;
  out.push_back({tr.rows.empty() ? 0.0 : tr.rows[0].t, q0, false});
  for (size_t i = 1; i < tr.rows.size(); ++i) {
    const Quat q = fb.fuse_tick(tr.rows[i].omega, frame_at(tr, i));
    out.push_back({tr.rows[i].t, q, fb.last_innovation()});
  }
  if (diag) *diag = fb.diagnostics();
  return out;
}

inline void write_trace_csv(const SensorTrace& tr, std::ostream& os) {
  os << "t,wx,wy,wz";
  for (int k = 1; k <= kLedCount; ++k) os << ",led" << k << "_x,led" << k << "_y,led" << k << "_z";
  os << "\n" << std::setprecision(17);
  for (const auto& r : tr.rows) {
    os << r.t << "," << r.omega.x() << "," << r.omega.y() << "," << r.omega.z();
    for (int i = 0; i < 3 * kLedCount; ++i) {
      os << ",";
      if (std::isnan(r.leds[i])) os << "NaN"; else os << r.leds[i];
    }
    os << "\n";
  }
}

inline SensorTrace read_trace_csv(std::istream& is, double dt, int latency_ticks) {
  SensorTrace tr;
  tr.dt = dt;
  tr.latency_ticks = latency_ticks;
  std::string line;
  if (!std::getline(is, line)) throw EstimatorError("sensor trace is empty");
  size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) {
      if (cell == "NaN" || cell == "nan" || cell.empty()) v.push_back(std::numeric_limits<double>::quiet_NaN());
      else v.push_back(std::stod(cell));
    }
    if (v.size() != 4 + 3 * kLedCount)
      throw EstimatorError("sensor trace line " + std::to_string(lineno) + ": expected " +
                           std::to_string(4 + 3 * kLedCount) + " columns");
    TraceRow r;
    r.t = v[0];
    r.omega = Vec3(v[1], v[2], v[3]);
    for (int i = 0; i < 3 * kLedCount; ++i) r.leds[i] = v[static_cast<size_t>(4 + i)];
    tr.rows.push_back(r);
  }
  return tr;
}

inline void write_estimate_csv(const std::vector<EstimateRow>& rows, std::ostream& os) {
  os << "t,qw,qx,qy,qz,innovation\n" << std::setprecision(17);
  for (const auto& r : rows)
    os << r.t << "," << r.q.w() << "," << r.q.x() << "," << r.q.y() << "," << r.q.z() << "," << (r.innovation ? 1 : 0)
       << "\n";
}

}  // namespace pointfoot::estimator
