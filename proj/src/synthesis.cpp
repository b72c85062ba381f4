#include "prospect_drive/synthesis.hpp"

#include "prospect_drive/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace prospect_drive::synthesis
{

namespace
{

constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();

// Number of samples after index k, within a trajectory of n samples, that
// are still under the stop bound.
std::size_t bounded_steps_after(std::size_t k, std::size_t release, std::size_t n)
{
  const std::size_t end = std::min(release, n);
  return end > k + 1 ? end - 1 - k : 0;
}

struct Bound
{
  double stop;
  std::size_t release;  // first unbounded sample, kNever if none
};

std::optional<Bound> to_bound(const std::optional<YieldConstraint> & c)
{
  if (!c || !c->active()) {
    return std::nullopt;
  }
  return Bound{c->stop_station, c->release_index.value_or(kNever)};
}

// Largest speed in [lo, hi] that keeps sample k (reached from prev_station)
// and its braking continuation under the bound.
double safe_speed(
  double prev_station, double lo, double hi, std::size_t k, std::size_t n, const Bound & bound,
  const MotionLimits & limits, double dt)
{
  if (k >= bound.release) {
    return hi;
  }
  const std::size_t steps = bounded_steps_after(k, bound.release, n);
  const auto reach = [&](double v) {
    return prev_station + v * dt + braking_distance(v, limits.a_min, dt, steps);
  };
  if (reach(hi) <= bound.stop) {
    return hi;
  }
  if (reach(lo) > bound.stop) {
    return lo;
  }
  // reach is continuous, increasing and linear between multiples of b, so
  // the largest admissible speed solves one linear piece exactly.
  const double b = -limits.a_min * dt;
  const double room = (bound.stop - prev_station) / dt;
  double v = lo;
  for (std::size_t l = 0;; ++l) {
    const double ld = static_cast<double>(l);
    const double candidate = (room + b * ld * (ld + 1.0) / 2.0) / (1.0 + ld);
    if (l == steps || candidate < b * (ld + 1.0)) {
      v = candidate;
      break;
    }
  }
  v = std::clamp(v, lo, hi);
  while (v > lo && reach(v) > bound.stop) {
    v = std::nextafter(v, lo);
  }
  return v;
}

std::pair<double, double> speed_window(double v_prev, const MotionLimits & limits, double dt)
{
  const double lo = std::max(0.0, v_prev + limits.a_min * dt);
  const double hi = std::max(lo, std::min(limits.v_max, v_prev + limits.a_max * dt));
  return {lo, hi};
}

bool start_is_feasible(
  const InitialState & init, const Bound & bound, const MotionLimits & limits, double dt, std::size_t n)
{
  if (bound.release == 0) {
    return true;
  }
  const std::size_t steps = std::min(bound.release, n) - 1;
  return init.station <= bound.stop &&
         init.station + braking_distance(init.speed, limits.a_min, dt, steps) <= bound.stop;
}

// Projected ascent over per-step accelerations; stations are recovered by
// forward integration with clamping, so every iterate is feasible.
class PassOptimizer
{
public:
  PassOptimizer(
    const InitialState & init, const UtilityWeights & theta, const UtilityConfig & cfg,
    const MotionLimits & limits, std::size_t horizon, double dt, std::optional<Bound> bound)
  : init_(init), theta_(theta), cfg_(cfg), limits_(limits), n_(horizon), dt_(dt), bound_(bound)
  {
  }

  // The objective is not concave. Besides the zero start, one constant
  // acceleration toward the traffic speed (or to rest at the stop bound) and
  // the result of a coarse block search are refined.
  Trajectory solve(const OptimizerOptions & options) const
  {
    std::optional<Trajectory> best;
    double best_value = 0.0;
    for (const auto & start : start_profiles()) {
      Trajectory other = solve_from(start, options);
      const double u = utility_solo(other, theta_, cfg_);
      if (!best || u > best_value) {
        best = std::move(other);
        best_value = u;
      }
    }
    return *best;
  }

  /// Acceleration profiles the search starts from; the zero profile first.
  std::vector<Eigen::VectorXd> start_profiles() const
  {
    const auto m = static_cast<Eigen::Index>(n_ - 1);
    const double span = dt_ * static_cast<double>(n_ - 1);
    double a_c = std::clamp((cfg_.v_traffic - init_.speed) / span, limits_.a_min, limits_.a_max);
    if (bound_) {
      const double room = bound_->stop - init_.station;
      a_c = room > 0.0 ? std::clamp(-init_.speed * init_.speed / (2.0 * room), limits_.a_min, 0.0) : limits_.a_min;
    }
    std::vector<Eigen::VectorXd> starts{Eigen::VectorXd::Zero(m)};
    if (a_c != 0.0) {
      starts.push_back(Eigen::VectorXd::Constant(m, a_c));
    }
    Eigen::VectorXd a_s = block_search();
    if (std::none_of(starts.begin(), starts.end(), [&](const Eigen::VectorXd & a) { return a == a_s; })) {
      starts.push_back(std::move(a_s));
    }
    return starts;
  }

  /// Feasible trajectory for an acceleration profile.
  Trajectory realize_profile(const Eigen::VectorXd & accel) const { return realize(accel); }

private:
  // Piecewise-constant accelerations on a coarse level grid, improved one
  // block at a time from the best constant profile.
  Eigen::VectorXd block_search() const
  {
    constexpr int kLevels = 13;
    constexpr std::size_t kBlocks = 6;
    const auto m = static_cast<Eigen::Index>(n_ - 1);
    const std::size_t blocks = std::min<std::size_t>(kBlocks, n_ - 1);
    std::vector<double> levels(kLevels);
    for (int i = 0; i < kLevels; ++i) {
      levels[static_cast<std::size_t>(i)] =
        limits_.a_min + (limits_.a_max - limits_.a_min) * i / (kLevels - 1);
    }
    const auto profile = [&](const std::vector<double> & per_block) {
      Eigen::VectorXd a(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        a[k] = per_block[static_cast<std::size_t>(k) * blocks / static_cast<std::size_t>(m)];
      }
      return a;
    };
    const auto score = [&](const std::vector<double> & per_block) {
      return utility_solo(realize(profile(per_block)), theta_, cfg_);
    };

    std::vector<double> best(blocks, 0.0);
    double best_value = score(best);
    for (double a : levels) {
      const std::vector<double> trial(blocks, a);
      const double u = score(trial);
      if (u > best_value) {
        best_value = u;
        best = trial;
      }
    }
    for (bool improved = true; improved;) {
      improved = false;
      for (std::size_t b = 0; b < blocks; ++b) {
        for (double a : levels) {
          if (a == best[b]) {
            continue;
          }
          auto trial = best;
          trial[b] = a;
          const double u = score(trial);
          if (u > best_value + 1e-12) {
            best_value = u;
            best = std::move(trial);
            improved = true;
          }
        }
      }
    }
    return profile(best);
  }

  // Directions tried in turn after a miss; the first two spaces see
  // coordinated moves that the clamped acceleration map hides.
  enum Kind { kPreconditioned, kSpeed, kStation, kRaw, kProbe, kKinds };

  Trajectory solve_from(Eigen::VectorXd accel, const OptimizerOptions & options) const
  {
    Trajectory traj = realize(accel);
    accel = realized_accel(traj);
    double value = utility_solo(traj, theta_, cfg_);

    const auto precond = build_preconditioner();
    std::size_t misses = 0;
    bool stalled = false;
    std::vector<double> first_step(kKinds, options.initial_step);
    constexpr std::size_t kWindow = 50;
    std::vector<double> history;
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
      history.push_back(value);
      if (history.size() > kWindow &&
          value - history[history.size() - 1 - kWindow] < 1e-6 * std::max(1.0, std::abs(value))) {
        return traj;  // creeping along the clamps
      }
      const auto kind = static_cast<Kind>(misses % kKinds);
      std::vector<double> gs;
      Eigen::VectorXd dir;
      switch (kind) {
        case kPreconditioned: {
          std::vector<bool> free;
          const Eigen::VectorXd grad = ascent_direction(accel, &free);
          dir = restricted_solve(precond, grad, free);
          break;
        }
        case kRaw:
          dir = ascent_direction(accel);
          break;
        case kProbe: {
          const auto probe = one_sided_direction(accel, value);
          if (!probe) {
            return traj;  // no coordinate offers an ascent through the clamps
          }
          dir = *probe;
          break;
        }
        case kSpeed:
        case kStation:
          gs = utility_gradient_solo(traj, theta_, cfg_);
          break;
        case kKinds:
          break;
      }
      if (kind == kSpeed) {
        for (std::size_t k = n_ - 2; k >= 1; --k) {
          gs[k] += gs[k + 1];
        }
        for (double & g : gs) {
          g *= dt_;
        }
      }

      const auto candidate = [&](double step) {
        if (kind != kSpeed && kind != kStation) {
          return realize(accel + step * dir);
        }
        std::vector<double> wanted(n_, 0.0);
        for (std::size_t k = 1; k < n_; ++k) {
          const double v = (traj.stations[k] - traj.stations[k - 1]) / dt_;
          wanted[k] = kind == kSpeed ? v + step * gs[k] : v + step * (gs[k] - gs[k - 1]) / dt_;
        }
        return realize_speeds(wanted);
      };

      double gain = 0.0;
      double step = first_step[kind];
      for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
        Trajectory trial = candidate(step);
        const double trial_value = utility_solo(trial, theta_, cfg_);
        if (trial_value > value) {
          gain = trial_value - value;
          first_step[kind] = std::min(options.initial_step, 4.0 * step);
          accel = realized_accel(trial);
          traj = std::move(trial);
          value = trial_value;
          break;
        }
      }
      if (gain >= options.improvement_tolerance) {
        misses = 0;
        stalled = false;
        continue;
      }
      // A tiny gain and a failed search both hand over to the next direction.
      stalled = stalled || gain > 0.0;
      if (++misses >= std::max<std::size_t>(options.max_failed_restarts, kKinds)) {
        if (stalled) {
          return traj;
        }
        fail(
          ErrorCode::NonConvergence,
          "trajectory line search failed " + std::to_string(misses) + " consecutive times");
      }
    }
    return traj;
  }

  // Preconditioner applied on the free coordinates only; blocked ones stay put.
  static Eigen::VectorXd restricted_solve(
    const Eigen::MatrixXd & h, const Eigen::VectorXd & grad, const std::vector<bool> & free)
  {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < free.size(); ++i) {
      if (free[i]) {
        idx.push_back(static_cast<Eigen::Index>(i));
      }
    }
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(grad.size());
    if (idx.empty()) {
      return dir;
    }
    const auto f = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd hf(f, f);
    Eigen::VectorXd gf(f);
    for (Eigen::Index i = 0; i < f; ++i) {
      gf[i] = grad[idx[static_cast<std::size_t>(i)]];
      for (Eigen::Index j = 0; j < f; ++j) {
        hf(i, j) = h(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      }
    }
    const Eigen::VectorXd sol = Eigen::LLT<Eigen::MatrixXd>(hf).solve(gf);
    for (Eigen::Index i = 0; i < f; ++i) {
      dir[idx[static_cast<std::size_t>(i)]] = sol[i];
    }
    return dir;
  }

  // Sequential clamp of wanted per-step speeds onto the feasible set.
  Trajectory realize_speeds(const std::vector<double> & wanted) const
  {
    Trajectory traj;
    traj.dt = dt_;
    traj.stations.resize(n_);
    traj.stations[0] = init_.station;
    double v_prev = init_.speed;
    for (std::size_t k = 1; k < n_; ++k) {
      auto [lo, hi] = speed_window(v_prev, limits_, dt_);
      if (bound_) {
        hi = safe_speed(traj.stations[k - 1], lo, hi, k, n_, *bound_, limits_, dt_);
      }
      const double v = std::clamp(wanted[k], lo, hi);
      traj.stations[k] = traj.stations[k - 1] + v * dt_;
      v_prev = v;
    }
    return traj;
  }

  // Sensitivities of one realized speed to its inputs; `side` is +1 when the
  // step sits on its upper clamp, -1 on its lower clamp, 2 when pinned.
  struct Step
  {
    double dv_da{0.0};
    double dv_dvprev{0.0};
    double dv_ds{0.0};
    int side{0};
  };

  Trajectory realize(const Eigen::VectorXd & accel, std::vector<Step> * steps = nullptr) const
  {
    Trajectory traj;
    traj.dt = dt_;
    traj.stations.resize(n_);
    traj.stations[0] = init_.station;
    if (steps != nullptr) {
      steps->assign(n_, Step{});
    }
    const double b = -limits_.a_min * dt_;
    double v_prev = init_.speed;
    for (std::size_t k = 1; k < n_; ++k) {
      auto [lo, hi] = speed_window(v_prev, limits_, dt_);
      const double hi_window = hi;
      if (bound_) {
        hi = safe_speed(traj.stations[k - 1], lo, hi, k, n_, *bound_, limits_, dt_);
      }
      const double raw = v_prev + accel[static_cast<Eigen::Index>(k - 1)] * dt_;
      const double v = std::clamp(raw, lo, hi);
      traj.stations[k] = traj.stations[k - 1] + v * dt_;
      if (steps != nullptr) {
        Step & st = (*steps)[k];
        const double tol = 1e-12 * std::max(1.0, std::abs(raw));
        const bool lower_from_motion = v_prev + limits_.a_min * dt_ > 0.0;
        if (hi - lo <= tol || raw <= lo + tol) {
          st.side = hi - lo <= tol ? 2 : -1;
          st.dv_dvprev = lower_from_motion ? 1.0 : 0.0;
        } else if (raw >= hi - tol) {
          st.side = 1;
          if (hi < hi_window) {
            const std::size_t cap = bounded_steps_after(k, bound_->release, n_);
            const double l = std::min(std::floor(hi / b), static_cast<double>(cap));
            st.dv_ds = -1.0 / (dt_ * (1.0 + l));
          } else {
            st.dv_dvprev = v_prev + limits_.a_max * dt_ < limits_.v_max ? 1.0 : 0.0;
          }
        } else {
          st.dv_da = dt_;
          st.dv_dvprev = 1.0;
        }
      }
      v_prev = v;
    }
    return traj;
  }

  Eigen::VectorXd realized_accel(const Trajectory & traj) const
  {
    Eigen::VectorXd accel(static_cast<Eigen::Index>(n_ - 1));
    double v_prev = init_.speed;
    for (std::size_t k = 1; k < n_; ++k) {
      const double v = (traj.stations[k] - traj.stations[k - 1]) / dt_;
      accel[static_cast<Eigen::Index>(k - 1)] = (v - v_prev) / dt_;
      v_prev = v;
    }
    return accel;
  }

  // Forward differences of the clamped objective in both directions of every
  // coordinate; nullopt when none of them increases the utility.
  std::optional<Eigen::VectorXd> one_sided_direction(const Eigen::VectorXd & accel, double value) const
  {
    constexpr double h = 1e-4;
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(accel.size());
    bool any = false;
    Eigen::VectorXd probe = accel;
    for (Eigen::Index k = 0; k < accel.size(); ++k) {
      probe[k] = accel[k] + h;
      const double up = utility_solo(realize(probe), theta_, cfg_) - value;
      probe[k] = accel[k] - h;
      const double down = utility_solo(realize(probe), theta_, cfg_) - value;
      probe[k] = accel[k];
      if (up > 0.0 && up >= down) {
        dir[k] = up / h;
        any = true;
      } else if (down > 0.0) {
        dir[k] = -down / h;
        any = true;
      }
    }
    if (!any) {
      return std::nullopt;
    }
    return dir;
  }

  // Reverse pass through the clamped rollout. Coordinates on a clamp keep
  // their one-sided derivative only when it points back inside.
  Eigen::VectorXd ascent_direction(const Eigen::VectorXd & accel, std::vector<bool> * free = nullptr) const
  {
    std::vector<Step> steps;
    const Trajectory traj = realize(accel, &steps);
    const auto gs = utility_gradient_solo(traj, theta_, cfg_);
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_ - 1));
    if (free != nullptr) {
      free->assign(n_ - 1, false);
    }
    double ls = gs[n_ - 1];
    double lv = 0.0;
    for (std::size_t k = n_ - 1; k >= 1; --k) {
      const Step & st = steps[k];
      const double du_dv = ls * dt_ + lv;
      const double inward = du_dv * dt_;
      double d = 0.0;
      if (st.side == 0 || (st.side == 1 && inward < 0.0) || (st.side == -1 && inward > 0.0)) {
        d = inward;
        if (free != nullptr) {
          (*free)[k - 1] = true;
        }
      }
      dir[static_cast<Eigen::Index>(k - 1)] = d;
      lv = du_dv * st.dv_dvprev;
      ls = gs[k - 1] + ls + du_dv * st.dv_ds;
    }
    return dir;
  }

  // Peak curvature of each Gaussian feature through the (linear) map from
  // accelerations to speed/acceleration/jerk.
  Eigen::MatrixXd build_preconditioner() const
  {
    const auto m = static_cast<Eigen::Index>(n_ - 1);
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::MatrixXd jv(n, m);
    Eigen::MatrixXd ja(n, m);
    Eigen::MatrixXd jj(n, m);
    Trajectory unit;
    unit.dt = dt_;
    for (Eigen::Index k = 0; k < m; ++k) {
      unit.stations.assign(n_, 0.0);
      for (Eigen::Index s = k + 1; s < n; ++s) {
        unit.stations[static_cast<std::size_t>(s)] = dt_ * dt_ * static_cast<double>(s - k);
      }
      const auto kin = kinematics(unit);
      for (Eigen::Index r = 0; r < n; ++r) {
        const auto idx = static_cast<std::size_t>(r);
        jv(r, k) = kin.speeds[idx];
        ja(r, k) = kin.accelerations[idx];
        jj(r, k) = kin.jerks[idx];
      }
    }
    const auto weight = [&](std::size_t f) {
      return 2.0 * std::abs(theta_[f]) / (cfg_.scales[f] * cfg_.scales[f]);
    };
    Eigen::MatrixXd h = weight(kSpeed) * jv.transpose() * jv +
                        weight(kAccel) * ja.transpose() * ja +
                        weight(kJerk) * jj.transpose() * jj;
    const double ridge = 1e-8 * std::max(h.trace() / static_cast<double>(m), 1e-4);
    h.diagonal().array() += ridge;
    return h;
  }

  InitialState init_;
  UtilityWeights theta_;
  UtilityConfig cfg_;
  MotionLimits limits_;
  std::size_t n_;
  double dt_;
  std::optional<Bound> bound_;
};

// Under an active stop bound every constraint is linear in the per-step
// speeds v[i] (step i + 1): speed and acceleration bounds and the stations
// kept behind the stop. A log barrier keeps the iterates strictly inside
// while Newton steps use the exact curvature of the utility.
class YieldBarrier
{
public:
  YieldBarrier(
    const InitialState & init, const UtilityWeights & theta, const UtilityConfig & cfg,
    const MotionLimits & limits, std::size_t horizon, double dt, const Bound & bound)
  : init_(init), theta_(theta), cfg_(cfg), limits_(limits), n_(horizon), m_(horizon - 1), dt_(dt),
    bounded_(std::min(bound.release, horizon) > 0 ? std::min(bound.release, horizon) - 1 : 0),
    room_(bound.stop - init.station)
  {
  }

  /// Best trajectory over the given starts, or empty when the feasible set
  /// has no interior.
  std::optional<Trajectory> solve(const std::vector<Trajectory> & starts, const OptimizerOptions & options) const
  {
    if (starts.empty()) {
      return std::nullopt;
    }
    const auto centre = interior_point(speeds_of(starts.front()));
    if (!centre) {
      return std::nullopt;
    }
    std::optional<Trajectory> best;
    double best_value = 0.0;
    // One run from a small barrier weight follows the central path from near
    // the analytic centre; the others start late enough to stay in the basin
    // of their own start.
    for (const auto & start : starts) {
      const Eigen::VectorXd v0 = 0.95 * speeds_of(start) + 0.05 * *centre;
      if (!(slacks(v0).minCoeff() > 0.0)) {
        continue;
      }
      for (const double t0 : {1.0, 1e3}) {
        if (t0 == 1.0 && &start != &starts.front()) {
          continue;
        }
        Trajectory t = stations_of(ascend(v0, options, t0));
        const double u = utility_solo(t, theta_, cfg_);
        if (!best || u > best_value) {
          best = std::move(t);
          best_value = u;
        }
      }
    }
    return best;
  }

private:
  enum Group { kSpeedLow, kSpeedHigh, kAccelHigh, kAccelLow, kGroups };

  Eigen::Index rows() const { return static_cast<Eigen::Index>(kGroups * m_ + bounded_); }

  Eigen::VectorXd speeds_of(const Trajectory & traj) const
  {
    Eigen::VectorXd v(static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < m_; ++i) {
      v[static_cast<Eigen::Index>(i)] = (traj.stations[i + 1] - traj.stations[i]) / dt_;
    }
    return v;
  }

  Trajectory stations_of(const Eigen::VectorXd & v) const
  {
    Trajectory traj;
    traj.dt = dt_;
    traj.stations.resize(n_);
    traj.stations[0] = init_.station;
    for (std::size_t i = 0; i < m_; ++i) {
      traj.stations[i + 1] = traj.stations[i] + v[static_cast<Eigen::Index>(i)] * dt_;
    }
    return traj;
  }

  // G v, row by row: the constraints read G v <= h.
  Eigen::VectorXd apply(const Eigen::VectorXd & v) const
  {
    Eigen::VectorXd out(rows());
    const auto m = static_cast<Eigen::Index>(m_);
    double cum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double prev = i == 0 ? 0.0 : v[i - 1];
      out[kSpeedLow * m + i] = -v[i];
      out[kSpeedHigh * m + i] = v[i];
      out[kAccelHigh * m + i] = v[i] - prev;
      out[kAccelLow * m + i] = prev - v[i];
      cum += v[i];
      if (static_cast<std::size_t>(i) < bounded_) {
        out[kGroups * m + i] = dt_ * cum;
      }
    }
    return out;
  }

  // G^T y.
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd & y) const
  {
    const auto m = static_cast<Eigen::Index>(m_);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
    double suffix = 0.0;
    for (Eigen::Index i = m; i-- > 0;) {
      if (static_cast<std::size_t>(i) < bounded_) {
        suffix += y[kGroups * m + i];
      }
      out[i] += -y[kSpeedLow * m + i] + y[kSpeedHigh * m + i] + y[kAccelHigh * m + i] - y[kAccelLow * m + i];
      if (i > 0) {
        out[i - 1] += -y[kAccelHigh * m + i] + y[kAccelLow * m + i];
      }
      out[i] += dt_ * suffix;
    }
    return out;
  }

  // G^T diag(w) G.
  Eigen::MatrixXd gram(const Eigen::VectorXd & w) const
  {
    const auto m = static_cast<Eigen::Index>(m_);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double diff = w[kAccelHigh * m + i] + w[kAccelLow * m + i];
      out(i, i) += w[kSpeedLow * m + i] + w[kSpeedHigh * m + i] + diff;
      if (i > 0) {
        out(i - 1, i - 1) += diff;
        out(i, i - 1) -= diff;
        out(i - 1, i) -= diff;
      }
    }
    std::vector<double> suffix(m_ + 1, 0.0);
    for (std::size_t i = m_; i-- > 0;) {
      suffix[i] = suffix[i + 1] + (i < bounded_ ? w[kGroups * m + static_cast<Eigen::Index>(i)] : 0.0);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        out(i, j) += dt_ * dt_ * suffix[static_cast<std::size_t>(std::max(i, j))];
      }
    }
    return out;
  }

  // h - G v.
  Eigen::VectorXd slacks(const Eigen::VectorXd & v) const
  {
    const auto m = static_cast<Eigen::Index>(m_);
    Eigen::VectorXd h(rows());
    h.segment(kSpeedLow * m, m).setZero();
    h.segment(kSpeedHigh * m, m).setConstant(limits_.v_max);
    h.segment(kAccelHigh * m, m).setConstant(limits_.a_max * dt_);
    h.segment(kAccelLow * m, m).setConstant(-limits_.a_min * dt_);
    h[kAccelHigh * m] += init_.speed;
    h[kAccelLow * m] -= init_.speed;
    h.segment(kGroups * m, static_cast<Eigen::Index>(bounded_)).setConstant(room_);
    return h - apply(v);
  }

  // Largest step along d that keeps every slack positive, shrunk by a margin.
  double step_to_boundary(const Eigen::VectorXd & c, const Eigen::VectorXd & rate) const
  {
    double step = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      if (rate[i] > 0.0) {
        step = std::min(step, c[i] / rate[i]);
      }
    }
    return 0.99 * step;
  }

  // Phase one: maximize the common slack tau over (v, tau) until it is positive.
  std::optional<Eigen::VectorXd> interior_point(Eigen::VectorXd v) const
  {
    const auto m = static_cast<Eigen::Index>(m_);
    double tau = slacks(v).minCoeff() - 1.0;
    const auto merit = [&](const Eigen::VectorXd & x, double t_x, double t) {
      const Eigen::VectorXd c = slacks(x).array() - t_x;
      return t * t_x + c.array().log().sum();
    };
    for (double t = 1.0; t < 1e12; t *= 10.0) {
      for (int newton = 0; newton < 50; ++newton) {
        const Eigen::VectorXd c = slacks(v).array() - tau;
        const Eigen::VectorXd inv = c.cwiseInverse();
        const Eigen::VectorXd w = inv.cwiseProduct(inv);
        Eigen::VectorXd grad(m + 1);
        grad.head(m) = -apply_transpose(inv);
        grad[m] = t - inv.sum();
        Eigen::MatrixXd hess(m + 1, m + 1);
        hess.topLeftCorner(m, m) = gram(w);
        hess.col(m).head(m) = apply_transpose(w);
        hess.row(m).head(m) = hess.col(m).head(m).transpose();
        hess(m, m) = w.sum();
        const Eigen::VectorXd d = Eigen::LDLT<Eigen::MatrixXd>(hess).solve(grad);
        const double decrement = grad.dot(d);
        if (!(decrement > 1e-12)) {
          break;
        }
        const Eigen::VectorXd rate = apply(d.head(m)).array() + d[m];
        double step = std::min(1.0, step_to_boundary(c, rate));
        const double base = merit(v, tau, t);
        bool moved = false;
        for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
          const Eigen::VectorXd x = v + step * d.head(m);
          const double t_x = tau + step * d[m];
          if ((slacks(x).array() - t_x).minCoeff() > 0.0 && merit(x, t_x, t) >= base + 1e-4 * step * decrement) {
            v = x;
            tau = t_x;
            moved = true;
            break;
          }
        }
        if (!moved) {
          break;
        }
      }
      if (tau > 0.0 && slacks(v).minCoeff() > 0.0) {
        return v;
      }
    }
    return std::nullopt;
  }

  Eigen::VectorXd ascend(Eigen::VectorXd v, const OptimizerOptions & options, double t0) const
  {
    const auto m = static_cast<Eigen::Index>(m_);
    const auto barrier = [&](const Eigen::VectorXd & x, double t) {
      const Eigen::VectorXd c = slacks(x);
      if (!(c.minCoeff() > 0.0)) {
        return -std::numeric_limits<double>::infinity();
      }
      return t * utility_solo(stations_of(x), theta_, cfg_) + c.array().log().sum();
    };
    std::size_t budget = options.max_iterations;
    const double constraints = static_cast<double>(rows());
    for (double t = t0; budget > 0; t *= 10.0) {
      while (budget > 0) {
        --budget;
        const Trajectory traj = stations_of(v);
        const Eigen::VectorXd c = slacks(v);
        const Eigen::VectorXd inv = c.cwiseInverse();
        const auto gs = utility_gradient_solo(traj, theta_, cfg_);
        const auto hs = utility_hessian_solo(traj, theta_, cfg_);
        // Stations s[k] = s[0] + dt * sum of v[i] over i < k, so derivatives
        // in the speeds are tail sums of those in the stations.
        Eigen::VectorXd grad(m);
        double tail = 0.0;
        for (std::size_t i = m_; i-- > 0;) {
          tail += gs[i + 1];
          grad[static_cast<Eigen::Index>(i)] = t * dt_ * tail;
        }
        grad -= apply_transpose(inv);
        Eigen::MatrixXd tails = Eigen::MatrixXd::Zero(m + 2, m + 2);
        for (std::size_t k = n_; k-- > 1;) {
          for (std::size_t l = n_; l-- > 1;) {
            const auto a = static_cast<Eigen::Index>(k);
            const auto b = static_cast<Eigen::Index>(l);
            tails(a, b) = hs[k * n_ + l] + tails(a + 1, b) + tails(a, b + 1) - tails(a + 1, b + 1);
          }
        }
        const Eigen::MatrixXd hv = dt_ * dt_ * tails.block(1, 1, m, m);

        Eigen::MatrixXd model = gram(inv.cwiseProduct(inv)) - t * hv;
        double shift = 0.0;
        Eigen::LLT<Eigen::MatrixXd> llt(model);
        while (llt.info() != Eigen::Success) {
          shift = shift == 0.0 ? 1e-8 * std::max(1.0, model.diagonal().cwiseAbs().maxCoeff()) : shift * 10.0;
          llt.compute(model + shift * Eigen::MatrixXd::Identity(m, m));
        }
        const Eigen::VectorXd d = llt.solve(grad);
        const double decrement = grad.dot(d);
        if (!(decrement > 1e-12 * t * std::max(1.0, std::abs(utility_solo(traj, theta_, cfg_))))) {
          break;
        }
        double step = std::min(1.0, step_to_boundary(c, apply(d)));
        const double base = barrier(v, t);
        bool moved = false;
        for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
          const Eigen::VectorXd x = v + step * d;
          if (barrier(x, t) >= base + 1e-4 * step * decrement) {
            v = x;
            moved = true;
            break;
          }
        }
        if (!moved) {
          break;
        }
      }
      if (constraints / t < options.improvement_tolerance * 1e-2) {
        break;
      }
    }
    return v;
  }

  InitialState init_;
  UtilityWeights theta_;
  UtilityConfig cfg_;
  MotionLimits limits_;
  std::size_t n_;
  std::size_t m_;
  double dt_;
  std::size_t bounded_;  // station rows: samples 1..bounded_ stay behind the stop
  double room_;
};

void check_horizon(std::size_t horizon, double dt)
{
  if (horizon < 2) {
    fail(ErrorCode::InvalidArgument, "horizon must hold at least two samples");
  }
  if (!(dt > 0.0)) {
    fail(ErrorCode::InvalidArgument, "dt must be positive");
  }
}

void check_init(const InitialState & init)
{
  if (!std::isfinite(init.station) || !std::isfinite(init.speed) || !(init.speed >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "initial state must be finite with non-negative speed");
  }
}

}  // namespace

void MotionLimits::validate() const
{
  if (!(a_min < 0.0) || !(a_max > 0.0) || !(v_max > 0.0)) {
    fail(ErrorCode::InvalidArgument, "motion limits need a_min < 0 < a_max and v_max > 0");
  }
}

double braking_distance(double speed, double a_min, double dt, std::size_t max_steps)
{
  if (!(speed > 0.0)) {
    return 0.0;
  }
  const double b = -a_min * dt;
  const double steps_to_rest = std::floor(speed / b);
  const double l = std::min(steps_to_rest, static_cast<double>(max_steps));
  return dt * (l * speed - b * l * (l + 1.0) / 2.0);
}

Trajectory constant_speed_trajectory(const InitialState & init, std::size_t horizon, double dt)
{
  check_horizon(horizon, dt);
  Trajectory traj;
  traj.dt = dt;
  traj.stations.resize(horizon);
  for (std::size_t k = 0; k < horizon; ++k) {
    traj.stations[k] = init.station + static_cast<double>(k) * dt * init.speed;
  }
  return traj;
}

Trajectory project_feasible(
  const Trajectory & candidate, const InitialState & init, const MotionLimits & limits,
  const std::optional<YieldConstraint> & constraint)
{
  candidate.validate();
  const double dt = candidate.dt;
  const auto bound = to_bound(constraint);
  Trajectory out;
  out.dt = dt;
  out.stations.resize(candidate.size());
  out.stations[0] = init.station;
  double v_prev = init.speed;
  for (std::size_t k = 1; k < candidate.size(); ++k) {
    auto [lo, hi] = speed_window(v_prev, limits, dt);
    if (bound) {
      hi = safe_speed(out.stations[k - 1], lo, hi, k, candidate.size(), *bound, limits, dt);
    }
    const double wanted = (candidate.stations[k] - candidate.stations[k - 1]) / dt;
    const double v = std::clamp(wanted, lo, hi);
    out.stations[k] = out.stations[k - 1] + v * dt;
    v_prev = v;
  }
  return out;
}

bool is_feasible(
  const Trajectory & traj, const InitialState & init, const MotionLimits & limits,
  const std::optional<YieldConstraint> & constraint, double tol)
{
  const double dt = traj.dt;
  if (traj.size() < 2 || traj.stations[0] != init.station) {
    return false;
  }
  const auto bound = to_bound(constraint);
  double v_prev = init.speed;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double v = (traj.stations[k] - traj.stations[k - 1]) / dt;
    const double a = (v - v_prev) / dt;
    if (v < -tol || v > limits.v_max + tol) {
      return false;
    }
    if (a < limits.a_min - tol / dt || a > limits.a_max + tol / dt) {
      return false;
    }
    if (bound && k < bound->release && traj.stations[k] > bound->stop + tol) {
      return false;
    }
    v_prev = v;
  }
  return true;
}

Trajectory optimal_pass_trajectory(
  const InitialState & init, const UtilityWeights & theta, const UtilityConfig & cfg,
  const MotionLimits & limits, std::size_t horizon, double dt, const OptimizerOptions & options)
{
  check_horizon(horizon, dt);
  check_init(init);
  limits.validate();
  return PassOptimizer(init, theta, cfg, limits, horizon, dt, std::nullopt).solve(options);
}

std::optional<std::size_t> clearance_index(const Trajectory & interacting, double clearance_margin)
{
  for (std::size_t i = 0; i < interacting.size(); ++i) {
    if (interacting.stations[i] >= clearance_margin) {
      return i;
    }
  }
  return std::nullopt;
}

Trajectory brake_from(const Trajectory & pass, std::size_t onset, const MotionLimits & limits)
{
  const auto kin = kinematics(pass);
  Trajectory out = pass;
  if (onset + 1 >= pass.size()) {
    return out;
  }
  double v = kin.speeds[onset];
  for (std::size_t k = onset + 1; k < pass.size(); ++k) {
    v = std::max(0.0, v + limits.a_min * pass.dt);
    out.stations[k] = out.stations[k - 1] + v * pass.dt;
  }
  return out;
}

bool stop_condition_holds(
  const Trajectory & candidate, std::optional<std::size_t> release, const MotionLimits & limits,
  double clearance_margin)
{
  const std::size_t n = candidate.size();
  const std::size_t until = std::min(release.value_or(n), n);
  for (std::size_t i = 0; i < until; ++i) {
    if (candidate.stations[i] > -clearance_margin) {
      return false;
    }
  }
  if (release) {
    return true;
  }
  // Interacting vehicle still short of clearing at the horizon: the target
  // must also be able to stop beyond it.
  const double v_end = kinematics(candidate).speeds[n - 1];
  return candidate.stations[n - 1] + braking_distance(v_end, limits.a_min, candidate.dt) <=
         -clearance_margin;
}

ComposedPass compose_pass_nonyield(
  const Trajectory & optimal_pass, const Trajectory & interacting_constant,
  const MotionLimits & limits, double clearance_margin)
{
  optimal_pass.validate();
  if (optimal_pass.size() != interacting_constant.size()) {
    fail(ErrorCode::LengthMismatch, "passing and interacting trajectories differ in length");
  }
  limits.validate();
  const std::size_t n = optimal_pass.size();
  const auto release = clearance_index(interacting_constant, clearance_margin);

  if (stop_condition_holds(optimal_pass, release, limits, clearance_margin)) {
    return {optimal_pass, n};
  }
  for (std::size_t onset = n - 1; onset-- > 0;) {
    auto candidate = brake_from(optimal_pass, onset, limits);
    if (stop_condition_holds(candidate, release, limits, clearance_margin)) {
      return {std::move(candidate), onset};
    }
  }
  return {brake_from(optimal_pass, 0, limits), 0};
}

Trajectory optimal_yield_trajectory(
  const InitialState & init, const YieldConstraint & constraint, const UtilityWeights & theta,
  const UtilityConfig & cfg, const MotionLimits & limits, std::size_t horizon, double dt,
  const OptimizerOptions & options)
{
  check_horizon(horizon, dt);
  check_init(init);
  limits.validate();
  const auto bound = to_bound(constraint);
  if (bound && !start_is_feasible(init, *bound, limits, dt, horizon)) {
    fail(
      ErrorCode::InfeasibleStart, "target at station " + std::to_string(init.station) +
                                    " cannot stay behind stop bound " +
                                    std::to_string(constraint.stop_station));
  }
  const PassOptimizer clamped(init, theta, cfg, limits, horizon, dt, bound);
  if (!bound) {
    return clamped.solve(options);
  }
  std::vector<Trajectory> starts;
  for (const auto & profile : clamped.start_profiles()) {
    starts.push_back(clamped.realize_profile(profile));
  }
  if (auto best = YieldBarrier(init, theta, cfg, limits, horizon, dt, *bound).solve(starts, options)) {
    return *std::move(best);
  }
  return clamped.solve(options);
}

}  // namespace prospect_drive::synthesis
