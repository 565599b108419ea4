#pragma once

// Sample-and-hold closed-loop simulation.
//
// On every interval [tau_j, tau_j + eps) with tau_j = j eps the control's state
// argument is frozen at x(tau_j) while its time argument runs, and the
// resulting non-autonomous ODE is integrated with classical fixed-step RK4.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bracket_steer/error.hpp"
#include "bracket_steer/synthesis.hpp"
#include "bracket_steer/system.hpp"

namespace bracket_steer {

inline constexpr double kDivergenceBound = 1e9;
inline constexpr int kSubstepsPerKappa = 40;
inline constexpr int kMinSubstepsPerOscillation = 20;

struct SimConfig {
    double t_final = 0.0;
    int substeps_per_period = 0;  // 0 selects 40 * kappa_max
    int record_stride = 1;

    /// 50 eps ceil(1 / (gamma eps)): several averaged time constants.
    [[nodiscard]] static double default_t_final(const ControllerGains& gains) {
        return 50.0 * gains.epsilon * std::ceil(1.0 / (gains.gamma * gains.epsilon));
    }

    [[nodiscard]] int resolved_substeps(int kappa_max) const {
        return substeps_per_period > 0 ? substeps_per_period : kSubstepsPerKappa * std::max(kappa_max, 1);
    }

    void validate() const {
        if (!(t_final > 0.0) || !std::isfinite(t_final)) {
            throw Error(ErrorClass::InvalidInput, "invariant t_final > 0 violated");
        }
        if (substeps_per_period < 0) throw Error(ErrorClass::InvalidInput, "substeps_per_period must be >= 1");
        if (record_stride < 1) throw Error(ErrorClass::InvalidInput, "record_stride must be >= 1");
    }

    /// Non-fatal diagnostics, e.g. under-resolved oscillations.
    [[nodiscard]] std::vector<std::string> warnings(int kappa_max) const {
        std::vector<std::string> out;
        const int s = resolved_substeps(kappa_max);
        if (s < kMinSubstepsPerOscillation * std::max(kappa_max, 1)) {
            out.push_back("substeps_per_period = " + std::to_string(s) + " resolves the fastest oscillation (kappa = " +
                          std::to_string(kappa_max) + ") with fewer than " +
                          std::to_string(kMinSubstepsPerOscillation) + " steps");
        }
        return out;
    }
};

struct SampledTrajectory {
    double epsilon = 0.0;
    int n1 = 0;
    Vector y_star;

    std::vector<double> sample_times;
    std::vector<Vector> sample_states;
    std::vector<double> sample_y_error;

    std::vector<double> dense_times;
    std::vector<Vector> dense_states;
    std::vector<Vector> dense_controls;
    std::vector<double> y_error;
    std::vector<std::size_t> dense_interval;  // j of the enclosing [tau_j, tau_j + eps)
};

/// A simulation stopped early. Carries everything integrated up to the failure.
class SimulationHalted : public Error {
public:
    SimulationHalted(ErrorClass cls, const std::string& what, SampledTrajectory partial, Vector state, double time)
        : Error(cls, what), partial_(std::move(partial)), state_(std::move(state)), time_(time) {}

    [[nodiscard]] const SampledTrajectory& partial() const noexcept { return partial_; }
    [[nodiscard]] const Vector& state() const noexcept { return state_; }
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    SampledTrajectory partial_;
    Vector state_;
    double time_;
};

template <class Rhs>
[[nodiscard]] Vector rk4_step(const Rhs& rhs, double t, const Vector& x, double h) {
    const Vector k1 = rhs(t, x);
    const Vector k2 = rhs(t + 0.5 * h, x + (0.5 * h) * k1);
    const Vector k3 = rhs(t + 0.5 * h, x + (0.5 * h) * k2);
    const Vector k4 = rhs(t + h, x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Sub-step grid shared by every trajectory with the same (eps, t_final, substeps).
struct SubstepGrid {
    double epsilon = 0.0;
    double t_final = 0.0;
    int substeps = 1;
    std::size_t intervals = 0;  // number of (possibly partial) intervals to integrate
    std::size_t samples = 0;    // number of sampling instants tau_j <= t_final

    SubstepGrid(double eps, double horizon, int s) : epsilon(eps), t_final(horizon), substeps(s) {
        const double ratio = horizon / eps;
        const double whole = std::floor(ratio + 1e-9);
        samples = static_cast<std::size_t>(whole) + 1;
        intervals = std::abs(ratio - whole) <= 1e-9 ? static_cast<std::size_t>(whole)
                                                    : static_cast<std::size_t>(std::ceil(ratio));
    }

    [[nodiscard]] double step() const noexcept { return epsilon / substeps; }
    [[nodiscard]] double sample_time(std::size_t j) const noexcept {
        return std::min(static_cast<double>(j) * epsilon, t_final);
    }
    [[nodiscard]] double time(std::size_t j, int k) const noexcept {
        return static_cast<double>(j) * epsilon + k * step();
    }
    /// Number of sub-steps integrated in interval j (fewer than `substeps` only for a partial last interval).
    [[nodiscard]] int substeps_in(std::size_t j) const noexcept {
        int k = 0;
        while (k < substeps && time(j, k) < t_final) ++k;
        return k;
    }
    /// True when the final instant coincides with a sampling instant.
    [[nodiscard]] bool ends_on_sample() const noexcept { return samples > intervals; }
};

namespace detail {

// make_hold(j, x) -> HeldControl; rhs(t, x, u) -> xdot; y_error(j, k, t, x) -> double.
// (j, k) addresses sub-step k of interval j on the shared grid.
template <class MakeHold, class Rhs, class YError>
[[nodiscard]] SampledTrajectory integrate_sampled(const Vector& x0, const SubstepGrid& grid, int record_stride,
                                                  const MakeHold& make_hold, const Rhs& rhs,
                                                  const YError& y_error) {
    SampledTrajectory traj;
    traj.epsilon = grid.epsilon;
    Vector x = x0;
    std::size_t counter = 0;

    auto record = [&](double t, std::size_t j, int k, const Vector& u) {
        traj.dense_times.push_back(t);
        traj.dense_states.push_back(x);
        traj.dense_controls.push_back(u);
        traj.y_error.push_back(y_error(j, k, t, x));
        traj.dense_interval.push_back(j);
    };
    auto halt = [&](ErrorClass cls, const std::string& what, double t) {
        throw SimulationHalted(cls, what + " at t = " + std::to_string(t), traj, x, t);
    };
    auto hold_at = [&](std::size_t j, double t) {
        try {
            return make_hold(j, x);
        } catch (const RankDegeneracyError& e) {
            halt(ErrorClass::RankDegeneracy, e.what(), t);
        } catch (const Error& e) {
            halt(e.error_class(), e.what(), t);
        }
        throw std::logic_error("unreachable");
    };

    for (std::size_t j = 0; j < grid.intervals; ++j) {
        const double tau = grid.sample_time(j);
        const HeldControl hold = hold_at(j, tau);
        traj.sample_times.push_back(tau);
        traj.sample_states.push_back(x);
        traj.sample_y_error.push_back(y_error(j, 0, tau, x));

        auto closed_loop = [&](double t, const Vector& state) { return rhs(t, state, hold(t)); };
        const int steps = grid.substeps_in(j);
        for (int k = 0; k < steps; ++k) {
            const double t = grid.time(j, k);
            if (counter++ % static_cast<std::size_t>(record_stride) == 0) record(t, j, k, hold(t));
            const double h = std::min(grid.step(), grid.t_final - t);
            x = rk4_step(closed_loop, t, x, h);
            if (!x.allFinite() || x.norm() > kDivergenceBound) {
                halt(ErrorClass::Divergence, "state left the ball of radius 1e9", t + h);
            }
        }
    }

    // Final instant t_final.
    const std::size_t j_end = grid.intervals;
    if (grid.ends_on_sample()) {
        const HeldControl hold = hold_at(j_end, grid.t_final);
        traj.sample_times.push_back(grid.t_final);
        traj.sample_states.push_back(x);
        traj.sample_y_error.push_back(y_error(j_end, 0, grid.t_final, x));
        record(grid.t_final, j_end, 0, hold(grid.t_final));
    } else {
        const std::size_t j_last = j_end - 1;
        const HeldControl hold = make_hold(j_last, traj.sample_states.back());
        record(grid.t_final, j_last, grid.substeps_in(j_last), hold(grid.t_final));
    }
    return traj;
}

}  // namespace detail

/// Closed-loop pi_eps solution from x0 over [0, cfg.t_final].
[[nodiscard]] inline SampledTrajectory simulate_pi_epsilon(const PartitionedSystem& sys, const BracketSelection& sel,
                                                           const ControllerGains& gains, const Vector& x0,
                                                           const SimConfig& cfg) {
    const int n1 = sys.stabilized_dim();
    gains.validate(n1);
    cfg.validate();
    validate_selection_shape(sel, n1, sys.control_count());
    if (x0.size() != sys.state_dim()) throw Error(ErrorClass::InvalidInput, "x0 has wrong dimension");
    require_finite(x0, "x0");

    const SubstepGrid grid(gains.epsilon, cfg.t_final, cfg.resolved_substeps(sel.kappa_max()));
    auto make_hold = [&](std::size_t, const Vector& x) { return hold_control(sys, sel, gains, x); };
    auto rhs = [&](double t, const Vector& x, const Vector& u) { return sys.rhs(t, x, u); };
    auto y_error = [&](std::size_t, int, double, const Vector& x) { return (x.head(n1) - gains.y_star).norm(); };

    SampledTrajectory traj = detail::integrate_sampled(x0, grid, cfg.record_stride, make_hold, rhs, y_error);
    traj.n1 = n1;
    traj.y_star = gains.y_star;
    return traj;
}

/// Solution of the averaged flow ydot = -gamma (y - y*) at time t.
[[nodiscard]] inline Vector averaged_reference(const Vector& y0, const ControllerGains& gains, double t) {
    if (t < 0.0) throw Error(ErrorClass::InvalidInput, "averaged_reference requires t >= 0");
    if (t == 0.0) return y0;
    return gains.y_star + std::exp(-gains.gamma * t) * (y0 - gains.y_star);
}

struct DecayReport {
    double rho = 0.0;
    double t1 = std::numeric_limits<double>::infinity();
    std::optional<double> lambda_fit;
    std::optional<double> zeta_fit;
    int fit_samples = 0;
    double monotone_fraction = 1.0;

    [[nodiscard]] bool floor_reached() const noexcept { return std::isfinite(t1); }
};

/// Empirical (t1, lambda, zeta) for ||y - y*|| <= zeta e^{-lambda t} above the floor rho.
[[nodiscard]] inline DecayReport decay_report(const SampledTrajectory& traj, double rho) {
    if (traj.sample_times.size() < 2) throw Error(ErrorClass::InvalidInput, "decay_report needs >= 2 samples");
    if (!(rho > 0.0)) throw Error(ErrorClass::InvalidInput, "rho must be positive");
    DecayReport rep;
    rep.rho = rho;

    double last_bad = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < traj.dense_times.size(); ++i) {
        if (traj.y_error[i] > rho) last_bad = std::max(last_bad, traj.dense_times[i]);
    }
    for (std::size_t j = 0; j < traj.sample_times.size(); ++j) {
        if (traj.sample_y_error[j] > rho) last_bad = std::max(last_bad, traj.sample_times[j]);
    }
    if (!std::isfinite(last_bad)) {
        rep.t1 = traj.sample_times.front();
    } else {
        for (double tau : traj.sample_times) {
            if (tau > last_bad) {
                rep.t1 = tau;
                break;
            }
        }
    }

    double s_t = 0.0, s_l = 0.0, s_tt = 0.0, s_tl = 0.0;
    int count = 0;
    for (std::size_t j = 0; j < traj.sample_times.size(); ++j) {
        if (traj.sample_y_error[j] <= rho) continue;
        const double t = traj.sample_times[j];
        const double l = std::log(traj.sample_y_error[j]);
        s_t += t;
        s_l += l;
        s_tt += t * t;
        s_tl += t * l;
        ++count;
    }
    rep.fit_samples = count;
    if (count >= 3) {
        const double denom = count * s_tt - s_t * s_t;
        if (denom > 0.0) {
            const double slope = (count * s_tl - s_t * s_l) / denom;
            const double intercept = (s_l - slope * s_t) / count;
            rep.lambda_fit = -slope;
            rep.zeta_fit = std::exp(intercept);
        }
    }

    int monotone = 0;
    for (std::size_t j = 1; j < traj.sample_y_error.size(); ++j) {
        if (traj.sample_y_error[j] <= traj.sample_y_error[j - 1]) ++monotone;
    }
    rep.monotone_fraction = static_cast<double>(monotone) / static_cast<double>(traj.sample_y_error.size() - 1);
    return rep;
}

struct SweepRow {
    double epsilon = 0.0;
    double max_deviation = 0.0;  // max_j ||y(tau_j) - yhat(tau_j)||
};

/// Deviation of the sampled closed loop from the averaged flow for each eps.
/// Rows run concurrently; each uses the default sub-stepping unless `substeps` > 0.
[[nodiscard]] inline std::vector<SweepRow> epsilon_sweep(const PartitionedSystem& sys, const BracketSelection& sel,
                                                         const ControllerGains& gains_base, const Vector& x0,
                                                         double t_final, const std::vector<double>& eps_list,
                                                         int substeps = 0) {
    if (eps_list.empty()) throw Error(ErrorClass::InvalidInput, "eps_list is empty");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0)) throw Error(ErrorClass::InvalidInput, "eps_list entries must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) {
            throw Error(ErrorClass::InvalidInput, "eps_list must be strictly decreasing");
        }
    }
    const Vector y0 = x0.head(sys.stabilized_dim());

    auto row = [&](double eps) {
        ControllerGains gains = gains_base;
        gains.epsilon = eps;
        SimConfig cfg;
        cfg.t_final = t_final;
        cfg.substeps_per_period = substeps;
        cfg.record_stride = std::numeric_limits<int>::max();
        const SampledTrajectory traj = simulate_pi_epsilon(sys, sel, gains, x0, cfg);
        SweepRow r{eps, 0.0};
        for (std::size_t j = 0; j < traj.sample_times.size(); ++j) {
            const Vector ref = averaged_reference(y0, gains, traj.sample_times[j]);
            r.max_deviation = std::max(r.max_deviation, (traj.sample_states[j].head(y0.size()) - ref).norm());
        }
        return r;
    };

    std::vector<std::future<SweepRow>> futures;
    futures.reserve(eps_list.size());
    for (double eps : eps_list) futures.push_back(std::async(std::launch::async, row, eps));
    std::vector<SweepRow> rows;
    rows.reserve(eps_list.size());
    for (auto& f : futures) rows.push_back(f.get());
    return rows;
}

}  // namespace bracket_steer
