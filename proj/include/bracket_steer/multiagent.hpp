#pragma once

// Leader-following: each follower x^l is steered so that x^l - x^L - d_l -> 0.
//
// The stacked system (y = displacements, z = leader state) has a
// block-diagonal extension matrix, so every follower's control only needs its
// own fields and its displacement from the leader. Followers are therefore
// integrated independently against one shared leader path.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bracket_steer/error.hpp"
#include "bracket_steer/simulation.hpp"
#include "bracket_steer/synthesis.hpp"
#include "bracket_steer/system.hpp"

namespace bracket_steer {

using LeaderField = std::function<Vector(double, const Vector&)>;

struct FollowerAgent {
    PartitionedSystem system;  // n2 = 0: the whole agent state is stabilized
    BracketSelection selection;
    double gamma = 1.0;
    Vector offset;

    [[nodiscard]] int dim() const noexcept { return system.state_dim(); }

    void validate() const {
        if (system.free_dim() != 0) throw Error(ErrorClass::InvalidInput, "follower systems must have n2 = 0");
        if (!(gamma > 0.0)) throw Error(ErrorClass::InvalidInput, "invariant gamma_l > 0 violated");
        if (offset.size() != dim()) throw Error(ErrorClass::InvalidInput, "offset dimension differs from agent state");
        validate_selection_shape(selection, dim(), system.control_count());
    }
};

struct LeaderModel {
    LeaderField dynamics;
    Vector x0;
};

/// u^l(t, x^l, x^L): the steering law with y - y* replaced by x^l - x^L - d_l and
/// the extension matrix evaluated at x^l.
class FollowerController {
public:
    FollowerController(const FollowerAgent& agent, double epsilon, double cond_cap)
        : agent_(&agent), epsilon_(epsilon), cond_cap_(cond_cap) {}

    [[nodiscard]] HeldControl hold(const Vector& x, const Vector& x_leader) const {
        const Matrix f = extension_matrix(agent_->system, agent_->selection, x);
        const Vector displacement = x - x_leader - agent_->offset;
        return HeldControl(agent_->system.control_count(), epsilon_, agent_->selection,
                           solve_steering(f, displacement, agent_->gamma, cond_cap_, x));
    }

    [[nodiscard]] Vector operator()(double t, const Vector& x, const Vector& x_leader) const {
        return hold(x, x_leader)(t);
    }

private:
    const FollowerAgent* agent_;
    double epsilon_;
    double cond_cap_;
};

/// Only gains.epsilon and gains.cond_cap are used; each agent carries its own gamma.
[[nodiscard]] inline FollowerController follower_controller(const FollowerAgent& agent,
                                                            const ControllerGains& gains) {
    agent.validate();
    return FollowerController(agent, gains.epsilon, gains.cond_cap);
}

/// Leader states at every sub-step of a grid (flat index j * substeps + k), plus the final instant.
struct LeaderPath {
    SubstepGrid grid;
    std::vector<Vector> states;

    [[nodiscard]] const Vector& at(std::size_t j, int k) const {
        return states[j * static_cast<std::size_t>(grid.substeps) + static_cast<std::size_t>(k)];
    }
};

[[nodiscard]] inline LeaderPath integrate_leader(const LeaderModel& leader, const SubstepGrid& grid) {
    if (!leader.dynamics) throw Error(ErrorClass::InvalidInput, "leader dynamics missing");
    require_finite(leader.x0, "leader x0");
    LeaderPath path{grid, {}};
    Vector x = leader.x0;
    auto rhs = [&](double t, const Vector& s) { return leader.dynamics(t, s); };
    for (std::size_t j = 0; j < grid.intervals; ++j) {
        const int steps = grid.substeps_in(j);
        for (int k = 0; k < steps; ++k) {
            path.states.push_back(x);
            const double t = grid.time(j, k);
            x = rk4_step(rhs, t, x, std::min(grid.step(), grid.t_final - t));
            if (!x.allFinite() || x.norm() > kDivergenceBound) {
                throw Error(ErrorClass::Divergence, "leader state left the ball of radius 1e9 at t = " +
                                                        std::to_string(t));
            }
        }
    }
    path.states.push_back(x);
    return path;
}

/// One follower against a precomputed leader path. y_error holds ||x^l - x^L - d_l||.
[[nodiscard]] inline SampledTrajectory simulate_follower(const FollowerAgent& agent, const LeaderPath& leader,
                                                         const Vector& x0, const ControllerGains& gains,
                                                         int record_stride = 1) {
    agent.validate();
    if (x0.size() != agent.dim()) throw Error(ErrorClass::InvalidInput, "follower x0 has wrong dimension");
    const FollowerController controller(agent, gains.epsilon, gains.cond_cap);
    auto make_hold = [&](std::size_t j, const Vector& x) { return controller.hold(x, leader.at(j, 0)); };
    auto rhs = [&](double, const Vector& x, const Vector& u) { return agent.system.control_part(x, u); };
    auto err = [&](std::size_t j, int k, double, const Vector& x) {
        return (x - leader.at(j, k) - agent.offset).norm();
    };
    SampledTrajectory traj = detail::integrate_sampled(x0, leader.grid, record_stride, make_hold, rhs, err);
    traj.n1 = agent.dim();
    traj.y_star = Vector::Zero(agent.dim());
    return traj;
}

struct AgentRun {
    SampledTrajectory trajectory;  // partial if the agent halted
    std::optional<ErrorClass> failure;
    std::string failure_message;
    Vector failure_state;
};

struct FormationTrajectory {
    std::vector<double> dense_times;
    std::vector<Vector> leader_states;  // on dense_times
    std::vector<AgentRun> agents;
    std::vector<Vector> offsets;

    [[nodiscard]] bool all_completed() const noexcept {
        return std::all_of(agents.begin(), agents.end(), [](const AgentRun& a) { return !a.failure; });
    }
};

/// Jointly simulates N followers and the leader on the grid tau_j = j eps.
/// A rank degeneracy in one follower stops only that follower.
[[nodiscard]] inline FormationTrajectory simulate_formation(const std::vector<FollowerAgent>& agents,
                                                            const LeaderModel& leader,
                                                            const std::vector<Vector>& x0s,
                                                            const ControllerGains& gains, const SimConfig& cfg) {
    cfg.validate();
    if (agents.empty()) throw Error(ErrorClass::InvalidInput, "formation needs at least one follower");
    if (x0s.size() != agents.size()) throw Error(ErrorClass::InvalidInput, "one initial state per follower required");
    if (!(gains.epsilon > 0.0)) throw Error(ErrorClass::InvalidInput, "invariant epsilon > 0 violated");
    const int p = agents.front().dim();
    int kappa_max = 1;
    for (const auto& a : agents) {
        a.validate();
        if (a.dim() != p) throw Error(ErrorClass::InvalidInput, "all followers must share the state dimension p");
        kappa_max = std::max(kappa_max, a.selection.kappa_max());
    }
    if (leader.x0.size() != p) throw Error(ErrorClass::InvalidInput, "leader state dimension differs from p");

    const SubstepGrid grid(gains.epsilon, cfg.t_final, cfg.resolved_substeps(kappa_max));
    const LeaderPath path = integrate_leader(leader, grid);

    std::vector<std::future<AgentRun>> futures;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        futures.push_back(std::async(std::launch::async, [&, i] {
            AgentRun run;
            try {
                run.trajectory = simulate_follower(agents[i], path, x0s[i], gains, cfg.record_stride);
            } catch (const SimulationHalted& e) {
                run.trajectory = e.partial();
                run.failure = e.error_class();
                run.failure_message = e.what();
                run.failure_state = e.state();
            }
            return run;
        }));
    }

    FormationTrajectory out;
    for (auto& f : futures) out.agents.push_back(f.get());
    for (const auto& a : agents) out.offsets.push_back(a.offset);

    std::size_t flat = 0;
    const auto stride = static_cast<std::size_t>(cfg.record_stride);
    for (std::size_t j = 0; j < grid.intervals; ++j) {
        const int steps = grid.substeps_in(j);
        for (int k = 0; k < steps; ++k, ++flat) {
            if (flat % stride == 0) {
                out.dense_times.push_back(grid.time(j, k));
                out.leader_states.push_back(path.at(j, k));
            }
        }
    }
    out.dense_times.push_back(grid.t_final);
    out.leader_states.push_back(path.states.back());
    return out;
}

/// ||x^l(t) - x^L(t) - d_l|| on the shared dense grid.
[[nodiscard]] inline std::vector<double> formation_error(const FormationTrajectory& traj, std::size_t agent_index) {
    if (agent_index >= traj.agents.size()) throw Error(ErrorClass::InvalidInput, "agent index out of range");
    return traj.agents[agent_index].trajectory.y_error;
}

struct GainCondition {
    double sup_leader_speed = 0.0;  // sup_t ||f(t, x^L(t))|| along the simulated path
    double required_gamma = 0.0;    // sup / rho
    bool satisfied = false;
};

/// Checks gamma_l > (1/rho) sup_t ||f(t, x^L(t))|| along the simulated leader path.
[[nodiscard]] inline GainCondition check_gain_condition(const FormationTrajectory& traj, const LeaderModel& leader,
                                                        double gamma, double rho) {
    if (!(rho > 0.0)) throw Error(ErrorClass::InvalidInput, "rho must be positive");
    GainCondition g;
    for (std::size_t i = 0; i < traj.dense_times.size(); ++i) {
        g.sup_leader_speed = std::max(g.sup_leader_speed, leader.dynamics(traj.dense_times[i], traj.leader_states[i]).norm());
    }
    g.required_gamma = g.sup_leader_speed / rho;
    g.satisfied = gamma > g.required_gamma;
    return g;
}

}  // namespace bracket_steer
