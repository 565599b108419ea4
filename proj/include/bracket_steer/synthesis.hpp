#pragma once

// Steering-law synthesis.
//
// Columns of the extension matrix F(x) are the y-rows of the selected control
// fields (S1) followed by the y-rows of the selected first-order brackets (S2).
// The steering coefficients solve F(x) a = -gamma (y - y*), and the control is
//
//   u_k(t) = sum_{i in S1} delta_{ki} a_i
//          + eps^{-1/2} sum_{(i1,i2) in S2} 2 sqrt(pi kappa |a_{i1i2}|)
//              * (delta_{k,i1} cos(w t) + delta_{k,i2} sign(a_{i1i2}) sin(w t)),
//
// with w = 2 pi kappa / eps. Over one period the oscillatory pair moves the
// state by eps * a_{i1i2} * [f_i1, f_i2] to second order.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bracket_steer/error.hpp"
#include "bracket_steer/system.hpp"

namespace bracket_steer {

inline constexpr double kDefaultConditionCap = 1e6;

struct BracketPair {
    int first = 0;
    int second = 0;

    friend bool operator==(const BracketPair&, const BracketPair&) = default;
};

struct BracketSelection {
    std::vector<int> s1;
    std::vector<BracketPair> s2;
    std::vector<int> kappa;  // parallel to s2

    /// kappa = 1, 2, 3, ... in s2 order.
    [[nodiscard]] static BracketSelection with_default_kappa(std::vector<int> s1, std::vector<BracketPair> s2) {
        BracketSelection sel{std::move(s1), std::move(s2), {}};
        for (std::size_t i = 0; i < sel.s2.size(); ++i) sel.kappa.push_back(static_cast<int>(i) + 1);
        return sel;
    }

    [[nodiscard]] int size() const noexcept { return static_cast<int>(s1.size() + s2.size()); }

    [[nodiscard]] int kappa_max() const noexcept {
        int k = 0;
        for (int v : kappa) k = std::max(k, v);
        return k;
    }

    friend bool operator==(const BracketSelection&, const BracketSelection&) = default;
};

/// Throws SelectionShape naming the first violated invariant.
inline void validate_selection_shape(const BracketSelection& sel, int n1, int m) {
    auto fail = [](const std::string& what) { throw Error(ErrorClass::SelectionShape, what); };
    if (sel.size() != n1) {
        fail("invariant |S1|+|S2| = n1 violated: " + std::to_string(sel.s1.size()) + " + " +
             std::to_string(sel.s2.size()) + " != " + std::to_string(n1));
    }
    for (int i : sel.s1) {
        if (i < 1 || i > m) fail("invariant S1 indices in 1..m violated by index " + std::to_string(i));
    }
    if (std::set<int>(sel.s1.begin(), sel.s1.end()).size() != sel.s1.size()) {
        fail("invariant S1 indices distinct violated");
    }
    if (sel.kappa.size() != sel.s2.size()) fail("invariant one kappa per S2 pair violated");
    for (const auto& p : sel.s2) {
        if (p.first < 1 || p.first > m || p.second < 1 || p.second > m) {
            fail("invariant S2 indices in 1..m violated by pair (" + std::to_string(p.first) + "," +
                 std::to_string(p.second) + ")");
        }
        if (p.first == p.second) {
            fail("invariant i1 != i2 violated by pair (" + std::to_string(p.first) + "," +
                 std::to_string(p.second) + "): bracket of a field with itself vanishes");
        }
    }
    for (int k : sel.kappa) {
        if (k < 1) fail("invariant kappa positive violated by kappa = " + std::to_string(k));
    }
    if (std::set<int>(sel.kappa.begin(), sel.kappa.end()).size() != sel.kappa.size()) {
        fail("invariant kappa pairwise distinct violated");
    }
}

struct ControllerGains {
    double epsilon = 1.0;
    double gamma = 1.0;
    Vector y_star;
    double cond_cap = kDefaultConditionCap;

    void validate(int n1) const {
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
            throw Error(ErrorClass::InvalidInput, "invariant epsilon > 0 violated");
        }
        if (!(gamma > 0.0) || !std::isfinite(gamma)) {
            throw Error(ErrorClass::InvalidInput, "invariant gamma > 0 violated");
        }
        if (!(cond_cap > 1.0)) throw Error(ErrorClass::InvalidInput, "invariant cond_cap > 1 violated");
        if (y_star.size() != n1) {
            throw Error(ErrorClass::InvalidInput, "y_star has dimension " + std::to_string(y_star.size()) +
                                                      ", expected n1 = " + std::to_string(n1));
        }
        require_finite(y_star, "y_star");
    }
};

/// n1 x n1 extension matrix: S1 field columns then S2 bracket columns, y-rows only.
[[nodiscard]] inline Matrix extension_matrix(const PartitionedSystem& sys, const BracketSelection& sel,
                                             const Vector& x) {
    const int n1 = sys.stabilized_dim();
    if (sel.size() != n1) {
        throw Error(ErrorClass::InvalidInput, "selection size " + std::to_string(sel.size()) +
                                                  " does not match n1 = " + std::to_string(n1));
    }
    Matrix f(n1, n1);
    int col = 0;
    for (int i : sel.s1) f.col(col++) = sys.eval_field(i, 0.0, x).head(n1);
    for (const auto& p : sel.s2) f.col(col++) = sys.lie_bracket(p.first, p.second, x).head(n1);
    return f;
}

/// Solves F a = -gamma * displacement with partial pivoting; rejects F above the condition cap.
/// `x` is only carried into the error for diagnostics.
[[nodiscard]] inline Vector solve_steering(const Matrix& f, const Vector& displacement, double gamma,
                                           double cond_cap, const Vector& x) {
    if (f.rows() != displacement.size()) {
        throw Error(ErrorClass::InvalidInput, "displacement does not match the extension matrix");
    }
    const Eigen::PartialPivLU<Matrix> lu(f);
    const double rcond = lu.rcond();
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(rcond > 0.0) || !std::isfinite(cond) || cond > cond_cap) {
        throw RankDegeneracyError("extension matrix is singular or ill-conditioned (condition estimate " +
                                      std::to_string(cond) + " exceeds cap " + std::to_string(cond_cap) + ")",
                                  x, cond);
    }
    Vector a = lu.solve(-gamma * displacement);
    if (!a.allFinite()) throw RankDegeneracyError("steering solve produced non-finite coefficients", x, cond);
    return a;
}

/// a(x) = -gamma F^{-1}(x) (y - y*), ordered as S1 then S2.
[[nodiscard]] inline Vector steering_coefficients(const PartitionedSystem& sys, const BracketSelection& sel,
                                                  const ControllerGains& gains, const Vector& x) {
    const Matrix f = extension_matrix(sys, sel, x);
    const Vector displacement = sys.y_block(x) - gains.y_star;
    return solve_steering(f, displacement, gains.gamma, gains.cond_cap, x);
}

[[nodiscard]] constexpr double sign_of(double v) noexcept {
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
}

/// The control law with its state argument frozen. Evaluating it at time t is
/// cheap, so simulators build one per sampling interval.
class HeldControl {
public:
    struct Oscillator {
        int first = 0;     // 0-based control index receiving the cosine
        int second = 0;    // 0-based control index receiving the signed sine
        double amplitude = 0.0;  // 2 sqrt(pi kappa |a|) / sqrt(eps)
        double sign = 0.0;
        int kappa = 1;
    };

    HeldControl(int m, double epsilon, const BracketSelection& sel, Vector coefficients)
        : epsilon_(epsilon), coefficients_(std::move(coefficients)), steady_(Vector::Zero(m)) {
        int j = 0;
        for (int i : sel.s1) steady_[i - 1] += coefficients_[j++];
        for (std::size_t p = 0; p < sel.s2.size(); ++p) {
            const double a = coefficients_[j++];
            const int kappa = sel.kappa[p];
            Oscillator osc;
            osc.first = sel.s2[p].first - 1;
            osc.second = sel.s2[p].second - 1;
            osc.kappa = kappa;
            osc.sign = sign_of(a);
            osc.amplitude = 2.0 * std::sqrt(std::numbers::pi * kappa * std::abs(a)) / std::sqrt(epsilon);
            oscillators_.push_back(osc);
        }
    }

    [[nodiscard]] const Vector& coefficients() const noexcept { return coefficients_; }
    [[nodiscard]] const Vector& steady() const noexcept { return steady_; }
    [[nodiscard]] const std::vector<Oscillator>& oscillators() const noexcept { return oscillators_; }
    [[nodiscard]] double epsilon() const noexcept { return epsilon_; }

    /// Zero-mean part of u(t). The phase uses fmod(t, eps) so it is eps-periodic in t.
    [[nodiscard]] Vector oscillatory(double t) const {
        Vector u = Vector::Zero(steady_.size());
        const double local = std::fmod(t, epsilon_);
        for (const auto& osc : oscillators_) {
            if (osc.amplitude == 0.0) continue;
            const double phase = 2.0 * std::numbers::pi * osc.kappa * local / epsilon_;
            u[osc.first] += osc.amplitude * std::cos(phase);
            u[osc.second] += osc.amplitude * osc.sign * std::sin(phase);
        }
        return u;
    }

    [[nodiscard]] Vector operator()(double t) const { return steady_ + oscillatory(t); }

private:
    double epsilon_;
    Vector coefficients_;
    Vector steady_;
    std::vector<Oscillator> oscillators_;
};

[[nodiscard]] inline HeldControl hold_control(const PartitionedSystem& sys, const BracketSelection& sel,
                                              const ControllerGains& gains, const Vector& x_hold) {
    return HeldControl(sys.control_count(), gains.epsilon, sel, steering_coefficients(sys, sel, gains, x_hold));
}

/// u(t, x_hold): the full control vector at absolute time t with the state frozen at x_hold.
[[nodiscard]] inline Vector control_value(const PartitionedSystem& sys, const BracketSelection& sel,
                                          const ControllerGains& gains, double t, const Vector& x_hold) {
    return hold_control(sys, sel, gains, x_hold)(t);
}

struct RankCertificate {
    std::vector<Vector> sampled_states;
    double worst_condition = 0.0;  // 2-norm condition number
    double alpha_estimate = 0.0;   // max ||F^{-1}(x)|| (spectral)
    bool rank_ok = false;
    Vector worst_state;
};

/// Evaluates F at every probe and certifies its invertibility within gains.cond_cap.
[[nodiscard]] inline RankCertificate validate_selection(const PartitionedSystem& sys, const BracketSelection& sel,
                                                        std::span<const Vector> probes,
                                                        const ControllerGains& gains) {
    validate_selection_shape(sel, sys.stabilized_dim(), sys.control_count());
    if (probes.empty()) throw Error(ErrorClass::InvalidInput, "validate_selection needs at least one probe");

    RankCertificate cert;
    cert.sampled_states.assign(probes.begin(), probes.end());
    bool all_inverted = true;
    for (const auto& x : probes) {
        const Matrix f = extension_matrix(sys, sel, x);
        const Eigen::JacobiSVD<Matrix> svd(f);
        const auto& sv = svd.singularValues();
        const double smax = sv[0];
        const double smin = sv[sv.size() - 1];
        double cond = std::numeric_limits<double>::infinity();
        double inv_norm = std::numeric_limits<double>::infinity();
        if (smin > 0.0) {
            cond = smax / smin;
            inv_norm = 1.0 / smin;
        } else {
            all_inverted = false;
        }
        if (cond > cert.worst_condition || cert.worst_state.size() == 0) {
            cert.worst_condition = cond;
            cert.worst_state = x;
        }
        cert.alpha_estimate = std::max(cert.alpha_estimate, inv_norm);
    }
    cert.rank_ok = all_inverted && cert.worst_condition <= gains.cond_cap;
    return cert;
}

/// Uniform probe states in the box [lo, hi] from a fixed-seed generator.
[[nodiscard]] inline std::vector<Vector> sample_box(const Vector& lo, const Vector& hi, int count,
                                                   std::uint64_t seed = 0) {
    if (lo.size() != hi.size()) throw Error(ErrorClass::InvalidInput, "probe box bounds differ in dimension");
    std::mt19937_64 rng(seed);
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        Vector x(lo.size());
        for (Eigen::Index k = 0; k < lo.size(); ++k) {
            std::uniform_real_distribution<double> dist(lo[k], hi[k]);
            x[k] = dist(rng);
        }
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace bracket_steer
