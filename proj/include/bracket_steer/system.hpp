#pragma once

// Partitioned control-affine systems
//
//   xdot = f0(t, x) + sum_k f_k(x) u_k,     x = (y, z),  y in R^n1, z in R^n2
//
// together with analytic Jacobians of the control fields, Lie brackets built
// from them, and a central-difference Jacobian used as an independent check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bracket_steer/error.hpp"

namespace bracket_steer {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using DriftField = std::function<Vector(double, const Vector&)>;
using ControlField = std::function<Vector(const Vector&)>;
using FieldJacobian = std::function<Matrix(const Vector&)>;
using DomainCheck = std::function<bool(const Vector&)>;

inline constexpr double kDefaultFiniteDiffStep = 1e-6;

[[nodiscard]] inline bool all_finite(const Eigen::Ref<const Matrix>& m) noexcept {
    return m.allFinite();
}

inline void require_finite(const Eigen::Ref<const Matrix>& m, const std::string& context) {
    if (!m.allFinite()) {
        throw Error(ErrorClass::NumericDomain, context + ": non-finite value");
    }
}

class PartitionedSystem {
public:
    /// `drift` may be empty, in which case the system is driftless.
    PartitionedSystem(int n1, int n2, DriftField drift, std::vector<ControlField> fields,
                      std::vector<FieldJacobian> jacobians, DomainCheck domain = {},
                      std::string name = {})
        : n1_(n1),
          n2_(n2),
          drift_(std::move(drift)),
          fields_(std::move(fields)),
          jacobians_(std::move(jacobians)),
          domain_(std::move(domain)),
          name_(std::move(name)) {
        if (n1_ < 1 || n2_ < 0) {
            throw Error(ErrorClass::InvalidInput, "system dimensions require n1 >= 1 and n2 >= 0");
        }
        if (fields_.empty()) {
            throw Error(ErrorClass::InvalidInput, "system needs at least one control field (m >= 1)");
        }
        if (fields_.size() != jacobians_.size()) {
            throw Error(ErrorClass::InvalidInput,
                        "control_fields and control_jacobians must have identical length m");
        }
    }

    [[nodiscard]] int state_dim() const noexcept { return n1_ + n2_; }
    [[nodiscard]] int stabilized_dim() const noexcept { return n1_; }
    [[nodiscard]] int free_dim() const noexcept { return n2_; }
    [[nodiscard]] int control_count() const noexcept { return static_cast<int>(fields_.size()); }
    [[nodiscard]] bool driftless() const noexcept { return !static_cast<bool>(drift_); }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }

    [[nodiscard]] bool inside_domain(const Vector& x) const {
        return !domain_ || domain_(x);
    }

    [[nodiscard]] auto y_block(const Vector& x) const { return x.head(n1_); }
    [[nodiscard]] auto z_block(const Vector& x) const { return x.tail(n2_); }

    /// field_id 0 is the drift f0(t, x); 1..m are the control fields (t is ignored for those).
    [[nodiscard]] Vector eval_field(int field_id, double t, const Vector& x) const {
        check_state(x);
        if (field_id < 0 || field_id > control_count()) {
            throw Error(ErrorClass::InvalidInput, "field id " + std::to_string(field_id) + " out of range 0.." +
                                                      std::to_string(control_count()));
        }
        Vector v = field_id == 0 ? eval_drift(t, x) : fields_[field_id - 1](x);
        check_output(v, "field " + std::to_string(field_id));
        return v;
    }

    [[nodiscard]] Vector eval_drift(double t, const Vector& x) const {
        if (!drift_) return Vector::Zero(state_dim());
        Vector v = drift_(t, x);
        check_output(v, "drift");
        return v;
    }

    /// Analytic d f_k / dx for k in 1..m.
    [[nodiscard]] Matrix jacobian(int field_id, const Vector& x) const {
        check_state(x);
        check_control_id(field_id);
        Matrix j = jacobians_[field_id - 1](x);
        if (j.rows() != state_dim() || j.cols() != state_dim()) {
            throw Error(ErrorClass::InvalidInput, "jacobian of field " + std::to_string(field_id) +
                                                      " has wrong shape");
        }
        require_finite(j, "jacobian of field " + std::to_string(field_id));
        return j;
    }

    /// [f_j1, f_j2](x) = (d f_j2/dx) f_j1 - (d f_j1/dx) f_j2.
    [[nodiscard]] Vector lie_bracket(int j1, int j2, const Vector& x) const {
        check_control_id(j1);
        check_control_id(j2);
        const Vector f1 = eval_field(j1, 0.0, x);
        const Vector f2 = eval_field(j2, 0.0, x);
        const Vector a = jacobian(j2, x) * f1;
        const Vector b = jacobian(j1, x) * f2;
        Vector r = a - b;
        require_finite(r, "lie bracket");
        return r;
    }

    /// Control field k (1..m) as a standalone callable, e.g. for finite differencing.
    [[nodiscard]] ControlField control_field(int k) const {
        check_control_id(k);
        return fields_[k - 1];
    }

    /// Sum of the control fields weighted by u (no drift).
    [[nodiscard]] Vector control_part(const Vector& x, const Vector& u) const {
        Vector v = Vector::Zero(state_dim());
        for (int k = 0; k < control_count(); ++k) {
            if (u[k] != 0.0) v.noalias() += fields_[k](x) * u[k];
        }
        return v;
    }

    /// Right-hand side f0(t, x) + sum_k f_k(x) u_k.
    [[nodiscard]] Vector rhs(double t, const Vector& x, const Vector& u) const {
        Vector v = control_part(x, u);
        if (drift_) v += drift_(t, x);
        return v;
    }

private:
    void check_state(const Vector& x) const {
        if (x.size() != state_dim()) {
            throw Error(ErrorClass::InvalidInput, "state has dimension " + std::to_string(x.size()) +
                                                      ", expected " + std::to_string(state_dim()));
        }
        require_finite(x, "state");
    }

    void check_control_id(int k) const {
        if (k < 1 || k > control_count()) {
            throw Error(ErrorClass::InvalidInput, "control field index " + std::to_string(k) +
                                                      " out of range 1.." + std::to_string(control_count()));
        }
    }

    void check_output(const Vector& v, const std::string& what) const {
        if (v.size() != state_dim()) {
            throw Error(ErrorClass::InvalidInput, what + " returned a vector of wrong dimension");
        }
        require_finite(v, what);
    }

    int n1_;
    int n2_;
    DriftField drift_;
    std::vector<ControlField> fields_;
    std::vector<FieldJacobian> jacobians_;
    DomainCheck domain_;
    std::string name_;
};

/// Central-difference Jacobian: column i = (f(x + h e_i) - f(x - h e_i)) / 2h.
[[nodiscard]] inline Matrix finite_diff_jacobian(const ControlField& field, const Vector& x,
                                                 double h = kDefaultFiniteDiffStep) {
    if (!(h > 0.0)) throw Error(ErrorClass::InvalidInput, "finite-difference step must be positive");
    require_finite(x, "finite_diff_jacobian state");
    const Vector f0 = field(x);
    Matrix jac(f0.size(), x.size());
    Vector xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        xp[i] = xi + h;
        const Vector fp = field(xp);
        xp[i] = xi - h;
        const Vector fm = field(xp);
        xp[i] = xi;
        jac.col(i) = (fp - fm) / (2.0 * h);
    }
    require_finite(jac, "finite_diff_jacobian");
    return jac;
}

/// Bracket composed from finite-difference Jacobians only (no analytic derivative involved).
[[nodiscard]] inline Vector finite_diff_lie_bracket(const ControlField& f, const ControlField& g,
                                                    const Vector& x, double h = kDefaultFiniteDiffStep) {
    return finite_diff_jacobian(g, x, h) * f(x) - finite_diff_jacobian(f, x, h) * g(x);
}

struct JacobianCheck {
    double worst_relative_error = 0.0;
    int worst_field = 0;
    Vector worst_state;
    bool ok = true;
};

/// Compares analytic Jacobians against central differences at each probe state.
[[nodiscard]] inline JacobianCheck check_jacobians(const PartitionedSystem& sys, std::span<const Vector> probes,
                                                   double rel_tol = 1e-6, double h = kDefaultFiniteDiffStep) {
    JacobianCheck out;
    for (const auto& x : probes) {
        for (int k = 1; k <= sys.control_count(); ++k) {
            const Matrix analytic = sys.jacobian(k, x);
            const Matrix numeric = finite_diff_jacobian(sys.control_field(k), x, h);
            const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
            const double err = (analytic - numeric).cwiseAbs().maxCoeff() / scale;
            if (err > out.worst_relative_error || out.worst_state.size() == 0) {
                out.worst_relative_error = err;
                out.worst_field = k;
                out.worst_state = x;
            }
        }
    }
    out.ok = out.worst_relative_error <= rel_tol;
    return out;
}

}  // namespace bracket_steer
