#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "bracket_steer/bracket_steer.hpp"
#include "oracle/oracle.hpp"

using namespace bracket_steer;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const BracketSelection kDiscSel{{1}, {{1, 2}}, {1}};
const BracketSelection kUnicycleSel{{1, 2}, {{1, 2}}, {1}};
const BracketSelection kBrockettSel{{1, 2}, {{1, 2}}, {1}};

ControllerGains gains(double eps, double gamma, int n1) {
    return ControllerGains{eps, gamma, Vector::Zero(n1), kDefaultConditionCap};
}

std::vector<Vector> probes(int n, int count = 100, std::uint64_t seed = 3) {
    return sample_box(Vector::Constant(n, -3.0), Vector::Constant(n, 3.0), count, seed);
}

std::string shape_error(const BracketSelection& sel, int n1, int m) {
    try {
        validate_selection_shape(sel, n1, m);
    } catch (const Error& e) {
        CHECK(e.error_class() == ErrorClass::SelectionShape);
        return e.what();
    }
    return {};
}

// Printed disc control, written out independently of HeldControl.
Vector disc_control_formula(double eps, double gamma, double t, const Vector& x) {
    const double a1 = -gamma * (x[0] * std::cos(x[2]) + x[1] * std::sin(x[2]));
    const double a12 = -gamma * (x[0] * std::sin(x[2]) - x[1] * std::cos(x[2]));
    const double amp = 2.0 * std::sqrt(std::numbers::pi * std::abs(a12) / eps);
    const double w = 2.0 * std::numbers::pi * t / eps;
    return Vector{{a1 + amp * std::cos(w), amp * oracle::sgn(a12) * std::sin(w)}};
}

}  // namespace

TEST_CASE("extension matrix examples") {
    const auto disc = models::rolling_disc();
    const Matrix f0 = extension_matrix(disc, kDiscSel, Vector{{2.0, 1.0, 0.0, 0.3}});
    CHECK(f0 == Matrix{{1.0, 0.0}, {0.0, -1.0}});

    for (const auto& x : probes(4)) {
        const Matrix f = extension_matrix(disc, kDiscSel, x);
        CHECK((f * f - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-15);
    }

    const auto uni = models::unicycle();
    CHECK(extension_matrix(uni, kUnicycleSel, Vector{{0.4, -0.2, 0.0}}) ==
          Matrix{{1.0, 0.0, 0.0}, {0.0, 0.0, -1.0}, {0.0, 1.0, 0.0}});

    CHECK_THROWS_AS(extension_matrix(uni, kDiscSel, Vector::Zero(3)), Error);
}

TEST_CASE("column order follows s1 then s2") {
    const auto uni = models::unicycle();
    const Vector x{{0.3, 0.1, 0.8}};
    const BracketSelection swapped{{2, 1}, {{1, 2}}, {1}};
    const Matrix f = extension_matrix(uni, kUnicycleSel, x);
    const Matrix g = extension_matrix(uni, swapped, x);
    CHECK(g.col(0) == f.col(1));
    CHECK(g.col(1) == f.col(0));
    CHECK(g.col(2) == f.col(2));

    const auto gn = gains(0.1, 2.0, 3);
    const Vector xs{{1.0, -0.5, 0.8}};
    const Vector a = steering_coefficients(uni, kUnicycleSel, gn, xs);
    const Vector b = steering_coefficients(uni, swapped, gn, xs);
    CHECK_THAT(b[0], WithinRel(a[1], 1e-14));
    CHECK_THAT(b[1], WithinRel(a[0], 1e-14));
    CHECK_THAT(b[2], WithinRel(a[2], 1e-14));
}

TEST_CASE("steering coefficient examples") {
    const auto disc = models::rolling_disc();
    const auto g = gains(1.0, 5.0, 2);
    const Vector a = steering_coefficients(disc, kDiscSel, g, Vector{{2.0, 1.0, 0.0, std::numbers::pi}});
    CHECK_THAT(a[0], WithinAbs(-10.0, 1e-14));
    CHECK_THAT(a[1], WithinAbs(5.0, 1e-14));

    const Vector b = steering_coefficients(disc, kDiscSel, g, Vector{{0.0, 1.0, std::numbers::pi / 2, 0.0}});
    CHECK_THAT(b[0], WithinAbs(-5.0, 1e-14));
    CHECK_THAT(b[1], WithinAbs(0.0, 1e-14));

    ControllerGains shifted = g;
    shifted.y_star = Vector{{0.7, -1.1}};
    CHECK(steering_coefficients(disc, kDiscSel, shifted, Vector{{0.7, -1.1, 2.0, 5.0}}) == Vector::Zero(2));
}

TEST_CASE("steering coefficients match the printed disc formulas") {
    const auto disc = models::rolling_disc();
    const auto g = gains(1.0, 5.0, 2);
    for (const auto& x : probes(4)) {
        const Vector a = steering_coefficients(disc, kDiscSel, g, x);
        const double a1 = -5.0 * (x[0] * std::cos(x[2]) + x[1] * std::sin(x[2]));
        const double a12 = -5.0 * (x[0] * std::sin(x[2]) - x[1] * std::cos(x[2]));
        CHECK_THAT(a[0], WithinAbs(a1, 1e-12));
        CHECK_THAT(a[1], WithinAbs(a12, 1e-12));
    }
}

TEST_CASE("linear-solve consistency") {
    struct Case {
        PartitionedSystem sys;
        BracketSelection sel;
    };
    const std::vector<Case> cases{{models::rolling_disc(), kDiscSel},
                                  {models::unicycle(), kUnicycleSel},
                                  {models::brockett(), kBrockettSel}};
    for (const auto& c : cases) {
        const int n1 = c.sys.stabilized_dim();
        ControllerGains g = gains(0.5, 3.0, n1);
        g.y_star = Vector::LinSpaced(n1, -0.5, 0.5);
        for (const auto& x : probes(c.sys.state_dim())) {
            const Vector a = steering_coefficients(c.sys, c.sel, g, x);
            const Vector rhs = -g.gamma * (x.head(n1) - g.y_star);
            const Vector lhs = extension_matrix(c.sys, c.sel, x) * a;
            CHECK((lhs - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()));
        }
    }
}

TEST_CASE("rank degeneracy carries the offending state") {
    // f1 = (1, 0), f2 = (x1, 0): F = [[1, x1], [0, 0]] is singular everywhere.
    const PartitionedSystem flat(2, 0, {},
                                 {[](const Vector&) { return Vector{{1.0, 0.0}}; },
                                  [](const Vector& x) { return Vector{{x[0], 0.0}}; }},
                                 {[](const Vector&) { return Matrix::Zero(2, 2); },
                                  [](const Vector&) { return Matrix{{1.0, 0.0}, {0.0, 0.0}}; }});
    const BracketSelection sel{{1, 2}, {}, {}};
    const Vector x{{0.25, -1.5}};
    try {
        (void)steering_coefficients(flat, sel, gains(1.0, 1.0, 2), x);
        FAIL("expected rank degeneracy");
    } catch (const RankDegeneracyError& e) {
        CHECK(e.error_class() == ErrorClass::RankDegeneracy);
        CHECK(e.state() == x);
    }

    const auto cert = validate_selection(flat, sel, probes(2, 5), gains(1.0, 1.0, 2));
    CHECK_FALSE(cert.rank_ok);

    // Well-posed but badly conditioned: F = diag(1, 1e-8).
    const PartitionedSystem stiff(2, 0, {},
                                  {[](const Vector&) { return Vector{{1.0, 0.0}}; },
                                   [](const Vector&) { return Vector{{0.0, 1e-8}}; }},
                                  {[](const Vector&) { return Matrix::Zero(2, 2); },
                                   [](const Vector&) { return Matrix::Zero(2, 2); }});
    CHECK_THROWS_AS(steering_coefficients(stiff, sel, gains(1.0, 1.0, 2), x), RankDegeneracyError);
    ControllerGains loose = gains(1.0, 1.0, 2);
    loose.cond_cap = 1e10;
    CHECK_NOTHROW(steering_coefficients(stiff, sel, loose, x));
}

TEST_CASE("control value examples") {
    const auto disc = models::rolling_disc();
    const auto g = gains(1.0, 5.0, 2);
    const Vector x{{2.0, 1.0, 0.0, std::numbers::pi}};
    const Vector u = control_value(disc, kDiscSel, g, 0.0, x);
    CHECK_THAT(u[0], WithinAbs(-10.0 + 2.0 * std::sqrt(5.0 * std::numbers::pi), 1e-13));
    CHECK_THAT(u[0], WithinAbs(-2.0734, 1e-4));
    CHECK(u[1] == 0.0);

    // a12 = 0 exactly at (1, 0, 0, 0): only the steady part survives.
    const HeldControl held = hold_control(disc, kDiscSel, g, Vector{{1.0, 0.0, 0.0, 0.0}});
    CHECK(held.coefficients()[1] == 0.0);
    for (double t : {0.0, 0.13, 0.5, 0.77, 3.9}) CHECK(held(t) == Vector{{-5.0, 0.0}});

    const Vector at_target{{0.0, 0.0, 1.3, -2.0}};
    for (double t : {0.0, 0.21, 0.5, 17.3}) CHECK(control_value(disc, kDiscSel, g, t, at_target) == Vector::Zero(2));
}

TEST_CASE("control value matches an independent evaluation of the printed disc law") {
    const auto disc = models::rolling_disc();
    for (double eps : {1.0, 0.25}) {
        const auto g = gains(eps, 5.0, 2);
        for (const auto& x : probes(4, 20)) {
            for (double t : {0.0, 0.1 * eps, 0.37 * eps, 0.5 * eps, 0.9 * eps}) {
                const Vector lib = control_value(disc, kDiscSel, g, t, x);
                const Vector ref = disc_control_formula(eps, 5.0, t, x);
                CHECK((lib - ref).norm() <= 1e-11 * std::max(1.0, ref.norm()));
            }
        }
    }
}

TEST_CASE("sign convention and sign(0)") {
    CHECK(sign_of(0.0) == 0.0);
    CHECK(sign_of(-0.0) == 0.0);
    CHECK(sign_of(2.0) == 1.0);
    CHECK(sign_of(-1e-300) == -1.0);

    const BracketSelection sel{{}, {{1, 2}}, {1}};
    const HeldControl pos(2, 1.0, sel, Vector{{4.0}});
    const HeldControl neg(2, 1.0, sel, Vector{{-4.0}});
    const double t = 0.2;
    CHECK(pos(t)[0] == neg(t)[0]);
    CHECK(pos(t)[1] == -neg(t)[1]);
}

TEST_CASE("oscillatory part has zero mean over a period") {
    const BracketSelection sel{{}, {{1, 2}, {2, 3}}, {1, 2}};
    for (double eps : {1.0, 0.1}) {
        const HeldControl held(3, eps, sel, Vector{{1.7, -0.6}});
        for (int k = 0; k < 3; ++k) {
            const double mean = oracle::gauss_legendre([&](double s) { return held.oscillatory(s)[k]; }, 0.0, eps, 64);
            CHECK(std::abs(mean) <= 1e-9);
        }
    }
    const auto disc = models::rolling_disc();
    const HeldControl disc_held = hold_control(disc, kDiscSel, gains(1.0, 5.0, 2), Vector{{2.0, 1.0, 0.0, 0.0}});
    for (int k = 0; k < 2; ++k) {
        const double mean = oracle::gauss_legendre([&](double s) { return disc_held.oscillatory(s)[k]; }, 0.0, 1.0, 64);
        CHECK(std::abs(mean) <= 1e-9);
    }
}

TEST_CASE("antisymmetrized iterated integral recovers eps * a") {
    const BracketSelection sel{{}, {{1, 2}, {2, 3}}, {1, 2}};
    for (double eps : {1.0, 0.1}) {
        const Vector a{{1.7, -0.6}};
        const HeldControl held(3, eps, sel, a);
        for (std::size_t p = 0; p < sel.s2.size(); ++p) {
            const int i1 = sel.s2[p].first - 1;
            const int i2 = sel.s2[p].second - 1;
            const double integral = oracle::antisymmetric_iterated_integral(
                [&](double s) { return held.oscillatory(s)[i1]; }, [&](double s) { return held.oscillatory(s)[i2]; },
                eps, 160);
            CHECK_THAT(integral, WithinRel(eps * a[static_cast<Eigen::Index>(p)], 1e-6));
        }
    }
}

TEST_CASE("control is eps-periodic for a frozen state") {
    const auto disc = models::rolling_disc();
    const Vector x{{2.0, 1.0, 0.0, std::numbers::pi}};
    const auto g = gains(0.5, 5.0, 2);
    for (double t : {0.0, 0.125, 0.25, 0.375, 3.0, 7.0625}) {
        CHECK(control_value(disc, kDiscSel, g, t + 0.5, x) == control_value(disc, kDiscSel, g, t, x));
    }
    const auto g2 = gains(0.1, 5.0, 2);
    for (double t : {0.0, 0.013, 0.05, 0.731, 12.34}) {
        const Vector d = control_value(disc, kDiscSel, g2, t + 0.1, x) - control_value(disc, kDiscSel, g2, t, x);
        CHECK(d.cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("selection validator") {
    const auto disc = models::rolling_disc();
    const auto cert = validate_selection(disc, kDiscSel, probes(4), gains(1.0, 5.0, 2));
    CHECK(cert.rank_ok);
    CHECK(cert.sampled_states.size() == 100);
    CHECK(cert.worst_condition <= 1.0 + 1e-9);
    CHECK_THAT(cert.alpha_estimate, WithinAbs(1.0, 1e-9));

    const auto uni = models::unicycle();
    CHECK(validate_selection(uni, kUnicycleSel, probes(3), gains(0.1, 10.0, 3)).rank_ok);

    CHECK_THAT(shape_error(BracketSelection{{1}, {{1, 1}}, {1}}, 2, 2), ContainsSubstring("i1 != i2"));
    CHECK_THAT(shape_error(BracketSelection{{1, 2}, {}, {}}, 3, 2), ContainsSubstring("|S1|+|S2| = n1"));
    CHECK_THAT(shape_error(BracketSelection{{}, {{1, 2}, {2, 3}}, {2, 2}}, 2, 3),
               ContainsSubstring("kappa pairwise distinct"));
    CHECK_THAT(shape_error(BracketSelection{{3}, {{1, 2}}, {1}}, 2, 2), ContainsSubstring("1..m"));
    CHECK_THAT(shape_error(BracketSelection{{1}, {{1, 2}}, {0}}, 2, 2), ContainsSubstring("kappa positive"));
    CHECK(shape_error(kDiscSel, 2, 2).empty());

    try {
        (void)validate_selection(disc, BracketSelection{{1}, {{1, 1}}, {1}}, probes(4, 3), gains(1.0, 5.0, 2));
        FAIL("expected a selection-shape error");
    } catch (const Error& e) {
        CHECK(e.error_class() == ErrorClass::SelectionShape);
    }
    CHECK_THROWS_AS(validate_selection(disc, kDiscSel, std::vector<Vector>{}, gains(1.0, 5.0, 2)), Error);
}

TEST_CASE("default kappa enumeration") {
    const auto sel = BracketSelection::with_default_kappa({1}, {{1, 2}, {2, 3}, {1, 3}});
    CHECK(sel.kappa == std::vector<int>{1, 2, 3});
    CHECK(sel.kappa_max() == 3);
}

TEST_CASE("gain validation") {
    CHECK_NOTHROW(gains(1.0, 5.0, 2).validate(2));
    CHECK_THROWS_AS(gains(0.0, 5.0, 2).validate(2), Error);
    CHECK_THROWS_AS(gains(1.0, 0.0, 2).validate(2), Error);
    CHECK_THROWS_AS(gains(1.0, 5.0, 3).validate(2), Error);
    ControllerGains g = gains(1.0, 5.0, 2);
    g.cond_cap = 1.0;
    CHECK_THROWS_AS(g.validate(2), Error);
}
