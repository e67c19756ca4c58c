#include "doctest.h"

#include <cmath>
#include <random>

#include "epitest/policy.hpp"

using namespace epitest;

namespace {

Params fig2_params() {
    Params p;
    p.kappa = 0.0;
    p.theta_b = 0.0;
    p.eta = 1.0;
    return p;
}

Params fig3_params() {
    Params p; // Table-1 kappa stays
    p.theta_b = 0.0;
    p.eta = 1.0;
    return p;
}

FractionState seed_state(double s0, double i0) {
    FractionState x;
    x.s = s0;
    x.i_u = i0;
    x.r_d = 1.0 - s0 - i0;
    return x;
}

} // namespace

TEST_CASE("theorem1_rate: boundary and direct values") {
    Params p;
    FractionState x;
    x.s = p.gamma / p.beta;
    CHECK(theorem1_rate(x, p.beta, p, Theorem1Phase::Plateau) == doctest::Approx(0.0));

    x.s = 1.0;
    CHECK(theorem1_rate(x, p.beta, p, Theorem1Phase::Plateau) ==
          doctest::Approx((0.3 - 1.0 / 14.0) / 0.9).epsilon(1e-9));
    CHECK(theorem1_rate(x, p.beta, p, Theorem1Phase::Plateau) == doctest::Approx(0.253968).epsilon(1e-4));

    CHECK(theorem1_rate(x, p.beta, p, Theorem1Phase::BeforeHit) == 0.0);
    CHECK(theorem1_rate(x, p.beta, p, Theorem1Phase::AfterHerd) == 0.0);

    x.s = 0.1; // past herd immunity the law clamps at zero
    CHECK(theorem1_rate(x, p.beta, p, Theorem1Phase::Plateau) == 0.0);
}

TEST_CASE("theorem1 closed loop: i_u rides the constraint then decays") {
    Params p = fig2_params();
    const double i_max = 0.1;
    Theorem1Run run =
        theorem1_closed_loop(seed_state(0.999, 0.001), i_max, p, BetaSignal::constant(p.beta),
                             400.0, 0.01);

    REQUIRE(run.policy.testing_needed);
    CHECK(run.policy.t_hit > 0.0);
    CHECK(run.policy.t_herd > run.policy.t_hit);

    const double s_herd = p.gamma / p.beta;
    double worst_plateau = 0.0;
    for (const auto& pt : run.trajectory) {
        CHECK(pt.state.i_u <= i_max + 1e-6);
        if (pt.t > run.policy.t_hit + 1e-9 && pt.t < run.policy.t_herd - 1e-9)
            worst_plateau = std::max(worst_plateau, std::abs(pt.state.i_u - i_max));
        if (pt.t > run.policy.t_herd + 0.02)
            CHECK(pt.theta == 0.0);
    }
    CHECK(worst_plateau < 1e-4);
    // herd immunity located where beta*s = gamma
    auto it = std::lower_bound(run.trajectory.begin(), run.trajectory.end(), run.policy.t_herd,
                               [](const TrajectoryPoint& a, double t) { return a.t < t; });
    REQUIRE(it != run.trajectory.end());
    CHECK(it->state.s == doctest::Approx(s_herd).epsilon(1e-4));
    // free trajectory decays afterwards
    CHECK(run.trajectory.back().state.i_u < 0.02);
}

TEST_CASE("theorem1 closed loop: below-threshold epidemic never tests") {
    Params p = fig2_params();
    Theorem1Run run = theorem1_closed_loop(seed_state(0.999, 0.001), 0.5, p,
                                           BetaSignal::constant(p.beta), 400.0, 0.01);
    CHECK_FALSE(run.policy.testing_needed);
    for (const auto& pt : run.trajectory)
        CHECK(pt.theta == 0.0);
}

TEST_CASE("theorem1 dominance: optimal s is pointwise lowest among feasible schedules") {
    Params p = fig2_params();
    const double i_max = 0.1;
    const BetaSignal beta = BetaSignal::constant(p.beta);
    const FractionState x0 = seed_state(0.999, 0.001);
    Theorem1Run opt = theorem1_closed_loop(x0, i_max, p, beta, 300.0, 0.01);

    // feasible alternatives: extra testing on a random early window plus the
    // same constraint-riding feedback
    std::mt19937_64 rng(20240817u);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int rep = 0; rep < 8; ++rep) {
        const double a = u01(rng) * 0.8 * opt.policy.t_hit;
        const double b = a + u01(rng) * (opt.policy.t_hit - a);
        const double extra = 0.02 + 0.3 * u01(rng);
        ControlLaw alt = [&, a, b, extra](double t, const FractionState& x) {
            double th = (t >= a && t <= b) ? extra : 0.0;
            // ride the constraint from just below so grid crossings cannot
            // overshoot the bound
            if (x.i_u >= i_max - 1e-3)
                th = std::max(th, (p.beta * x.s - p.gamma) / p.eta);
            return th;
        };
        Trajectory traj = integrate(x0, p, alt, beta, 300.0, 0.01);
        for (const auto& pt : traj)
            REQUIRE(pt.state.i_u <= i_max + 1e-6); // alternative stays feasible
        for (std::size_t i = 0; i < traj.size(); ++i) {
            if (opt.trajectory[i].t > opt.policy.t_herd)
                break;
            CHECK(opt.trajectory[i].state.s <= traj[i].state.s + 1e-6);
        }
    }
}

TEST_CASE("theorem1 with non-increasing beta: plateau pins i_u, testing stops at herd") {
    Params p = fig2_params();
    // staircase decay from 0.30 to 0.24
    std::vector<double> times, vals;
    for (int k = 0; k < 13; ++k) {
        times.push_back(15.0 * k);
        vals.push_back(0.30 - 0.005 * k);
    }
    BetaSignal beta = BetaSignal::piecewise(times, vals);
    const double i_max = 0.1;
    Theorem1Run run = theorem1_closed_loop(seed_state(0.999, 0.001), i_max, p, beta, 500.0, 0.01);

    REQUIRE(run.policy.testing_needed);
    for (const auto& pt : run.trajectory) {
        if (pt.t > run.policy.t_hit + 1e-9 && pt.t < run.policy.t_herd - 1e-9)
            CHECK(std::abs(pt.state.i_u - i_max) < 1e-6);
        if (pt.t > run.policy.t_herd + 0.02) {
            CHECK(pt.theta == 0.0);
            CHECK(beta(pt.t) * pt.state.s <= p.gamma + 1e-6);
        }
    }
}

TEST_CASE("plateau_rate: direct values and holding property") {
    Params p; // Table 1
    FractionState x;
    x.s = 0.5;
    x.i_u = 0.01;
    CHECK(plateau_rate(x, p) == doctest::Approx(0.3 * 0.49 - 1.0 / 14.0 - 0.04).epsilon(1e-12));
    CHECK(plateau_rate(x, p) == doctest::Approx(0.035571).epsilon(1e-4));

    x.s = (p.gamma + p.kappa) / p.beta + 0.01;
    x.i_u = 0.01;
    CHECK(plateau_rate(x, p) == doctest::Approx(0.0).epsilon(1e-12));

    // starting on the constraint with zero slope, the unclamped plateau law
    // keeps i_u + i_d constant
    Params q = fig3_params();
    const double i_max = 0.1;
    FractionState on;
    on.s = 0.6;
    on.i_u = q.gamma * i_max / (q.beta * 0.6);
    on.i_d = i_max - on.i_u;
    on.r_d = 1.0 - on.s - on.i_u - on.i_d;
    ControlLaw law = [&q](double, const FractionState& y) { return plateau_rate(y, q) / q.eta; };
    Trajectory traj = integrate(on, q, law, BetaSignal::constant(q.beta), 5.0, 0.01);
    for (const auto& pt : traj)
        CHECK(std::abs(pt.state.i_u + pt.state.i_d - i_max) < 1e-8 * std::max(1.0, pt.t));
}

TEST_CASE("solve_constant_rate: tangency verified by forward integration") {
    Params p = fig3_params();
    const double i_max = 0.1;
    ConstantRateSolution sol = solve_constant_rate(0.999, 0.001, i_max, p);

    REQUIRE(sol.constraint_active);
    CHECK(sol.theta_const > 0.0);
    CHECK(sol.theta_const < (p.beta - p.gamma - p.kappa) / p.eta); // cheaper than R0=1
    CHECK(sol.iu_bar + sol.id_bar == doctest::Approx(i_max).epsilon(1e-9));
    // zero-derivative tangency condition
    CHECK(p.beta * sol.s_bar * sol.iu_bar == doctest::Approx(p.gamma * i_max).epsilon(1e-9));

    ControlLaw law = [&sol](double, const FractionState&) { return sol.theta_const; };
    Trajectory traj = integrate(seed_state(0.999, 0.001), p, law, BetaSignal::constant(p.beta),
                                1200.0, 0.01);
    double peak = 0.0;
    double t_peak = 0.0;
    for (const auto& pt : traj) {
        const double i = pt.state.i_u + pt.state.i_d;
        if (i > peak) {
            peak = i;
            t_peak = pt.t;
        }
    }
    CHECK(peak >= i_max - 1e-4);
    CHECK(peak <= i_max + 1e-6);
    CHECK(t_peak == doctest::Approx(sol.t_bar).epsilon(1e-3));

    CHECK_THROWS_AS(solve_constant_rate(0.8, 0.2, 0.1, p), InfeasiblePolicy);
}

TEST_CASE("solve_switching: Fig-3 structure, tangency residuals, feasibility") {
    Params p = fig3_params();
    const double i_max = 0.1;
    const double theta_max = 2.0 / 7.0;
    SwitchingPolicy pol = solve_switching(0.999, 0.001, i_max, theta_max, p);

    REQUIRE_FALSE(pol.zero_policy);
    CHECK(pol.t_a > 0.0);
    CHECK(pol.t_a < pol.t_b);
    CHECK(pol.t_b <= pol.t_c);
    CHECK(pol.t_c <= pol.t_d);
    CHECK(pol.t_d < pol.t_e);
    CHECK(pol.tau3 >= 0.0);
    CHECK(pol.tau3 <= pol.tau3_bar);

    // tangency residuals (value and derivative) at B and at E
    CHECK(std::abs(p.beta * pol.s_b * pol.iu_b - p.gamma * i_max) < 1e-8);
    CHECK(std::abs(p.beta * pol.s_e * pol.iu_e - p.gamma * i_max) < 1e-8);

    // boundary states sit on the connecting orbits (A1, A2 analogues)
    CHECK(std::abs(harko_f(0.0, 0.999, 0.001, pol.s_a, pol.iu_a, p)) < 1e-8);
    CHECK(std::abs(harko_f(p.eta * theta_max, pol.s_a, pol.iu_a, pol.s_b, pol.iu_b, p)) < 1e-8);
    CHECK(std::abs(harko_f(p.eta * theta_max, pol.s_c, pol.iu_c, pol.s_d, pol.iu_d, p)) < 1e-8);
    CHECK(std::abs(harko_f(0.0, pol.s_d, pol.iu_d, pol.s_e, pol.iu_e, p)) < 1e-8);

    // the plateau hand-off never demands more than theta_max
    CHECK(plateau_rate({pol.s_b, pol.iu_b, 0, 0, 0}, p) / p.eta <= theta_max + 1e-9);

    Trajectory traj = replay_switching(pol, 0.999, 0.001, p, pol.t_e + 60.0, 0.01);
    double valueB = -1.0, valueE = -1.0;
    for (const auto& pt : traj) {
        CHECK(pt.state.i_u + pt.state.i_d <= i_max + 1e-6);
        if (std::abs(pt.t - pol.t_b) < 5e-3)
            valueB = pt.state.i_u + pt.state.i_d;
        if (std::abs(pt.t - pol.t_e) < 5e-3)
            valueE = pt.state.i_u + pt.state.i_d;
    }
    CHECK(std::abs(valueB - i_max) < 1e-6);
    CHECK(std::abs(valueE - i_max) < 1e-6);
}

TEST_CASE("solve_switching: zero policy when the free epidemic stays below i_max") {
    Params p = fig3_params();
    SwitchingPolicy pol = solve_switching(0.999, 0.001, 0.9, 2.0 / 7.0, p);
    CHECK(pol.zero_policy);
    CHECK(policy_cost(pol) == 0.0);
}

TEST_CASE("solve_switching: infeasible when even permanent theta_max fails") {
    Params p = fig3_params();
    // tiny max rate cannot hold the epidemic below 2%
    CHECK_THROWS_AS(solve_switching(0.999, 0.001, 0.02, 0.01, p), InfeasiblePolicy);
}

TEST_CASE("switching cost curve: minimum at the solved plateau duration") {
    Params p = fig3_params();
    SwitchingPolicy pol = solve_switching(0.999, 0.001, 0.1, 2.0 / 7.0, p);
    const double at_opt = policy_cost(pol);
    CHECK(pol.tau3 >= pol.tau3_min);
    CHECK(switching_cost_at(pol, pol.tau3, p) == doctest::Approx(at_opt).epsilon(1e-6));
    CHECK(at_opt <= switching_cost_at(pol, pol.tau3_bar, p) + 1e-6);
    CHECK(at_opt <= switching_cost_at(pol, pol.tau3_min + 1e-6, p) + 1e-6);
    // one sample on each side of the optimum
    CHECK(at_opt <= switching_cost_at(pol, 0.5 * (pol.tau3_min + pol.tau3), p) + 1e-6);
    CHECK(at_opt <=
          switching_cost_at(pol, 0.5 * (pol.tau3 + pol.tau3_bar), p) + 1e-6);
}

TEST_CASE("policy_cost: closed form matches trapezoid on the realized schedule") {
    Params p = fig3_params();
    SwitchingPolicy pol = solve_switching(0.999, 0.001, 0.1, 2.0 / 7.0, p);
    Trajectory traj = replay_switching(pol, 0.999, 0.001, p, pol.t_e + 10.0, 0.005);
    CHECK(policy_cost(pol) == doctest::Approx(schedule_cost(traj)).epsilon(1e-4));

    ConstantRateSolution c;
    c.theta_const = 0.125;
    CHECK(policy_cost(c, 100.0) == doctest::Approx(12.5));
}
