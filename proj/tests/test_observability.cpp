#include "doctest.h"

#include <cmath>
#include <random>

#include "epitest/observability.hpp"

using namespace epitest;

namespace {

SampledOutput sample_run(const Params& p, double theta, const BetaSignal& beta, double horizon,
                         double dt, double s0 = 0.99, double i0 = 0.01) {
    FractionState x0;
    x0.s = s0;
    x0.i_u = i0;
    x0.r_d = 1.0 - s0 - i0;
    Trajectory traj = integrate(
        x0, p, [theta](double, const FractionState&) { return theta; }, beta, horizon, dt);
    SampledOutput out;
    out.t0 = 0.0;
    out.dt = dt;
    for (const auto& pt : traj) {
        out.i_d.push_back(pt.state.i_d);
        out.r_d.push_back(pt.state.r_d);
        out.theta.push_back(pt.theta);
    }
    return out;
}

} // namespace

TEST_CASE("counterexample_pair: equal starts give identical twins") {
    Params p;
    p.eta = 0.9;
    TwinRun run = counterexample_pair(0.9, 0.9, 0.05, [](double) { return 0.1; }, p,
                                      BetaSignal::constant(0.3), 80.0);
    CHECK(run.sup_id_gap < 1e-13);
    CHECK(run.sup_iu_gap < 1e-13);
    CHECK(run.sup_s_gap < 1e-13);
}

TEST_CASE("counterexample_pair: documented twin scenario hides the initial condition") {
    Params p; // Table-1 gamma, eta
    TwinRun run = counterexample_pair(0.9, 0.8, 0.05, [](double) { return 0.1; }, p,
                                      BetaSignal::constant(0.3), 120.0, 0.01);

    CHECK(run.sup_id_gap < 1e-6);  // outputs indistinguishable
    CHECK(run.sup_iu_gap < 1e-8);  // the proof identity i_u == i_u_bar
    CHECK(run.sup_s_gap > 0.05);   // yet the states differ throughout

    // realized shadow rate actually differs from the primary rate
    double max_beta_gap = 0.0;
    for (double b : run.beta_shadow)
        max_beta_gap = std::max(max_beta_gap, std::abs(b - 0.3));
    CHECK(max_beta_gap > 0.01);
}

TEST_CASE("counterexample_pair: output gap vanishes at integrator order") {
    Params p;
    auto gap = [&](double h) {
        return counterexample_pair(0.9, 0.8, 0.05, [](double) { return 0.1; }, p,
                                   BetaSignal::constant(0.3), 60.0, h)
            .sup_id_gap;
    };
    const double g1 = gap(0.08);
    const double g2 = gap(0.04);
    const double g3 = gap(0.02);
    CHECK(g3 > 1e-16); // genuinely nonzero: two distinct discretizations
    CHECK(g1 / g2 > 8.0);
    CHECK(g1 / g2 < 40.0);
    CHECK(g2 / g3 > 8.0);
    CHECK(g2 / g3 < 40.0);
}

TEST_CASE("serology reconstruction: noiseless fine grid, states within 1e-3 relative") {
    Params p;
    p.kappa = 0.0; // detection only via tests in the serology model
    p.theta_b = 1.0 / 14.0;
    const double theta = 0.1, dt = 0.01, horizon = 120.0;
    BetaSignal beta = BetaSignal::constant(p.beta);
    SampledOutput out = sample_run(p, theta, beta, horizon, dt);

    FractionState x0;
    x0.s = 0.99;
    x0.i_u = 0.01;
    Trajectory truth = integrate(
        x0, p, [theta](double, const FractionState&) { return theta; }, beta, horizon, dt);

    SerologyReconstruction rec = reconstruct_from_serology(out, p);
    REQUIRE(rec.t.size() > 100);
    double worst_iu = 0.0, worst_ru = 0.0, worst_beta = 0.0;
    for (std::size_t k = 0; k < rec.t.size(); ++k) {
        const std::size_t idx = static_cast<std::size_t>(rec.t[k] / dt + 0.5);
        const FractionState& tru = truth[idx].state;
        if (tru.i_u > 1e-4) {
            worst_iu = std::max(worst_iu, std::abs(rec.i_u[k] - tru.i_u) / tru.i_u);
            worst_beta = std::max(worst_beta, std::abs(rec.beta[k] - p.beta) / p.beta);
        }
        if (tru.r_u > 1e-4)
            worst_ru = std::max(worst_ru, std::abs(rec.r_u[k] - tru.r_u) / tru.r_u);
    }
    CHECK(worst_iu < 1e-3);
    CHECK(worst_ru < 1e-3);
    CHECK(worst_beta < 0.01);
}

TEST_CASE("serology reconstruction: flat zero record reconstructs the disease-free state") {
    Params p;
    p.theta_b = 1.0 / 14.0;
    SampledOutput out;
    out.dt = 0.01;
    out.i_d.assign(50, 0.0);
    out.r_d.assign(50, 0.0);
    out.theta.assign(50, 0.1);
    SerologyReconstruction rec = reconstruct_from_serology(out, p);
    for (std::size_t k = 0; k < rec.t.size(); ++k) {
        CHECK(rec.i_u[k] == 0.0);
        CHECK(rec.r_u[k] == 0.0);
        CHECK(rec.s[k] == doctest::Approx(1.0));
    }
}

TEST_CASE("serology reconstruction: error falls at second order in the sampling step") {
    Params p;
    p.kappa = 0.0;
    p.theta_b = 1.0 / 14.0;
    BetaSignal beta = BetaSignal::constant(p.beta);

    auto worst_err = [&](double dt) {
        SampledOutput out = sample_run(p, 0.1, beta, 100.0, dt);
        FractionState x0;
        x0.s = 0.99;
        x0.i_u = 0.01;
        Trajectory truth = integrate(
            x0, p, [](double, const FractionState&) { return 0.1; }, beta, 100.0, dt);
        SerologyReconstruction rec = reconstruct_from_serology(out, p);
        double worst = 0.0;
        for (std::size_t k = 0; k < rec.t.size(); ++k) {
            const std::size_t idx = static_cast<std::size_t>(rec.t[k] / dt + 0.5);
            if (truth[idx].state.i_u > 1e-4)
                worst = std::max(worst, std::abs(rec.i_u[k] - truth[idx].state.i_u));
        }
        return worst;
    };
    const double e1 = worst_err(0.04);
    const double e2 = worst_err(0.02);
    const double e3 = worst_err(0.01);
    CHECK(e1 / e2 > 3.0);
    CHECK(e1 / e2 < 5.5);
    CHECK(e2 / e3 > 3.0);
    CHECK(e2 / e3 < 5.5);
}

TEST_CASE("serology reconstruction: tracks a seasonal transmission rate") {
    Params p;
    p.kappa = 0.0;
    p.theta_b = 1.0 / 14.0;
    BetaSignal beta = BetaSignal::sinusoidal(0.3, 0.1, 365.0);
    const double dt = 0.01;
    SampledOutput out = sample_run(p, 0.1, beta, 150.0, dt);

    FractionState x0;
    x0.s = 0.99;
    x0.i_u = 0.01;
    Trajectory truth = integrate(
        x0, p, [](double, const FractionState&) { return 0.1; }, beta, 150.0, dt);

    SerologyReconstruction rec = reconstruct_from_serology(out, p);
    for (std::size_t k = 0; k < rec.t.size(); ++k) {
        const std::size_t idx = static_cast<std::size_t>(rec.t[k] / dt + 0.5);
        if (truth[idx].state.i_u > 1e-4)
            CHECK(std::abs(rec.beta[k] - beta(rec.t[k])) / beta(rec.t[k]) < 0.01);
    }
}

TEST_CASE("serology reconstruction: vanishing detection gates are rejected") {
    Params p;
    p.theta_b = 0.0; // no serology at all
    SampledOutput out;
    out.dt = 0.01;
    out.i_d.assign(50, 0.01);
    out.r_d.assign(50, 0.01);
    out.theta.assign(50, 0.1);
    CHECK_THROWS_AS(reconstruct_from_serology(out, p), std::domain_error);
}

TEST_CASE("molecular reconstruction: recovers a constant rate, rejects idle windows") {
    Params p;
    p.kappa = 0.0;
    p.theta_b = 0.0;
    BetaSignal beta = BetaSignal::constant(0.3);
    SampledOutput out = sample_run(p, 0.1, beta, 100.0, 0.01);
    out.r_d.clear();

    MolecularReconstruction rec = reconstruct_from_molecular(out, p);
    CHECK(std::abs(rec.beta_hat - 0.3) / 0.3 < 0.01);

    SampledOutput idle = out;
    for (std::size_t k = idle.theta.size() / 2; k < idle.theta.size() / 2 + 50; ++k)
        idle.theta[k] = 0.0;
    CHECK_THROWS_AS(reconstruct_from_molecular(idle, p), std::domain_error);
}

TEST_CASE("molecular reconstruction: twins are indistinguishable from the output") {
    Params p;
    TwinRun twins = counterexample_pair(0.9, 0.8, 0.05, [](double) { return 0.1; }, p,
                                        BetaSignal::constant(0.3), 120.0, 0.01);

    Params q = p;
    q.kappa = 0.0;
    q.theta_b = 0.0;
    auto record = [&](const Trajectory& traj) {
        SampledOutput out;
        out.dt = 0.01;
        for (const auto& pt : traj) {
            out.i_d.push_back(pt.state.i_d);
            out.theta.push_back(pt.theta);
        }
        return out;
    };
    MolecularReconstruction a = reconstruct_from_molecular(record(twins.primary), q);
    MolecularReconstruction b = reconstruct_from_molecular(record(twins.shadow), q);

    // the reconstruction sees one answer for both systems
    CHECK(std::abs(a.beta_hat - b.beta_hat) < 1e-4);
    CHECK(std::abs(a.beta_hat - 0.3) < 0.01);
    // while the shadow's true transmission trajectory is elsewhere
    double max_gap = 0.0;
    for (double bb : twins.beta_shadow)
        max_gap = std::max(max_gap, std::abs(bb - 0.3));
    CHECK(max_gap > 0.01);
}

TEST_CASE("smoothing option reduces the error on noisy serology records") {
    Params p;
    p.kappa = 0.0;
    p.theta_b = 1.0 / 14.0;
    BetaSignal beta = BetaSignal::constant(p.beta);
    const double dt = 0.01;
    SampledOutput clean = sample_run(p, 0.1, beta, 80.0, dt);

    SampledOutput noisy = clean;
    std::mt19937_64 rng(5u);
    std::normal_distribution<double> jitter(0.0, 1e-6);
    for (std::size_t k = 0; k < noisy.i_d.size(); ++k) {
        noisy.i_d[k] = std::max(0.0, noisy.i_d[k] + jitter(rng));
        noisy.r_d[k] = std::max(0.0, noisy.r_d[k] + jitter(rng));
    }

    SerologyReconstruction raw = reconstruct_from_serology(noisy, p);
    ReconstructionOptions opts;
    opts.smooth = true;
    opts.window = 11;
    SerologyReconstruction smoothed = reconstruct_from_serology(noisy, p, opts);
    SerologyReconstruction truth = reconstruct_from_serology(clean, p);

    double err_raw = 0.0, err_smooth = 0.0;
    for (std::size_t k = 10; k + 10 < truth.t.size(); ++k) {
        err_raw += std::abs(raw.i_u[k] - truth.i_u[k]);
        err_smooth += std::abs(smoothed.i_u[k] - truth.i_u[k]);
    }
    CHECK(err_smooth < 0.5 * err_raw);
}
