#include "doctest.h"

#include <cmath>

#include "epitest/ssa.hpp"

using namespace epitest;

namespace {

const EpochController kNoTestingCtl = [](double, const CountState&) { return 0.0; };

} // namespace

TEST_CASE("transition_rates: direct values, absorbing state, extensivity") {
    Params p;
    p.theta_b = 0.0;

    CountState x{90, 10, 0, 0, 100};
    TransitionRates r = transition_rates(x, 0.0, p);
    CHECK(r.rate[0] == doctest::Approx(2.7).epsilon(1e-12));
    CHECK(r.rate[1] == doctest::Approx(10.0 / 14.0).epsilon(1e-12));
    CHECK(r.rate[2] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(r.rate[3] == 0.0);
    CHECK(r.rate[4] == 0.0);

    CountState absorbing{100, 0, 0, 0, 100};
    TransitionRates rz = transition_rates(absorbing, 0.5, p);
    CHECK(rz.total() == 0.0);

    CountState x2{180, 20, 0, 0, 200};
    TransitionRates r2 = transition_rates(x2, 0.0, p);
    for (int k = 0; k < 5; ++k)
        CHECK(r2.rate[k] == doctest::Approx(2.0 * r.rate[k]).epsilon(1e-12));
}

TEST_CASE("ssa draws: exponential waiting times and proportional selection") {
    Params p;
    p.theta_b = 1.0 / 14.0;
    CountState x{500, 300, 120, 50, 1000};
    const TransitionRates rates = transition_rates(x, 0.1, p);
    const double total = rates.total();
    REQUIRE(total > 0.0);

    Rng rng(123456789u);
    const int n = 100000;
    int counts[5] = {0, 0, 0, 0, 0};
    const int n_bins = 20;
    int bins[20] = {0};
    for (int i = 0; i < n; ++i) {
        SsaDraw d = ssa_next_event(rates, rng);
        ++counts[static_cast<int>(d.event)];
        const double u = 1.0 - std::exp(-total * d.wait); // uniform under H0
        int b = static_cast<int>(u * n_bins);
        if (b == n_bins)
            b = n_bins - 1;
        ++bins[b];
    }

    // event selection: chi-square against the rate proportions, dof 4
    double chi2_sel = 0.0;
    for (int k = 0; k < 5; ++k) {
        const double expected = n * rates.rate[k] / total;
        chi2_sel += (counts[k] - expected) * (counts[k] - expected) / expected;
    }
    CHECK(chi2_sel < 18.467); // p > 0.001

    // waiting times: chi-square on 20 equiprobable exponential bins, dof 19
    double chi2_wait = 0.0;
    const double expected = double(n) / n_bins;
    for (int b = 0; b < n_bins; ++b)
        chi2_wait += (bins[b] - expected) * (bins[b] - expected) / expected;
    CHECK(chi2_wait < 43.820); // p > 0.001
}

TEST_CASE("gillespie_run: conservation, nonnegativity, determinism") {
    Params p;
    p.theta_b = 1.0 / 14.0;
    CountState x0{1950, 50, 0, 0, 2000};
    BetaSignal beta = BetaSignal::constant(p.beta);

    GillespieRun a = gillespie_run(x0, [](double, const CountState&) { return 0.1; }, p, beta,
                                   200.0, 42u);
    GillespieRun b = gillespie_run(x0, [](double, const CountState&) { return 0.1; }, p, beta,
                                   200.0, 42u);

    REQUIRE(a.daily.size() == b.daily.size());
    for (std::size_t k = 0; k < a.daily.size(); ++k) {
        const CountState& s = a.daily[k].state;
        CHECK(s.S >= 0);
        CHECK(s.I_u >= 0);
        CHECK(s.I_d >= 0);
        CHECK(s.R_u >= 0);
        CHECK(s.R_d() >= 0);
        CHECK(s.N == 2000);
        // same seed, same path
        CHECK(s.S == b.daily[k].state.S);
        CHECK(s.I_u == b.daily[k].state.I_u);
        CHECK(s.R_u == b.daily[k].state.R_u);
    }
}

TEST_CASE("gillespie_run: immediate absorption fast-forwards serology detections") {
    Params p;
    p.theta_b = 1.0 / 14.0;
    CountState x0{500, 0, 0, 400, 1000};
    GillespieRun run = gillespie_run(x0, kNoTestingCtl, p, BetaSignal::constant(p.beta),
                                     300.0, 7u);
    CHECK(run.absorbed);
    CHECK(run.t_absorb == 0.0);
    std::int64_t prev = 400;
    for (const auto& d : run.daily) {
        CHECK(d.state.I_u == 0);
        CHECK(d.state.I_d == 0);
        CHECK(d.state.S == 500);
        CHECK(d.state.R_u <= prev);
        prev = d.state.R_u;
    }
    // detection rate 0.057/day over 300 days leaves essentially nobody
    CHECK(run.daily.back().state.R_u <= 2);
}

TEST_CASE("ensemble mean tracks the deterministic model (N = 50000)") {
    Params p;
    p.theta_b = 0.0;
    const std::int64_t N = 50000;
    CountState x0{N - 50, 50, 0, 0, N};
    const double horizon = 150.0;

    EnsembleSummary sum = ensemble_run(
        16, x0, [](int) { return kNoTestingCtl; }, p, BetaSignal::constant(p.beta), horizon,
        20240817u, 4);

    FractionState f0;
    f0.s = double(N - 50) / N;
    f0.i_u = 50.0 / N;
    Trajectory det = integrate(f0, p, [](double, const FractionState&) { return 0.0; },
                               BetaSignal::constant(p.beta), horizon, 0.01);

    auto det_at = [&](double t) {
        const std::size_t idx = static_cast<std::size_t>(t / 0.01 + 0.5);
        return det[std::min(idx, det.size() - 1)].state;
    };

    for (std::size_t k = 0; k < sum.t.size(); ++k) {
        const FractionState d = det_at(sum.t[k]);
        const double n = double(sum.n_reps);
        auto close = [&](const EnsembleBand& band, double target) {
            const double se = std::sqrt(band.var[k] / n);
            const double tol = std::max(3.0 * se, 5.0); // discreteness floor, in counts
            CHECK(std::abs(band.mean[k] - target * N) <= tol);
        };
        close(sum.S, d.s);
        close(sum.I_u, d.i_u);
        close(sum.I_d, d.i_d);
    }
}

TEST_CASE("mean-field deviation shrinks with population size") {
    Params p;
    p.theta_b = 0.0;
    const double horizon = 150.0;

    auto max_fraction_deviation = [&](std::int64_t N) {
        CountState x0{N - N / 1000, N / 1000, 0, 0, N};
        EnsembleSummary sum = ensemble_run(
            32, x0, [](int) { return kNoTestingCtl; }, p, BetaSignal::constant(p.beta), horizon,
            555u, 4);
        FractionState f0;
        f0.s = double(x0.S) / N;
        f0.i_u = double(x0.I_u) / N;
        Trajectory det = integrate(f0, p, [](double, const FractionState&) { return 0.0; },
                                   BetaSignal::constant(p.beta), horizon, 0.01);
        double worst = 0.0;
        for (std::size_t k = 0; k < sum.t.size(); ++k) {
            const std::size_t idx = static_cast<std::size_t>(sum.t[k] / 0.01 + 0.5);
            const FractionState& d = det[std::min(idx, det.size() - 1)].state;
            worst = std::max(worst, std::abs(sum.I_u.mean[k] / double(N) - d.i_u));
        }
        return worst;
    };

    const double dev_small = max_fraction_deviation(5000);
    const double dev_large = max_fraction_deviation(50000);
    CHECK(dev_large < dev_small);
}

TEST_CASE("ensemble_run: reproducible and independent of job count") {
    Params p;
    p.theta_b = 1.0 / 14.0;
    CountState x0{4950, 50, 0, 0, 5000};
    auto factory = [](int) {
        return [](double, const CountState&) { return 0.05; };
    };
    EnsembleSummary a =
        ensemble_run(8, x0, factory, p, BetaSignal::constant(p.beta), 100.0, 99u, 1);
    EnsembleSummary b =
        ensemble_run(8, x0, factory, p, BetaSignal::constant(p.beta), 100.0, 99u, 4);
    REQUIRE(a.t.size() == b.t.size());
    for (std::size_t k = 0; k < a.t.size(); ++k) {
        CHECK(a.I_u.mean[k] == b.I_u.mean[k]);
        CHECK(a.I_u.var[k] == b.I_u.var[k]);
        CHECK(a.theta.mean[k] == b.theta.mean[k]);
        CHECK(a.R_d.hi[k] == b.R_d.hi[k]);
    }
}

TEST_CASE("diffusion_matrix: printed entries, zero state, stoichiometric oracle") {
    Params p;
    p.theta_b = 0.0;
    FractionState x;
    x.s = 0.9;
    x.i_u = 0.1;
    DiffusionMatrix B = diffusion_matrix(x, 0.0, p);
    CHECK(B(0, 0) == doctest::Approx(0.027).epsilon(1e-12));
    CHECK(B(0, 1) == doctest::Approx(-0.027).epsilon(1e-12));

    FractionState clean;
    clean.s = 1.0;
    CHECK(diffusion_matrix(clean, 0.3, p).norm() == 0.0);

    // independent reconstruction: B = sum over events of rate * v v^T
    Params q;
    q.theta_b = 1.0 / 14.0;
    FractionState y;
    y.s = 0.7;
    y.i_u = 0.12;
    y.i_d = 0.05;
    y.r_u = 0.08;
    const double theta = 0.2;
    const double w[5] = {q.beta * y.s * y.i_u, q.gamma * y.i_u,
                         (q.eta * theta + q.kappa + q.theta_b * q.eta_bi) * y.i_u,
                         q.gamma * y.i_d, q.theta_b * q.eta_br * y.r_u};
    const int v[5][4] = {{-1, 1, 0, 0}, {0, -1, 0, 1}, {0, -1, 1, 0}, {0, 0, -1, 0},
                         {0, 0, 0, -1}};
    DiffusionMatrix oracle = DiffusionMatrix::Zero();
    for (int e = 0; e < 5; ++e)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                oracle(i, j) += w[e] * v[e][i] * v[e][j];

    DiffusionMatrix B2 = diffusion_matrix(y, theta, q);
    CHECK((B2 - oracle).norm() < 1e-14);
    CHECK((B2 - B2.transpose()).norm() == 0.0);
    for (int i = 0; i < 4; ++i)
        CHECK(B2(i, i) >= 0.0);
}

TEST_CASE("diffusion matrix predicts short-window increment covariance") {
    Params p;
    p.theta_b = 1.0 / 14.0;
    const std::int64_t N = 10000;
    CountState x0{9000, 800, 100, 100, N};
    FractionState f;
    f.s = 0.9;
    f.i_u = 0.08;
    f.i_d = 0.01;
    f.r_u = 0.01;
    const double theta = 0.1, dt = 0.05;
    const DiffusionMatrix B = diffusion_matrix(f, theta, p);

    const int reps = 4000;
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    Eigen::Matrix4d second = Eigen::Matrix4d::Zero();
    for (int i = 0; i < reps; ++i) {
        GillespieSim sim(x0, p, derive_stream(7u, static_cast<std::uint64_t>(i)));
        sim.advance(dt, theta, p.beta);
        Eigen::Vector4d d;
        d << double(sim.state().S - x0.S), double(sim.state().I_u - x0.I_u),
            double(sim.state().I_d - x0.I_d), double(sim.state().R_u - x0.R_u);
        d /= double(N);
        mean += d;
        second += d * d.transpose();
    }
    mean /= reps;
    Eigen::Matrix4d cov = second / reps - mean * mean.transpose();

    const Eigen::Matrix4d target = B * dt / double(N);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (std::abs(target(i, j)) > 1e-8)
                CHECK(std::abs(cov(i, j) - target(i, j)) < 0.3 * std::abs(target(i, j)));
}
