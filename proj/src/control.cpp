#include "epitest/control.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <thread>

namespace epitest {

RecedingRate receding_rate(double s_hat, double iu_hat, const ControllerConfig& cfg,
                           const Params& params, double beta_now) {
    cfg.validate();
    RecedingRate out;
    out.solvable = false;
    if (!(s_hat > 0.0) || beta_now <= 0.0)
        return out;

    const double H = cfg.horizon_days;
    const double g_imax = params.gamma * cfg.i_max;

    // trapezoidal susceptible update with the terminal zero-slope condition
    // beta s_H iu_H = gamma i_max substituted into the integrand
    const double s_h = s_hat - 0.5 * H * (g_imax + beta_now * s_hat * std::max(0.0, iu_hat));
    if (s_h <= 0.0 || s_h >= s_hat)
        return out;
    const double iu_h = g_imax / (beta_now * s_h);
    if (iu_h >= 1.0)
        return out;

    const double log_ratio = std::log(s_h / s_hat); // negative
    out.theta_eff = -beta_now * (s_hat + iu_hat - s_h) / log_ratio +
                    g_imax / (s_h * log_ratio) - (params.gamma + params.kappa);
    out.s_horizon = s_h;
    out.iu_horizon = iu_h;
    out.solvable = true;
    return out;
}

double control_law(double t_k, const EstimatorState& est, const ControllerConfig& cfg,
                   const Params& params, double beta_now) {
    if (t_k < cfg.t_activate)
        return 0.0;
    const RecedingRate rr = receding_rate(est.x_hat[0], est.x_hat[1], cfg, params, beta_now);
    if (!rr.solvable)
        return 0.0;
    return std::clamp(rr.theta_eff / params.eta, 0.0, cfg.theta_max);
}

ClosedLoopResult closed_loop(const CountState& x0, const ClosedLoopConfig& cfg,
                             const Params& params, std::uint64_t seed) {
    cfg.controller.validate();
    params.validate();
    x0.validate();

    const double N = double(x0.N);
    const std::int64_t I_max_counts = std::llround(cfg.controller.i_max * N);
    const double epoch = cfg.controller.epoch;

    GillespieSim sim(x0, params, seed);
    EstimatorState est = initial_estimate(x0.N, I_max_counts);

    ClosedLoopResult result;
    std::deque<DailyEstimate> history;
    double beta_hat = cfg.beta(0.0);
    if (cfg.beta_mode == BetaMode::SinusoidalWithEstimation)
        beta_hat = params.beta; // controller starts from the nominal rate

    double cum_tests = 0.0, cum_cost = 0.0;
    double t = 0.0;
    while (true) {
        const CountState truth = sim.state();
        const Observation obs{t, double(truth.I_d) / N, double(truth.R_d()) / N};
        const Eigen::Vector2d innovation =
            Eigen::Vector2d(obs.i_d_obs, obs.r_d_obs) -
            (observation_matrix() * est.x_hat + observation_offset());
        est.t = t;
        est = update(est, obs);

        if (cfg.beta_mode == BetaMode::SinusoidalWithEstimation && history.size() >= 8) {
            const std::vector<DailyEstimate> window(history.begin(), history.end());
            beta_hat = estimate_beta(window, params, beta_hat).beta_hat;
        } else if (cfg.beta_mode == BetaMode::Constant) {
            beta_hat = cfg.beta(t);
        }

        const double theta = control_law(t, est, cfg.controller, params, beta_hat);

        history.push_back({est, theta});
        while (history.size() > 16)
            history.pop_front();

        EpochRecord rec;
        rec.t = t;
        rec.truth = truth;
        rec.est = est;
        rec.innovation = innovation;
        rec.theta_applied = theta;
        rec.beta_hat = beta_hat;
        rec.cum_tests = cum_tests;
        rec.cum_cost = cum_cost;
        result.records.push_back(std::move(rec));

        if (t >= cfg.horizon - 1e-12)
            break;

        const double t_next = std::min(t + epoch, cfg.horizon);
        sim.advance(t_next, theta, cfg.beta(t));
        est = predict(est, theta, t_next - t, params, N, beta_hat, cfg.predict_step);

        // cost integrals stop at eradication; the book-keeping columns keep
        // accumulating full epochs
        const double span = t_next - t;
        const double counted = std::clamp(sim.absorption_time() - t, 0.0, span);
        result.adaptive_cost += theta * counted;
        result.serology_cost += params.c_ser * params.theta_b * counted;
        cum_tests += (theta + params.theta_b) * span;
        cum_cost += (theta + params.c_ser * params.theta_b) * span;
        t = t_next;
    }

    result.absorbed = sim.absorbed();
    result.t_absorb = result.absorbed ? sim.absorption_time() : cfg.horizon;
    return result;
}

ClosedLoopEnsemble closed_loop_ensemble(int n_reps, const CountState& x0,
                                        const ClosedLoopConfig& cfg, const Params& params,
                                        std::uint64_t master_seed, int jobs) {
    if (n_reps < 2)
        throw std::invalid_argument("closed_loop_ensemble: need at least 2 replicates");

    ClosedLoopEnsemble out;
    out.runs.resize(static_cast<std::size_t>(n_reps));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_reps)
                return;
            out.runs[static_cast<std::size_t>(i)] = closed_loop(
                x0, cfg, params, derive_stream(master_seed, static_cast<std::uint64_t>(i)));
        }
    };
    const int n_threads = std::max(1, std::min(jobs, n_reps));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }

    std::vector<std::vector<DailyRecord>> dailies;
    dailies.reserve(out.runs.size());
    for (const auto& run : out.runs) {
        std::vector<DailyRecord> d;
        d.reserve(run.records.size());
        for (const auto& rec : run.records)
            d.push_back({rec.t, rec.truth, rec.theta_applied});
        dailies.push_back(std::move(d));
    }
    out.summary = summarize_replicates(dailies, master_seed);
    return out;
}

} // namespace epitest
