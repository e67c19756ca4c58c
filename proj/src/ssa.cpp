#include "epitest/ssa.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace epitest {

TransitionRates transition_rates(const CountState& x, double theta, const Params& params,
                                 double beta_now) {
    x.validate();
    if (theta < 0.0)
        throw std::invalid_argument("transition_rates: negative testing rate");
    TransitionRates r;
    r.rate[0] = beta_now * double(x.S) * double(x.I_u) / double(x.N);
    r.rate[1] = params.gamma * double(x.I_u);
    r.rate[2] = params.detection_rate(theta) * double(x.I_u);
    r.rate[3] = params.gamma * double(x.I_d);
    r.rate[4] = params.theta_b * params.eta_br * double(x.R_u);
    return r;
}

SsaDraw ssa_next_event(const TransitionRates& rates, Rng& rng) {
    const double total = rates.total();
    if (total <= 0.0)
        throw std::invalid_argument("ssa_next_event: total rate must be positive");
    SsaDraw d;
    d.wait = rng.exponential(total);
    const double u = rng.uniform01() * total;
    double acc = 0.0;
    int k = 0;
    for (; k < 4; ++k) {
        acc += rates.rate[k];
        if (u <= acc)
            break;
    }
    d.event = static_cast<EventKind>(k);
    return d;
}

GillespieSim::GillespieSim(const CountState& x0, const Params& params, std::uint64_t seed)
    : x_(x0), params_(params), rng_(seed),
      t_absorb_(std::numeric_limits<double>::infinity()) {
    x_.validate();
    params_.validate();
    if (absorbed())
        enter_absorbed_mode();
}

void GillespieSim::apply(EventKind e) {
    switch (e) {
    case EventKind::Infection:
        --x_.S;
        ++x_.I_u;
        break;
    case EventKind::RecoveryU:
        --x_.I_u;
        ++x_.R_u;
        break;
    case EventKind::DetectionU:
        --x_.I_u;
        ++x_.I_d;
        break;
    case EventKind::RecoveryD:
        --x_.I_d;
        break; // into R_d, which is implicit
    case EventKind::DetectionR:
        --x_.R_u;
        break; // into R_d
    }
    ++events_;
}

void GillespieSim::enter_absorbed_mode() {
    if (thinning_)
        return;
    thinning_ = true;
    t_absorb_ = t_;
    const double rate = params_.theta_b * params_.eta_br;
    pending_detections_.clear();
    if (rate <= 0.0)
        return;
    // exponential thinning: each remaining undetected-recovered individual
    // keeps its own detection time
    pending_detections_.reserve(static_cast<std::size_t>(x_.R_u));
    for (std::int64_t i = 0; i < x_.R_u; ++i)
        pending_detections_.push_back(t_ + rng_.exponential(rate));
    std::sort(pending_detections_.begin(), pending_detections_.end(), std::greater<>());
}

void GillespieSim::advance(double t_end, double theta, double beta_now) {
    if (t_end < t_)
        throw std::invalid_argument("GillespieSim::advance: time must not go backwards");

    if (thinning_) {
        while (!pending_detections_.empty() && pending_detections_.back() <= t_end) {
            pending_detections_.pop_back();
            --x_.R_u;
            ++events_;
        }
        t_ = t_end;
        return;
    }

    while (t_ < t_end) {
        const TransitionRates rates = transition_rates(x_, theta, params_, beta_now);
        const double total = rates.total();
        if (total <= 0.0) {
            t_ = t_end;
            break;
        }
        const SsaDraw d = ssa_next_event(rates, rng_);
        if (t_ + d.wait >= t_end) {
            // no event before the epoch boundary; the clock is memoryless,
            // so rates are simply re-drawn next epoch
            t_ = t_end;
            break;
        }
        t_ += d.wait;
        apply(d.event);
        if (absorbed()) {
            enter_absorbed_mode();
            advance(t_end, theta, beta_now);
            return;
        }
    }
}

GillespieRun gillespie_run(const CountState& x0, const EpochController& controller,
                           const Params& params, const BetaSignal& beta, double horizon,
                           std::uint64_t seed, double epoch) {
    if (epoch <= 0.0)
        throw std::invalid_argument("gillespie_run: epoch must be positive");
    GillespieSim sim(x0, params, seed);
    GillespieRun run;
    run.daily.reserve(static_cast<std::size_t>(horizon / epoch) + 2);

    double t = 0.0;
    while (true) {
        const double theta = controller(t, sim.state());
        run.daily.push_back({t, sim.state(), theta});
        if (t >= horizon - 1e-12)
            break;
        const double t_next = std::min(t + epoch, horizon);
        sim.advance(t_next, theta, beta(t));
        t = t_next;
    }
    run.absorbed = sim.absorbed();
    run.t_absorb = sim.absorption_time();
    run.events = sim.event_count();
    return run;
}

DiffusionMatrix diffusion_matrix(const FractionState& x, double theta, const Params& params,
                                 double beta_now) {
    const double s = x.s, iu = x.i_u, id = x.i_d, ru = x.r_u;
    const double detect = params.detection_rate(theta); // eta theta + kappa + theta_b eta_bi
    const double ser = params.theta_b * params.eta_br;

    DiffusionMatrix B = DiffusionMatrix::Zero();
    B(0, 0) = beta_now * s * iu;
    B(0, 1) = B(1, 0) = -beta_now * s * iu;
    B(1, 1) = (beta_now * s + params.gamma + detect) * iu;
    B(1, 2) = B(2, 1) = -detect * iu;
    B(1, 3) = B(3, 1) = -params.gamma * iu;
    B(2, 2) = detect * iu + params.gamma * id;
    B(3, 3) = params.gamma * iu + ser * ru;
    return B;
}

EnsembleSummary ensemble_run(int n_reps, const CountState& x0, const ControllerFactory& factory,
                             const Params& params, const BetaSignal& beta, double horizon,
                             std::uint64_t master_seed, int jobs, double epoch) {
    if (n_reps < 2)
        throw std::invalid_argument("ensemble_run: need at least 2 replicates");

    std::vector<GillespieRun> runs(static_cast<std::size_t>(n_reps));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_reps)
                return;
            runs[static_cast<std::size_t>(i)] =
                gillespie_run(x0, factory(i), params, beta, horizon,
                              derive_stream(master_seed, static_cast<std::uint64_t>(i)), epoch);
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
    dailies.reserve(runs.size());
    for (auto& r : runs)
        dailies.push_back(std::move(r.daily));
    return summarize_replicates(dailies, master_seed);
}

EnsembleSummary summarize_replicates(const std::vector<std::vector<DailyRecord>>& reps,
                                     std::uint64_t master_seed) {
    const int n_reps = static_cast<int>(reps.size());
    if (n_reps < 2)
        throw std::invalid_argument("summarize_replicates: need at least 2 replicates");

    EnsembleSummary sum;
    sum.n_reps = n_reps;
    sum.master_seed = master_seed;
    const std::size_t n_t = reps.front().size();
    for (const auto& r : reps)
        if (r.size() != n_t)
            throw std::logic_error("summarize_replicates: replicate grids differ");

    sum.t.resize(n_t);
    for (std::size_t k = 0; k < n_t; ++k)
        sum.t[k] = reps.front()[k].t;

    auto summarize = [&](EnsembleBand& band, const std::function<double(const DailyRecord&)>& get) {
        band.mean.resize(n_t);
        band.var.resize(n_t);
        band.lo.resize(n_t);
        band.hi.resize(n_t);
        std::vector<double> vals(static_cast<std::size_t>(n_reps));
        for (std::size_t k = 0; k < n_t; ++k) {
            for (int i = 0; i < n_reps; ++i)
                vals[static_cast<std::size_t>(i)] = get(reps[static_cast<std::size_t>(i)][k]);
            double m = 0.0;
            for (double v : vals)
                m += v;
            m /= n_reps;
            double var = 0.0;
            for (double v : vals)
                var += (v - m) * (v - m);
            var /= (n_reps - 1);
            std::sort(vals.begin(), vals.end());
            auto quantile = [&](double q) {
                const double pos = q * (n_reps - 1);
                const std::size_t lo = static_cast<std::size_t>(pos);
                const double frac = pos - double(lo);
                if (lo + 1 >= vals.size())
                    return vals.back();
                return vals[lo] * (1.0 - frac) + vals[lo + 1] * frac;
            };
            band.mean[k] = m;
            band.var[k] = var;
            band.lo[k] = quantile(0.025);
            band.hi[k] = quantile(0.975);
        }
    };

    summarize(sum.S, [](const DailyRecord& d) { return double(d.state.S); });
    summarize(sum.I_u, [](const DailyRecord& d) { return double(d.state.I_u); });
    summarize(sum.I_d, [](const DailyRecord& d) { return double(d.state.I_d); });
    summarize(sum.R_u, [](const DailyRecord& d) { return double(d.state.R_u); });
    summarize(sum.R_d, [](const DailyRecord& d) { return double(d.state.R_d()); });
    summarize(sum.I, [](const DailyRecord& d) { return double(d.state.I_u + d.state.I_d); });
    summarize(sum.theta, [](const DailyRecord& d) { return d.theta; });
    return sum;
}

} // namespace epitest
