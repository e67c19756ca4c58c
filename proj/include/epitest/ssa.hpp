#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "epitest/beta_signal.hpp"
#include "epitest/model.hpp"
#include "epitest/params.hpp"
#include "epitest/rng.hpp"

namespace epitest {

/// Integer compartment counts of the continuous-time Markov chain.
/// R_d is implied: N - S - I_u - I_d - R_u.
struct CountState {
    std::int64_t S = 0;
    std::int64_t I_u = 0;
    std::int64_t I_d = 0;
    std::int64_t R_u = 0;
    std::int64_t N = 0;

    std::int64_t R_d() const { return N - S - I_u - I_d - R_u; }

    void validate() const {
        if (S < 0 || I_u < 0 || I_d < 0 || R_u < 0 || N <= 0 || R_d() < 0)
            throw std::invalid_argument("CountState: negative compartment or overfull population");
    }
};

/// The five jump events, in the fixed rate order used everywhere.
enum class EventKind { Infection = 0, RecoveryU, DetectionU, RecoveryD, DetectionR };

struct TransitionRates {
    std::array<double, 5> rate{};
    double total() const { return rate[0] + rate[1] + rate[2] + rate[3] + rate[4]; }
};

/// Event rates at a state: beta S I_u / N; gamma I_u;
/// (eta theta + kappa + theta_b eta_bi) I_u; gamma I_d; theta_b eta_br R_u.
TransitionRates transition_rates(const CountState& x, double theta, const Params& params,
                                 double beta_now);
inline TransitionRates transition_rates(const CountState& x, double theta,
                                        const Params& params) {
    return transition_rates(x, theta, params, params.beta);
}

/// One exact SSA draw: exponential waiting time for the total rate and an
/// event picked proportionally to the individual rates. Total rate must be
/// positive.
struct SsaDraw {
    double wait;
    EventKind event;
};
SsaDraw ssa_next_event(const TransitionRates& rates, Rng& rng);

/// Exact sample path of the five-compartment chain. Rates are re-read after
/// every event; the testing rate and transmission rate are held constant
/// within each `advance` span (the caller advances epoch by epoch).
/// After absorption (I_u = I_d = 0) the remaining undetected-recovered
/// detections are fast-forwarded by sampling their exponential detection
/// times once instead of stepping the chain.
class GillespieSim {
public:
    GillespieSim(const CountState& x0, const Params& params, std::uint64_t seed);

    void advance(double t_end, double theta, double beta_now);

    const CountState& state() const { return x_; }
    double time() const { return t_; }
    bool absorbed() const { return x_.I_u == 0 && x_.I_d == 0; }
    /// time of absorption, or +inf while infections remain
    double absorption_time() const { return t_absorb_; }
    std::uint64_t event_count() const { return events_; }

private:
    void apply(EventKind e);
    void enter_absorbed_mode();

    CountState x_;
    Params params_;
    Rng rng_;
    double t_ = 0.0;
    double t_absorb_;
    std::uint64_t events_ = 0;
    bool thinning_ = false;
    std::vector<double> pending_detections_; // sorted descending; back() is next
};

/// Testing rate chosen at each epoch start, held for the epoch.
using EpochController = std::function<double(double t_k, const CountState&)>;

struct DailyRecord {
    double t = 0.0;
    CountState state;
    double theta = 0.0; ///< rate applied over [t, t + epoch)
};

struct GillespieRun {
    std::vector<DailyRecord> daily;
    bool absorbed = false;
    double t_absorb = 0.0;
    std::uint64_t events = 0;
};

GillespieRun gillespie_run(const CountState& x0, const EpochController& controller,
                           const Params& params, const BetaSignal& beta, double horizon,
                           std::uint64_t seed, double epoch = 1.0);

/// System-size-expansion diffusion matrix B over (s, i_u, i_d, r_u),
/// entry for entry as derived from the master equation.
using DiffusionMatrix = Eigen::Matrix4d;
DiffusionMatrix diffusion_matrix(const FractionState& x, double theta, const Params& params,
                                 double beta_now);
inline DiffusionMatrix diffusion_matrix(const FractionState& x, double theta,
                                        const Params& params) {
    return diffusion_matrix(x, theta, params, params.beta);
}

/// Per-day ensemble statistics of one scalar series across replicates.
struct EnsembleBand {
    std::vector<double> mean, var, lo, hi; // lo/hi: empirical 2.5% / 97.5%
};

struct EnsembleSummary {
    std::vector<double> t;
    EnsembleBand S, I_u, I_d, R_u, R_d, I, theta;
    int n_reps = 0;
    std::uint64_t master_seed = 0;
};

/// Band statistics over aligned per-replicate daily grids.
EnsembleSummary summarize_replicates(const std::vector<std::vector<DailyRecord>>& reps,
                                     std::uint64_t master_seed);

/// Fresh controller per replicate (closed-loop controllers carry state).
using ControllerFactory = std::function<EpochController(int replicate)>;

/// Runs n_reps independent realizations with per-replicate streams derived
/// from the master seed and aggregates them on the daily grid. Replicates
/// may run on `jobs` threads; aggregation order is fixed by replicate index.
EnsembleSummary ensemble_run(int n_reps, const CountState& x0, const ControllerFactory& factory,
                             const Params& params, const BetaSignal& beta, double horizon,
                             std::uint64_t master_seed, int jobs = 1, double epoch = 1.0);

} // namespace epitest
