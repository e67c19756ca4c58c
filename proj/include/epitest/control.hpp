#pragma once

#include <cstdint>
#include <vector>

#include "epitest/ekf.hpp"
#include "epitest/params.hpp"
#include "epitest/ssa.hpp"

namespace epitest {

struct ControllerConfig {
    double horizon_days = 3.0; ///< steering horizon H
    double i_max = 0.0;        ///< constraint on i_u + i_d (fraction)
    double theta_max = 0.0;    ///< cap on the applied molecular rate
    double t_activate = 0.0;   ///< no adaptive testing before this time
    double epoch = 1.0;        ///< observation/actuation interval

    void validate() const {
        if (horizon_days <= 0.0 || epoch <= 0.0 || i_max <= 0.0 || theta_max <= 0.0)
            throw std::invalid_argument("ControllerConfig: positive H, epoch, i_max, theta_max "
                                        "required");
    }
};

/// Constant effective rate that steers the deterministic model from
/// (s, i_u) to the constraint i_u + i_d = i_max with zero slope in H days.
/// The horizon state follows from the zero-slope condition and the
/// trapezoidal susceptible update; the rate then solves the connecting-orbit
/// relation in closed form.
struct RecedingRate {
    double theta_eff = 0.0; ///< effective rate (negative values mean "too early")
    double s_horizon = 0.0;
    double iu_horizon = 0.0;
    bool solvable = true; ///< false: state below the reachable set, rate forced to 0
};
RecedingRate receding_rate(double s_hat, double iu_hat, const ControllerConfig& cfg,
                           const Params& params, double beta_now);

/// Applied molecular rate: zero before the activation time, otherwise the
/// receding-horizon rate converted to a physical rate and clamped to
/// [0, theta_max].
double control_law(double t_k, const EstimatorState& est, const ControllerConfig& cfg,
                   const Params& params, double beta_now);

enum class BetaMode {
    Constant,                 ///< transmission rate known to the controller
    SinusoidalWithEstimation, ///< seasonal truth, weekly regression estimate
};

struct ClosedLoopConfig {
    ControllerConfig controller;
    BetaSignal beta;     ///< true transmission signal driving the chain
    BetaMode beta_mode = BetaMode::Constant;
    double horizon = 1000.0;
    double predict_step = 0.01; ///< RK4 grid inside the filter prediction
};

struct EpochRecord {
    double t = 0.0;
    CountState truth;
    EstimatorState est; ///< post-update estimate at t
    Eigen::Vector2d innovation = Eigen::Vector2d::Zero();
    double theta_applied = 0.0; ///< held over [t, t + epoch)
    double beta_hat = 0.0;      ///< transmission rate used by filter and controller
    double cum_tests = 0.0;     ///< (theta + theta_b) integrated over full epochs
    double cum_cost = 0.0;      ///< (theta + c_ser theta_b) integrated over full epochs
};

struct ClosedLoopResult {
    std::vector<EpochRecord> records;
    bool absorbed = false;
    double t_absorb = 0.0; ///< horizon if never absorbed
    /// cost integrals stop at eradication (or horizon if it never happens)
    double adaptive_cost = 0.0;
    double serology_cost = 0.0;
    double total_cost() const { return adaptive_cost + serology_cost; }
};

/// Full loop: daily exact counts of the detected compartments feed the
/// constrained filter, the receding-horizon law picks the rate, the chain
/// advances one epoch under it. Deterministic given the seed.
ClosedLoopResult closed_loop(const CountState& x0, const ClosedLoopConfig& cfg,
                             const Params& params, std::uint64_t seed);

struct ClosedLoopEnsemble {
    EnsembleSummary summary;            ///< bands of counts and applied rate
    std::vector<ClosedLoopResult> runs; ///< full per-replicate records
};

/// Independent closed loops with streams derived from the master seed;
/// replicate-level parallelism, aggregation fixed by replicate index.
ClosedLoopEnsemble closed_loop_ensemble(int n_reps, const CountState& x0,
                                        const ClosedLoopConfig& cfg, const Params& params,
                                        std::uint64_t master_seed, int jobs = 1);

} // namespace epitest
