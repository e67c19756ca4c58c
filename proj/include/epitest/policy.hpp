#pragma once

#include "epitest/harko.hpp"
#include "epitest/model.hpp"
#include "epitest/rootfind.hpp"

namespace epitest {

/// Thrown when a policy cannot satisfy its constraint for the given
/// initial condition (e.g. the state already violates it).
struct InfeasiblePolicy : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Threshold-on-undetected policy (three-phase most rapid approach path)
// ---------------------------------------------------------------------------

enum class Theorem1Phase { BeforeHit, Plateau, AfterHerd };

/// Adaptive rate for the undetected-infected threshold problem:
/// (beta(t) s - gamma)/eta while riding the constraint, zero otherwise.
/// Never negative; exactly zero once beta(t) s <= gamma.
double theorem1_rate(const FractionState& state, double beta_now, const Params& params,
                     Theorem1Phase phase);

struct Theorem1Policy {
    double i_max = 0.0;
    double t_hit = 0.0;  ///< first time i_u reaches i_max
    double t_herd = 0.0; ///< first time beta(t) s(t) = gamma
    bool testing_needed = true; ///< false when the free epidemic stays below i_max
};

struct Theorem1Run {
    Theorem1Policy policy;
    Trajectory trajectory;
};

/// Closed-loop replay of the three-phase policy against the deterministic
/// model. Phase boundaries are located by bisection to 1e-6 day so the
/// integration grid lands exactly on the switches.
Theorem1Run theorem1_closed_loop(const FractionState& x0, double i_max, const Params& params,
                                 const BetaSignal& beta, double horizon, double step = 0.01);

// ---------------------------------------------------------------------------
// Switching policy for the total-infected constraint with bounded rate
// ---------------------------------------------------------------------------

/// Effective plateau rate beta(s - i_u) - gamma - kappa that holds
/// i_u + i_d constant. Divide by the molecular sensitivity for the
/// physically applied rate; caller clamps to [0, theta_max].
double plateau_rate(const FractionState& state, const Params& params);

/// Piecewise schedule 0 / theta_max / plateau / theta_max / 0 with the
/// boundary states of each switch. Times are absolute (t=0 at the initial
/// condition); synthesis assumes constant beta and no baseline testing.
struct SwitchingPolicy {
    double i_max = 0.0;
    double theta_max = 0.0;

    double t_a = 0.0, t_b = 0.0, t_c = 0.0, t_d = 0.0, t_e = 0.0;
    double s_a = 0.0, iu_a = 0.0;
    double s_b = 0.0, iu_b = 0.0;
    double s_c = 0.0, iu_c = 0.0;
    double s_d = 0.0, iu_d = 0.0;
    double s_e = 0.0, iu_e = 0.0;

    double tau3 = 0.0;     ///< plateau duration t_c - t_b
    double tau3_bar = 0.0; ///< upper feasibility bound on tau3
    /// Shortest plateau whose release phase can still re-touch the
    /// constraint tangentially; below it the post-release rebound overshoots
    /// i_max no matter how long theta_max is applied.
    double tau3_min = 0.0;

    double cost_rampup = 0.0;  ///< theta_max burst [t_a, t_b]
    double cost_plateau = 0.0; ///< closed-form plateau cost (physical rate)
    double cost_release = 0.0; ///< theta_max burst [t_c, t_d]

    bool zero_policy = false; ///< free epidemic never exceeds i_max
};

/// Solves the boundary systems for the switching times and minimizes the
/// total cost over the plateau duration (golden-section search).
/// Throws InfeasiblePolicy when even permanent theta_max violates the
/// constraint, SolverError when a boundary system cannot be solved.
SwitchingPolicy solve_switching(double s0, double i0, double i_max, double theta_max,
                                const Params& params);

/// Replays the switching schedule through the integrator, phase by phase so
/// switch times land exactly on step boundaries. The plateau phase applies
/// the state-feedback plateau law clamped to [0, theta_max].
Trajectory replay_switching(const SwitchingPolicy& policy, double s0, double i0,
                            const Params& params, double horizon, double step = 0.01);

// ---------------------------------------------------------------------------
// Minimum constant-rate baseline
// ---------------------------------------------------------------------------

/// Constant rate whose trajectory touches the total-infected constraint
/// tangentially (value i_max, zero derivative) exactly once.
struct ConstantRateSolution {
    double theta_const = 0.0; ///< physical testing rate
    double s_bar = 0.0, iu_bar = 0.0, id_bar = 0.0;
    double t_bar = 0.0; ///< touch time
    bool constraint_active = true; ///< false: free epidemic peaks below i_max
};

/// Solves the tangency system (constraint value, zero derivative, orbit
/// constant of motion, integrated detected-infected relation) by damped
/// Newton from a coarse multi-start grid. Throws InfeasiblePolicy when
/// i0 >= i_max, SolverError when no seed converges to a verified root.
ConstantRateSolution solve_constant_rate(double s0, double i0, double i_max,
                                         const Params& params);

// ---------------------------------------------------------------------------
// Costs (tests per capita)
// ---------------------------------------------------------------------------

/// Closed-form cost of the switching schedule (both bursts plus plateau).
double policy_cost(const SwitchingPolicy& policy);

/// Total analytic cost of the schedule when the plateau duration is forced
/// to `tau3` (release system re-solved from the same constraint entry
/// point). Backs the cost-versus-duration curve emission.
double switching_cost_at(const SwitchingPolicy& base, double tau3, const Params& params);

/// Constant policy cost over a horizon.
double policy_cost(const ConstantRateSolution& policy, double horizon);

/// Trapezoidal integral of the applied rate recorded on a trajectory.
double schedule_cost(const Trajectory& traj);

} // namespace epitest
