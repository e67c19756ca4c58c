#pragma once

#include <functional>
#include <vector>

#include "epitest/beta_signal.hpp"
#include "epitest/params.hpp"

namespace epitest {

/// Signals a compartment leaving the simplex by more than tolerance-level
/// drift, i.e. the step size was too large for the supplied schedule.
struct IntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Population fractions of the five-compartment model.
/// r_d is redundant (fractions sum to one) and is reconstructed at read-out
/// by the integrator rather than integrated.
struct FractionState {
    double s = 0.0;   ///< susceptible
    double i_u = 0.0; ///< infected, undetected
    double i_d = 0.0; ///< infected, detected (quarantined)
    double r_u = 0.0; ///< recovered, undetected
    double r_d = 0.0; ///< recovered, detected

    double sum() const { return s + i_u + i_d + r_u + r_d; }
};

/// Drift negativity tolerance of the integrator; states are clipped back to
/// the simplex only within this band, larger excursions raise.
inline constexpr double kSimplexTol = 1e-9;

/// Right-hand side of the compartment dynamics under adaptive testing rate
/// `theta` and instantaneous transmission rate `beta_t`. Component sum is
/// exactly zero. With kappa = theta_b = 0 this is the basic testing model;
/// with kappa = 0 the serology-augmented one.
FractionState derivative(const FractionState& state, const Params& params, double theta,
                         double beta_t);

struct TrajectoryPoint {
    double t = 0.0;
    FractionState state;
    double theta = 0.0; ///< adaptive rate applied at time t
};

/// Ordered samples of a deterministic run; strictly increasing times.
using Trajectory = std::vector<TrajectoryPoint>;

/// Testing rate as a function of time and current state. Time-only schedules
/// simply ignore the state argument.
using ControlLaw = std::function<double(double t, const FractionState&)>;

/// One RK4 step of length h from (t, x); r_d kept consistent at read-out.
FractionState rk4_step(const FractionState& x, double t, double h, const Params& params,
                       const ControlLaw& schedule, const BetaSignal& beta);

/// Classical fixed-step RK4 over [t0, t0+horizon]. The last step is
/// shortened so the trajectory ends exactly at the horizon. Negative
/// excursions beyond 10*kSimplexTol raise IntegrationError; smaller ones are
/// clipped at read-out.
Trajectory integrate(const FractionState& x0, const Params& params, const ControlLaw& schedule,
                     const BetaSignal& beta, double horizon, double step, double t0 = 0.0);

/// Advances from (t0, x0) until `event` changes sign (negative to
/// non-negative), then bisects the crossing to time tolerance `tol_t`.
/// Returns t0+horizon and the state there when no crossing occurs.
struct EventCrossing {
    bool found = false;
    double t = 0.0;
    FractionState state;
};
EventCrossing find_crossing(const FractionState& x0, double t0, const Params& params,
                            const ControlLaw& schedule, const BetaSignal& beta, double horizon,
                            double step,
                            const std::function<double(double, const FractionState&)>& event,
                            double tol_t = 1e-6);

} // namespace epitest
