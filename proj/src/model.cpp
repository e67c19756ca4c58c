#include "epitest/model.hpp"

#include <cmath>
#include <string>

namespace epitest {

FractionState derivative(const FractionState& state, const Params& params, double theta,
                         double beta_t) {
    const double infection = beta_t * state.s * state.i_u;
    const double detect_u = params.detection_rate(theta) * state.i_u;
    const double detect_r = params.theta_b * params.eta_br * state.r_u;

    FractionState d;
    d.s = -infection;
    d.i_u = infection - params.gamma * state.i_u - detect_u;
    d.i_d = detect_u - params.gamma * state.i_d;
    d.r_u = params.gamma * state.i_u - detect_r;
    d.r_d = params.gamma * state.i_d + detect_r;
    return d;
}

namespace {

// Only (s, i_u, i_d, r_u) are integrated; r_d is the simplex remainder.
struct State4 {
    double v[4];

    static State4 from(const FractionState& x) { return {{x.s, x.i_u, x.i_d, x.r_u}}; }

    FractionState to_fraction() const {
        FractionState x;
        x.s = v[0];
        x.i_u = v[1];
        x.i_d = v[2];
        x.r_u = v[3];
        x.r_d = 1.0 - (v[0] + v[1] + v[2] + v[3]);
        return x;
    }
};

// The control law is re-evaluated at every stage so that state-feedback
// schedules keep the full scheme order.
State4 rhs(const State4& y, double t, const Params& params, const ControlLaw& schedule,
           const BetaSignal& beta) {
    const FractionState x = y.to_fraction();
    FractionState d = derivative(x, params, schedule(t, x), beta(t));
    return {{d.s, d.i_u, d.i_d, d.r_u}};
}

State4 rk4_step4(const State4& y, double t, double h, const Params& params,
                 const ControlLaw& schedule, const BetaSignal& beta) {
    const State4 k1 = rhs(y, t, params, schedule, beta);
    State4 y2{{y.v[0] + 0.5 * h * k1.v[0], y.v[1] + 0.5 * h * k1.v[1], y.v[2] + 0.5 * h * k1.v[2],
               y.v[3] + 0.5 * h * k1.v[3]}};
    const State4 k2 = rhs(y2, t + 0.5 * h, params, schedule, beta);
    State4 y3{{y.v[0] + 0.5 * h * k2.v[0], y.v[1] + 0.5 * h * k2.v[1], y.v[2] + 0.5 * h * k2.v[2],
               y.v[3] + 0.5 * h * k2.v[3]}};
    const State4 k3 = rhs(y3, t + 0.5 * h, params, schedule, beta);
    State4 y4{{y.v[0] + h * k3.v[0], y.v[1] + h * k3.v[1], y.v[2] + h * k3.v[2],
               y.v[3] + h * k3.v[3]}};
    const State4 k4 = rhs(y4, t + h, params, schedule, beta);

    State4 out;
    for (int i = 0; i < 4; ++i)
        out.v[i] = y.v[i] + (h / 6.0) * (k1.v[i] + 2.0 * k2.v[i] + 2.0 * k3.v[i] + k4.v[i]);
    return out;
}

void check_and_clip(State4& y, double t) {
    for (double& c : y.v) {
        if (c < 0.0) {
            if (c < -10.0 * kSimplexTol)
                throw IntegrationError("integrate: compartment " + std::to_string(c) +
                                       " below -10*tol at t=" + std::to_string(t) +
                                       " (unstable step size)");
            c = 0.0;
        }
    }
}

} // namespace

FractionState rk4_step(const FractionState& x, double t, double h, const Params& params,
                       const ControlLaw& schedule, const BetaSignal& beta) {
    State4 y = rk4_step4(State4::from(x), t, h, params, schedule, beta);
    check_and_clip(y, t + h);
    return y.to_fraction();
}

Trajectory integrate(const FractionState& x0, const Params& params, const ControlLaw& schedule,
                     const BetaSignal& beta, double horizon, double step, double t0) {
    if (step <= 0.0)
        throw std::invalid_argument("integrate: step must be positive");
    if (horizon < 0.0)
        throw std::invalid_argument("integrate: negative horizon");

    Trajectory traj;
    traj.reserve(static_cast<std::size_t>(horizon / step) + 2);

    State4 y = State4::from(x0);
    double t = t0;
    const double t_end = t0 + horizon;
    traj.push_back({t, y.to_fraction(), schedule(t, y.to_fraction())});

    while (t < t_end - 1e-12 * std::max(1.0, std::abs(t_end))) {
        const double h = std::min(step, t_end - t);
        y = rk4_step4(y, t, h, params, schedule, beta);
        t += h;
        check_and_clip(y, t);
        const FractionState next = y.to_fraction();
        traj.push_back({t, next, schedule(t, next)});
    }
    return traj;
}

EventCrossing find_crossing(const FractionState& x0, double t0, const Params& params,
                            const ControlLaw& schedule, const BetaSignal& beta, double horizon,
                            double step,
                            const std::function<double(double, const FractionState&)>& event,
                            double tol_t) {
    EventCrossing out;
    State4 y = State4::from(x0);
    double t = t0;
    const double t_end = t0 + horizon;

    if (event(t, y.to_fraction()) >= 0.0) {
        out.found = true;
        out.t = t;
        out.state = y.to_fraction();
        return out;
    }

    while (t < t_end - 1e-12 * std::max(1.0, std::abs(t_end))) {
        const double h = std::min(step, t_end - t);
        State4 y_next = rk4_step4(y, t, h, params, schedule, beta);
        check_and_clip(y_next, t + h);

        if (event(t + h, y_next.to_fraction()) >= 0.0) {
            // Bisect the sub-step length; each probe is a single RK4 step
            // from the bracketing state, so accuracy stays at scheme order.
            double lo = 0.0, hi = h;
            while (hi - lo > tol_t) {
                const double mid = 0.5 * (lo + hi);
                State4 y_mid = rk4_step4(y, t, mid, params, schedule, beta);
                if (event(t + mid, y_mid.to_fraction()) >= 0.0)
                    hi = mid;
                else
                    lo = mid;
            }
            State4 y_hit = rk4_step4(y, t, hi, params, schedule, beta);
            check_and_clip(y_hit, t + hi);
            out.found = true;
            out.t = t + hi;
            out.state = y_hit.to_fraction();
            return out;
        }
        y = y_next;
        t += h;
    }
    out.found = false;
    out.t = t_end;
    out.state = y.to_fraction();
    return out;
}

} // namespace epitest
