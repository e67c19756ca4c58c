#include "epitest/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "epitest/quadrature.hpp"

namespace epitest {

namespace {

const ControlLaw kZeroLaw = [](double, const FractionState&) { return 0.0; };

ControlLaw const_law(double theta) {
    return [theta](double, const FractionState&) { return theta; };
}

FractionState initial_state(double s0, double i0) {
    FractionState x;
    x.s = s0;
    x.i_u = i0;
    x.r_d = 1.0 - s0 - i0;
    return x;
}

// One constant-rate leg of an orbit, parametrized by the closed-form
// i_u(s). Elapsed time and the exp-weighted integral feeding the
// detected-infected balance,
//   J = int_{s_lo}^{s_hi} exp(gamma t(s)) / (beta s) ds
//     = int_0^{T} exp(gamma t) i_u(t) dt,
// are advanced together by RK4 in time, where everything is smooth; the
// final partial step is bisected to land exactly on s_lo.
struct Leg {
    double theta_eff;
    double s_hi;
    double iu_hi;
    const Params& p;

    double iu(double s) const {
        const double v = harko_iu_of_s(theta_eff, s, s_hi, iu_hi, p);
        if (v <= 0.0)
            throw std::domain_error("leg: orbit left the positive-i_u region");
        return v;
    }

    struct Result {
        double dt = 0.0;
        double weight = 0.0; // J above
    };

    Result run_to(double s_lo) const {
        Result out;
        if (s_lo >= s_hi)
            return out;
        if (s_lo <= 0.0)
            throw std::domain_error("leg: s_lo must be positive");

        const double h = 0.005;
        double s = s_hi, j = 0.0, t = 0.0;

        auto step = [&](double s_from, double j_from, double t_from, double dt, double& s_out,
                        double& j_out) {
            auto fs = [&](double sv) { return -p.beta * sv * iu(sv); };
            auto fj = [&](double sv, double tv) { return std::exp(p.gamma * tv) * iu(sv); };
            const double k1s = fs(s_from), k1j = fj(s_from, t_from);
            const double s2 = s_from + 0.5 * dt * k1s;
            const double k2s = fs(s2), k2j = fj(s2, t_from + 0.5 * dt);
            const double s3 = s_from + 0.5 * dt * k2s;
            const double k3s = fs(s3), k3j = fj(s3, t_from + 0.5 * dt);
            const double s4 = s_from + dt * k3s;
            const double k4s = fs(s4), k4j = fj(s4, t_from + dt);
            s_out = s_from + (dt / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
            j_out = j_from + (dt / 6.0) * (k1j + 2.0 * k2j + 2.0 * k3j + k4j);
        };

        const double t_cap = 5000.0;
        while (t < t_cap) {
            double s_next, j_next;
            step(s, j, t, h, s_next, j_next);
            if (s_next > s_lo && s - s_next < 1e-15)
                throw std::domain_error("leg: orbit stalls before reaching target s");
            if (s_next <= s_lo) {
                double lo = 0.0, hi = h;
                while (hi - lo > 1e-14 * std::max(1.0, t)) {
                    const double mid = 0.5 * (lo + hi);
                    double s_mid, j_mid;
                    step(s, j, t, mid, s_mid, j_mid);
                    if (s_mid <= s_lo)
                        hi = mid;
                    else
                        lo = mid;
                }
                step(s, j, t, hi, s_next, j_next);
                out.dt = t + hi;
                out.weight = j_next;
                return out;
            }
            s = s_next;
            j = j_next;
            t += h;
        }
        throw std::domain_error("leg: target s not reached (orbit stalls)");
    }

    double dt_to(double s_lo) const { return run_to(s_lo).dt; }
    double weight_integral(double s_lo) const { return run_to(s_lo).weight; }
};

// Roots of g on (s_floor, s_hi): geometric down-scan refining every sign
// change by bisection, returning the first refined root `accept` keeps.
std::optional<double> scan_down_root(const std::function<double(double)>& g, double s_hi,
                                     double s_floor,
                                     const std::function<bool(double)>& accept =
                                         [](double) { return true; }) {
    double prev_s = s_hi;
    double prev_g;
    try {
        prev_g = g(prev_s);
    } catch (const std::exception&) {
        return std::nullopt;
    }
    for (double s = s_hi * 0.999; s > s_floor; s *= 0.99) {
        double val;
        try {
            val = g(s);
        } catch (const std::exception&) {
            return std::nullopt; // left the orbit domain without a crossing
        }
        if ((val > 0.0) != (prev_g > 0.0)) {
            double lo = s, hi = prev_s;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                if ((g(mid) > 0.0) == (prev_g > 0.0))
                    hi = mid;
                else
                    lo = mid;
            }
            const double root = 0.5 * (lo + hi);
            if (accept(root))
                return root;
        }
        prev_s = s;
        prev_g = val;
    }
    return std::nullopt;
}

} // namespace

// ---------------------------------------------------------------------------
// Theorem-1 policy
// ---------------------------------------------------------------------------

double theorem1_rate(const FractionState& state, double beta_now, const Params& params,
                     Theorem1Phase phase) {
    if (params.eta <= 0.0)
        throw std::invalid_argument("theorem1_rate: eta must be positive");
    if (phase != Theorem1Phase::Plateau)
        return 0.0;
    return std::max(0.0, (beta_now * state.s - params.gamma) / params.eta);
}

Theorem1Run theorem1_closed_loop(const FractionState& x0, double i_max, const Params& params,
                                 const BetaSignal& beta, double horizon, double step) {
    if (x0.i_u > i_max)
        throw InfeasiblePolicy("theorem1_closed_loop: initial i_u already above i_max");

    Theorem1Run run;
    run.policy.i_max = i_max;

    auto hit_event = [i_max](double, const FractionState& x) { return x.i_u - i_max; };
    EventCrossing hit =
        find_crossing(x0, 0.0, params, kZeroLaw, beta, horizon, step, hit_event);

    if (!hit.found) {
        run.policy.testing_needed = false;
        run.policy.t_hit = horizon;
        run.policy.t_herd = horizon;
        run.trajectory = integrate(x0, params, kZeroLaw, beta, horizon, step);
        return run;
    }
    run.policy.t_hit = hit.t;

    Trajectory phase1 = integrate(x0, params, kZeroLaw, beta, hit.t, step);

    const ControlLaw plateau_law = [&params, &beta](double t, const FractionState& x) {
        return theorem1_rate(x, beta(t), params, Theorem1Phase::Plateau);
    };
    auto herd_event = [&params, &beta](double t, const FractionState& x) {
        return params.gamma - beta(t) * x.s;
    };
    EventCrossing herd = find_crossing(hit.state, hit.t, params, plateau_law, beta,
                                       horizon - hit.t, step, herd_event);
    run.policy.t_herd = herd.t; // horizon end if never reached

    Trajectory phase2 =
        integrate(hit.state, params, plateau_law, beta, herd.t - hit.t, step, hit.t);
    Trajectory phase3 =
        integrate(herd.state, params, kZeroLaw, beta, horizon - herd.t, step, herd.t);

    run.trajectory = std::move(phase1);
    run.trajectory.pop_back();
    run.trajectory.insert(run.trajectory.end(), phase2.begin(), phase2.end());
    run.trajectory.pop_back();
    run.trajectory.insert(run.trajectory.end(), phase3.begin(), phase3.end());
    return run;
}

// ---------------------------------------------------------------------------
// Switching policy
// ---------------------------------------------------------------------------

double plateau_rate(const FractionState& state, const Params& params) {
    return params.beta * (state.s - state.i_u) - params.gamma - params.kappa;
}

namespace {

struct SwitchingContext {
    Params p; // theta_b zeroed
    double s0, i0, i_max, theta_max;
    double theta_eff;   // eta * theta_max
    double c_hyp;       // gamma i_max / beta: i_u on the zero-derivative locus
    double source_max;  // inflow factor into i_d at full rate
};

// Residuals of the ramp-up boundary system in the unknowns (s_a, s_b).
// The zero-rate orbit pins i_u(s_a), the tangency locus pins i_u(s_b);
// what remains is the connecting orbit and the detected-infected balance.
Eigen::VectorXd ab_residual(const SwitchingContext& c, const Eigen::VectorXd& x) {
    const double s_a = x[0], s_b = x[1];
    const double iu_a = harko_iu_of_s(0.0, s_a, c.s0, c.i0, c.p);
    if (iu_a <= 0.0)
        throw std::domain_error("ab_residual: nonpositive iu_a");
    const double iu_b = c.c_hyp / s_b;

    Eigen::VectorXd r(2);
    r[0] = harko_f(c.theta_eff, s_a, iu_a, s_b, iu_b, c.p);

    const Leg::Result leg0 = Leg{0.0, c.s0, c.i0, c.p}.run_to(s_a);
    const Leg::Result legm = Leg{c.theta_eff, s_a, iu_a, c.p}.run_to(s_b);
    const double id_a = std::exp(-c.p.gamma * leg0.dt) * c.p.kappa * leg0.weight;
    const double id_b =
        (id_a + c.source_max * legm.weight) * std::exp(-c.p.gamma * legm.dt);
    r[1] = id_b - (c.i_max - iu_b);
    return r;
}

// Residuals of the release boundary system in (s_d, s_e) for a plateau
// ending at (s_c, iu_c) with i_d = i_max - iu_c.
Eigen::VectorXd de_residual(const SwitchingContext& c, double s_c, double iu_c,
                            const Eigen::VectorXd& x) {
    const double s_d = x[0], s_e = x[1];
    const double iu_d = harko_iu_of_s(c.theta_eff, s_d, s_c, iu_c, c.p);
    if (iu_d <= 0.0)
        throw std::domain_error("de_residual: nonpositive iu_d");
    const double iu_e = c.c_hyp / s_e;

    Eigen::VectorXd r(2);
    r[0] = harko_f(0.0, s_d, iu_d, s_e, iu_e, c.p);

    const Leg::Result legm = Leg{c.theta_eff, s_c, iu_c, c.p}.run_to(s_d);
    const Leg::Result leg0 = Leg{0.0, s_d, iu_d, c.p}.run_to(s_e);
    const double lhs =
        (c.i_max - iu_e) * std::exp(c.p.gamma * leg0.dt) - c.p.kappa * leg0.weight;
    const double rhs =
        ((c.i_max - iu_c) + c.source_max * legm.weight) * std::exp(-c.p.gamma * legm.dt);
    r[1] = lhs - rhs;
    return r;
}

struct DeSolution {
    double s_d = 0.0, s_e = 0.0, iu_d = 0.0, iu_e = 0.0;
    double tau4 = 0.0, tau5 = 0.0;
    bool degenerate = false; // no release burst (D = E = C)
};

// Solves the release system for a given plateau duration; `warm` carries the
// previous golden-section iterate as a Newton seed. The re-touch at E must
// be a maximum of i_u + i_d, which restricts s_e to the branch
// s_e - iu_e < (gamma + kappa)/beta; the near branch is the degenerate
// D = E = C family and is rejected.
std::optional<DeSolution> solve_de(const SwitchingContext& c, double s_c, double iu_c,
                                   std::optional<Eigen::Vector2d>& warm) {
    const double theta_star = c.p.beta * (s_c - iu_c) - c.p.gamma - c.p.kappa;
    if (theta_star <= 1e-9) { // constraint releases itself at C
        DeSolution d;
        d.s_d = d.s_e = s_c;
        d.iu_d = d.iu_e = iu_c;
        d.degenerate = true;
        return d;
    }

    const double touch_line = (c.p.gamma + c.p.kappa) / c.p.beta;
    auto max_touch = [&](double s_e) { return s_e - c.c_hyp / s_e < touch_line; };
    const double floor_e = (c.p.gamma / c.p.beta) * (1.0 + 1e-9);

    auto inner_se = [&](double s_d, double iu_d) {
        auto cross = [&](double s_e) {
            return harko_iu_of_s(0.0, s_e, s_d, iu_d, c.p) - c.c_hyp / s_e;
        };
        return scan_down_root(cross, s_d, floor_e, max_touch);
    };

    auto residual = [&](const Eigen::VectorXd& x) { return de_residual(c, s_c, iu_c, x); };
    NewtonOptions opts;
    opts.tol = 1e-9;

    std::vector<Eigen::Vector2d> seeds;
    if (warm && (*warm)[0] < s_c)
        seeds.push_back(*warm);

    double s_lim = 0.0;
    try {
        s_lim = harko_s_limit(c.theta_eff, s_c, iu_c, c.p);
    } catch (const std::exception&) {
        return std::nullopt;
    }
    const int n_scan = 56;
    double prev_sd = -1.0, prev_r2 = 0.0, prev_se = 0.0;
    for (int k = 0; k <= n_scan && seeds.size() < 5; ++k) {
        const double frac = double(k) / n_scan;
        const double s_d = (k == 0) ? s_c * (1.0 - 1e-9)
                                    : s_c + (s_lim * (1.0 + 1e-6) - s_c) * frac;
        double iu_d;
        try {
            iu_d = harko_iu_of_s(c.theta_eff, s_d, s_c, iu_c, c.p);
        } catch (const std::exception&) {
            break;
        }
        if (iu_d <= 0.0)
            break;
        auto s_e = inner_se(s_d, iu_d);
        if (!s_e)
            continue;
        double r2;
        try {
            r2 = de_residual(c, s_c, iu_c, Eigen::Vector2d(s_d, *s_e))[1];
        } catch (const std::exception&) {
            continue;
        }
        if (prev_sd > 0.0 && (r2 > 0.0) != (prev_r2 > 0.0))
            seeds.emplace_back(0.5 * (s_d + prev_sd), 0.5 * (*s_e + prev_se));
        prev_sd = s_d;
        prev_r2 = r2;
        prev_se = *s_e;
    }

    for (const auto& seed : seeds) {
        NewtonResult res = newton_solve(residual, seed, opts);
        if (!res.converged)
            continue;
        const double s_d = res.x[0], s_e = res.x[1];
        if (!(s_e > 0.0) || !(s_d > s_e) || s_d > s_c || !max_touch(s_e))
            continue;
        DeSolution d;
        d.s_d = s_d;
        d.s_e = s_e;
        d.iu_d = harko_iu_of_s(c.theta_eff, s_d, s_c, iu_c, c.p);
        d.iu_e = c.c_hyp / s_e;
        d.tau4 = Leg{c.theta_eff, s_c, iu_c, c.p}.dt_to(s_d);
        d.tau5 = Leg{0.0, s_d, d.iu_d, c.p}.dt_to(s_e);
        warm = res.x;
        return d;
    }
    return std::nullopt;
}

// Closed-form cost of the plateau segment, in effective-rate units.
double plateau_cost_eff(const SwitchingContext& c, double s_b, double iu_b, double tau3) {
    return tau3 * (c.p.beta * s_b - c.p.gamma - c.p.kappa -
                   0.5 * c.p.gamma * c.p.beta * c.i_max * tau3) +
           std::log(1.0 - c.p.beta * iu_b * tau3);
}

} // namespace

SwitchingPolicy solve_switching(double s0, double i0, double i_max, double theta_max,
                                const Params& params_in) {
    Params p = params_in;
    p.theta_b = 0.0; // policy synthesis assumes no baseline testing
    p.validate();
    if (i_max <= 0.0 || theta_max <= 0.0)
        throw std::invalid_argument("solve_switching: i_max and theta_max must be positive");
    if (i0 >= i_max)
        throw InfeasiblePolicy("solve_switching: initial infected fraction at or above i_max");
    if (s0 + i0 > 1.0 + 1e-12 || s0 <= 0.0 || i0 < 0.0)
        throw std::invalid_argument("solve_switching: invalid initial fractions");

    SwitchingPolicy pol;
    pol.i_max = i_max;
    pol.theta_max = theta_max;

    const BetaSignal beta = BetaSignal::constant(p.beta);
    const FractionState x0 = initial_state(s0, i0);
    const double scan_horizon = 2000.0;

    auto constraint_event = [i_max](double, const FractionState& x) {
        return x.i_u + x.i_d - i_max;
    };
    EventCrossing hit =
        find_crossing(x0, 0.0, p, kZeroLaw, beta, scan_horizon, 0.01, constraint_event);
    if (!hit.found) {
        pol.zero_policy = true;
        return pol;
    }

    auto violation_event = [i_max](double, const FractionState& x) {
        return x.i_u + x.i_d - (i_max + 1e-9);
    };
    if (find_crossing(x0, 0.0, p, const_law(theta_max), beta, scan_horizon, 0.01, violation_event)
            .found)
        throw InfeasiblePolicy("solve_switching: constraint violated even under permanent "
                               "maximum-rate testing");

    SwitchingContext c{p,
                       s0,
                       i0,
                       i_max,
                       theta_max,
                       p.eta * theta_max,
                       p.gamma * i_max / p.beta,
                       p.eta * theta_max + p.kappa};

    // ---- ramp-up system: locate (s_a, s_b) ----
    auto r2_of_sa = [&](double s_a) {
        const double iu_a = harko_iu_of_s(0.0, s_a, s0, i0, p);
        if (iu_a <= 0.0 || p.beta * s_a * iu_a <= p.gamma * i_max)
            throw std::domain_error("no tangency reachable from this s_a");
        auto cross = [&](double s_b) {
            return harko_iu_of_s(c.theta_eff, s_b, s_a, iu_a, p) - c.c_hyp / s_b;
        };
        auto s_b = scan_down_root(cross, s_a, 0.1 * c.c_hyp);
        if (!s_b)
            throw std::domain_error("no tangency crossing below this s_a");
        return std::make_pair(ab_residual(c, Eigen::Vector2d(s_a, *s_b))[1], *s_b);
    };

    std::optional<Eigen::Vector2d> ab_seed;
    {
        double prev_sa = -1.0, prev_r2 = 0.0, prev_sb = 0.0;
        const int n_scan = 64;
        for (int k = 0; k <= n_scan; ++k) {
            const double s_a =
                hit.state.s + (s0 * (1.0 - 1e-9) - hit.state.s) * (double(k) / n_scan);
            double r2, s_b;
            try {
                std::tie(r2, s_b) = r2_of_sa(s_a);
            } catch (const std::exception&) {
                continue;
            }
            if (prev_sa > 0.0 && (r2 > 0.0) != (prev_r2 > 0.0)) {
                ab_seed = Eigen::Vector2d(0.5 * (s_a + prev_sa), 0.5 * (s_b + prev_sb));
                break;
            }
            prev_sa = s_a;
            prev_r2 = r2;
            prev_sb = s_b;
        }
    }
    if (!ab_seed)
        throw SolverError("solve_switching: ramp-up system has no bracket (A1-A4)");

    NewtonOptions ab_opts;
    ab_opts.tol = 1e-10;
    NewtonResult ab = newton_solve(
        [&](const Eigen::VectorXd& x) { return ab_residual(c, x); }, *ab_seed, ab_opts);
    if (!ab.converged)
        throw SolverError("solve_switching: ramp-up system did not converge (A1-A4)");

    pol.s_a = ab.x[0];
    pol.s_b = ab.x[1];
    pol.iu_a = harko_iu_of_s(0.0, pol.s_a, s0, i0, p);
    pol.iu_b = c.c_hyp / pol.s_b;
    pol.t_a = Leg{0.0, s0, i0, p}.dt_to(pol.s_a);
    const double tau2 = Leg{c.theta_eff, pol.s_a, pol.iu_a, p}.dt_to(pol.s_b);
    pol.t_b = pol.t_a + tau2;

    // ---- feasible plateau duration ----
    auto theta_star_at = [&](double tau3) {
        const double s = pol.s_b - p.gamma * i_max * tau3;
        const double iu = 1.0 / (1.0 / pol.iu_b - p.beta * tau3);
        return p.beta * (s - iu) - p.gamma - p.kappa;
    };
    if (theta_star_at(0.0) <= 0.0) {
        pol.tau3_bar = 0.0;
    } else {
        const double solvable = (1.0 - 1e-9) / (p.beta * pol.iu_b);
        pol.tau3_bar = bisect_root(theta_star_at, 0.0, solvable, 1e-12);
    }

    // ---- minimize total cost over the plateau duration ----
    std::optional<Eigen::Vector2d> warm;
    auto release_cost = [&](double tau3) -> std::pair<double, std::optional<DeSolution>> {
        const double s_c = pol.s_b - p.gamma * i_max * tau3;
        const double iu_c = 1.0 / (1.0 / pol.iu_b - p.beta * tau3);
        auto de = solve_de(c, s_c, iu_c, warm);
        if (!de)
            return {std::numeric_limits<double>::infinity(), std::nullopt};
        return {de->tau4 * theta_max, de};
    };
    auto total_cost = [&](double tau3) {
        return tau2 * theta_max + plateau_cost_eff(c, pol.s_b, pol.iu_b, tau3) / p.eta +
               release_cost(tau3).first;
    };

    // The release system loses solvability below some plateau duration:
    // a short plateau leaves s too high and the post-release rebound
    // overshoots the constraint for every burst length. Locate the feasible
    // lower edge on a coarse grid before the golden-section search.
    auto solvable = [&](double tau3) { return release_cost(tau3).second.has_value(); };
    if (pol.tau3_bar > 1e-9) {
        const int n_grid = 16;
        int first_ok = -1;
        for (int k = 0; k <= n_grid; ++k) {
            if (solvable(pol.tau3_bar * double(k) / n_grid)) {
                first_ok = k;
                break;
            }
        }
        if (first_ok < 0)
            throw SolverError("solve_switching: release system unsolvable on [0, tau3_bar]");
        if (first_ok > 0) {
            double lo = pol.tau3_bar * double(first_ok - 1) / n_grid;
            double hi = pol.tau3_bar * double(first_ok) / n_grid;
            while (hi - lo > 1e-4 * pol.tau3_bar) {
                const double mid = 0.5 * (lo + hi);
                if (solvable(mid))
                    hi = mid;
                else
                    lo = mid;
            }
            pol.tau3_min = hi;
        }
    }

    double tau3_opt = pol.tau3_min;
    if (pol.tau3_bar > pol.tau3_min + 1e-9)
        tau3_opt = golden_section_min(total_cost, pol.tau3_min, pol.tau3_bar, 1e-6);

    pol.tau3 = tau3_opt;
    pol.s_c = pol.s_b - p.gamma * i_max * tau3_opt;
    pol.iu_c = 1.0 / (1.0 / pol.iu_b - p.beta * tau3_opt);
    pol.t_c = pol.t_b + tau3_opt;

    auto [rel_cost, de] = release_cost(tau3_opt);
    if (!de)
        throw SolverError("solve_switching: release system did not converge at the optimum");
    pol.s_d = de->s_d;
    pol.iu_d = de->iu_d;
    pol.s_e = de->s_e;
    pol.iu_e = de->iu_e;
    pol.t_d = pol.t_c + de->tau4;
    pol.t_e = pol.t_d + de->tau5;

    pol.cost_rampup = tau2 * theta_max;
    pol.cost_plateau = plateau_cost_eff(c, pol.s_b, pol.iu_b, tau3_opt) / p.eta;
    pol.cost_release = de->tau4 * theta_max;

    // feasibility of the assembled schedule, replayed through the integrator
    Trajectory check = replay_switching(pol, s0, i0, p, pol.t_e + 30.0, 0.01);
    for (const auto& pt : check)
        if (pt.state.i_u + pt.state.i_d > i_max + 1e-6)
            throw SolverError("solve_switching: replayed schedule violates the constraint");
    return pol;
}

Trajectory replay_switching(const SwitchingPolicy& policy, double s0, double i0,
                            const Params& params_in, double horizon, double step) {
    Params p = params_in;
    p.theta_b = 0.0;
    const BetaSignal beta = BetaSignal::constant(p.beta);
    const FractionState x0 = initial_state(s0, i0);

    if (policy.zero_policy)
        return integrate(x0, p, kZeroLaw, beta, horizon, step);

    const double theta_max = policy.theta_max;
    const ControlLaw plateau_law = [&p, theta_max](double, const FractionState& x) {
        return std::clamp(plateau_rate(x, p) / p.eta, 0.0, theta_max);
    };

    struct Phase {
        double t_end;
        const ControlLaw* law;
    };
    const ControlLaw max_law = const_law(theta_max);
    const Phase phases[] = {{policy.t_a, &kZeroLaw},
                            {policy.t_b, &max_law},
                            {policy.t_c, &plateau_law},
                            {policy.t_d, &max_law},
                            {horizon, &kZeroLaw}};

    Trajectory out;
    FractionState x = x0;
    double t = 0.0;
    for (const auto& ph : phases) {
        if (ph.t_end <= t + 1e-12) {
            if (ph.t_end > horizon)
                break;
            continue;
        }
        const double span = std::min(ph.t_end, horizon) - t;
        Trajectory part = integrate(x, p, *ph.law, beta, span, step, t);
        x = part.back().state;
        t = part.back().t;
        if (!out.empty())
            out.pop_back();
        out.insert(out.end(), part.begin(), part.end());
        if (t >= horizon - 1e-12)
            break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Constant-rate baseline
// ---------------------------------------------------------------------------

ConstantRateSolution solve_constant_rate(double s0, double i0, double i_max,
                                         const Params& params_in) {
    Params p = params_in;
    p.theta_b = 0.0;
    p.validate();
    if (i0 >= i_max)
        throw InfeasiblePolicy("solve_constant_rate: initial infected fraction >= i_max");
    if (s0 + i0 > 1.0 + 1e-12 || s0 <= 0.0 || i0 <= 0.0)
        throw std::invalid_argument("solve_constant_rate: invalid initial fractions");

    const BetaSignal beta = BetaSignal::constant(p.beta);
    const FractionState x0 = initial_state(s0, i0);
    const double c_hyp = p.gamma * i_max / p.beta;

    auto constraint_event = [i_max](double, const FractionState& x) {
        return x.i_u + x.i_d - i_max;
    };
    EventCrossing hit =
        find_crossing(x0, 0.0, p, kZeroLaw, beta, 2000.0, 0.01, constraint_event);
    if (!hit.found) {
        // free epidemic stays below the constraint: the minimum rate is zero
        ConstantRateSolution sol;
        sol.constraint_active = false;
        Trajectory free = integrate(x0, p, kZeroLaw, beta, 2000.0, 0.01);
        std::size_t peak = 0;
        for (std::size_t i = 0; i < free.size(); ++i)
            if (free[i].state.i_u + free[i].state.i_d >
                free[peak].state.i_u + free[peak].state.i_d)
                peak = i;
        sol.t_bar = free[peak].t;
        sol.s_bar = free[peak].state.s;
        sol.iu_bar = free[peak].state.i_u;
        sol.id_bar = free[peak].state.i_d;
        return sol;
    }

    auto residual = [&](const Eigen::VectorXd& x) {
        const double s_bar = x[0], theta = x[1];
        if (theta < -1e-3)
            throw std::domain_error("negative rate probe");
        const double theta_eff = p.eta * theta;
        const double iu_bar = c_hyp / s_bar;
        Eigen::VectorXd r(2);
        r[0] = harko_f(theta_eff, s0, i0, s_bar, iu_bar, p);
        Leg leg{theta_eff, s0, i0, p};
        const double t_bar = leg.dt_to(s_bar);
        const double id_bar = (theta_eff + p.kappa) * std::exp(-p.gamma * t_bar) *
                              leg.weight_integral(s_bar);
        r[1] = id_bar - (i_max - iu_bar);
        return r;
    };

    double theta_upper = (p.beta - p.gamma - p.kappa) / p.eta;
    if (theta_upper <= 0.0)
        theta_upper = 0.5;

    NewtonOptions opts;
    opts.tol = 1e-10;

    struct Root {
        Eigen::Vector2d x;
        double res;
        int order;
    };
    std::vector<Root> roots;
    int order = 0;
    for (double frac : {0.5, 0.25, 0.75, 0.9}) {
        const double theta_seed = frac * theta_upper;
        const double theta_eff = p.eta * theta_seed;
        auto cross = [&](double s) {
            return harko_iu_of_s(theta_eff, s, s0, i0, p) - c_hyp / s;
        };
        auto s_seed = scan_down_root(cross, s0, 0.5 * p.gamma / p.beta);
        ++order;
        if (!s_seed)
            continue;
        NewtonResult res = newton_solve(residual, Eigen::Vector2d(*s_seed, theta_seed), opts);
        if (!res.converged)
            continue;
        const double s_bar = res.x[0], theta = res.x[1];
        if (!(theta >= 0.0) || s_bar <= 0.9 * p.gamma / p.beta || s_bar > s0)
            continue;
        if (c_hyp / s_bar >= i_max)
            continue;
        roots.push_back({res.x, res.residual_norm, order});
    }
    std::stable_sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) {
        if (a.res != b.res)
            return a.res < b.res;
        return a.order < b.order;
    });

    for (const auto& root : roots) {
        ConstantRateSolution sol;
        sol.s_bar = root.x[0];
        sol.theta_const = root.x[1];
        sol.iu_bar = c_hyp / sol.s_bar;
        sol.id_bar = i_max - sol.iu_bar;
        sol.t_bar = Leg{p.eta * sol.theta_const, s0, i0, p}.dt_to(sol.s_bar);

        // the root must be a genuine single tangential touch when replayed
        Trajectory traj =
            integrate(x0, p, const_law(sol.theta_const), beta, 2000.0, 0.01);
        double peak = 0.0;
        int touches = 0;
        bool above = false;
        for (const auto& pt : traj) {
            const double i = pt.state.i_u + pt.state.i_d;
            peak = std::max(peak, i);
            const bool now = i > i_max - 1e-4;
            if (now && !above)
                ++touches;
            above = now;
        }
        if (std::abs(peak - i_max) < 2e-5 && touches == 1)
            return sol;
    }
    throw SolverError("solve_constant_rate: no verified tangency root from any seed");
}

// ---------------------------------------------------------------------------
// Costs
// ---------------------------------------------------------------------------

double policy_cost(const SwitchingPolicy& policy) {
    if (policy.zero_policy)
        return 0.0;
    return policy.cost_rampup + policy.cost_plateau + policy.cost_release;
}

double switching_cost_at(const SwitchingPolicy& base, double tau3, const Params& params_in) {
    if (base.zero_policy)
        return 0.0;
    Params p = params_in;
    p.theta_b = 0.0;
    if (tau3 < base.tau3_min - 1e-12 || tau3 > base.tau3_bar + 1e-12)
        throw std::invalid_argument("switching_cost_at: tau3 outside [tau3_min, tau3_bar]");

    SwitchingContext c{p,
                       0.0,
                       0.0,
                       base.i_max,
                       base.theta_max,
                       p.eta * base.theta_max,
                       p.gamma * base.i_max / p.beta,
                       p.eta * base.theta_max + p.kappa};
    const double s_c = base.s_b - p.gamma * base.i_max * tau3;
    const double iu_c = 1.0 / (1.0 / base.iu_b - p.beta * tau3);
    std::optional<Eigen::Vector2d> warm;
    auto de = solve_de(c, s_c, iu_c, warm);
    if (!de)
        throw SolverError("switching_cost_at: release system did not converge");
    return base.cost_rampup + plateau_cost_eff(c, base.s_b, base.iu_b, tau3) / p.eta +
           de->tau4 * base.theta_max;
}

double policy_cost(const ConstantRateSolution& policy, double horizon) {
    return policy.theta_const * horizon;
}

double schedule_cost(const Trajectory& traj) {
    double c = 0.0;
    for (std::size_t i = 1; i < traj.size(); ++i)
        c += 0.5 * (traj[i].theta + traj[i - 1].theta) * (traj[i].t - traj[i - 1].t);
    return c;
}

} // namespace epitest
