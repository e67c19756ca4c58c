#include "epitest/harko.hpp"

#include <cmath>
#include <stdexcept>

#include "epitest/quadrature.hpp"

namespace epitest {

namespace {

double exit_rate(double theta_eff, const Params& params) {
    const double g = params.gamma + theta_eff + params.kappa;
    if (g <= 0.0)
        throw std::invalid_argument("harko: gamma + theta + kappa must be positive");
    return g;
}

} // namespace

double harko_f(double theta_eff, double s1, double iu1, double s2, double iu2,
               const Params& params) {
    if (s1 <= 0.0 || s2 <= 0.0)
        throw std::domain_error("harko_f: s must be positive");
    const double g = exit_rate(theta_eff, params);
    return std::log(s2 / s1) - params.beta / g * ((s2 - s1) + (iu2 - iu1));
}

double harko_iu_of_s(double theta_eff, double s, double s_start, double iu_start,
                     const Params& params) {
    if (s <= 0.0 || s_start <= 0.0)
        throw std::domain_error("harko_iu_of_s: s must be positive");
    const double g = exit_rate(theta_eff, params);
    return iu_start + (s_start - s) + (g / params.beta) * std::log(s / s_start);
}

double harko_s_limit(double theta_eff, double s_start, double iu_start, const Params& params) {
    if (iu_start <= 0.0)
        throw std::domain_error("harko_s_limit: iu_start must be positive");
    const double g = exit_rate(theta_eff, params);

    // i_u(s) peaks at s = g/beta and falls to -inf as s -> 0; the root below
    // the peak is the asymptotic limit of s.
    double hi = std::min(g / params.beta, s_start);
    if (harko_iu_of_s(theta_eff, hi, s_start, iu_start, params) <= 0.0)
        return hi; // degenerate: already nonpositive at the peak side
    double lo = hi;
    do {
        lo *= 0.5;
        if (lo < 1e-300)
            throw std::domain_error("harko_s_limit: no root bracket");
    } while (harko_iu_of_s(theta_eff, lo, s_start, iu_start, params) > 0.0);

    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (harko_iu_of_s(theta_eff, mid, s_start, iu_start, params) > 0.0)
            hi = mid;
        else
            lo = mid;
        if (hi - lo < 1e-16 * hi)
            break;
    }
    return 0.5 * (lo + hi);
}

double harko_dt(double theta_eff, double s_target, double s_start, double iu_start,
                const Params& params) {
    if (!(s_target > 0.0) || s_target > s_start)
        throw std::domain_error("harko_dt: requires 0 < s_target <= s_start");
    if (s_target == s_start)
        return 0.0;
    if (iu_start <= 0.0)
        throw std::domain_error("harko_dt: iu_start must be positive (s cannot move)");

    const double s_inf = harko_s_limit(theta_eff, s_start, iu_start, params);
    if (s_target <= s_inf * (1.0 + 1e-12))
        throw std::domain_error("harko_dt: s_target at or beyond the asymptotic s limit");

    const double beta = params.beta;
    auto integrand = [&](double s) {
        return 1.0 / (beta * s * harko_iu_of_s(theta_eff, s, s_start, iu_start, params));
    };
    return gauss_kronrod(integrand, s_target, s_start, 1e-8);
}

double reproduction_number(const Params& params, double theta_const) {
    const double denom = params.gamma + params.kappa + params.eta * theta_const;
    if (denom <= 0.0)
        throw std::invalid_argument("reproduction_number: denominator must be positive");
    return params.beta / denom;
}

} // namespace epitest
