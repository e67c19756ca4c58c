#pragma once

#include "epitest/params.hpp"

namespace epitest {

/// Constant-rate orbit relations between (s, i_u) pairs. `theta_eff` is the
/// effective testing removal rate (sensitivity already folded in, i.e.
/// eta*theta for a physical testing rate theta); the total exit rate from
/// the undetected-infected compartment is gamma + theta_eff + kappa.

/// Orbit residual: zero iff (s1,iu1) and (s2,iu2) lie on the same orbit of
/// the dynamics with constant effective rate theta_eff.
double harko_f(double theta_eff, double s1, double iu1, double s2, double iu2,
               const Params& params);

/// i_u as a function of s along the constant-rate orbit through
/// (s_start, iu_start).
double harko_iu_of_s(double theta_eff, double s, double s_start, double iu_start,
                     const Params& params);

/// Asymptotic lower limit of s on the orbit (where i_u reaches zero).
/// Requires iu_start > 0.
double harko_s_limit(double theta_eff, double s_start, double iu_start, const Params& params);

/// Elapsed time for s to fall from s_start to s_target under constant
/// effective rate theta_eff, by adaptive quadrature (abs tol 1e-8).
/// Throws std::domain_error when s_target is at or beyond the asymptotic
/// limit of s (the integrand denominator root).
double harko_dt(double theta_eff, double s_target, double s_start, double iu_start,
                const Params& params);

/// Basic reproduction number beta/(gamma + kappa + eta*theta_const).
/// Here theta_const is a physical testing rate.
double reproduction_number(const Params& params, double theta_const);

} // namespace epitest
