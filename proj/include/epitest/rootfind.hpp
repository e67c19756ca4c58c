#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace epitest {

/// Raised when a solver exhausts its budget without meeting tolerance.
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NewtonOptions {
    int max_iters = 60;
    int max_backtracks = 30;
    double tol = 1e-11;      ///< residual infinity-norm target
    double fd_step = 1e-7;   ///< relative forward-difference step
};

struct NewtonResult {
    Eigen::VectorXd x;
    double residual_norm = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Damped Newton with numerically differenced Jacobian and step-halving
/// line search on the squared residual. The residual function may throw
/// (out-of-domain probe); such steps are treated as rejected.
NewtonResult newton_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                          const Eigen::VectorXd& x0, const NewtonOptions& opts = {});

/// Golden-section minimization of a unimodal scalar function on [a, b] to
/// interval width `tol`. Ties favor the left (smaller argument).
double golden_section_min(const std::function<double(double)>& f, double a, double b, double tol);

/// Bisection for f(a) and f(b) of opposite sign; returns the root to
/// absolute tolerance `tol`.
double bisect_root(const std::function<double(double)>& f, double a, double b, double tol);

} // namespace epitest
