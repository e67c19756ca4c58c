#include "epitest/rootfind.hpp"

#include <cmath>

namespace epitest {

NewtonResult newton_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                          const Eigen::VectorXd& x0, const NewtonOptions& opts) {
    NewtonResult out;
    out.x = x0;

    Eigen::VectorXd r;
    try {
        r = residual(out.x);
    } catch (const std::exception&) {
        return out; // seed outside the domain
    }
    const auto n = x0.size();

    for (int it = 0; it < opts.max_iters; ++it) {
        out.iterations = it;
        out.residual_norm = r.lpNorm<Eigen::Infinity>();
        if (out.residual_norm < opts.tol) {
            out.converged = true;
            return out;
        }

        Eigen::MatrixXd jac(r.size(), n);
        bool jac_ok = true;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double h = opts.fd_step * std::max(1.0, std::abs(out.x[j]));
            Eigen::VectorXd xp = out.x;
            xp[j] += h;
            try {
                jac.col(j) = (residual(xp) - r) / h;
            } catch (const std::exception&) {
                jac_ok = false;
                break;
            }
        }
        if (!jac_ok)
            return out;

        Eigen::VectorXd step = jac.fullPivLu().solve(-r);
        if (!step.allFinite())
            return out;

        const double r0sq = r.squaredNorm();
        double lambda = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < opts.max_backtracks; ++bt) {
            Eigen::VectorXd x_try = out.x + lambda * step;
            try {
                Eigen::VectorXd r_try = residual(x_try);
                if (r_try.allFinite() && (r_try.squaredNorm() < r0sq || lambda < 1e-12)) {
                    out.x = x_try;
                    r = r_try;
                    accepted = true;
                    break;
                }
            } catch (const std::exception&) {
                // shrink and retry
            }
            lambda *= 0.5;
        }
        if (!accepted)
            return out;
    }
    out.residual_norm = r.lpNorm<Eigen::Infinity>();
    out.converged = out.residual_norm < opts.tol;
    return out;
}

double golden_section_min(const std::function<double(double)>& f, double a, double b, double tol) {
    if (b < a)
        std::swap(a, b);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc <= fd) { // ties shrink toward the left
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

double bisect_root(const std::function<double(double)>& f, double a, double b, double tol) {
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0)
        return a;
    if (fb == 0.0)
        return b;
    if ((fa > 0.0) == (fb > 0.0))
        throw SolverError("bisect_root: endpoints do not bracket a sign change");
    while (b - a > tol) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0)
            return m;
        if ((fm > 0.0) == (fa > 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

} // namespace epitest
