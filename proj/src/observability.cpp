#include "epitest/observability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace epitest {

namespace {

std::vector<double> smooth_quadratic(const std::vector<double>& v, int window) {
    if (window < 3 || window % 2 == 0)
        throw std::invalid_argument("smoothing window must be odd and >= 3");
    const int m = window / 2;
    const int n = static_cast<int>(v.size());
    std::vector<double> c(static_cast<std::size_t>(window));
    double norm = 0.0;
    for (int j = -m; j <= m; ++j) {
        c[static_cast<std::size_t>(j + m)] = 3.0 * m * (m + 1) - 1.0 - 5.0 * j * j;
        norm += c[static_cast<std::size_t>(j + m)];
    }
    std::vector<double> out = v;
    for (int k = m; k < n - m; ++k) {
        double acc = 0.0;
        for (int j = -m; j <= m; ++j)
            acc += c[static_cast<std::size_t>(j + m)] * v[static_cast<std::size_t>(k + j)];
        out[static_cast<std::size_t>(k)] = acc / norm;
    }
    return out;
}

} // namespace

TwinRun counterexample_pair(double s0, double s0_bar, double i0,
                            const std::function<double(double)>& schedule, const Params& params,
                            const BetaSignal& beta, double horizon, double step) {
    Params p = params;
    p.kappa = 0.0;
    p.theta_b = 0.0;

    TwinRun run;
    FractionState x0;
    x0.s = s0;
    x0.i_u = i0;
    x0.r_d = 1.0 - s0 - i0;
    const ControlLaw law = [&schedule](double t, const FractionState&) { return schedule(t); };
    run.primary = integrate(x0, p, law, beta, horizon, step);

    // susceptible signal of the primary run with exact nodal derivatives
    const std::size_t n = run.primary.size();
    std::vector<double> ts(n), sv(n), sd(n);
    for (std::size_t k = 0; k < n; ++k) {
        ts[k] = run.primary[k].t;
        sv[k] = run.primary[k].state.s;
        sd[k] = -beta(ts[k]) * run.primary[k].state.s * run.primary[k].state.i_u;
    }
    auto s_hermite = [&](std::size_t panel, double t) {
        const double h = ts[panel + 1] - ts[panel];
        const double u = (t - ts[panel]) / h;
        const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
        const double h10 = u * (1 - u) * (1 - u);
        const double h01 = u * u * (3 - 2 * u);
        const double h11 = u * u * (u - 1);
        return h00 * sv[panel] + h10 * h * sd[panel] + h01 * sv[panel + 1] +
               h11 * h * sd[panel + 1];
    };

    // shadow run: d s_bar = -beta s i_u_bar (the bar-rate times s_bar
    // collapses to the primary's s), same linear i_u and i_d flows
    run.shadow.reserve(n);
    run.beta_shadow.reserve(n);
    double sb = s0_bar, iub = i0, idb = 0.0;
    auto push_shadow = [&](double t) {
        FractionState x;
        x.s = sb;
        x.i_u = iub;
        x.i_d = idb;
        x.r_d = 1.0 - sb - iub - idb;
        run.shadow.push_back({t, x, schedule(t)});
        run.beta_shadow.push_back(beta(t) * sv[run.shadow.size() - 1] / sb);
    };
    push_shadow(ts[0]);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double h = ts[k + 1] - ts[k];
        auto rhs = [&](double t, double y_s, double y_iu, double y_id, double& d_s,
                       double& d_iu, double& d_id) {
            const double s_p = s_hermite(k, t);
            const double growth = beta(t) * s_p;
            const double removal = p.gamma + p.eta * schedule(t);
            d_s = -growth * y_iu;
            d_iu = (growth - removal) * y_iu;
            d_id = p.eta * schedule(t) * y_iu - p.gamma * y_id;
        };
        double k1s, k1i, k1d, k2s, k2i, k2d, k3s, k3i, k3d, k4s, k4i, k4d;
        rhs(ts[k], sb, iub, idb, k1s, k1i, k1d);
        rhs(ts[k] + 0.5 * h, sb + 0.5 * h * k1s, iub + 0.5 * h * k1i, idb + 0.5 * h * k1d, k2s,
            k2i, k2d);
        rhs(ts[k] + 0.5 * h, sb + 0.5 * h * k2s, iub + 0.5 * h * k2i, idb + 0.5 * h * k2d, k3s,
            k3i, k3d);
        rhs(ts[k] + h, sb + h * k3s, iub + h * k3i, idb + h * k3d, k4s, k4i, k4d);
        sb += (h / 6.0) * (k1s + 2 * k2s + 2 * k3s + k4s);
        iub += (h / 6.0) * (k1i + 2 * k2i + 2 * k3i + k4i);
        idb += (h / 6.0) * (k1d + 2 * k2d + 2 * k3d + k4d);
        push_shadow(ts[k + 1]);
    }

    for (std::size_t k = 0; k < n; ++k) {
        run.sup_id_gap = std::max(
            run.sup_id_gap, std::abs(run.primary[k].state.i_d - run.shadow[k].state.i_d));
        run.sup_iu_gap = std::max(
            run.sup_iu_gap, std::abs(run.primary[k].state.i_u - run.shadow[k].state.i_u));
        run.sup_s_gap =
            std::max(run.sup_s_gap, std::abs(run.primary[k].state.s - run.shadow[k].state.s));
    }
    return run;
}

SerologyReconstruction reconstruct_from_serology(const SampledOutput& out, const Params& params,
                                                 const ReconstructionOptions& opts) {
    const std::size_t n = out.i_d.size();
    if (n < 5 || out.r_d.size() != n || out.theta.size() != n || out.dt <= 0.0)
        throw std::invalid_argument("reconstruct_from_serology: malformed record");
    const double ser_i = params.theta_b * params.eta_bi;
    const double ser_r = params.theta_b * params.eta_br;
    for (std::size_t k = 0; k < n; ++k)
        if (params.eta * out.theta[k] + ser_i <= 0.0 || ser_r <= 0.0)
            throw std::domain_error("reconstruct_from_serology: detection gates vanish");

    const std::vector<double> id = opts.smooth ? smooth_quadratic(out.i_d, opts.window) : out.i_d;
    const std::vector<double> rd = opts.smooth ? smooth_quadratic(out.r_d, opts.window) : out.r_d;

    SerologyReconstruction rec;
    // interior shrinks by two on each side: one derivative for the flows,
    // one more for the transmission rate
    for (std::size_t k = 2; k + 2 < n; ++k) {
        const auto iu_at = [&](std::size_t j) {
            const double did = (id[j + 1] - id[j - 1]) / (2.0 * out.dt);
            return (did + params.gamma * id[j]) / (params.eta * out.theta[j] + ser_i);
        };
        const auto s_at = [&](std::size_t j) {
            const double drd = (rd[j + 1] - rd[j - 1]) / (2.0 * out.dt);
            const double ru = (drd - params.gamma * id[j]) / ser_r;
            return 1.0 - iu_at(j) - ru - id[j] - rd[j];
        };
        const double iu = iu_at(k);
        const double drd = (rd[k + 1] - rd[k - 1]) / (2.0 * out.dt);
        const double ru = (drd - params.gamma * id[k]) / ser_r;
        const double s = 1.0 - iu - ru - id[k] - rd[k];
        const double ds = (s_at(k + 1) - s_at(k - 1)) / (2.0 * out.dt);
        const double denom = s * iu;
        rec.t.push_back(out.t0 + double(k) * out.dt);
        rec.i_u.push_back(iu);
        rec.r_u.push_back(ru);
        rec.s.push_back(s);
        rec.beta.push_back(std::abs(denom) > 1e-300
                               ? -ds / denom
                               : std::numeric_limits<double>::quiet_NaN());
    }
    return rec;
}

MolecularReconstruction reconstruct_from_molecular(const SampledOutput& out,
                                                   const Params& params,
                                                   const ReconstructionOptions& opts) {
    const std::size_t n = out.i_d.size();
    if (n < 7 || out.theta.size() != n || out.dt <= 0.0)
        throw std::invalid_argument("reconstruct_from_molecular: malformed record");
    for (std::size_t k = 0; k < n; ++k)
        if (params.eta * out.theta[k] <= 0.0)
            throw std::domain_error("reconstruct_from_molecular: testing rate vanishes on the "
                                    "record (state not reconstructible)");

    const std::vector<double> id = opts.smooth ? smooth_quadratic(out.i_d, opts.window) : out.i_d;

    // i_u from the detected-flow balance, then phi = beta * s from the
    // undetected balance, then beta from the depletion of phi
    std::vector<double> iu(n, 0.0);
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double did = (id[k + 1] - id[k - 1]) / (2.0 * out.dt);
        iu[k] = (did + params.gamma * id[k]) / (params.eta * out.theta[k]);
    }
    std::vector<double> phi(n, 0.0);
    for (std::size_t k = 2; k + 2 < n; ++k) {
        const double diu = (iu[k + 1] - iu[k - 1]) / (2.0 * out.dt);
        if (std::abs(iu[k]) < 1e-300)
            throw std::domain_error("reconstruct_from_molecular: vanishing i_u");
        phi[k] = diu / iu[k] + params.gamma + params.eta * out.theta[k];
    }

    MolecularReconstruction rec;
    std::vector<double> finite_betas;
    for (std::size_t k = 3; k + 3 < n; ++k) {
        const double dphi = (phi[k + 1] - phi[k - 1]) / (2.0 * out.dt);
        const double beta = -dphi / (phi[k] * iu[k]);
        rec.t.push_back(out.t0 + double(k) * out.dt);
        rec.i_u.push_back(iu[k]);
        rec.beta_pointwise.push_back(beta);
        rec.s.push_back(std::abs(beta) > 1e-300 ? phi[k] / beta
                                                : std::numeric_limits<double>::quiet_NaN());
        if (std::isfinite(beta))
            finite_betas.push_back(beta);
    }
    if (finite_betas.empty())
        throw std::domain_error("reconstruct_from_molecular: no usable interior points");
    std::nth_element(finite_betas.begin(), finite_betas.begin() + finite_betas.size() / 2,
                     finite_betas.end());
    rec.beta_hat = finite_betas[finite_betas.size() / 2];
    return rec;
}

} // namespace epitest
