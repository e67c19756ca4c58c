#include "epitest/ekf.hpp"

#include <cmath>
#include <limits>

namespace epitest {

namespace {

// paper-order (s, i_u, i_d, r_u) index for each filter-order coordinate
constexpr int kPerm[4] = {0, 1, 3, 2};

Eigen::Matrix4d process_noise(const Eigen::Vector4d& x, double theta, const Params& params,
                              double N, double beta_now) {
    if (!std::isfinite(N))
        return Eigen::Matrix4d::Zero();
    FractionState f;
    f.s = x[0];
    f.i_u = std::max(0.0, x[1]);
    f.r_u = std::max(0.0, x[2]);
    f.i_d = std::max(0.0, x[3]);
    const DiffusionMatrix B = diffusion_matrix(f, theta, params, beta_now);
    Eigen::Matrix4d Q;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            Q(i, j) = B(kPerm[i], kPerm[j]) / N;
    return Q;
}

// Clips eigenvalues in [floor, 0) to zero, throws below the floor.
void enforce_psd(Eigen::Matrix4d& P, double floor, const char* where) {
    P = 0.5 * (P + P.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(P);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (min_eig < floor)
        throw std::runtime_error(std::string(where) +
                                 ": covariance lost positive semidefiniteness");
    if (min_eig < 0.0) {
        Eigen::Vector4d d = eig.eigenvalues().cwiseMax(0.0);
        P = eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
    }
}

} // namespace

Eigen::Matrix<double, 2, 4> observation_matrix() {
    Eigen::Matrix<double, 2, 4> C;
    C << 0, 0, 0, 1, -1, -1, -1, -1;
    return C;
}

Eigen::Vector2d observation_offset() { return Eigen::Vector2d(0.0, 1.0); }

Eigen::Vector4d model_rhs(const Eigen::Vector4d& x, double theta, const Params& params,
                          double beta_now) {
    const double s = x[0], iu = x[1], ru = x[2], id = x[3];
    const double infection = beta_now * s * iu;
    const double detect = params.detection_rate(theta);
    const double ser = params.theta_b * params.eta_br;
    Eigen::Vector4d d;
    d[0] = -infection;
    d[1] = infection - (params.gamma + detect) * iu;
    d[2] = params.gamma * iu - ser * ru;
    d[3] = detect * iu - params.gamma * id;
    return d;
}

Eigen::Matrix4d model_jacobian(const Eigen::Vector4d& x, double theta, const Params& params,
                               double beta_now) {
    const double s = x[0], iu = x[1];
    const double detect = params.detection_rate(theta);
    const double ser = params.theta_b * params.eta_br;
    Eigen::Matrix4d G = Eigen::Matrix4d::Zero();
    G(0, 0) = -beta_now * iu;
    G(0, 1) = -beta_now * s;
    G(1, 0) = beta_now * iu;
    G(1, 1) = beta_now * s - params.gamma - detect;
    G(2, 1) = params.gamma;
    G(2, 2) = -ser;
    G(3, 1) = detect;
    G(3, 3) = -params.gamma;
    return G;
}

EstimatorState initial_estimate(std::int64_t N, std::int64_t I_max) {
    EstimatorState est;
    est.x_hat << 1.0, 0.0, 0.0, 0.0;
    const double v = (double(I_max) / double(N)) * (double(I_max) / double(N)) / 12.0;
    est.P(0, 0) = v;
    est.P(1, 1) = v;
    return est;
}

EstimatorState predict(const EstimatorState& est, double theta, double dt, const Params& params,
                       double N, double beta_now, double step) {
    if (dt <= 0.0)
        throw std::invalid_argument("predict: dt must be positive");

    EstimatorState out = est;
    double remaining = dt;
    while (remaining > 1e-12) {
        const double h = std::min(step, remaining);

        auto rhs = [&](const Eigen::Vector4d& x, const Eigen::Matrix4d& P)
            -> std::pair<Eigen::Vector4d, Eigen::Matrix4d> {
            const Eigen::Matrix4d G = model_jacobian(x, theta, params, beta_now);
            const Eigen::Matrix4d Q = process_noise(x, theta, params, N, beta_now);
            return {model_rhs(x, theta, params, beta_now),
                    G * P + P * G.transpose() + Q};
        };

        const auto [k1x, k1p] = rhs(out.x_hat, out.P);
        const auto [k2x, k2p] = rhs(out.x_hat + 0.5 * h * k1x, out.P + 0.5 * h * k1p);
        const auto [k3x, k3p] = rhs(out.x_hat + 0.5 * h * k2x, out.P + 0.5 * h * k2p);
        const auto [k4x, k4p] = rhs(out.x_hat + h * k3x, out.P + h * k3p);

        out.x_hat += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        out.P += (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        out.P = 0.5 * (out.P + out.P.transpose()).eval();
        remaining -= h;
    }
    enforce_psd(out.P, -1e-12 * std::max(out.P.trace(), 0.0), "predict");
    out.t = est.t + dt;
    return out;
}

EstimatorState update(const EstimatorState& est, const Observation& obs) {
    obs.validate();
    const auto C = observation_matrix();
    const Eigen::Vector2d y(obs.i_d_obs, obs.r_d_obs);
    const Eigen::Vector2d innovation = y - (C * est.x_hat + observation_offset());

    // R = 0; CPC' can be (near-)singular, e.g. at the zero-covariance start,
    // so the gain goes through the Moore-Penrose pseudo-inverse
    const Eigen::Matrix2d S = C * est.P * C.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(0.5 * (S + S.transpose()));
    const double cutoff = 1e-12 * std::max(eig.eigenvalues().maxCoeff(), 0.0) + 1e-300;
    Eigen::Vector2d inv_d;
    for (int i = 0; i < 2; ++i)
        inv_d[i] = eig.eigenvalues()[i] > cutoff ? 1.0 / eig.eigenvalues()[i] : 0.0;
    const Eigen::Matrix2d S_pinv =
        eig.eigenvectors() * inv_d.asDiagonal() * eig.eigenvectors().transpose();

    const Eigen::Matrix<double, 4, 2> M = est.P * C.transpose();
    const Eigen::Matrix<double, 4, 2> K = M * S_pinv;

    EstimatorState out = est;
    out.x_hat = project_feasible(est.x_hat + K * innovation, obs);
    // (I - KC)P written in its symmetric Schur form; exact arithmetic keeps
    // it PSD, so any small negative eigenvalue is subtraction roundoff
    out.P = est.P - M * S_pinv * M.transpose();
    enforce_psd(out.P, -1e-7 * std::max(est.P.trace(), 1e-300), "update");
    return out;
}

Eigen::Vector4d project_feasible(const Eigen::Vector4d& x, const Observation& obs) {
    obs.validate();
    const double mass = 1.0 - obs.i_d_obs - obs.r_d_obs; // for s + i_u + r_u
    Eigen::Vector3d w(x[0], x[1], x[2]);

    // minimum-distance point over all active sets of the simplex-slice QP
    double best_dist = std::numeric_limits<double>::infinity();
    Eigen::Vector3d best = Eigen::Vector3d::Zero();
    for (int mask = 0; mask < 8; ++mask) {
        int n_free = 0;
        double free_sum = 0.0;
        for (int i = 0; i < 3; ++i)
            if (mask & (1 << i)) {
                ++n_free;
                free_sum += w[i];
            }
        Eigen::Vector3d cand = Eigen::Vector3d::Zero();
        if (n_free == 0) {
            if (mass > 1e-12)
                continue; // cannot carry the mass with everything clamped
        } else {
            const double shift = (mass - free_sum) / n_free;
            bool ok = true;
            for (int i = 0; i < 3; ++i)
                if (mask & (1 << i)) {
                    cand[i] = w[i] + shift;
                    if (cand[i] < -1e-15) {
                        ok = false;
                        break;
                    }
                    cand[i] = std::max(cand[i], 0.0);
                }
            if (!ok)
                continue;
        }
        const double dist = (cand - w).squaredNorm();
        if (dist < best_dist) {
            best_dist = dist;
            best = cand;
        }
    }
    if (!std::isfinite(best_dist))
        throw std::logic_error("project_feasible: feasible set empty for a valid observation");

    Eigen::Vector4d out;
    out << best[0], best[1], best[2], obs.i_d_obs;
    return out;
}

BetaEstimate estimate_beta(std::span<const DailyEstimate> history, const Params& params,
                           double prev_beta) {
    if (history.size() < 8)
        throw std::invalid_argument("estimate_beta: need at least 8 daily records");
    const std::size_t n = history.size();
    const std::size_t first = n - 8; // 7 day-increments ending at the newest record

    BetaEstimate out;
    out.window_start = history[first].est.t;
    out.window_end = history[n - 1].est.t;

    double iu_peak = 0.0;
    for (std::size_t k = first; k < n; ++k)
        iu_peak = std::max(iu_peak, history[k].est.x_hat[1]);
    if (iu_peak < 1e-8) {
        out.beta_hat = prev_beta;
        out.identifiable = false;
        return out;
    }

    auto day_ahead = [&](const Eigen::Vector4d& x0, double theta, double beta,
                         double dt) {
        Eigen::Vector4d x = x0;
        const double h = 0.02;
        double remaining = dt;
        while (remaining > 1e-12) {
            const double hh = std::min(h, remaining);
            const Eigen::Vector4d k1 = model_rhs(x, theta, params, beta);
            const Eigen::Vector4d k2 = model_rhs(x + 0.5 * hh * k1, theta, params, beta);
            const Eigen::Vector4d k3 = model_rhs(x + 0.5 * hh * k2, theta, params, beta);
            const Eigen::Vector4d k4 = model_rhs(x + hh * k3, theta, params, beta);
            x += (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            remaining -= hh;
        }
        return x;
    };

    auto residuals = [&](double beta) {
        Eigen::VectorXd r(2 * (n - 1 - first));
        std::size_t j = 0;
        for (std::size_t k = first; k + 1 < n; ++k) {
            const double dt = history[k + 1].est.t - history[k].est.t;
            const Eigen::Vector4d pred =
                day_ahead(history[k].est.x_hat, history[k].theta_applied, beta, dt);
            r[2 * j] = pred[1] - history[k + 1].est.x_hat[1];     // i_u increment mismatch
            r[2 * j + 1] = pred[3] - history[k + 1].est.x_hat[3]; // i_d increment mismatch
            ++j;
        }
        return r;
    };

    double beta = std::max(0.0, prev_beta);
    Eigen::VectorXd r = residuals(beta);
    for (int it = 0; it < 25; ++it) {
        const double db = 1e-5 * std::max(1.0, beta);
        const Eigen::VectorXd jac = (residuals(beta + db) - residuals(beta - db)) / (2.0 * db);
        const double denom = jac.squaredNorm();
        if (denom <= 0.0)
            break;
        double step = -jac.dot(r) / denom;
        double candidate = std::max(0.0, beta + step);
        Eigen::VectorXd r_new = residuals(candidate);
        int guard = 0;
        while (r_new.squaredNorm() > r.squaredNorm() && guard++ < 20) {
            step *= 0.5;
            candidate = std::max(0.0, beta + step);
            r_new = residuals(candidate);
        }
        const double moved = std::abs(candidate - beta);
        beta = candidate;
        r = r_new;
        if (moved < 1e-10)
            break;
    }
    out.beta_hat = beta;
    out.residual_norm = r.norm();
    return out;
}

} // namespace epitest
