#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "epitest/params.hpp"
#include "epitest/ssa.hpp"

namespace epitest {

/// Filter state ordering is (s, i_u, r_u, i_d): with it the observation
/// matrix C = [[0,0,0,1],[-1,-1,-1,-1]], c = (0,1) reads off exactly
/// (i_d, r_d). The diffusion matrix is permuted to match.
struct EstimatorState {
    Eigen::Vector4d x_hat = Eigen::Vector4d::Zero(); ///< fraction estimates
    Eigen::Matrix4d P = Eigen::Matrix4d::Zero();     ///< covariance [fraction^2]
    double t = 0.0;
};

/// Exact daily counts of the two detected compartments, as fractions.
struct Observation {
    double t_k = 0.0;
    double i_d_obs = 0.0;
    double r_d_obs = 0.0;

    void validate() const {
        if (!(i_d_obs >= 0.0) || !(r_d_obs >= 0.0) || i_d_obs > 1.0 || r_d_obs > 1.0 ||
            i_d_obs + r_d_obs > 1.0 + 1e-12)
            throw std::invalid_argument("Observation: fractions outside the simplex");
    }
};

Eigen::Matrix<double, 2, 4> observation_matrix();
Eigen::Vector2d observation_offset();

/// Deterministic drift and its Jacobian in filter ordering.
Eigen::Vector4d model_rhs(const Eigen::Vector4d& x, double theta, const Params& params,
                          double beta_now);
Eigen::Matrix4d model_jacobian(const Eigen::Vector4d& x, double theta, const Params& params,
                               double beta_now);

/// Everyone susceptible, nothing detected; variance I_max^2/12 (in counts)
/// on the susceptible and undetected-infected estimates.
EstimatorState initial_estimate(std::int64_t N, std::int64_t I_max);

/// Prediction step: the estimate follows the deterministic model and the
/// covariance the linearized Riccati flow dP = GP + PG' + Q with process
/// noise Q = B/N, both advanced by RK4 on the same grid. Throws when P
/// develops a negative eigenvalue below -1e-12 * trace.
EstimatorState predict(const EstimatorState& est, double theta, double dt, const Params& params,
                       double N, double beta_now, double step = 0.01);

/// Measurement update with exact observations (R = 0): Kalman gain through
/// the pseudo-inverse of CPC', then projection onto the feasible set
/// {x >= 0, Cx + c = y}. Output consistency holds exactly afterwards.
EstimatorState update(const EstimatorState& est, const Observation& obs);

/// Euclidean projection onto {x >= 0, x_id = i_d_obs, s+i_u+r_u = 1 - i_d_obs
/// - r_d_obs}, by enumeration of active sets (at most 3 free coordinates).
Eigen::Vector4d project_feasible(const Eigen::Vector4d& x, const Observation& obs);

/// One filtered day: the post-update estimate at its epoch and the testing
/// rate applied over the following day.
struct DailyEstimate {
    EstimatorState est;
    double theta_applied = 0.0;
};

struct BetaEstimate {
    double beta_hat = 0.0;
    double window_start = 0.0;
    double window_end = 0.0;
    double residual_norm = 0.0;
    bool identifiable = true; ///< false: window carried no signal, previous value returned
};

/// Transmission-rate regression over the trailing week of filtered states:
/// beta_hat minimizes the squared mismatch between model-predicted and
/// recorded daily increments of (i_u, i_d), by scalar Gauss-Newton descent
/// started from prev_beta and clamped at zero. Requires at least 8 daily
/// records (7 increments).
BetaEstimate estimate_beta(std::span<const DailyEstimate> history, const Params& params,
                           double prev_beta);

} // namespace epitest
