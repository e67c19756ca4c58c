#pragma once

#include <functional>
#include <vector>

#include "epitest/model.hpp"
#include "epitest/params.hpp"

namespace epitest {

/// Numerical demonstrations of what the detected-case record can and cannot
/// identify. Both constructions live on the testing model without
/// symptomatic detection (kappa plays no role and is ignored here).

/// A pair of epidemics with different initial susceptibles and a coupled
/// time-varying transmission rate on the shadow, chosen so both emit the
/// same detected-infected output. The shadow transmission rate
/// beta_bar(t) = beta(t) s(t) / s_bar(t) is realized from the primary run
/// (cubic Hermite in each step), so the two integrations stay genuinely
/// distinct discretizations.
struct TwinRun {
    Trajectory primary;
    Trajectory shadow;
    std::vector<double> beta_shadow; ///< realized beta_bar on the grid
    double sup_id_gap = 0.0;
    double sup_iu_gap = 0.0;
    double sup_s_gap = 0.0;
};

TwinRun counterexample_pair(double s0, double s0_bar, double i0,
                            const std::function<double(double)>& schedule, const Params& params,
                            const BetaSignal& beta, double horizon, double step = 0.01);

/// Uniformly sampled output record handed to the reconstructions.
struct SampledOutput {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> i_d;
    std::vector<double> r_d;    ///< empty for molecular-only records
    std::vector<double> theta;
};

struct ReconstructionOptions {
    bool smooth = false; ///< quadratic Savitzky-Golay prefilter for noisy inputs
    int window = 7;      ///< odd smoothing window length
};

/// State reconstruction from serology-augmented outputs (both detected
/// compartments observed): undetected compartments from the detected-flow
/// balances, s as the simplex remainder, beta from the susceptible
/// depletion. Central differences on the uniform grid; entries where
/// i_u vanishes give non-finite beta. Requires eta*theta + theta_b*eta_bi
/// and theta_b*eta_br positive across the record.
struct SerologyReconstruction {
    std::vector<double> t;
    std::vector<double> i_u;
    std::vector<double> r_u;
    std::vector<double> s;
    std::vector<double> beta;
};
SerologyReconstruction reconstruct_from_serology(const SampledOutput& out, const Params& params,
                                                 const ReconstructionOptions& opts = {});

/// Reconstruction from molecular-only outputs under the constant-beta
/// assumption; requires eta*theta > 0 everywhere. Needs second derivatives
/// of the output, so errors grow one differentiation order faster than the
/// serology route; it exists for contrast, not production use.
struct MolecularReconstruction {
    std::vector<double> t;
    std::vector<double> i_u;
    std::vector<double> s;
    std::vector<double> beta_pointwise;
    double beta_hat = 0.0; ///< median of the pointwise values
};
MolecularReconstruction reconstruct_from_molecular(const SampledOutput& out,
                                                   const Params& params,
                                                   const ReconstructionOptions& opts = {});

} // namespace epitest
