#pragma once

#include <stdexcept>
#include <string>

namespace epitest {

/// Epidemiological and testing constants. All rates are per day,
/// sensitivities and the serology cost factor are dimensionless.
/// Defaults are the COVID-19 literature values used throughout.
struct Params {
    double beta = 0.3;            ///< transmission rate
    double gamma = 1.0 / 14.0;    ///< recovery rate
    double kappa = 0.04;          ///< symptom-driven detection rate
    double eta = 0.9;             ///< molecular test sensitivity
    double eta_bi = 0.6;          ///< serology sensitivity, current infections
    double eta_br = 0.8;          ///< serology sensitivity, past infections
    double theta_b = 0.0;         ///< baseline serology testing rate
    double theta_max = 2.0 / 7.0; ///< maximum adaptive testing rate
    double c_ser = 0.4;           ///< serology cost relative to molecular

    /// Combined exit rate of the infected-undetected compartment under
    /// adaptive rate `theta` (everything except recovery-free infection).
    double detection_rate(double theta) const {
        return eta * theta + kappa + theta_b * eta_bi;
    }

    /// Throws std::invalid_argument on a value outside its admissible range.
    void validate() const {
        auto nonneg = [](double v, const char* name) {
            if (!(v >= 0.0))
                throw std::invalid_argument(std::string("Params: ") + name + " must be >= 0");
        };
        nonneg(beta, "beta");
        nonneg(gamma, "gamma");
        nonneg(kappa, "kappa");
        nonneg(eta, "eta");
        nonneg(eta_bi, "eta_bi");
        nonneg(eta_br, "eta_br");
        nonneg(theta_b, "theta_b");
        nonneg(theta_max, "theta_max");
        nonneg(c_ser, "c_ser");
        if (eta > 1.0 || eta_bi > 1.0 || eta_br > 1.0)
            throw std::invalid_argument("Params: sensitivities must be <= 1");
    }
};

} // namespace epitest
