#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace epitest {

/// Time-indexed transmission rate beta(t). Either constant, sinusoidal
/// (seasonal forcing), or piecewise-constant samples on a time grid.
class BetaSignal {
public:
    BetaSignal() : kind_(Kind::Constant), center_(0.3) {}

    static BetaSignal constant(double beta) {
        BetaSignal b;
        b.kind_ = Kind::Constant;
        b.center_ = beta;
        return b;
    }

    static BetaSignal sinusoidal(double center, double amplitude, double period) {
        if (period <= 0.0)
            throw std::invalid_argument("BetaSignal: period must be positive");
        BetaSignal b;
        b.kind_ = Kind::Sinusoidal;
        b.center_ = center;
        b.amplitude_ = amplitude;
        b.period_ = period;
        return b;
    }

    /// Piecewise-constant: value samples[i] applies on [times[i], times[i+1]).
    static BetaSignal piecewise(std::vector<double> times, std::vector<double> values) {
        if (times.size() != values.size() || times.empty())
            throw std::invalid_argument("BetaSignal: times/values size mismatch");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (times[i] <= times[i - 1])
                throw std::invalid_argument("BetaSignal: times must be strictly increasing");
        BetaSignal b;
        b.kind_ = Kind::Piecewise;
        b.times_ = std::move(times);
        b.values_ = std::move(values);
        return b;
    }

    double operator()(double t) const {
        switch (kind_) {
        case Kind::Constant:
            return center_;
        case Kind::Sinusoidal:
            return center_ + amplitude_ * std::sin(2.0 * std::numbers::pi * t / period_);
        case Kind::Piecewise: {
            auto it = std::upper_bound(times_.begin(), times_.end(), t);
            if (it == times_.begin())
                return values_.front();
            return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
        }
        }
        return center_;
    }

    bool is_constant() const { return kind_ == Kind::Constant; }

    /// Throws if the signal can go negative anywhere in [0, horizon].
    void validate(double horizon) const {
        if (kind_ == Kind::Constant && center_ < 0.0)
            throw std::invalid_argument("BetaSignal: negative constant rate");
        if (kind_ == Kind::Sinusoidal && center_ - std::abs(amplitude_) < 0.0)
            throw std::invalid_argument("BetaSignal: sinusoidal rate dips below zero");
        if (kind_ == Kind::Piecewise) {
            for (std::size_t i = 0; i < times_.size(); ++i)
                if (times_[i] <= horizon && values_[i] < 0.0)
                    throw std::invalid_argument("BetaSignal: negative piecewise sample");
        }
    }

private:
    enum class Kind { Constant, Sinusoidal, Piecewise };
    Kind kind_;
    double center_ = 0.0;
    double amplitude_ = 0.0;
    double period_ = 1.0;
    std::vector<double> times_;
    std::vector<double> values_;
};

} // namespace epitest
