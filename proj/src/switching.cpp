#include "safelqr/switching.hpp"

#include <cmath>

#include "safelqr/errors.hpp"

namespace safelqr {

const char* mode_name(Mode mode) {
    return mode == Mode::Primary ? "primary" : "fallback";
}

void SwitchConfig::validate() const {
    if (fallback_gain.rows() != primary_gain.rows() ||
        fallback_gain.cols() != primary_gain.cols()) {
        throw DimensionError("fallback and primary gains must have equal shapes");
    }
    if (fallback_gain.size() == 0) {
        throw DimensionError("gains must be non-empty");
    }
    if (!fallback_gain.allFinite() || !primary_gain.allFinite()) {
        throw ValidityError("gains contain non-finite entries");
    }
    // +infinity is the documented never-trigger sentinel; NaN and
    // non-positive thresholds are rejected.
    if (std::isnan(threshold) || threshold <= 0.0) {
        throw DomainError("threshold must be positive (or +inf to disable)");
    }
    if (dwell < 1) {
        throw DomainError("dwell time must be at least 1");
    }
}

ControlDecision switch_step(const Eigen::VectorXd& x, SwitchState state,
                            const SwitchConfig& config) {
    config.validate();
    if (x.size() != config.primary_gain.cols()) {
        throw DimensionError("state dimension does not match the gains");
    }
    if (!x.allFinite()) {
        throw ValidityError("state contains non-finite entries");
    }
    if (state.remaining < 0) {
        throw ValidityError("switch counter must be nonnegative");
    }

    ControlDecision out;
    int xi = state.remaining;
    if (xi > 0) {
        out.u = config.fallback_gain * x;
        out.mode = Mode::Fallback;
    } else if (x.norm() >= config.threshold) {
        xi = config.dwell;
        out.u = config.fallback_gain * x;
        out.mode = Mode::Fallback;
        out.triggered = true;
    } else {
        out.u = config.primary_gain * x;
        out.mode = Mode::Primary;
    }
    out.next.remaining = std::max(xi - 1, 0);
    return out;
}

}  // namespace safelqr
