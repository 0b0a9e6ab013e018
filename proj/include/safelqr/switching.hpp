#pragma once

#include <Eigen/Dense>

namespace safelqr {

enum class Mode {
    Primary,   ///< u = K1 x
    Fallback,  ///< u = K0 x
};

const char* mode_name(Mode mode);

/// Parameters of the switched control law: apply the primary gain by
/// default, fall back to the certified gain for `dwell` consecutive steps
/// whenever the state 2-norm reaches `threshold`.
struct SwitchConfig {
    Eigen::MatrixXd fallback_gain;  ///< K0, m x n, assumed stabilizing
    Eigen::MatrixXd primary_gain;   ///< K1, m x n, no stability assumption
    double threshold = 0.0;         ///< M > 0; +infinity disables switching
    int dwell = 1;                  ///< t >= 1

    /// Checks dimensions and parameter ranges. Whether the fallback gain
    /// actually stabilizes the plant is a certificates-module question; this
    /// type never sees (A, B).
    void validate() const;
};

/// Controller memory: number of fallback steps still owed after the current
/// one. Zero means the next decision is free to use the primary gain.
struct SwitchState {
    int remaining = 0;  ///< counter xi, 0 <= xi <= dwell
};

/// One switching decision. `triggered` marks the exact step that opened a
/// new fallback episode, i.e. the event that the applied input differs from
/// the primary feedback because the threshold was reached.
struct ControlDecision {
    Eigen::VectorXd u;
    Mode mode = Mode::Primary;
    bool triggered = false;
    SwitchState next;
};

/// One step of the switching logic:
///
///   if xi > 0:            u = K0 x
///   else if |x| >= M:     xi = t, u = K0 x   (triggered)
///   else:                 u = K1 x
///   xi' = max(xi - 1, 0)
///
/// Pure function; the threshold comparison is >= (a state landing exactly
/// on M triggers).
ControlDecision switch_step(const Eigen::VectorXd& x, SwitchState state,
                            const SwitchConfig& config);

}  // namespace safelqr
