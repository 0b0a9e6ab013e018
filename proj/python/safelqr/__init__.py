"""Switched LQR safety toolkit.

A thin Python layer over the C++ core: Riccati design, quadratic stability
certificates with their closed-form safety/optimality bounds, the threshold
switching law, and reproducible Monte Carlo cost estimation.
"""

from safelqr._core import (  # noqa: F401
    CommonCertificate,
    ControlDecision,
    CostEstimate,
    FallbackCertificate,
    LinearPlant,
    LQWeights,
    Mode,
    RiccatiSolution,
    SafelqrError,
    SteinForm,
    SwitchAnalysis,
    SwitchConfig,
    SwitchState,
    __version__,
    analyze_switching,
    build_common_certificate,
    build_fallback_certificate,
    certainty_equivalent_gain,
    cholesky_factor,
    common_certificate_margins,
    dare_solve,
    demo_plant,
    demo_weights,
    estimate_cost_linear,
    estimate_cost_switched,
    fallback_certificate_margin,
    fallback_probability_bound,
    fourth_moment_bound,
    gap_decay_rate,
    least_squares_fit,
    linear_feedback_cost,
    lyapunov_energy_bound,
    process_gramian,
    rollout_switched,
    sample_noise,
    schedule,
    solve_stein,
    spectral_radius,
    standin_plant,
    standin_weights,
    switch_step,
    switched_cost_bound,
    switching_gap_bound,
    threshold_floor,
    weighted_matrix_norm,
    weighted_operator_norm,
)
