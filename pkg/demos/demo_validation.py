# The validation harness end to end: run every suite at its shipped
# defaults and print the verdicts with their headline numbers.
#
# Run: python demos/demo_validation.py

from rough_scl.validation import SUITES

HEADLINES = {
    "contraction": ("max_violation", "slack_rate"),
    "bounds": ("mhat_slope", "tv_growth", "kinetic_residual"),
    "cancellation": ("decay_order", "postshock_ratio"),
    "convergence": ("late_vs_early_gap", "empirical_rate_per_level"),
    "appendixB": ("fitted_slope",),
    "flowstability": ("value_ratio_spread", "jacobian_ratio_spread"),
}

for name, suite in SUITES.items():
    rep = suite()
    nums = "  ".join(
        f"{k}={rep.metrics[k]:.4g}" for k in HEADLINES[name] if k in rep.metrics
    )
    print(f"{name:14s} {'pass' if rep.passed else 'FAIL'}  "
          f"[{rep.timing_seconds:5.1f}s]  {nums}")
