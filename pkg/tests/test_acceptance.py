"""Acceptance gate: every shipped guarantee, one test and one printed
verdict line per criterion, at the stated tolerance.

Run with ``pytest tests/test_acceptance.py -s`` to see the verdict lines.
"""

import numpy as np
import pytest

from rough_scl.characteristics import backward_flow, forward_flow
from rough_scl.config import ConfigError, merge_config
from rough_scl.flux import builtin
from rough_scl.kinetic import Grid, initial_data, solve_pathwise
from rough_scl.roughpath import PwlPath, brownian_pwl, lift_pwl, time_reverse
from rough_scl.validation import (
    run_appendixB_scaling,
    run_bounds,
    run_cancellation,
    run_contraction,
    run_convergence,
    run_flow_stability,
)


def verdict(ok: bool, name: str, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------


def test_algebra_exactness():
    """Chen identity + geometric condition to 1e-12 on 100 random PWL
    paths (dims <= 3, <= 128 segments); time-reverse involution exact."""
    rng = np.random.default_rng(2024)
    worst_chen = worst_geo = worst_inv = 0.0
    for k in range(100):
        dims = int(rng.integers(1, 4))
        nseg = int(rng.integers(1, 129))
        times = np.sort(rng.uniform(0.0, 1.0, nseg + 1))
        times[0], times[-1] = 0.0, 1.0
        while np.any(np.diff(times) <= 1e-9):
            times = np.sort(rng.uniform(0.0, 1.0, nseg + 1))
            times[0], times[-1] = 0.0, 1.0
        pts = np.cumsum(rng.standard_normal((nseg + 1, dims)), axis=0) * 0.4
        z = lift_pwl(PwlPath(times, pts))
        worst_chen = max(worst_chen, z.chen_defect(max_triples=200, rng_seed=k))
        worst_geo = max(worst_geo, z.geometric_defect())
        if k % 5 == 0:
            t1 = float(times[nseg // 2 + (0 if nseg > 1 else 0)])
            if t1 > 0:
                zz = time_reverse(time_reverse(z, t1), t1)
                m = np.searchsorted(times, t1) + 1
                worst_inv = max(
                    worst_inv,
                    float(np.abs(zz.level1 - z.level1[:m]).max()),
                    float(np.abs(zz.level2 - z.level2[:m]).max()),
                )
    ok = worst_chen <= 1e-12 and worst_geo <= 1e-12 and worst_inv <= 1e-12
    verdict(ok, "algebra exactness",
            f"chen={worst_chen:.2e} geometric={worst_geo:.2e} involution={worst_inv:.2e} (tol 1e-12)")


def test_flow_correctness():
    """Round trip <= 1e-8 at steps_per_segment=64 (modulated Burgers,
    Brownian level 6); det(Jacobian) = 1 within 1e-8; zeta-sign invariance
    at every recorded step."""
    flux = builtin("burgers_modulated")
    z = brownian_pwl(42, 1, 6)
    rng = np.random.default_rng(3)
    y = rng.uniform(-1.5, 1.5, (64, 1))
    eta = rng.uniform(-1.2, 1.2, 64)
    fwd = forward_flow(flux, z, 0.0, (y, eta), 1.0, steps_per_segment=64,
                       with_jacobian=True, record=True)
    back = backward_flow(flux, z, 1.0, (fwd.y, fwd.eta), 1.0, steps_per_segment=64)
    rt = max(float(np.abs(back.y - y).max()), float(np.abs(back.eta - eta).max()))
    det = float(np.abs(np.linalg.det(fwd.jacobian) - 1.0).max())
    sign_ok = all(
        np.all(np.sign(ee) == np.sign(eta)) for _, _, ee in fwd.history
    )
    ok = rt <= 1e-8 and det <= 1e-8 and sign_ok
    verdict(ok, "flow correctness",
            f"round_trip={rt:.2e} (tol 1e-8) |detJ-1|={det:.2e} (tol 1e-8) sign_invariance={sign_ok}")


def test_closed_form_oracle():
    """x-independent flux: Y = y + a(eta) (z(t)-z(t0)), zeta = eta, to 1e-10."""
    flux = builtin("burgers_xindep")
    z = brownian_pwl(5, 1, 6)
    rng = np.random.default_rng(4)
    y = rng.uniform(-1.0, 1.0, (64, 1))
    eta = rng.uniform(-1.2, 1.2, 64)
    t0, t = 0.25, 1.0
    res = forward_flow(flux, z, t0, (y, eta), t, steps_per_segment=64)
    dz = float(z.value(t)[0] - z.value(t0)[0])
    err = max(
        float(np.abs(res.y[:, 0] - (y[:, 0] + eta * dz)).max()),
        float(np.abs(res.eta - eta).max()),
    )
    verdict(err <= 1e-10, "closed-form oracle", f"error={err:.2e} (tol 1e-10)")


def test_time_change_oracle():
    """x-independent Burgers with a monotone path matches the deterministic
    solve at reparametrized time, within 5 dx BV(u0), halving with nx."""
    flux = builtin("burgers_xindep")
    tt = np.linspace(0.0, 1.0, 17)
    z = PwlPath(tt, (1.2 * tt**1.5)[:, None])
    tau = 1.2
    bv = 2.0
    errs, bounds = [], []
    for nx in (100, 200, 400):
        g = Grid.create((-3, 4), nx, (-0.5, 1.5), 30)
        u0 = initial_data("cosine_bump", g, center=[0.0], width=1.0, height=1.0)
        pathwise, _ = solve_pathwise(u0, flux, z, g)
        det, _ = solve_pathwise(u0, flux, PwlPath([0.0, tau], [[0.0], [tau]]), g, T=tau)
        errs.append(float(np.abs(pathwise[-1].u - det[-1].u).sum() * g.dx[0]))
        bounds.append(5 * g.dx[0] * bv)
    within = all(e <= b for e, b in zip(errs, bounds))
    halving = errs[1] <= 0.7 * errs[0] and errs[2] <= 0.7 * errs[1]
    verdict(within and halving, "time-change oracle",
            f"errors={[f'{e:.4f}' for e in errs]} bounds={[f'{b:.3f}' for b in bounds]} halving={halving}")


def test_l1_contraction():
    """Theorem-level contraction on the frozen seed-42 Brownian fixture;
    identical data give D == 0 to machine precision."""
    rep = run_contraction()
    ok = rep.passed
    verdict(ok, "L1 contraction",
            f"max_violation={rep.metrics['max_violation']:.2e} (slack rate "
            f"{rep.metrics['slack_rate']:.3f}) identical={rep.metrics['identical_data_distance']:.1e}")


def test_a_priori_bounds():
    """L1 bound to round-off; x-independent entropy balance within 1%;
    mass-bound constant flat across dyadic levels 4-8 while the driver's
    total variation doubles every two levels."""
    rep = run_bounds()
    detail = (
        f"l1_excess={rep.metrics['l1_excess']:.1e} "
        f"entropy_excess={rep.metrics['entropy_excess']:.2e} "
        f"mhat_slope={rep.metrics['mhat_slope']:.4f} (tol {rep.tolerances['mhat_slope']}) "
        f"tv_growth={rep.metrics['tv_growth']:.2f}x"
    )
    verdict(rep.passed, "a priori bounds", detail)


def test_cancellation():
    """Pre-shock tent: first-order return to the initial data; post-shock
    control at nx=400 stays >= 10x larger."""
    rep = run_cancellation()
    errs = rep.series["return_errors"]
    detail = (
        f"errors={[f'{e:.4f}' for e in errs]} order={rep.metrics['decay_order']:.2f} "
        f"postshock_ratio={rep.metrics['postshock_ratio']:.1f} (>= 10)"
    )
    verdict(rep.passed, "cancellation", detail)


def test_convergence_in_driver():
    """Cauchy gaps decrease monotonically for n >= 5 on the frozen seed-7
    sample; gap(8,9) <= 1/2 gap(5,6)."""
    rep = run_convergence()
    gaps = rep.series["gaps"]
    detail = (
        f"gaps={[f'{g:.4f}' for g in gaps]} "
        f"late/early={rep.metrics['late_vs_early_gap']:.2f} (<= 0.5)"
    )
    verdict(rep.passed, "convergence in driver", detail)


def test_appendixB_scaling():
    """Fitted log-log slope >= alpha - 0.15 for the modulated fixture;
    E vanishes to quadrature noise for the x-independent flux."""
    rep = run_appendixB_scaling()
    rep_x = run_appendixB_scaling({"flux": {"name": "burgers_xindep", "params": {}}})
    ok = rep.passed and rep_x.passed
    detail = (
        f"slope={rep.metrics['fitted_slope']:.3f} (>= {0.4 - 0.15:.2f}) "
        f"xindep_E_max={rep_x.metrics['E_max_xindep']:.1e} (<= 1e-8)"
    )
    verdict(ok, "appendix-B scaling", detail)


def test_flow_stability():
    """Lemma-A.1-style ratio varies <= 3x across dyadic pairs, for flow
    values and first derivatives."""
    rep = run_flow_stability()
    detail = (
        f"value_spread={rep.metrics['value_ratio_spread']:.2f} "
        f"jacobian_spread={rep.metrics['jacobian_ratio_spread']:.2f} (<= 3)"
    )
    verdict(rep.passed, "flow stability", detail)


def test_harness_sensitivity():
    """Every negative control fails its suite: corrupted flux derivative,
    zeroed defect ledger, post-shock cancellation."""
    corrupt = run_bounds({"grid": {"nx": 200}, "bounds": {"levels": [4, 5]},
                          "flux": {"params": {"corrupt_a": 1.0}}})
    zeroed = run_bounds({"grid": {"nx": 200}, "bounds": {"levels": [4, 5]},
                         "negative_controls": {"zero_ledger": True}})
    try:
        run_cancellation({"driver": {"height": 2.5}})
        postshock_rejected = False
    except ConfigError:
        postshock_rejected = True
    ok = (not corrupt.passed) and (not zeroed.passed) and postshock_rejected
    detail = (
        f"corrupt_flux_fails={not corrupt.passed} "
        f"zero_ledger_fails={not zeroed.passed} "
        f"postshock_rejected={postshock_rejected}"
    )
    verdict(ok, "harness sensitivity", detail)
