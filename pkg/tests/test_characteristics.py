import numpy as np
import pytest

from rough_scl.characteristics import (
    BlowUpError,
    CharState,
    backward_flow,
    flow_jacobian,
    forward_flow,
    forward_flow_level2,
    save_trajectory_csv,
)
from rough_scl.flux import builtin
from rough_scl.roughpath import PwlPath, brownian_pwl, dyadic_approx, lift_pwl, holder_norm

BURGERS = builtin("burgers_xindep")
MODULATED = builtin("burgers_modulated")
DIAGONAL = builtin("diagonal_multipath", {"dims": 2})


def seed_states(rng, n, N):
    y = rng.uniform(-1.5, 1.5, (n, N))
    eta = rng.uniform(-1.2, 1.2, n)
    return y, eta


# ---------------------------------------------------------------------------
# forward flow
# ---------------------------------------------------------------------------

def test_xindep_closed_form():
    """zeta stays at eta and Y translates by a(eta) * (z(t) - z(t0))."""
    z = brownian_pwl(3, 1, 5, T=1.0)
    rng = np.random.default_rng(0)
    y, eta = seed_states(rng, 32, 1)
    t0, t = 0.25, 0.875
    res = forward_flow(BURGERS, z, t0, (y, eta), t, steps_per_segment=16)
    dz = z.value(t)[0] - z.value(t0)[0]
    assert np.allclose(res.eta, eta, atol=1e-14)
    assert np.allclose(res.y[:, 0], y[:, 0] + eta * dz, atol=1e-10)


def test_eta_zero_stays_zero():
    z = brownian_pwl(4, 1, 4)
    for flux in (BURGERS, MODULATED):
        res = forward_flow(
            flux, z, 0.0, (np.array([[0.3]]), np.array([0.0])), 1.0,
            steps_per_segment=32, record=True,
        )
        for _, _, eta in res.history:
            assert np.allclose(eta, 0.0, atol=1e-15)


def test_constant_signal_freezes_state():
    z = PwlPath([0.0, 1.0], [[2.0], [2.0]])
    s0 = CharState([0.7], -0.4)
    res = forward_flow(MODULATED, z, 0.0, s0, 1.0)
    assert np.allclose(res.y, s0.y)
    assert res.eta == pytest.approx(s0.eta)


def test_zeta_sign_invariance_along_trajectory():
    z = brownian_pwl(8, 1, 6)
    rng = np.random.default_rng(5)
    y, eta = seed_states(rng, 64, 1)
    res = forward_flow(MODULATED, z, 0.0, (y, eta), 1.0,
                       steps_per_segment=16, record=True)
    for _, _, e in res.history:
        assert np.all(np.sign(e) == np.sign(eta))


def test_flow_composition_property():
    z = brownian_pwl(12, 1, 5)
    rng = np.random.default_rng(2)
    y, eta = seed_states(rng, 16, 1)
    mid = forward_flow(MODULATED, z, 0.0, (y, eta), 0.5, steps_per_segment=32)
    end_a = forward_flow(MODULATED, z, 0.5, (mid.y, mid.eta), 1.0, steps_per_segment=32)
    end_b = forward_flow(MODULATED, z, 0.0, (y, eta), 1.0, steps_per_segment=32)
    assert np.allclose(end_a.y, end_b.y, atol=1e-10)
    assert np.allclose(end_a.eta, end_b.eta, atol=1e-10)


def test_multipath_diagonal_flow_runs():
    z = brownian_pwl(21, 2, 5)
    rng = np.random.default_rng(7)
    y, eta = seed_states(rng, 8, 2)
    res = forward_flow(DIAGONAL, z, 0.0, (y, eta), 1.0, steps_per_segment=16)
    assert res.y.shape == (8, 2)
    assert np.all(np.isfinite(res.y))


def test_blowup_guard():
    # huge artificial driver makes the state explode past the bound
    z = PwlPath([0.0, 1.0], [[0.0], [1e9]])
    with pytest.raises(BlowUpError):
        forward_flow(MODULATED, z, 0.0, CharState([0.1], 1.0), 1.0, blowup=1e4)


# ---------------------------------------------------------------------------
# backward flow
# ---------------------------------------------------------------------------

def test_backward_tau_zero_is_identity():
    z = brownian_pwl(3, 1, 4)
    s0 = CharState([0.2], 0.9)
    res = backward_flow(MODULATED, z, 1.0, s0, 0.0)
    assert np.allclose(res.y, s0.y)
    assert res.eta == pytest.approx(s0.eta)


def test_backward_is_reversed_path_flow():
    """Integrating backwards equals flowing forward along z(t1 - .)."""
    z = brownian_pwl(17, 1, 5)
    t1 = 1.0
    rng = np.random.default_rng(3)
    y, eta = seed_states(rng, 8, 1)
    tau = 0.625
    direct = backward_flow(MODULATED, z, t1, (y, eta), tau, steps_per_segment=64)
    zr = z.reversed(t1)
    alt = forward_flow(MODULATED, zr, 0.0, (y, eta), tau, steps_per_segment=64)
    assert np.allclose(direct.y, alt.y, atol=1e-9)
    assert np.allclose(direct.eta, alt.eta, atol=1e-9)


def test_round_trip_regression():
    """Frozen tolerance: forward then backward at steps_per_segment=64."""
    z = brownian_pwl(42, 1, 6)
    rng = np.random.default_rng(9)
    y, eta = seed_states(rng, 48, 1)
    fwd = forward_flow(MODULATED, z, 0.0, (y, eta), 1.0, steps_per_segment=64)
    back = backward_flow(MODULATED, z, 1.0, (fwd.y, fwd.eta), 1.0, steps_per_segment=64)
    err = max(np.abs(back.y[:, 0] - y[:, 0]).max(), np.abs(back.eta - eta).max())
    assert err <= 1e-8


def test_backward_sign_invariance():
    z = brownian_pwl(13, 1, 5)
    rng = np.random.default_rng(31)
    y, eta = seed_states(rng, 32, 1)
    res = backward_flow(MODULATED, z, 1.0, (y, eta), 1.0, steps_per_segment=16)
    assert np.all(np.sign(res.eta) == np.sign(eta))


# ---------------------------------------------------------------------------
# Jacobians
# ---------------------------------------------------------------------------

def test_jacobian_identity_at_t0():
    z = brownian_pwl(1, 1, 3)
    J = flow_jacobian(MODULATED, z, 0.5, CharState([0.1], 0.3), 0.5)
    assert np.allclose(J, np.eye(2))


def test_jacobian_xindep_eta_derivative():
    z = brownian_pwl(2, 1, 5)
    J = flow_jacobian(BURGERS, z, 0.0, CharState([0.4], 0.8), 1.0, steps_per_segment=32)
    assert J[1, 1] == pytest.approx(1.0, abs=1e-12)
    assert J[1, 0] == pytest.approx(0.0, abs=1e-12)


def test_jacobian_matches_finite_differences():
    z = brownian_pwl(6, 1, 5)
    s0 = CharState([0.3], 0.7)
    J = flow_jacobian(MODULATED, z, 0.0, s0, 1.0, steps_per_segment=64)
    h = 1e-4
    fd = np.zeros((2, 2))
    for j, (dy, de) in enumerate([(h, 0.0), (0.0, h)]):
        plus = forward_flow(MODULATED, z, 0.0,
                            CharState([s0.y[0] + dy], s0.eta + de), 1.0, 64)
        minus = forward_flow(MODULATED, z, 0.0,
                             CharState([s0.y[0] - dy], s0.eta - de), 1.0, 64)
        fd[0, j] = (plus.y[0] - minus.y[0]) / (2 * h)
        fd[1, j] = (plus.eta - minus.eta) / (2 * h)
    assert np.max(np.abs(J - fd)) <= 1e-6


@pytest.mark.parametrize("flux,dims,seed", [
    (BURGERS, 1, 3), (MODULATED, 1, 4), (DIAGONAL, 2, 5),
])
def test_measure_preservation(flux, dims, seed):
    """det of the flow Jacobian is 1: the field (a.v, -b.v) is divergence free."""
    z = brownian_pwl(seed, dims, 5)
    rng = np.random.default_rng(seed)
    y, eta = seed_states(rng, 12, dims)
    res = forward_flow(flux, z, 0.0, (y, eta), 1.0,
                       steps_per_segment=64, with_jacobian=True)
    dets = np.linalg.det(res.jacobian)
    assert np.allclose(dets, 1.0, atol=1e-8)


def test_level2_stepper_cross_checks_pwl_route():
    """The direct signature stepper converges to the per-segment integrator."""
    flux = builtin("burgers_two_signals")
    zfine = brownian_pwl(3, 2, 9)
    rng = np.random.default_rng(0)
    y = rng.uniform(-1.0, 1.0, (16, 1))
    eta = rng.uniform(-0.8, 0.8, 16)
    ref = forward_flow(flux, zfine, 0.0, (y, eta), 1.0, steps_per_segment=16)
    errs = []
    for n in (5, 7, 9):
        zl = lift_pwl(dyadic_approx(zfine, n))
        got = forward_flow_level2(flux, zl, (y, eta))
        errs.append(max(np.abs(got.y - ref.y).max(), np.abs(got.eta - ref.eta).max()))
    assert errs[2] < errs[1] < errs[0]
    assert errs[2] <= 5e-3


def test_level2_stepper_requires_level2_data():
    flux = builtin("burgers_modulated")
    z1 = lift_pwl(brownian_pwl(1, 1, 3), level=1)
    with pytest.raises(ValueError):
        forward_flow_level2(flux, z1, CharState([0.0], 0.5))


def test_trajectory_csv_export(tmp_path):
    flux = builtin("burgers_modulated")
    z = brownian_pwl(2, 1, 3)
    res = forward_flow(flux, z, 0.0, CharState([0.3], 0.5), 1.0, record=True)
    fn = tmp_path / "traj.csv"
    save_trajectory_csv(res.history, fn)
    rows = fn.read_text().strip().splitlines()
    assert rows[0] == "t,y1,eta"
    assert len(rows) == len(res.history) + 1


def test_holder_bound_stable_across_dyadic_levels():
    """Empirical constant sup |zeta - eta| / t^alpha is stable under refinement."""
    alpha = 0.4
    rng = np.random.default_rng(14)
    y, eta = seed_states(rng, 24, 1)
    consts = []
    for n in range(4, 9):
        z = brownian_pwl(99, 1, n)
        res = forward_flow(MODULATED, z, 0.0, (y, eta), 1.0,
                           steps_per_segment=8, record=True)
        ratios = []
        for t, _, e in res.history[1:]:
            ratios.append(np.abs(e - eta).max() / t**alpha)
        consts.append(max(ratios))
    consts = np.array(consts)
    assert consts.max() / consts.min() <= 1.0 + 2 * 0.2  # +-20% band
