import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rough_scl.roughpath import (
    GroupElement,
    PwlPath,
    RoughPathError,
    brownian_pwl,
    chen_concat,
    dyadic_approx,
    group_inverse,
    holder_norm,
    identity_element,
    lift_pwl,
    load_path_csv,
    rho_dist,
    save_path_csv,
    time_reverse,
)

from oracles import sig2_by_quadrature

L_PATH = PwlPath([0.0, 1.0, 2.0], [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])


def random_pwl(rng, dims, nseg, T=1.0):
    times = np.linspace(0.0, T, nseg + 1)
    points = np.cumsum(rng.standard_normal((nseg + 1, dims)), axis=0) * 0.3
    points[0] = rng.standard_normal(dims) * 0.1
    return PwlPath(times, points)


# ---------------------------------------------------------------------------
# lift_pwl
# ---------------------------------------------------------------------------

def test_lift_single_segment():
    p = PwlPath([0.0, 1.0], [[0.0, 0.0], [1.0, 0.0]])
    z = lift_pwl(p, level=2)
    g = z.node(1)
    assert np.allclose(g.level1, [1.0, 0.0])
    assert np.allclose(g.level2, [[0.5, 0.0], [0.0, 0.0]])


def test_lift_l_path_levy_area():
    z = lift_pwl(L_PATH, level=2)
    g = z.node(2)
    # oracle: direct evaluation of the double integral
    l1, l2 = sig2_by_quadrature(L_PATH.times, L_PATH.points)
    assert np.allclose(g.level1, l1, atol=1e-12)
    assert np.allclose(g.level2, l2, atol=1e-12)
    assert g.level2[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert g.level2[1, 0] == pytest.approx(0.0, abs=1e-12)
    assert g.levy_area()[0, 1] == pytest.approx(0.5, abs=1e-12)


def test_lift_constant_path_is_identity():
    p = PwlPath([0.0, 0.5, 1.0], np.ones((3, 2)) * 0.7)
    g = lift_pwl(p).node(2)
    assert np.allclose(g.level1, 0.0)
    assert np.allclose(g.level2, 0.0)


def test_lift_matches_quadrature_oracle_random():
    rng = np.random.default_rng(5)
    for _ in range(5):
        p = random_pwl(rng, 3, 17)
        z = lift_pwl(p)
        l1, l2 = sig2_by_quadrature(p.times, p.points)
        assert np.allclose(z.node(17).level1, l1, atol=1e-10)
        assert np.allclose(z.node(17).level2, l2, atol=1e-10)


def test_lift_rejects_bad_grid():
    with pytest.raises(RoughPathError):
        PwlPath([0.0, 0.0, 1.0], np.zeros((3, 1)))
    with pytest.raises(RoughPathError):
        lift_pwl(PwlPath([0.0, 1.0], np.zeros((2, 1))), level=3)


# ---------------------------------------------------------------------------
# group operations
# ---------------------------------------------------------------------------

def test_concat_identity_and_inverse():
    rng = np.random.default_rng(0)
    p = random_pwl(rng, 2, 7)
    g = lift_pwl(p).node(7)
    e = identity_element(2)
    for h in (chen_concat(e, g), chen_concat(g, e)):
        assert np.allclose(h.level1, g.level1)
        assert np.allclose(h.level2, g.level2)
    gi = chen_concat(g, group_inverse(g))
    assert np.allclose(gi.level1, 0.0, atol=1e-14)
    assert np.allclose(gi.level2, 0.0, atol=1e-14)


def test_concat_of_segments_matches_two_segment_lift():
    p1 = PwlPath([0.0, 1.0], [[0.0, 0.0], [0.3, -0.4]])
    p2 = PwlPath([1.0, 2.0], [[0.3, -0.4], [1.1, 0.2]])
    g = chen_concat(lift_pwl(p1).node(1), lift_pwl(p2).node(1))
    both = PwlPath([0.0, 1.0, 2.0], [[0.0, 0.0], [0.3, -0.4], [1.1, 0.2]])
    l1, l2 = sig2_by_quadrature(both.times, both.points)
    assert np.allclose(g.level1, l1, atol=1e-12)
    assert np.allclose(g.level2, l2, atol=1e-12)


def test_inverse_of_segment_is_reversed_segment():
    d = np.array([0.8, -0.6])
    seg = PwlPath([0.0, 1.0], [[0.0, 0.0], d])
    g = group_inverse(lift_pwl(seg).node(1))
    assert np.allclose(g.level1, -d)
    assert np.allclose(g.level2, 0.5 * np.outer(d, d))
    rev = lift_pwl(PwlPath([0.0, 1.0], [d, [0.0, 0.0]])).node(1)
    assert np.allclose(g.level1, rev.level1)
    assert np.allclose(g.level2, rev.level2)


def test_double_inverse_is_identity_map():
    g = GroupElement([1.0, 2.0], [[0.5, 3.0], [-1.0, 2.0]])
    gg = group_inverse(group_inverse(g))
    assert np.allclose(gg.level1, g.level1)
    assert np.allclose(gg.level2, g.level2)


def test_inverse_of_identity():
    e = identity_element(3)
    ei = group_inverse(e)
    assert np.allclose(ei.level1, 0.0)
    assert np.allclose(ei.level2, 0.0)


def test_concat_dimension_mismatch():
    with pytest.raises(RoughPathError):
        chen_concat(identity_element(2), identity_element(3))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_group_law_properties(seed):
    rng = np.random.default_rng(seed)
    p = random_pwl(rng, 2, 5)
    za = lift_pwl(p)
    g, h = za.sig(0, 3), za.sig(3, 5)
    # associativity against a third element
    k = group_inverse(za.sig(1, 4))
    lhs = chen_concat(chen_concat(g, h), k)
    rhs = chen_concat(g, chen_concat(h, k))
    assert np.allclose(lhs.level1, rhs.level1, atol=1e-12)
    assert np.allclose(lhs.level2, rhs.level2, atol=1e-12)
    # geometric condition preserved by concat and inverse
    assert chen_concat(g, h).geometric_defect() < 1e-12
    assert group_inverse(g).geometric_defect() < 1e-12


# ---------------------------------------------------------------------------
# structural invariants
# ---------------------------------------------------------------------------

def test_chen_and_geometric_invariants_random_paths():
    rng = np.random.default_rng(42)
    for _ in range(10):
        p = random_pwl(rng, 3, int(rng.integers(2, 40)))
        z = lift_pwl(p)
        assert z.chen_defect() < 1e-12
        assert z.geometric_defect() < 1e-12


def test_identity_node_at_start():
    z = lift_pwl(L_PATH)
    assert np.allclose(z.node(0).level1, 0.0)
    assert np.allclose(z.node(0).level2, 0.0)


# ---------------------------------------------------------------------------
# time reversal
# ---------------------------------------------------------------------------

def test_reverse_straight_segment():
    seg = PwlPath([0.0, 1.0], [[0.0], [2.0]])
    z = lift_pwl(seg)
    rz = time_reverse(z, 1.0)
    assert np.allclose(rz.node(1).level1, [-2.0])


def test_reverse_involution():
    rng = np.random.default_rng(3)
    p = random_pwl(rng, 2, 16)
    z = lift_pwl(p)
    t1 = float(p.times[10])
    zz = time_reverse(time_reverse(z, t1), t1)
    assert np.allclose(zz.times, z.times[:11], atol=1e-12)
    assert np.allclose(zz.level1, z.level1[:11], atol=1e-13)
    assert np.allclose(zz.level2, z.level2[:11], atol=1e-13)


def test_reverse_l_path_flips_levy_area():
    z = lift_pwl(L_PATH)
    rz = time_reverse(z, 2.0)
    # oracle: lift of the pointwise-reversed PWL path
    rev = lift_pwl(L_PATH.reversed())
    assert np.allclose(rz.level1, rev.level1, atol=1e-12)
    assert np.allclose(rz.level2, rev.level2, atol=1e-12)
    assert rz.node(2).levy_area()[0, 1] == pytest.approx(-0.5, abs=1e-12)


def test_reverse_requires_grid_node():
    z = lift_pwl(L_PATH)
    with pytest.raises(RoughPathError):
        time_reverse(z, 0.37)


def test_reverse_preserves_holder_norm_full_interval():
    rng = np.random.default_rng(11)
    p = random_pwl(rng, 2, 12)
    z = lift_pwl(p)
    rz = time_reverse(z, float(p.times[-1]))
    assert holder_norm(rz, 0.5) == pytest.approx(holder_norm(z, 0.5), rel=1e-12)


# ---------------------------------------------------------------------------
# norms and distances
# ---------------------------------------------------------------------------

def test_holder_norm_linear_path():
    v = np.array([3.0, -4.0])  # |v| = 5
    p = PwlPath([0.0, 0.5, 1.0], np.outer([0.0, 0.5, 1.0], v))
    z = lift_pwl(p, level=1)
    assert holder_norm(z, 1.0) == pytest.approx(5.0, rel=1e-12)


def test_holder_norm_scaling_homogeneity():
    rng = np.random.default_rng(8)
    p = random_pwl(rng, 2, 9)
    lam = -2.5
    z1 = lift_pwl(PwlPath(p.times, p.points), level=1)
    z2 = lift_pwl(PwlPath(p.times, lam * p.points), level=1)
    assert holder_norm(z2, 0.4) == pytest.approx(abs(lam) * holder_norm(z1, 0.4), rel=1e-12)


def test_rho_dist_zero_on_self_and_symmetry():
    rng = np.random.default_rng(9)
    p = random_pwl(rng, 2, 9)
    q = random_pwl(rng, 2, 9)
    zp, zq = lift_pwl(p), lift_pwl(q)
    assert rho_dist(zp, zp, 0.45) == 0.0
    assert rho_dist(zp, zq, 0.45) == pytest.approx(rho_dist(zq, zp, 0.45), rel=1e-12)
    assert rho_dist(zp, zq, 0.45) > 0


# ---------------------------------------------------------------------------
# Brownian drivers
# ---------------------------------------------------------------------------

def test_brownian_deterministic_given_seed():
    a = brownian_pwl(123, 2, 5)
    b = brownian_pwl(123, 2, 5)
    assert np.array_equal(a.points, b.points)
    c = brownian_pwl(124, 2, 5)
    assert not np.array_equal(a.points, c.points)


def test_brownian_endpoint_variance():
    T = 1.7
    vals = np.array([brownian_pwl(s, 2, 3, T).points[-1] for s in range(10000)])
    var = vals.var(axis=0)
    assert np.all(np.abs(var - T) / T < 0.05)


def test_brownian_nested_refinement():
    for n in range(0, 6):
        coarse = brownian_pwl(77, 2, n)
        fine = brownian_pwl(77, 2, n + 1)
        down = dyadic_approx(fine, n)
        assert np.allclose(down.times, coarse.times, atol=1e-15)
        assert np.allclose(down.points, coarse.points, atol=1e-15)


def test_brownian_lift_is_geometric():
    z = lift_pwl(brownian_pwl(5, 3, 6))
    assert z.geometric_defect() < 1e-12


def test_brownian_increment_variance_per_coordinate():
    # increments at the native level have variance T / 2^n
    T, n = 2.0, 6
    incs = np.concatenate(
        [np.diff(brownian_pwl(s, 1, n, T).points, axis=0).ravel() for s in range(300)]
    )
    assert abs(incs.var() - T / 2**n) / (T / 2**n) < 0.05


# ---------------------------------------------------------------------------
# dyadic approximation
# ---------------------------------------------------------------------------

def test_dyadic_approx_native_level_identity():
    p = brownian_pwl(1, 2, 4)
    q = dyadic_approx(p, 4)
    assert np.array_equal(p.points, q.points)


def test_dyadic_approx_constant_path():
    p = PwlPath(np.linspace(0, 1, 17), np.full((17, 2), 3.3))
    for n in range(5):
        q = dyadic_approx(p, n)
        assert np.allclose(q.points, 3.3)


def test_dyadic_approx_rejects_finer_than_native():
    p = brownian_pwl(1, 1, 3)
    with pytest.raises(RoughPathError):
        dyadic_approx(p, 4)


def test_rho_dist_decay_between_consecutive_levels():
    """Regression table: consecutive-level distances for the frozen sample."""
    alpha = 0.35
    z = {n: lift_pwl(brownian_pwl(5, 2, n), alpha=alpha) for n in range(4, 10)}
    gaps = [rho_dist(z[n], z[n + 1], alpha) for n in range(4, 9)]
    assert all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))
    frozen = [0.68597, 0.56423, 0.50179, 0.38144, 0.37606]
    assert np.allclose(gaps, frozen, rtol=1e-3)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_csv_roundtrip(tmp_path):
    p = brownian_pwl(9, 3, 4)
    fn = tmp_path / "path.csv"
    save_path_csv(p, fn)
    q = load_path_csv(fn)
    assert np.array_equal(p.times, q.times)
    assert np.array_equal(p.points, q.points)


def test_csv_rejects_garbage(tmp_path):
    fn = tmp_path / "bad.csv"
    fn.write_text("t,z1\n0.0,1.0\nnope,2.0\n")
    with pytest.raises(RoughPathError):
        load_path_csv(fn)
    fn.write_text("")
    with pytest.raises(RoughPathError):
        load_path_csv(fn)
