"""Geometric alpha-Hoelder rough paths truncated at tensor level 2.

A driving signal is represented in one of two forms:

* :class:`PwlPath` -- a piecewise-linear sample path ``t -> z(t)`` in R^M.
  This is the object the characteristic integrators consume directly.
* :class:`GeometricRoughPath` -- the signal enhanced with its iterated
  integrals: per grid node the step-2 signature over ``[t_0, t_k]``,
  stored as cumulative group elements.  Pairwise signatures are derived
  by ``inverse + concat`` so storage stays O(K).

Only Hoelder exponents in (1/3, 1] are supported, so two tensor levels
suffice.  Norms and distances use the inhomogeneous tensor norm
``|g| = max_k |pi_k(g)|^(1/k)`` evaluated over all grid pairs; this is a
grid-restricted lower bound of the continuum supremum.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GroupElement",
    "PwlPath",
    "GeometricRoughPath",
    "identity_element",
    "chen_concat",
    "group_inverse",
    "lift_pwl",
    "time_reverse",
    "holder_norm",
    "rho_dist",
    "brownian_pwl",
    "dyadic_approx",
    "save_path_csv",
    "load_path_csv",
]


class RoughPathError(ValueError):
    """Invalid rough-path input (bad grid, dimension mismatch, ...)."""


# ---------------------------------------------------------------------------
# group elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupElement:
    """One point of the step-2 free nilpotent group over R^M.

    ``level1`` is the increment, ``level2`` the matrix of second-order
    iterated integrals.  The constant 0-th tensor level is fixed at 1 and
    not stored.  For elements coming from lifts of paths the symmetric
    part of ``level2`` equals ``0.5 * outer(level1, level1)``.
    """

    level1: np.ndarray
    level2: np.ndarray | None = None

    def __post_init__(self):
        l1 = np.atleast_1d(np.asarray(self.level1, dtype=float))
        object.__setattr__(self, "level1", l1)
        if self.level2 is not None:
            l2 = np.asarray(self.level2, dtype=float)
            if l2.shape != (l1.size, l1.size):
                raise RoughPathError(
                    f"level2 shape {l2.shape} does not match dimension {l1.size}"
                )
            object.__setattr__(self, "level2", l2)

    @property
    def dims(self) -> int:
        return self.level1.size

    @property
    def level(self) -> int:
        return 1 if self.level2 is None else 2

    def levy_area(self) -> np.ndarray:
        """Antisymmetric part of level 2."""
        if self.level2 is None:
            raise RoughPathError("level-1 element has no area")
        return 0.5 * (self.level2 - self.level2.T)

    def geometric_defect(self) -> float:
        """Max deviation of sym(level2) from 0.5 * level1 (x) level1."""
        if self.level2 is None:
            return 0.0
        sym = 0.5 * (self.level2 + self.level2.T)
        target = 0.5 * np.outer(self.level1, self.level1)
        return float(np.max(np.abs(sym - target)))


def identity_element(dims: int, level: int = 2) -> GroupElement:
    """The group identity e (zero increment, zero area)."""
    l2 = np.zeros((dims, dims)) if level == 2 else None
    return GroupElement(np.zeros(dims), l2)


def chen_concat(g: GroupElement, h: GroupElement) -> GroupElement:
    """Truncated tensor product g (x) h of two group elements.

    Level 1 adds; level 2 picks up the cross term
    ``outer(g.level1, h.level1)``.
    """
    if g.dims != h.dims:
        raise RoughPathError(f"dimension mismatch: {g.dims} vs {h.dims}")
    if (g.level2 is None) != (h.level2 is None):
        raise RoughPathError("cannot concat level-1 and level-2 elements")
    l1 = g.level1 + h.level1
    if g.level2 is None:
        return GroupElement(l1, None)
    l2 = g.level2 + h.level2 + np.outer(g.level1, h.level1)
    return GroupElement(l1, l2)


def group_inverse(g: GroupElement) -> GroupElement:
    """Group inverse: chen_concat(g, group_inverse(g)) == identity."""
    if g.level2 is None:
        return GroupElement(-g.level1, None)
    l2 = np.outer(g.level1, g.level1) - g.level2
    return GroupElement(-g.level1, l2)


# ---------------------------------------------------------------------------
# piecewise-linear sample paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PwlPath:
    """Piecewise-linear path: samples ``points[k]`` at ``times[k]``."""

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if t.ndim != 1 or t.size < 2:
            raise RoughPathError("need at least two time samples")
        if p.shape[0] != t.size:
            raise RoughPathError("times and points disagree in length")
        if not np.all(np.diff(t) > 0):
            raise RoughPathError("time grid must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
            raise RoughPathError("non-finite path data")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)

    @property
    def dims(self) -> int:
        return self.points.shape[1]

    @property
    def n_segments(self) -> int:
        return self.times.size - 1

    def slopes(self) -> np.ndarray:
        """Constant velocity of each linear segment, shape (K, M)."""
        return np.diff(self.points, axis=0) / np.diff(self.times)[:, None]

    def value(self, t) -> np.ndarray:
        """Linear interpolation, clamped to the end values outside the grid."""
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (self.dims,))
        for j in range(self.dims):
            out[..., j] = np.interp(t, self.times, self.points[:, j])
        return out

    def restrict(self, t0: float, t1: float) -> "PwlPath":
        """Sub-path on [t0, t1]; endpoints are interpolated if needed."""
        if not (self.times[0] - 1e-12 <= t0 < t1 <= self.times[-1] + 1e-12):
            raise RoughPathError("restriction window outside path domain")
        inner = self.times[(self.times > t0 + 1e-12) & (self.times < t1 - 1e-12)]
        ts = np.concatenate(([t0], inner, [t1]))
        return PwlPath(ts, self.value(ts))

    def reversed(self, t1: float | None = None) -> "PwlPath":
        """The path ``t -> z(t1 - t)`` on [0, t1] (default t1 = end time)."""
        if t1 is None:
            t1 = float(self.times[-1])
        sub = self.restrict(self.times[0], t1)
        return PwlPath(t1 - sub.times[::-1], sub.points[::-1])


# ---------------------------------------------------------------------------
# lifted paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeometricRoughPath:
    """Step-<=2 signature data of a signal on a time grid.

    ``level1[k]``/``level2[k]`` hold the signature over ``[times[0], times[k]]``;
    pairwise signatures come from :meth:`sig`.  ``alpha`` is the Hoelder
    exponent the path is meant to be measured in (only metadata here; the
    norm functions take an explicit exponent too).
    """

    times: np.ndarray
    level1: np.ndarray
    level2: np.ndarray | None
    alpha: float = 0.5
    pwl: PwlPath | None = field(default=None, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        l1 = np.asarray(self.level1, dtype=float)
        if not np.all(np.diff(t) > 0):
            raise RoughPathError("time grid must be strictly increasing")
        if l1.shape[0] != t.size:
            raise RoughPathError("node count mismatch")
        if not 1 / 3 < self.alpha <= 1:
            raise RoughPathError("alpha must lie in (1/3, 1]")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "level1", l1)
        if self.level2 is not None:
            l2 = np.asarray(self.level2, dtype=float)
            if l2.shape != (t.size, l1.shape[1], l1.shape[1]):
                raise RoughPathError("level2 shape mismatch")
            object.__setattr__(self, "level2", l2)

    @property
    def dims(self) -> int:
        return self.level1.shape[1]

    @property
    def level(self) -> int:
        return 1 if self.level2 is None else 2

    @property
    def n_nodes(self) -> int:
        return self.times.size

    def node(self, k: int) -> GroupElement:
        l2 = None if self.level2 is None else self.level2[k]
        return GroupElement(self.level1[k], l2)

    def sig(self, i: int, j: int) -> GroupElement:
        """Signature over ``[times[i], times[j]]`` via inverse + concat."""
        return chen_concat(group_inverse(self.node(i)), self.node(j))

    def _pair_level1(self) -> np.ndarray:
        """All pairwise level-1 increments, shape (K+1, K+1, M)."""
        return self.level1[None, :, :] - self.level1[:, None, :]

    def _pair_level2(self) -> np.ndarray:
        """All pairwise level-2 tensors, shape (K+1, K+1, M, M).

        sig(i,j).level2 = B_j - B_i - outer(a_i, a_j - a_i), which is the
        inverse+concat formula written out.
        """
        a, B = self.level1, self.level2
        d1 = a[None, :, :] - a[:, None, :]
        return B[None, :, :, :] - B[:, None, :, :] - np.einsum(
            "ik,ijl->ijkl", a, d1
        )

    def chen_defect(self, max_triples: int = 4000, rng_seed: int = 0) -> float:
        """Max Chen-identity error over a deterministic sample of grid triples."""
        K = self.n_nodes
        idx = np.arange(K)
        rng = np.random.default_rng(rng_seed)
        trip = rng.choice(K, size=(max_triples, 3))
        trip.sort(axis=1)
        if K <= 20:  # small grids: all triples
            ii, jj, kk = np.meshgrid(idx, idx, idx, indexing="ij")
            sel = (ii <= jj) & (jj <= kk)
            trip = np.stack([ii[sel], jj[sel], kk[sel]], axis=1)
        worst = 0.0
        for i, j, k in trip:
            lhs = chen_concat(self.sig(i, j), self.sig(j, k))
            rhs = self.sig(i, k)
            err = float(np.max(np.abs(lhs.level1 - rhs.level1)))
            if self.level2 is not None:
                err = max(err, float(np.max(np.abs(lhs.level2 - rhs.level2))))
            worst = max(worst, err)
        return worst

    def geometric_defect(self) -> float:
        """Max geometric-condition error over all pairwise signatures."""
        if self.level2 is None:
            return 0.0
        d1 = self._pair_level1()
        d2 = self._pair_level2()
        sym = 0.5 * (d2 + np.swapaxes(d2, -1, -2))
        target = 0.5 * np.einsum("ijk,ijl->ijkl", d1, d1)
        return float(np.max(np.abs(sym - target)))


def lift_pwl(path: PwlPath, level: int = 2, alpha: float = 0.5) -> GeometricRoughPath:
    """Exact step-``level`` signature of a piecewise-linear path.

    A straight segment with increment ``D`` contributes the exponential
    ``(D, 0.5 D (x) D)``; segments are combined by Chen concatenation, so
    the cumulative level 2 is
    ``B_k = B_{k-1} + 0.5 D_k (x) D_k + a_{k-1} (x) D_k``.
    """
    if level not in (1, 2):
        raise RoughPathError("level must be 1 or 2")
    inc = np.diff(path.points, axis=0)
    a = np.concatenate([np.zeros((1, path.dims)), np.cumsum(inc, axis=0)])
    if level == 1:
        return GeometricRoughPath(path.times, a, None, alpha, pwl=path)
    contrib = 0.5 * np.einsum("ki,kj->kij", inc, inc) + np.einsum(
        "ki,kj->kij", a[:-1], inc
    )
    B = np.concatenate(
        [np.zeros((1, path.dims, path.dims)), np.cumsum(contrib, axis=0)]
    )
    return GeometricRoughPath(path.times, a, B, alpha, pwl=path)


def time_reverse(z: GeometricRoughPath, t1: float) -> GeometricRoughPath:
    """Lift of the reversed signal ``t -> z(t1 - t)`` on [0, t1].

    t1 must be a grid node: level-2 data cannot be interpolated.  The new
    node signatures are ``inverse(node(K1)) (x) node(K1-k)``, which for
    piecewise-linear underlying paths coincides with lifting the pointwise
    reversed path.
    """
    hits = np.flatnonzero(np.isclose(z.times, t1, rtol=0.0, atol=1e-12))
    if hits.size == 0:
        raise RoughPathError(f"t1={t1} is not a grid node")
    K1 = int(hits[0])
    a, t = z.level1, z.times
    new_t = t1 - t[K1::-1]
    rev_idx = np.arange(K1, -1, -1)
    aK = a[K1]
    new_a = a[rev_idx] - aK
    if z.level2 is None:
        new_B = None
    else:
        B = z.level2
        # inverse(n_K1) (x) n_j with j = K1-k:
        # level2 = B_j - B_K1 + outer(a_K1, a_K1 - a_j)
        new_B = (
            B[rev_idx]
            - B[K1]
            + np.einsum("k,jl->jkl", aK, aK[None, :] - a[rev_idx])
        )
    new_pwl = None
    if z.pwl is not None:
        new_pwl = z.pwl.reversed(t1)
    return GeometricRoughPath(new_t, new_a, new_B, z.alpha, pwl=new_pwl)


def _pair_dt(times: np.ndarray) -> np.ndarray:
    dt = times[None, :] - times[:, None]
    return dt


def holder_norm(z: GeometricRoughPath, alpha: float | None = None) -> float:
    """Inhomogeneous alpha-Hoelder norm over all grid pairs.

    ``max over s<t, k<=level of |pi_k(sig(s,t))|^(1/k) / (t-s)^alpha``
    with Euclidean/Frobenius norms per tensor level.
    """
    if alpha is None:
        alpha = z.alpha
    if z.n_nodes < 2:
        raise RoughPathError("empty grid")
    dt = _pair_dt(z.times)
    mask = dt > 0
    d1 = z._pair_level1()
    n1 = np.linalg.norm(d1, axis=-1)
    vals = np.where(mask, n1 / np.where(mask, dt, 1.0) ** alpha, 0.0)
    out = float(vals.max())
    if z.level2 is not None:
        d2 = z._pair_level2()
        n2 = np.sqrt(np.einsum("ijkl,ijkl->ij", d2, d2))
        vals2 = np.where(
            mask, np.sqrt(n2) / np.where(mask, dt, 1.0) ** alpha, 0.0
        )
        out = max(out, float(vals2.max()))
    return out


def _common_restriction(z1: GeometricRoughPath, z2: GeometricRoughPath):
    t1 = np.round(z1.times, 12)
    t2 = np.round(z2.times, 12)
    common, i1, i2 = np.intersect1d(t1, t2, return_indices=True)
    if common.size < 2:
        raise RoughPathError("paths share fewer than two grid nodes")
    return i1, i2


def rho_dist(
    z1: GeometricRoughPath, z2: GeometricRoughPath, alpha: float | None = None
) -> float:
    """Inhomogeneous alpha-Hoelder distance on the shared grid nodes.

    Level-k signature differences are scaled by ``(t-s)^(k*alpha)``.  Both
    paths are restricted to the intersection of their grids, so dyadic
    families compare at the coarser resolution.
    """
    if z1.dims != z2.dims:
        raise RoughPathError("dimension mismatch")
    if alpha is None:
        alpha = z1.alpha
    i1, i2 = _common_restriction(z1, z2)
    t = z1.times[i1]
    dt = _pair_dt(t)
    mask = dt > 0
    safe = np.where(mask, dt, 1.0)
    d1 = z1._pair_level1()[np.ix_(i1, i1)] - z2._pair_level1()[np.ix_(i2, i2)]
    n1 = np.linalg.norm(d1, axis=-1)
    out = float(np.where(mask, n1 / safe**alpha, 0.0).max())
    if (z1.level2 is None) != (z2.level2 is None):
        raise RoughPathError("cannot compare level-1 and level-2 paths")
    if z1.level2 is not None:
        d2 = z1._pair_level2()[np.ix_(i1, i1)] - z2._pair_level2()[np.ix_(i2, i2)]
        n2 = np.sqrt(np.einsum("ijkl,ijkl->ij", d2, d2))
        out = max(out, float(np.where(mask, n2 / safe ** (2 * alpha), 0.0).max()))
    return out


# ---------------------------------------------------------------------------
# Brownian drivers and dyadic approximation
# ---------------------------------------------------------------------------

def _level_rng(seed: int, level: int) -> np.random.Generator:
    # Philox is counter-based; the (seed, level) key makes refinement levels
    # independent streams so the dyadic family is nested by construction.
    return np.random.Generator(np.random.Philox(key=np.array([seed, level], dtype=np.uint64)))


def brownian_pwl(seed: int, dims: int, dyadic_level: int, T: float = 1.0) -> PwlPath:
    """Brownian sample, piecewise linear on the dyadic grid of 2^n intervals.

    Built by midpoint (Brownian-bridge) refinement with one RNG stream per
    level, so ``dyadic_approx(brownian_pwl(seed, d, n+1), n)`` equals
    ``brownian_pwl(seed, d, n)`` exactly: the family is nested.
    """
    if dyadic_level < 0:
        raise RoughPathError("dyadic_level must be >= 0")
    pts = np.zeros((2, dims))
    pts[1] = _level_rng(seed, 0).standard_normal(dims) * np.sqrt(T)
    for lev in range(1, dyadic_level + 1):
        n_mid = pts.shape[0] - 1
        noise = _level_rng(seed, lev).standard_normal((n_mid, dims))
        dt = T / n_mid
        mids = 0.5 * (pts[:-1] + pts[1:]) + np.sqrt(dt / 4.0) * noise
        out = np.empty((2 * n_mid + 1, dims))
        out[0::2] = pts
        out[1::2] = mids
        pts = out
    times = np.linspace(0.0, T, pts.shape[0])
    return PwlPath(times, pts)


def dyadic_approx(path: PwlPath, n: int) -> PwlPath:
    """Restriction of a dyadic-grid path to the coarser level-n grid."""
    K = path.n_segments
    m = int(round(np.log2(K)))
    if 2**m != K:
        raise RoughPathError("path is not sampled on a dyadic grid")
    if n > m:
        raise RoughPathError(f"requested level {n} exceeds native level {m}")
    stride = 2 ** (m - n)
    return PwlPath(path.times[::stride], path.points[::stride])


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_path_csv(path: PwlPath, filename) -> None:
    """Write samples as CSV with header ``t,z1,...,zM``."""
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"z{j + 1}" for j in range(path.dims)])
        for t, row in zip(path.times, path.points):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def load_path_csv(filename) -> PwlPath:
    """Read a PWL path from the ``t,z1,...,zM`` CSV format."""
    with open(filename, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise RoughPathError("empty path file")
    header = [h.strip() for h in rows[0]]
    if header[:1] != ["t"] or len(header) < 2:
        raise RoughPathError("expected header t,z1,...,zM")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise RoughPathError(f"malformed numeric data: {exc}") from exc
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != len(header):
        raise RoughPathError("malformed path table")
    return PwlPath(data[:, 0], data[:, 1:])
