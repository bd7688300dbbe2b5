"""Catalog and calculus of flux models A(x, u).

A flux model bundles the N x M matrix flux ``A`` with its analytic
derivatives: ``a = dA/du`` (the characteristic speed matrix) and
``b = div_x A`` (the velocity of the kinetic variable), plus the second
derivatives needed by variational Jacobians.  Every builtin satisfies
``b(x, 0) = 0``, which pins the kinetic variable's sign along
characteristics.

Array conventions (batched over leading axes):
    x   : (..., N)        xi : (...,)
    A,a : (..., N, M)     b  : (..., M)
    da_dx : (..., N, M, N)   last axis = derivative direction
    db_dx : (..., M, N)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["FluxModel", "builtin", "check_assumptions", "AssumptionReport"]


class FluxError(ValueError):
    """Unknown builtin or inconsistent flux data."""


@dataclass(frozen=True)
class FluxModel:
    """Flux A(x,u) with analytic derivative fields.

    ``gamma`` documents the smoothness class the model is meant to sit in;
    it is metadata, not enforced.  ``u_crit`` lists the values of u where
    ``a(x, u) . v`` may change sign (used by the Engquist-Osher splitting
    to place quadrature breakpoints); for the quadratic builtins this is
    ``[0.0]``.
    """

    name: str
    N: int
    M: int
    A: Callable
    a: Callable
    b: Callable
    da_dx: Callable
    da_dxi: Callable
    db_dx: Callable
    db_dxi: Callable
    gamma: float = np.inf
    u_crit: tuple = (0.0,)
    params: dict = field(default_factory=dict)

    def a_dot(self, x, xi, v):
        """Characteristic x-velocity ``a(x,xi) @ v``, shape (..., N)."""
        return np.einsum("...nm,m->...n", self.a(x, xi), np.asarray(v, float))

    def b_dot(self, x, xi, v):
        """Kinetic xi-velocity magnitude ``b(x,xi) . v``, shape (...,)."""
        return np.einsum("...m,m->...", self.b(x, xi), np.asarray(v, float))

    def flux_dot(self, x, xi, v):
        """Scalar flux per axis ``A(x,xi) @ v``, shape (..., N)."""
        return np.einsum("...nm,m->...n", self.A(x, xi), np.asarray(v, float))


def _as_x(x, N):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 and N == 1:
        x = x[None]
    if x.shape[-1] != N:
        raise FluxError(f"x last axis must be {N}")
    return x


def _burgers_xindep(params):
    scale = float(params.get("scale", 1.0))

    def A(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (scale * 0.5 * xi**2)[..., None, None] * np.ones(x.shape[:-1] + (1, 1))

    def a(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (scale * xi)[..., None, None] * np.ones(x.shape[:-1] + (1, 1))

    def zeros_m(x, xi):
        x = _as_x(x, 1)
        return np.zeros(np.broadcast_shapes(x.shape[:-1], np.shape(xi)) + (1,))

    def da_dx(x, xi):
        x = _as_x(x, 1)
        return np.zeros(np.broadcast_shapes(x.shape[:-1], np.shape(xi)) + (1, 1, 1))

    def da_dxi(x, xi):
        x = _as_x(x, 1)
        shp = np.broadcast_shapes(x.shape[:-1], np.shape(xi))
        return scale * np.ones(shp + (1, 1))

    def db_dx(x, xi):
        x = _as_x(x, 1)
        return np.zeros(np.broadcast_shapes(x.shape[:-1], np.shape(xi)) + (1, 1))

    return FluxModel(
        "burgers_xindep", 1, 1, A, a, zeros_m, da_dx, da_dxi, db_dx, zeros_m,
        params={"scale": scale},
    )


def _modulation(params):
    base = float(params.get("base", 1.0))
    amp = float(params.get("amp", 0.5))
    freq = float(params.get("freq", 1.0))
    phase = float(params.get("phase", 0.0))
    if base - abs(amp) <= 0:
        raise FluxError("modulation must stay positive: need base > |amp|")

    def phi(s):
        return base + amp * np.sin(freq * s + phase)

    def dphi(s):
        return amp * freq * np.cos(freq * s + phase)

    def d2phi(s):
        return -amp * freq**2 * np.sin(freq * s + phase)

    return phi, dphi, d2phi, {"base": base, "amp": amp, "freq": freq, "phase": phase}


def _burgers_modulated(params):
    phi, dphi, d2phi, p = _modulation(params)

    def A(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (phi(x[..., 0]) * 0.5 * xi**2)[..., None, None]

    def a(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (phi(x[..., 0]) * xi)[..., None, None]

    def b(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (dphi(x[..., 0]) * 0.5 * xi**2)[..., None]

    def da_dx(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (dphi(x[..., 0]) * xi)[..., None, None, None]

    def da_dxi(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (phi(x[..., 0]) * np.ones_like(xi))[..., None, None]

    def db_dx(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (d2phi(x[..., 0]) * 0.5 * xi**2)[..., None, None]

    def db_dxi(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (dphi(x[..., 0]) * xi)[..., None]

    return FluxModel(
        "burgers_modulated", 1, 1, A, a, b, da_dx, da_dxi, db_dx, db_dxi, params=p
    )


def _linear_advection(params):
    c0 = float(params.get("c0", 1.0))
    c1 = float(params.get("c1", 0.0))
    if c0 - abs(c1) <= 0:
        raise FluxError("advection speed must stay positive: need c0 > |c1|")

    def c(s):
        return c0 + c1 * np.sin(s)

    def dc(s):
        return c1 * np.cos(s)

    def d2c(s):
        return -c1 * np.sin(s)

    def A(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (c(x[..., 0]) * xi)[..., None, None]

    def a(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (c(x[..., 0]) * np.ones_like(xi))[..., None, None]

    def b(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (dc(x[..., 0]) * xi)[..., None]

    def da_dx(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (dc(x[..., 0]) * np.ones_like(xi))[..., None, None, None]

    def da_dxi(x, xi):
        x = _as_x(x, 1)
        shp = np.broadcast_shapes(x.shape[:-1], np.shape(xi))
        return np.zeros(shp + (1, 1))

    def db_dx(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (d2c(x[..., 0]) * xi)[..., None, None]

    def db_dxi(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (dc(x[..., 0]) * np.ones_like(xi))[..., None]

    return FluxModel(
        "linear_advection", 1, 1, A, a, b, da_dx, da_dxi, db_dx, db_dxi,
        u_crit=(), params={"c0": c0, "c1": c1},
    )


def _diagonal_multipath(params):
    d = int(params.get("dims", 2))
    amp = float(params.get("amp", 0.3))
    if not 0 <= amp < 1:
        raise FluxError("need 0 <= amp < 1")
    phases = np.arange(d) * 2.0 * np.pi / max(d, 1)

    # per-axis modulation phi_j depends on x_j only, so div_x A hits the
    # diagonal entries exactly once
    def phi(x):  # (..., N) -> (..., N)
        return 1.0 + amp * np.sin(x + phases)

    def dphi(x):
        return amp * np.cos(x + phases)

    def d2phi(x):
        return -amp * np.sin(x + phases)

    eye = np.eye(d)

    def A(x, xi):
        x = _as_x(x, d)
        xi = np.asarray(xi, dtype=float)
        diag = phi(x) * (0.5 * xi**2)[..., None]
        return diag[..., :, None] * eye

    def a(x, xi):
        x = _as_x(x, d)
        xi = np.asarray(xi, dtype=float)
        diag = phi(x) * xi[..., None]
        return diag[..., :, None] * eye

    def b(x, xi):
        x = _as_x(x, d)
        xi = np.asarray(xi, dtype=float)
        return dphi(x) * (0.5 * xi**2)[..., None]

    def da_dx(x, xi):
        x = _as_x(x, d)
        xi = np.asarray(xi, dtype=float)
        diag = dphi(x) * xi[..., None]  # d a^{jj} / d x_j
        out = np.zeros(diag.shape[:-1] + (d, d, d))
        for j in range(d):
            out[..., j, j, j] = diag[..., j]
        return out

    def da_dxi(x, xi):
        x = _as_x(x, d)
        xi = np.asarray(xi, dtype=float)
        diag = phi(x) * np.ones_like(xi)[..., None]
        return diag[..., :, None] * eye

    def db_dx(x, xi):
        x = _as_x(x, d)
        xi = np.asarray(xi, dtype=float)
        diag = d2phi(x) * (0.5 * xi**2)[..., None]  # d b_j / d x_j
        return diag[..., :, None] * eye

    def db_dxi(x, xi):
        x = _as_x(x, d)
        xi = np.asarray(xi, dtype=float)
        return dphi(x) * xi[..., None]

    return FluxModel(
        "diagonal_multipath", d, d, A, a, b, da_dx, da_dxi, db_dx, db_dxi,
        params={"dims": d, "amp": amp},
    )


def _burgers_two_signals(params):
    # N = 1, M = 2: one conserved quantity forced through two independently
    # modulated quadratic fluxes; the genuinely multi-signal scalar case
    amp1 = float(params.get("amp1", 0.4))
    amp2 = float(params.get("amp2", 0.4))
    freq2 = float(params.get("freq2", 1.3))
    if max(abs(amp1), abs(amp2)) >= 1:
        raise FluxError("modulations must stay positive: need |amp| < 1")

    def phis(x):  # (...,) -> (..., 2)
        return np.stack(
            [1.0 + amp1 * np.sin(x), 1.0 + amp2 * np.cos(freq2 * x)], axis=-1
        )

    def dphis(x):
        return np.stack(
            [amp1 * np.cos(x), -amp2 * freq2 * np.sin(freq2 * x)], axis=-1
        )

    def d2phis(x):
        return np.stack(
            [-amp1 * np.sin(x), -amp2 * freq2**2 * np.cos(freq2 * x)], axis=-1
        )

    def A(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (phis(x[..., 0]) * (0.5 * xi**2)[..., None])[..., None, :]

    def a(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (phis(x[..., 0]) * xi[..., None])[..., None, :]

    def b(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return dphis(x[..., 0]) * (0.5 * xi**2)[..., None]

    def da_dx(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (dphis(x[..., 0]) * xi[..., None])[..., None, :, None]

    def da_dxi(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (phis(x[..., 0]) * np.ones_like(xi)[..., None])[..., None, :]

    def db_dx(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return (d2phis(x[..., 0]) * (0.5 * xi**2)[..., None])[..., None]

    def db_dxi(x, xi):
        x = _as_x(x, 1)
        xi = np.asarray(xi, dtype=float)
        return dphis(x[..., 0]) * xi[..., None]

    return FluxModel(
        "burgers_two_signals", 1, 2, A, a, b, da_dx, da_dxi, db_dx, db_dxi,
        params={"amp1": amp1, "amp2": amp2, "freq2": freq2},
    )


_BUILTINS = {
    "burgers_xindep": _burgers_xindep,
    "burgers_modulated": _burgers_modulated,
    "linear_advection": _linear_advection,
    "diagonal_multipath": _diagonal_multipath,
    "burgers_two_signals": _burgers_two_signals,
}


def builtin(name: str, params: dict | None = None) -> FluxModel:
    """Construct a builtin flux model by name.

    Known names: ``burgers_xindep`` (A = u^2/2), ``burgers_modulated``
    (A = phi(x) u^2/2), ``linear_advection`` (A = c(x) u) and
    ``diagonal_multipath`` (N = M, A^{jj} = phi_j(x_j) u^2/2).
    """
    if name not in _BUILTINS:
        raise FluxError(
            f"unknown flux '{name}' (have {sorted(_BUILTINS)})"
        )
    model = _BUILTINS[name](dict(params or {}))
    if params and "corrupt_a" in params:
        return corrupt_a(model, float(params["corrupt_a"]))
    return model


def corrupt_a(model: FluxModel, offset: float = 1.0) -> FluxModel:
    """Negative-control model: the stored ``a`` is off by ``offset``.

    The flux A itself is untouched, so the finite-difference assumption
    check must flag the inconsistency with error ~ |offset|.
    """
    orig_a = model.a

    def bad_a(x, xi):
        return orig_a(x, xi) + offset

    return FluxModel(
        model.name + "+corrupt_a", model.N, model.M, model.A, bad_a, model.b,
        model.da_dx, model.da_dxi, model.db_dx, model.db_dxi,
        gamma=model.gamma, u_crit=model.u_crit,
        params={**model.params, "corrupt_a": offset},
    )


@dataclass(frozen=True)
class AssumptionReport:
    ok: bool
    max_b_at_zero: float
    max_a_fd_error: float
    max_b_fd_error: float
    worst_point: tuple
    h: float

    def __str__(self):
        status = "pass" if self.ok else "FAIL"
        return (
            f"[{status}] b(x,0): {self.max_b_at_zero:.3e}  "
            f"a-FD: {self.max_a_fd_error:.3e}  b-FD: {self.max_b_fd_error:.3e}  "
            f"worst at {self.worst_point}"
        )


def check_assumptions(
    flux: FluxModel,
    box,
    xi_range=(-2.0, 2.0),
    samples: int = 64,
    h: float = 1e-3,
    tol_b0: float = 1e-10,
    tol_fd_factor: float = 50.0,
    seed: int = 0,
) -> AssumptionReport:
    """Spot-check the structural flux assumptions on sampled points.

    Verifies ``b(x, 0) = 0`` and that the stored ``a`` and ``b`` agree with
    central finite differences of ``A`` (second-order in ``h``).  The FD
    tolerance scales like ``tol_fd_factor * h**2`` plus a round-off floor.
    """
    if samples < 1:
        raise FluxError("need at least one sample point")
    box = np.asarray(box, dtype=float)
    if box.shape == (2,):
        box = np.tile(box, (flux.N, 1))
    rng = np.random.default_rng(seed)
    x = rng.uniform(box[:, 0], box[:, 1], size=(samples, flux.N))
    xi = rng.uniform(xi_range[0], xi_range[1], size=samples)

    b0 = np.abs(flux.b(x, np.zeros(samples)))
    max_b0 = float(b0.max())

    a_fd = (flux.A(x, xi + h) - flux.A(x, xi - h)) / (2 * h)
    a_err = np.abs(a_fd - flux.a(x, xi))
    max_a_err = float(a_err.max())

    b_fd = np.zeros((samples, flux.M))
    for i in range(flux.N):
        e = np.zeros(flux.N)
        e[i] = h
        b_fd += (flux.A(x + e, xi)[:, i, :] - flux.A(x - e, xi)[:, i, :]) / (2 * h)
    b_err = np.abs(b_fd - flux.b(x, xi))
    max_b_err = float(b_err.max())

    fd_tol = tol_fd_factor * h**2 + 1e-9
    per_point = np.maximum(a_err.max(axis=(1, 2)), b_err.max(axis=1))
    worst = int(np.argmax(per_point))
    ok = max_b0 <= tol_b0 and max_a_err <= fd_tol and max_b_err <= fd_tol
    return AssumptionReport(
        ok=ok,
        max_b_at_zero=max_b0,
        max_a_fd_error=max_a_err,
        max_b_fd_error=max_b_err,
        worst_point=(tuple(np.round(x[worst], 6)), float(np.round(xi[worst], 6))),
        h=h,
    )
