"""Characteristic flows of the kinetic transport equation.

The state is (y, eta) in R^(N+1); along a piecewise-linear representative
of the driving signal the system reduces, segment by segment, to the
autonomous ODE

    dY/dt   =  a(Y, zeta) . v        (v = segment slope of z)
    dzeta/dt = -b(Y, zeta) . v

which is integrated with classic fourth-order Runge-Kutta substeps.  The
(x, xi) vector field (a.v, -b.v) is divergence free, so flow Jacobians
have unit determinant; Jacobians are produced by integrating the
variational system alongside the state.

Everything is batched: positions of shape (B, N) and kinetic velocities
of shape (B,) are flowed together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flux import FluxModel
from .roughpath import PwlPath

__all__ = [
    "CharState",
    "FlowResult",
    "BlowUpError",
    "forward_flow",
    "backward_flow",
    "flow_jacobian",
    "forward_flow_level2",
    "save_trajectory_csv",
]


class BlowUpError(RuntimeError):
    """State escaped the configured bound during integration."""

    def __init__(self, t_last: float, max_abs: float):
        super().__init__(
            f"characteristic blow-up: |state| = {max_abs:.3e} at t = {t_last:.6f}"
        )
        self.t_last = t_last
        self.max_abs = max_abs


@dataclass(frozen=True)
class CharState:
    """A single characteristic seed: position y in R^N, kinetic velocity eta."""

    y: np.ndarray
    eta: float

    def __post_init__(self):
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if not np.all(np.isfinite(y)) or not np.isfinite(self.eta):
            raise ValueError("non-finite characteristic state")
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class FlowResult:
    """Terminal state of a flow, optionally with Jacobian and history.

    ``y``/``eta`` have a leading batch axis when the input was batched.
    ``jacobian`` is d(Y, zeta)/d(y, eta), shape (..., N+1, N+1).
    ``history`` is a list of (t, y, eta) tuples when requested.
    """

    y: np.ndarray
    eta: np.ndarray
    jacobian: np.ndarray | None = None
    history: list | None = None

    def state(self) -> CharState:
        if self.y.ndim != 1:
            raise ValueError("batched result; index it explicitly")
        return CharState(self.y, float(self.eta))


def _pack(flux, state):
    """Normalize input to batched arrays (B, N), (B,); remember if scalar."""
    if isinstance(state, CharState):
        return state.y[None, :], np.array([state.eta]), True
    y, eta = state
    y = np.asarray(y, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if y.ndim == 1 and eta.ndim == 0:
        return y[None, :], eta[None], True
    if y.ndim != 2 or eta.ndim != 1 or y.shape[0] != eta.size:
        raise ValueError("expected y of shape (B, N) and eta of shape (B,)")
    return y, eta, False


def _rhs(flux: FluxModel, v, y, eta):
    dy = flux.a_dot(y, eta, v)
    deta = -flux.b_dot(y, eta, v)
    return dy, deta


def _rhs_jacobian(flux: FluxModel, v, y, eta):
    """Derivative matrix of the segment vector field, shape (B, N+1, N+1)."""
    v = np.asarray(v, dtype=float)
    B, N = y.shape
    DF = np.empty((B, N + 1, N + 1))
    DF[:, :N, :N] = np.einsum("bnmk,m->bnk", flux.da_dx(y, eta), v)
    DF[:, :N, N] = np.einsum("bnm,m->bn", flux.da_dxi(y, eta), v)
    DF[:, N, :N] = -np.einsum("bmk,m->bk", flux.db_dx(y, eta), v)
    DF[:, N, N] = -np.einsum("bm,m->b", flux.db_dxi(y, eta), v)
    return DF


def _rk4_segment(flux, v, y, eta, J, h, nsteps, blowup):
    """March nsteps of RK4 with step h (h may be negative)."""
    for _ in range(nsteps):
        k1y, k1e = _rhs(flux, v, y, eta)
        k2y, k2e = _rhs(flux, v, y + 0.5 * h * k1y, eta + 0.5 * h * k1e)
        k3y, k3e = _rhs(flux, v, y + 0.5 * h * k2y, eta + 0.5 * h * k2e)
        k4y, k4e = _rhs(flux, v, y + h * k3y, eta + h * k3e)
        if J is not None:
            D1 = _rhs_jacobian(flux, v, y, eta)
            D2 = _rhs_jacobian(flux, v, y + 0.5 * h * k1y, eta + 0.5 * h * k1e)
            D3 = _rhs_jacobian(flux, v, y + 0.5 * h * k2y, eta + 0.5 * h * k2e)
            D4 = _rhs_jacobian(flux, v, y + h * k3y, eta + h * k3e)
            K1 = D1 @ J
            K2 = D2 @ (J + 0.5 * h * K1)
            K3 = D3 @ (J + 0.5 * h * K2)
            K4 = D4 @ (J + h * K3)
            J = J + (h / 6.0) * (K1 + 2 * K2 + 2 * K3 + K4)
        y = y + (h / 6.0) * (k1y + 2 * k2y + 2 * k3y + k4y)
        eta = eta + (h / 6.0) * (k1e + 2 * k2e + 2 * k3e + k4e)
        m = max(np.abs(y).max(), np.abs(eta).max())
        if not np.isfinite(m) or m > blowup:
            raise BlowUpError(np.nan, m)
    return y, eta, J


def _segment_schedule(z: PwlPath, t0: float, t1: float):
    """Yield (ta, tb, v) pieces covering t0 -> t1 in integration order."""
    lo, hi = (t0, t1) if t0 <= t1 else (t1, t0)
    lo = max(lo, float(z.times[0]))
    hi = min(hi, float(z.times[-1]))
    times, slopes = z.times, z.slopes()
    pieces = []
    for k in range(z.n_segments):
        a, b = times[k], times[k + 1]
        aa, bb = max(a, lo), min(b, hi)
        if bb - aa > 1e-15:
            pieces.append((aa, bb, slopes[k]))
    if t0 > t1:
        pieces = [(b, a, v) for (a, b, v) in reversed(pieces)]
    return pieces


def forward_flow(
    flux: FluxModel,
    z: PwlPath,
    t0: float,
    s0,
    t: float,
    steps_per_segment: int = 16,
    with_jacobian: bool = False,
    record: bool = False,
    blowup: float = 1e6,
) -> FlowResult:
    """Flow (y, eta) from time t0 to time t along the driver z.

    ``t < t0`` integrates the same system backward in time.  ``s0`` is a
    :class:`CharState` or a ``(y, eta)`` pair of batched arrays.  The RK4
    step is ``segment_length / steps_per_segment`` on every linear segment
    of z (partial segments get a proportionally smaller count, at least 1).
    """
    if flux.M != z.dims:
        raise ValueError(f"driver has {z.dims} components, flux expects {flux.M}")
    y, eta, scalar = _pack(flux, s0)
    if y.shape[1] != flux.N:
        raise ValueError(f"state dimension {y.shape[1]} != flux N {flux.N}")
    J = None
    if with_jacobian:
        J = np.broadcast_to(np.eye(flux.N + 1), (y.shape[0], flux.N + 1, flux.N + 1)).copy()
    history = [(t0, y.copy(), eta.copy())] if record else None
    seg_dt = float(np.min(np.diff(z.times)))
    try:
        for ta, tb, v in _segment_schedule(z, t0, t):
            span = tb - ta
            nsteps = max(1, int(np.ceil(abs(span) / seg_dt * steps_per_segment)))
            h = span / nsteps
            y, eta, J = _rk4_segment(flux, v, y, eta, J, h, nsteps, blowup)
            if record:
                history.append((tb, y.copy(), eta.copy()))
    except BlowUpError as exc:
        raise BlowUpError(ta, exc.max_abs) from None
    if scalar:
        return FlowResult(
            y[0], eta[0], None if J is None else J[0],
            history if not record else [(tt, yy[0], ee[0]) for tt, yy, ee in history],
        )
    return FlowResult(y, eta, J, history)


def backward_flow(
    flux: FluxModel,
    z: PwlPath,
    t1: float,
    s0,
    tau: float,
    steps_per_segment: int = 16,
    with_jacobian: bool = False,
    blowup: float = 1e6,
) -> FlowResult:
    """Backward characteristics (X, Xi) at reversed time tau, 0 <= tau <= t1.

    Drives the same system with the time-reversed signal ``z(t1 - .)``,
    which is identical to integrating forward_flow from t1 down to
    ``t1 - tau``.  Composing with forward_flow(t0 -> t1) at
    ``tau = t1 - t0`` recovers the initial state up to integration error.
    """
    if not 0 <= tau <= t1 + 1e-12:
        raise ValueError("need 0 <= tau <= t1")
    return forward_flow(
        flux, z, t1, s0, t1 - tau,
        steps_per_segment=steps_per_segment,
        with_jacobian=with_jacobian,
        blowup=blowup,
    )


def flow_jacobian(
    flux: FluxModel,
    z: PwlPath,
    t0: float,
    s0,
    t: float,
    steps_per_segment: int = 16,
) -> np.ndarray:
    """d(Y, zeta)/d(y, eta) from the variational equations, (..., N+1, N+1)."""
    res = forward_flow(
        flux, z, t0, s0, t, steps_per_segment=steps_per_segment, with_jacobian=True
    )
    return res.jacobian


def _fields(flux: FluxModel, y, eta):
    """Vector fields V_j(x, xi) = (a^{.j}, -b^j), shape (B, N+1, M)."""
    B, N = y.shape
    V = np.empty((B, N + 1, flux.M))
    V[:, :N, :] = flux.a(y, eta)
    V[:, N, :] = -flux.b(y, eta)
    return V


def _field_jacobians(flux: FluxModel, y, eta):
    """d V_j / d(state), shape (B, N+1, N+1, M)."""
    B, N = y.shape
    DV = np.empty((B, N + 1, N + 1, flux.M))
    DV[:, :N, :N, :] = np.moveaxis(flux.da_dx(y, eta), -1, -2)
    DV[:, :N, N, :] = flux.da_dxi(y, eta)
    DV[:, N, :N, :] = -np.moveaxis(flux.db_dx(y, eta), -1, -2)
    DV[:, N, N, :] = -flux.db_dxi(y, eta)
    return DV


def forward_flow_level2(
    flux: FluxModel,
    z,
    s0,
    blowup: float = 1e6,
) -> FlowResult:
    """Direct second-order rough stepper on the lifted driver.

    One step per grid interval of the :class:`GeometricRoughPath`:
    increment term plus the Levy-area correction

        X_{k+1} = X_k + sum_j V_j(X_k) dz^j
                      + sum_{j,l} (DV_l . V_j)(X_k) B2[j, l],

    where B2 is the level-2 signature of the step.  Cross-checks the
    piecewise-linear route; it is not the production integrator.
    """
    if z.level2 is None:
        raise ValueError("level-2 signature data required")
    y, eta, scalar = _pack(flux, s0)
    state = np.concatenate([y, eta[:, None]], axis=1)
    for k in range(z.n_nodes - 1):
        g = z.sig(k, k + 1)
        V = _fields(flux, state[:, :-1], state[:, -1])
        DV = _field_jacobians(flux, state[:, :-1], state[:, -1])
        incr = np.einsum("bnj,j->bn", V, g.level1)
        corr = np.einsum("bnml,bmj,jl->bn", DV, V, g.level2)
        state = state + incr + corr
        m = np.abs(state).max()
        if not np.isfinite(m) or m > blowup:
            raise BlowUpError(float(z.times[k + 1]), m)
    if scalar:
        return FlowResult(state[0, :-1], state[0, -1])
    return FlowResult(state[:, :-1], state[:, -1])


def save_trajectory_csv(history, filename) -> None:
    """Export a recorded single-state trajectory as CSV ``t,y1..yN,eta``."""
    import csv

    if not history:
        raise ValueError("empty trajectory")
    y0 = np.atleast_2d(history[0][1])
    if y0.shape[0] != 1:
        raise ValueError("trajectory export expects a single state; index the batch")
    N = y0.shape[1]
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"y{i + 1}" for i in range(N)] + ["eta"])
        for t, yy, ee in history:
            yy = np.atleast_2d(yy)
            ee = np.atleast_1d(ee)
            w.writerow(
                [repr(float(t))]
                + [repr(float(v)) for v in yy[0]]
                + [repr(float(ee[0]))]
            )
