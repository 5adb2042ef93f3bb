"""Strang split-step integrator with an unconditionally stable kinetic solve.

One step from t to t+dt is the palindromic composition

    potential half-step at t  ->  kinetic full step  ->  potential half-step at t+dt

Both substeps are exactly unitary: the potential substep is a pure phase
rotation (the density, and with it the self-consistent potential, is frozen
within the substep), and the kinetic substep is a Crank-Nicolson solve of
the free equation on the periodic centered second difference, whose
amplification factor has unit modulus on every Fourier mode.  The
composition is second-order accurate in dt.
"""

from __future__ import annotations

import functools

import numpy as np
from scipy.linalg import solve_banded

from .core import SimParams, WaveField
from .errors import BlowUpError, InvalidParameterError
from .fields import HamiltonianSpec, assemble_potential

__all__ = [
    "potential_halfstep",
    "kinetic_step",
    "step",
    "evolve",
]


def potential_halfstep(psi: WaveField, spec: HamiltonianSpec, params: SimParams,
                       t: float, dt_half: float) -> WaveField:
    """Phase rotation psi <- psi * exp(-i V dt_half / h) at frozen density."""
    if not (dt_half > 0):
        raise InvalidParameterError(f"dt_half must be > 0, got {dt_half}")
    v_total = assemble_potential(spec, psi, params, t)
    values = psi.values * np.exp((-1j * dt_half / params.h) * v_total)
    return WaveField(values=values, grid=psi.grid)


@functools.lru_cache(maxsize=64)
def _kinetic_gain(n_points: int, h: float, K0: float, dt: float) -> np.ndarray:
    """Unit-modulus Crank-Nicolson multipliers in the full FFT basis."""
    dx = 2.0 * np.pi / n_points
    m = np.fft.fftfreq(n_points, d=1.0 / n_points)
    lam = (2.0 - 2.0 * np.cos(m * dx)) / dx ** 2  # second-difference symbol
    mu = h * K0 ** 2 * dt / 4.0
    gain = (1.0 - 1j * mu * lam) / (1.0 + 1j * mu * lam)
    gain.setflags(write=False)
    return gain


def _kinetic_step_fft(values: np.ndarray, params: SimParams, dt: float) -> np.ndarray:
    gain = _kinetic_gain(values.shape[0], params.h, params.K0, dt)
    return np.fft.ifft(np.fft.fft(values) * gain)


def _kinetic_step_tridiag(values: np.ndarray, params: SimParams, dt: float
                          ) -> np.ndarray:
    """Same Crank-Nicolson system solved as a cyclic tridiagonal matrix.

    (I - i mu D2) psi' = (I + i mu D2) psi with D2 the periodic centered
    second difference.  The periodic corners are folded in with the
    Sherman-Morrison rank-one update of a plain tridiagonal solve.
    """
    n = values.shape[0]
    dx = 2.0 * np.pi / n
    c = 1j * params.h * params.K0 ** 2 * dt / (4.0 * dx ** 2)
    diag = 1.0 + 2.0 * c
    off = -c

    rhs = (1.0 - 2.0 * c) * values + c * (np.roll(values, -1) + np.roll(values, 1))

    # Rank-one split A_cyclic = A_tri + u v^T with u = gamma e0 + off e_{n-1},
    # v = e0 + (off/gamma) e_{n-1}; gamma is any convenient nonzero scalar.
    gamma = -diag
    d = np.full(n, diag, dtype=np.complex128)
    d[0] = diag - gamma
    d[-1] = diag - off * off / gamma

    ab = np.zeros((3, n), dtype=np.complex128)
    ab[0, 1:] = off
    ab[1, :] = d
    ab[2, :-1] = off

    u = np.zeros(n, dtype=np.complex128)
    u[0] = gamma
    u[-1] = off

    stacked = np.column_stack([rhs, u])
    sol = solve_banded((1, 1), ab, stacked)
    y, z = sol[:, 0], sol[:, 1]
    vy = y[0] + (off / gamma) * y[-1]
    vz = z[0] + (off / gamma) * z[-1]
    return y - (vy / (1.0 + vz)) * z


def kinetic_step(psi: WaveField, params: SimParams, dt: float) -> WaveField:
    """Crank-Nicolson step of i h dpsi/dt = -(h^2 K0^2 / 2) d^2psi/dx^2."""
    if not (dt > 0):
        raise InvalidParameterError(f"dt must be > 0, got {dt}")
    if params.kinetic_solver == "fft":
        values = _kinetic_step_fft(psi.values, params, dt)
    else:
        values = _kinetic_step_tridiag(psi.values, params, dt)
    return WaveField(values=values, grid=psi.grid)


def step(psi: WaveField, spec: HamiltonianSpec, params: SimParams, t: float
         ) -> WaveField:
    """One Strang step from t to t + dt.

    The time-dependent external drive is evaluated at each potential
    substep's own time (t, then t + dt), which keeps second-order accuracy
    for nonautonomous potentials.
    """
    dt = params.dt
    psi = potential_halfstep(psi, spec, params, t, 0.5 * dt)
    psi = kinetic_step(psi, params, dt)
    psi = potential_halfstep(psi, spec, params, t + dt, 0.5 * dt)
    return psi


def _check_state(values: np.ndarray, threshold: float, k: int, t: float) -> None:
    m = (values.real ** 2 + values.imag ** 2).max()
    # "not (m <= threshold)" also catches NaN, which fails every comparison
    if not (m <= threshold):
        raise BlowUpError(
            f"state blew up at step {k} (t={t:.6g}): max density {m}",
            step=k, t=t, max_density=float(m))


def evolve(psi0: WaveField, spec: HamiltonianSpec, params: SimParams,
           observers: list | None = None) -> WaveField:
    """Propagate from t=0 to t=t_end, notifying observers along the way.

    Observers are callables (t, psi) invoked at t=0, after every
    sample_every-th step, and at the final time.  Identical inputs produce
    bit-identical trajectories on a given platform; there is no hidden
    state anywhere in the loop.

    On blow-up a BlowUpError carrying (step, t, max density) is raised;
    whatever the observers collected up to that point remains valid.
    """
    observers = observers or []
    dt = params.dt
    n_steps = int(round(params.t_end / dt))
    if abs(n_steps * dt - params.t_end) > 1e-9 * max(1.0, abs(params.t_end)):
        raise InvalidParameterError(
            f"t_end={params.t_end} is not an integer number of steps of dt={dt}")

    psi = psi0
    _check_state(psi.values, params.blowup_threshold, 0, 0.0)
    for obs in observers:
        obs(0.0, psi)
    for k in range(1, n_steps + 1):
        t_prev = (k - 1) * dt
        psi = step(psi, spec, params, t_prev)
        t = k * dt
        _check_state(psi.values, params.blowup_threshold, k, t)
        if k % params.sample_every == 0 or k == n_steps:
            for obs in observers:
                obs(t, psi)
    return psi
