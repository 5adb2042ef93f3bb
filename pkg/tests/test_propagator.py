"""Tests for the split-step integrator.

Oracles: closed-form Crank-Nicolson gain on single Fourier modes, exact
phase rotation on uniform states, and second-order self-convergence of the
full composition.
"""

import numpy as np
import pytest

from loschmidt import (
    BlowUpError,
    Grid,
    HamiltonianSpec,
    InvalidParameterError,
    SimParams,
    StaticPerturbation,
    WaveField,
    evolve,
    kinetic_step,
    make_initial_state,
    mass,
    potential_halfstep,
    reflect_values,
    step,
    symmetry,
)


def uniform_state(n):
    p = SimParams(n_points=n, init_amplitude=0.0)
    return make_initial_state(p, p.grid())


def random_unit_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    v /= np.sqrt(np.mean(np.abs(v) ** 2))
    return WaveField(grid=Grid(n_points=n), values=v)


SC = HamiltonianSpec.self_consistent()


# ---------------------------------------------------------------- potential


def test_potential_halfstep_identity_when_potential_vanishes():
    # beta=0, no drive, vf=0, no perturbation: V = 0 exactly.
    psi = random_unit_state(64, 0)
    p = SimParams(n_points=64, vf_ratio=0.0)
    spec = HamiltonianSpec.external(delta=0.0)
    out = potential_halfstep(psi, spec, p, 0.0, 0.5 * p.dt)
    assert np.array_equal(out.values, psi.values)


def test_potential_halfstep_preserves_modulus():
    psi = random_unit_state(64, 1)
    p = SimParams(n_points=64)
    out = potential_halfstep(psi, SC, p, 0.0, 0.5 * p.dt)
    assert np.max(np.abs(np.abs(out.values) - np.abs(psi.values))) < 1e-14


def test_potential_halfstep_uniform_global_phase():
    # V = c_fermi = 0.003 on a uniform state; dt_half/h = 1 gives a global
    # rotation by exactly 0.003 rad.
    psi = uniform_state(64)
    p = SimParams(n_points=64)
    out = potential_halfstep(psi, SC, p, 0.0, dt_half=0.05)
    assert np.max(np.abs(out.values - np.exp(-0.003j))) < 1e-14


def test_potential_halfstep_rejects_bad_dt():
    psi = uniform_state(64)
    with pytest.raises(InvalidParameterError):
        potential_halfstep(psi, SC, SimParams(n_points=64), 0.0, 0.0)


# ---------------------------------------------------------------- kinetic


def test_kinetic_leaves_constants_alone():
    psi = uniform_state(64)
    out = kinetic_step(psi, SimParams(n_points=64), 1e-3)
    assert np.max(np.abs(out.values - 1.0)) < 1e-14


@pytest.mark.parametrize("mode", [1, 2, 5])
@pytest.mark.parametrize("solver", ["fft", "tridiag"])
def test_kinetic_eigenmode_gain(mode, solver):
    # On exp(i j x) Crank-Nicolson multiplies by (1 - i mu lam)/(1 + i mu lam)
    # with lam the centered second-difference symbol: modulus 1, phase
    # -2 atan(mu lam).
    n = 64
    p = SimParams(n_points=n, kinetic_solver=solver)
    g = p.grid()
    psi = WaveField(grid=g, values=np.exp(1j * mode * g.nodes))
    dt = 1e-2
    out = kinetic_step(psi, p, dt)
    ratio = out.values / psi.values
    assert np.max(np.abs(ratio - ratio[0])) < 1e-12  # a pure eigenmode
    assert abs(abs(ratio[0]) - 1.0) < 1e-14
    dx = g.spacing
    lam = (2.0 - 2.0 * np.cos(mode * dx)) / dx**2
    mu = p.h * p.K0**2 * dt / 4.0
    assert abs(np.angle(ratio[0]) + 2.0 * np.arctan(mu * lam)) < 1e-12


def test_kinetic_fft_and_tridiag_agree():
    psi = random_unit_state(128, 2)
    for dt in (1e-3, 1e-2, 0.1):
        a = kinetic_step(psi, SimParams(n_points=128, kinetic_solver="fft"), dt)
        b = kinetic_step(psi, SimParams(n_points=128, kinetic_solver="tridiag"), dt)
        assert np.max(np.abs(a.values - b.values)) < 1e-12


def test_kinetic_phase_converges_at_third_order_locally():
    # CN phase -2 atan(mu lam) deviates from the generator phase -2 mu lam
    # by (2/3)(mu lam)^3: halving dt shrinks the defect 8x.
    n = 64
    g = Grid(n_points=n)
    psi = WaveField(grid=g, values=np.exp(1j * g.nodes))
    dx = g.spacing
    lam = (2.0 - 2.0 * np.cos(dx)) / dx**2
    defects = []
    for dt in (4e-2, 2e-2, 1e-2):
        p = SimParams(n_points=n)
        out = kinetic_step(psi, p, dt)
        mu = p.h * p.K0**2 * dt / 4.0
        defects.append(abs(np.angle(out.values[0] / psi.values[0]) + 2 * mu * lam))
    ratios = [a / b for a, b in zip(defects, defects[1:])]
    assert all(6.0 < r < 10.0 for r in ratios)


def test_kinetic_preserves_mass():
    psi = random_unit_state(128, 3)
    out = kinetic_step(psi, SimParams(n_points=128), 0.37)
    assert abs(mass(out) - mass(psi)) < 1e-13


def test_kinetic_rejects_bad_dt():
    with pytest.raises(InvalidParameterError):
        kinetic_step(uniform_state(64), SimParams(n_points=64), 0.0)


# ---------------------------------------------------------------- full step


def test_step_quiescent_state_rotates_globally():
    # Uniform density is a fixed point up to the global phase from the
    # degeneracy-pressure constant: exp(-i c_fermi dt / h) per step.
    p = SimParams(n_points=64, dt=0.5)
    psi = uniform_state(64)
    out = step(psi, SC, p, 0.0)
    expected = np.exp(-1j * p.c_fermi * p.dt / p.h)
    assert np.max(np.abs(out.values - expected)) < 1e-13


def test_step_conserves_mass_over_many_steps():
    p = SimParams(n_points=256, dt=1e-3)
    psi = make_initial_state(p, p.grid())
    for k in range(100):
        psi = step(psi, SC, p, k * p.dt)
    assert abs(mass(psi) - 1.0) < 1e-12


def test_step_self_convergence_is_second_order():
    # Full nonlinear composition vs itself at halved dt over a fixed horizon.
    t_end = 1.0
    finals = []
    for dtv in (4e-3, 2e-3, 1e-3):
        p = SimParams(n_points=256, dt=dtv, t_end=t_end, sample_every=10**9)
        psi = make_initial_state(p, p.grid())
        finals.append(evolve(psi, SC, p).values)
    e1 = np.max(np.abs(finals[0] - finals[1]))
    e2 = np.max(np.abs(finals[1] - finals[2]))
    assert 3.3 < e1 / e2 < 4.8


def test_splitting_orders_converge_to_each_other():
    # potential-first vs kinetic-first Strang compositions differ at O(dt^2)
    # over a fixed horizon.
    t_end = 0.5
    diffs = []
    for dtv in (2e-3, 1e-3):
        p = SimParams(n_points=128, dt=dtv, t_end=t_end, sample_every=10**9)
        psi_v = make_initial_state(p, p.grid())
        psi_t = psi_v
        n_steps = int(round(t_end / dtv))
        for k in range(n_steps):
            t = k * dtv
            psi_v = step(psi_v, SC, p, t)
            psi_t = kinetic_step(psi_t, p, 0.5 * dtv)
            psi_t = potential_halfstep(psi_t, SC, p, t + 0.5 * dtv, dtv)
            psi_t = kinetic_step(psi_t, p, 0.5 * dtv)
        diffs.append(np.max(np.abs(psi_v.values - psi_t.values)))
    assert 2.5 < diffs[0] / diffs[1] < 5.5


def test_parity_is_preserved_without_perturbation():
    # Even initial state + parity-symmetric Hamiltonian: reflection symmetry
    # survives to roundoff over a 20 omega_p^-1 horizon (chaotic roundoff
    # amplification bounds how far this can be pushed).
    p = SimParams(n_points=512, dt=1e-3, t_end=20.0, sample_every=10**9)
    psi = evolve(make_initial_state(p, p.grid()), SC, p)
    assert np.max(np.abs(psi.values - reflect_values(psi.values))) < 1e-10
    assert abs(symmetry(psi) - 1.0) < 1e-9


def test_conjugation_time_reversal_echo():
    # conj o evolve o conj o evolve recovers the initial state; for a static
    # Hamiltonian the palindromic splitting makes this exact to roundoff.
    pert = StaticPerturbation(epsilon=1e-3, phase_seed=5)
    spec = HamiltonianSpec.self_consistent(perturbation=pert)
    p = SimParams(n_points=256, dt=1e-3, t_end=2.0, sample_every=10**9)
    psi0 = make_initial_state(p, p.grid())
    fwd = evolve(psi0, spec, p)
    back = evolve(WaveField(grid=fwd.grid, values=np.conj(fwd.values)), spec, p)
    echo = np.conj(back.values)
    err = np.max(np.abs(echo - psi0.values))
    assert err < p.dt**2 * p.t_end  # far below the second-order budget
    assert err < 1e-9


# ---------------------------------------------------------------- evolve


def test_evolve_zero_horizon_returns_initial_state():
    p = SimParams(n_points=64, t_end=0.0)
    psi0 = uniform_state(64)
    seen = []
    out = evolve(psi0, SC, p, observers=[lambda t, psi: seen.append((t, psi))])
    assert out is psi0
    assert len(seen) == 1 and seen[0][0] == 0.0 and seen[0][1] is psi0


def test_evolve_rejects_misaligned_horizon():
    p = SimParams(n_points=64, dt=1e-3, t_end=0.0015)
    with pytest.raises(InvalidParameterError):
        evolve(uniform_state(64), SC, p)


def test_evolve_observer_cadence():
    p = SimParams(n_points=64, dt=0.1, t_end=1.0, sample_every=3)
    times = []
    evolve(uniform_state(64), SC, p, observers=[lambda t, psi: times.append(t)])
    expected = [0.0, 3 * 0.1, 6 * 0.1, 9 * 0.1, 10 * 0.1]
    assert times == expected


def test_evolve_is_deterministic():
    p = SimParams(n_points=128, dt=1e-3, t_end=0.1)
    psi0 = make_initial_state(p, p.grid())
    a = evolve(psi0, SC, p).values
    b = evolve(psi0, SC, p).values
    assert np.array_equal(a, b)


def test_evolve_raises_on_immediate_blowup():
    p = SimParams(n_points=64, blowup_threshold=0.5, t_end=1.0, dt=0.1)
    with pytest.raises(BlowUpError) as info:
        evolve(uniform_state(64), SC, p)
    assert info.value.step == 0
    assert info.value.t == 0.0
    assert info.value.max_density == pytest.approx(1.0)


def test_evolve_raises_on_nan_state():
    v = np.ones(64, dtype=complex)
    v[7] = np.nan
    psi = WaveField(grid=Grid(n_points=64), values=v)
    p = SimParams(n_points=64, t_end=0.1, dt=0.1)
    with pytest.raises(BlowUpError):
        evolve(psi, SC, p)
