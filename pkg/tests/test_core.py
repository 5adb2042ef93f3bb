"""Tests for grid construction, state containers, and basic observables."""

import numpy as np
import pytest

from loschmidt import (
    DensityNodeError,
    Grid,
    GridMismatchError,
    InvalidParameterError,
    SimParams,
    WaveField,
    inner_product,
    madelung_fields,
    make_initial_state,
    mass,
    reflect_indices,
    reflect_values,
)


@pytest.fixture
def grid64():
    return Grid(n_points=64)


@pytest.fixture
def params64():
    return SimParams(n_points=64)


# ---------------------------------------------------------------- grid


def test_grid_spacing_and_span(grid64):
    assert grid64.spacing == 2.0 * np.pi / 64
    nodes = grid64.nodes
    assert nodes.shape == (64,)
    assert np.all(np.diff(nodes) > 0)
    # left endpoint is -pi up to roundoff, right endpoint stays below +pi
    assert abs(nodes[0] + np.pi) < 1e-15
    assert nodes[-1] < np.pi


def test_grid_rejects_bad_sizes():
    with pytest.raises(InvalidParameterError):
        Grid(n_points=15)
    with pytest.raises(InvalidParameterError):
        Grid(n_points=8)
    Grid(n_points=16)


def test_nodes_negate_exactly_under_reflection(grid64):
    # x[(n - i) % n] == -x[i] bitwise, the property the parity invariant
    # rests on.  Zero maps to itself.
    nodes = grid64.nodes
    idx = reflect_indices(64)
    reflected = nodes[idx]
    assert reflected[0] == nodes[0]
    assert np.array_equal(reflected[1:], -nodes[1:])


def test_reflect_indices_is_an_involution():
    idx = reflect_indices(32)
    assert np.array_equal(idx[idx], np.arange(32))


def test_reflect_values_round_trip():
    rng = np.random.default_rng(0)
    v = rng.normal(size=64) + 1j * rng.normal(size=64)
    assert np.array_equal(reflect_values(reflect_values(v)), v)


def test_nodes_are_read_only(grid64):
    with pytest.raises((ValueError, AttributeError)):
        grid64.nodes[0] = 0.0


# ---------------------------------------------------------------- wave field


def test_wave_field_coerces_and_freezes(grid64):
    f = WaveField(grid=grid64, values=np.ones(64))
    assert f.values.dtype == np.complex128
    with pytest.raises((ValueError, AttributeError)):
        f.values[0] = 0.0


def test_wave_field_rejects_wrong_shape(grid64):
    with pytest.raises(GridMismatchError):
        WaveField(grid=grid64, values=np.ones(32))


def test_density_is_exact_square(grid64):
    rng = np.random.default_rng(1)
    v = rng.normal(size=64) + 1j * rng.normal(size=64)
    f = WaveField(grid=grid64, values=v)
    assert np.array_equal(f.density, v.real**2 + v.imag**2)


def test_is_finite_flags_nan(grid64):
    assert WaveField(grid=grid64, values=np.ones(64, dtype=complex)).is_finite()
    bad = np.ones(64, dtype=complex)
    bad[3] = np.nan
    assert not WaveField(grid=grid64, values=bad).is_finite()


def test_wave_field_adopts_and_freezes_caller_array(grid64):
    v = np.ones(64, dtype=complex)
    f = WaveField(grid=grid64, values=v)
    assert f.values is v
    with pytest.raises(ValueError):
        v[0] = 2.0


# ---------------------------------------------------------------- initial state


def test_initial_state_zero_amplitude_is_uniform(grid64):
    p = SimParams(n_points=64, init_amplitude=0.0)
    f = make_initial_state(p, grid64)
    assert np.array_equal(f.values, np.ones(64, dtype=complex))


def test_initial_state_matches_formula(grid64, params64):
    f = make_initial_state(params64, grid64)
    expected = np.exp(1j * np.cos(grid64.nodes) / 0.1)
    assert np.max(np.abs(f.values - expected)) < 1e-12


def test_initial_state_has_unit_modulus(grid64):
    p = SimParams(n_points=64, init_amplitude=2.5)
    f = make_initial_state(p, grid64)
    assert np.max(np.abs(np.abs(f.values) - 1.0)) < 1e-15


def test_initial_state_is_parity_even_bitwise():
    p = SimParams(n_points=256)
    f = make_initial_state(p, p.grid())
    assert np.array_equal(f.values, reflect_values(f.values))


def test_initial_state_mass_is_one(grid64, params64):
    f = make_initial_state(params64, grid64)
    assert abs(mass(f) - 1.0) < 1e-12


def test_initial_state_grid_mismatch(params64):
    with pytest.raises(GridMismatchError):
        make_initial_state(params64, Grid(n_points=32))


# ---------------------------------------------------------------- inner product


def test_inner_product_of_uniform_state(grid64):
    f = WaveField(grid=grid64, values=np.ones(64, dtype=complex))
    assert abs(inner_product(f, f) - 1.0) < 1e-15


def test_inner_product_orthogonal_modes(grid64):
    x = grid64.nodes
    a = WaveField(grid=grid64, values=np.exp(1j * x))
    b = WaveField(grid=grid64, values=np.exp(2j * x))
    assert abs(inner_product(a, b)) < 1e-14


def test_inner_product_global_phase(grid64):
    rng = np.random.default_rng(2)
    v = rng.normal(size=64) + 1j * rng.normal(size=64)
    v /= np.sqrt(np.mean(np.abs(v) ** 2))
    a = WaveField(grid=grid64, values=v)
    b = WaveField(grid=grid64, values=np.exp(0.7j) * v)
    assert abs(inner_product(a, b) - np.exp(0.7j)) < 1e-12


def test_inner_product_cauchy_schwarz(grid64):
    rng = np.random.default_rng(3)
    for _ in range(20):
        va = rng.normal(size=64) + 1j * rng.normal(size=64)
        vb = rng.normal(size=64) + 1j * rng.normal(size=64)
        va /= np.sqrt(np.mean(np.abs(va) ** 2))
        vb /= np.sqrt(np.mean(np.abs(vb) ** 2))
        a = WaveField(grid=grid64, values=va)
        b = WaveField(grid=grid64, values=vb)
        assert abs(inner_product(a, b)) <= 1.0 + 1e-12


def test_inner_product_grid_mismatch(grid64):
    a = WaveField(grid=grid64, values=np.ones(64))
    b = WaveField(grid=Grid(n_points=32), values=np.ones(32))
    with pytest.raises(GridMismatchError):
        inner_product(a, b)


# ---------------------------------------------------------------- madelung


def test_madelung_uniform_state(grid64, params64):
    f = WaveField(grid=grid64, values=np.ones(64, dtype=complex))
    dens, vel = madelung_fields(f, params64)
    assert np.max(np.abs(dens - 1.0)) < 1e-15
    assert np.max(np.abs(vel)) < 1e-15


def test_madelung_plane_wave_gives_constant_velocity(grid64, params64):
    # exp(i x) has unit phase gradient, so velocity is h*K0 = 0.1 everywhere.
    f = WaveField(grid=grid64, values=np.exp(1j * grid64.nodes))
    _, vel = madelung_fields(f, params64)
    assert np.max(np.abs(vel - 0.1)) < 1e-12


def test_madelung_initial_state_velocity():
    p = SimParams(n_points=512)
    g = p.grid()
    f = make_initial_state(p, g)
    _, vel = madelung_fields(f, p)
    err = np.max(np.abs(vel + np.sin(g.nodes)))
    # centered difference of the cosine phase: error ~ dx^2 / 6
    assert err < g.spacing**2


def test_madelung_second_order_convergence():
    errs = []
    for n in (64, 128, 256, 512):
        p = SimParams(n_points=n)
        g = p.grid()
        f = make_initial_state(p, g)
        _, vel = madelung_fields(f, p)
        errs.append(np.max(np.abs(vel + np.sin(g.nodes))))
    slopes = np.diff(np.log2(errs))
    assert np.all(np.abs(-slopes - 2.0) < 0.1)


def test_madelung_raises_on_density_node(grid64, params64):
    v = np.ones(64, dtype=complex)
    v[10] = 1e-9
    f = WaveField(grid=grid64, values=v)
    with pytest.raises(DensityNodeError) as info:
        madelung_fields(f, params64)
    assert info.value.density.shape == (64,)
    assert info.value.density[10] == pytest.approx(1e-18)


# ---------------------------------------------------------------- parameters


def test_default_parameters():
    p = SimParams()
    assert p.K0 == 2.0
    assert p.h == 0.05
    assert p.vf_ratio == 0.1
    assert p.n_points == 2048
    assert p.dt == 1e-3
    assert p.sample_every == 10
    assert p.poisson_symbol == "fd"
    assert p.kinetic_solver == "fft"


def test_derived_coefficients():
    p = SimParams()
    assert p.a_kin == pytest.approx(0.005, rel=1e-12)
    assert p.a_pois == pytest.approx(0.25, rel=1e-12)
    assert p.c_fermi == pytest.approx(0.003, rel=1e-12)
    assert p.grid().n_points == 2048


@pytest.mark.parametrize(
    "kwargs",
    [
        {"K0": 0.0},
        {"K0": -1.0},
        {"h": 0.0},
        {"vf_ratio": -0.1},
        {"n_points": 33},
        {"n_points": 8},
        {"dt": 0.0},
        {"dt": -1e-3},
        {"t_end": -1.0},
        {"sample_every": 0},
        {"poisson_symbol": "cubic"},
        {"kinetic_solver": "magic"},
        {"blowup_threshold": 0.0},
        {"init_amplitude": -2.0},
    ],
)
def test_parameter_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        SimParams(**kwargs)


def test_even_non_power_of_two_grid_is_allowed():
    SimParams(n_points=100)
