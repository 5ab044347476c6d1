import math

import numpy as np
import pytest

from wgmscatter import NegativeRate, NonFiniteParameter, SystemParams, delta_theta_of, validate
from wgmscatter.params import reduce_angle


def test_bare_resonator_is_valid():
    p = validate(SystemParams())
    assert p.derived.g_plus_sq == 0 and p.derived.delta_theta is None
    assert p.derived.v_waveguide_mag == pytest.approx(math.sqrt(2.0))


def test_negative_rate_rejected():
    with pytest.raises(NegativeRate):
        validate(SystemParams(kappa_c=-0.1))


@pytest.mark.parametrize("field", ["omega_c", "gamma_ext", "kappa_q"])
def test_non_finite_rejected(field):
    with pytest.raises(NonFiniteParameter):
        validate(SystemParams(**{field: math.nan}))


def test_non_finite_coupling_rejected():
    with pytest.raises(NonFiniteParameter):
        validate(SystemParams(h=complex(math.inf, 0)))


def test_toroid_atom_set_valid():
    p = validate(SystemParams(g_a=6, g_b=6, h=-9.6, kappa_q=0.16, kappa_c=0.76, gamma_ext=0.44))
    assert p.derived.g_plus_sq == pytest.approx(72.0)
    assert p.derived.g_minus_sq == 0.0


def test_derived_couplings():
    p = validate(SystemParams(g_a=1 + 1j, g_b=2, omega_atom=3.0, omega_c=1.0))
    d = p.derived
    assert d.g_plus_sq == pytest.approx(6.0)
    assert d.g_minus_sq == pytest.approx(2.0)
    assert d.g_plus_sq >= abs(d.g_minus_sq)
    assert d.delta_detune == 2.0


def test_validate_idempotent():
    p = SystemParams(g_a=1 + 2j, g_b=0.5j, h=3 - 1j, kappa_c=0.2)
    once = validate(p)
    twice = validate(once)
    assert once == twice and once.derived == twice.derived


@pytest.mark.parametrize("h, expected", [(1j, 0.0), (1.0, -math.pi / 2), (-1.0, math.pi / 2)])
def test_delta_theta_simple(h, expected):
    assert delta_theta_of(SystemParams(g_a=1, g_b=1, h=h)) == pytest.approx(expected)


def test_delta_theta_real_g_is_theta_h_minus_half_pi():
    for th in np.linspace(-3, 3, 13):
        got = delta_theta_of(SystemParams(g_a=2, g_b=2, h=3 * np.exp(1j * th)))
        assert got == pytest.approx(reduce_angle(th - math.pi / 2))


def test_delta_theta_undefined_marker():
    assert delta_theta_of(SystemParams(g_a=0, g_b=1, h=1)) is None
    assert delta_theta_of(SystemParams(g_a=1, g_b=1, h=0)) is None


def test_reduce_angle_range():
    for x in np.linspace(-20, 20, 1001):
        r = reduce_angle(x)
        assert -math.pi < r <= math.pi
        assert math.isclose(math.cos(r), math.cos(x), abs_tol=1e-12)
    assert reduce_angle(math.pi) == pytest.approx(math.pi)
    assert reduce_angle(-math.pi) == pytest.approx(math.pi)


def test_scaled_rescales_about_omega_c():
    p = SystemParams(omega_c=5.0, omega_atom=6.0, kappa_c=0.3, g_a=1j, h=2.0)
    q = p.scaled(2.0)
    assert q.omega_c == 5.0 and q.delta == 2.0 and q.gamma_ext == 2.0 and q.g_a == 2j
