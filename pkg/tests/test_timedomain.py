import math

import numpy as np
import pytest

import oracles
from wgmscatter import (NotSettled, PulseSpec, StepTooLarge, SystemParams, amplitudes_full, scatter_pulse,
                        steady_state_transfer)
from wgmscatter.timedomain import hamiltonian, reduced_rhs, slowest_decay

TOROID_ATOM = SystemParams(g_a=6, g_b=6, h=-9.6, kappa_q=0.16, kappa_c=0.76, gamma_ext=0.44)


def _narrow(carrier=0.0, width=200.0):
    return PulseSpec("gaussian", carrier=carrier, width=width, delay=6 * width)


def test_rhs_zero():
    assert np.all(reduced_rhs(TOROID_ATOM, np.zeros(3), 0.0) == 0)


def test_rhs_written_out():
    p = SystemParams(omega_c=0.5, omega_atom=-0.3, g_a=1 + 1j, g_b=0.4, h=0.7j, kappa_c=0.2, kappa_q=0.1)
    y = np.array([0.3 + 0.1j, -0.2j, 0.5])
    phi = 0.8 - 0.6j
    V = math.sqrt(2.0)
    ea, eb, eq = y
    ref = np.array([
        -1j * (0.5 - 0.2j) * ea - ea - 1j * np.conj(p.g_a) * eq - 1j * np.conj(p.h) * eb - 1j * V * phi,
        -1j * (0.5 - 0.2j) * eb - eb - 1j * np.conj(p.g_b) * eq - 1j * p.h * ea,
        -1j * (-0.3 - 0.1j) * eq - 1j * p.g_a * ea - 1j * p.g_b * eb,
    ])
    assert np.allclose(reduced_rhs(p, y, phi), ref, atol=1e-15)


def test_hamiltonian_matches_oracle():
    rng = np.random.default_rng(31)
    p = oracles.random_params(rng)
    assert np.array_equal(hamiltonian(p), oracles.heff(p))


def test_single_mode_free_decay():
    # drive off after a short pulse: e_a decays at kappa_c + Gamma
    p = SystemParams(kappa_c=0.3)
    pulse = PulseSpec("gaussian", width=0.5, delay=3.0)
    rec = scatter_pulse(p, pulse, t_end=20.0, dt=0.005, halving_tol=None)
    i1, i2 = np.searchsorted(rec.times, [10.0, 15.0])
    ratio = abs(rec.states[i2, 0]) / abs(rec.states[i1, 0])
    assert ratio == pytest.approx(math.exp(-1.3 * (rec.times[i2] - rec.times[i1])), rel=1e-8)


def test_pulse_normalization():
    from scipy.integrate import trapezoid
    tg = np.linspace(-50, 50, 200001)
    te = np.linspace(-20, 60, 200001)
    assert trapezoid(np.abs(PulseSpec("gaussian", width=3.0).field(tg)) ** 2, tg) == pytest.approx(1.0, rel=1e-9)
    expo = PulseSpec("exponential", width=2.0, delay=-20.0)
    assert trapezoid(np.abs(expo.field(te)) ** 2, te) == pytest.approx(1.0 - math.exp(-40.0), rel=1e-7)
    tt = np.linspace(0, 1, 11)
    s = PulseSpec("sampled", times=tt, values=np.ones(11) * 3.0)
    assert trapezoid(np.abs(s.envelope(tt)) ** 2, tt) == pytest.approx(1.0)


def test_pulse_validation():
    with pytest.raises(ValueError):
        PulseSpec("square")
    with pytest.raises(ValueError):
        PulseSpec("gaussian", width=0.0)
    with pytest.raises(ValueError):
        PulseSpec("sampled", times=[0, 1], values=[0, 0])
    with pytest.raises(ValueError):
        PulseSpec("sampled", times=[1, 0], values=[1, 1])


def test_allpass_pulse():
    rec = scatter_pulse(SystemParams(), _narrow(), t_end=2400 + 1240, dt=0.2)
    e = rec.energy
    assert e.E_T / e.E_in == pytest.approx(1.0, abs=1e-3)
    assert e.E_R == 0.0


def test_backscatter_pulse_energy_split():
    rec = scatter_pulse(SystemParams(h=0.3), _narrow(), t_end=2400 + 1240, dt=0.2)
    e = rec.energy
    assert e.E_T / e.E_in == pytest.approx(((0.09 - 1) / 1.09) ** 2, abs=1e-3)
    assert e.E_R / e.E_in == pytest.approx(1 - ((0.09 - 1) / 1.09) ** 2, abs=1e-3)
    assert abs(e.residual) / e.E_in < 1e-6


def test_critical_pulse_absorbed():
    rec = scatter_pulse(SystemParams(kappa_c=0.6, h=0.8), _narrow(), t_end=2400 + 1240, dt=0.2)
    e = rec.energy
    assert e.E_T / e.E_in < 1e-3
    assert abs(e.residual) / e.E_in < 1e-6


def test_energy_ledger_lossy_atom():
    pulse = PulseSpec("gaussian", width=5.0, delay=30.0, carrier=0.5)
    rec = scatter_pulse(TOROID_ATOM, pulse, t_end=200.0, dt=0.01)
    e = rec.energy
    assert min(e.E_T, e.E_R, e.E_dissipated, e.E_stored) >= 0
    assert abs(e.residual) / e.E_in < 1e-6


def test_fourth_order_convergence():
    p = SystemParams(g_a=1.0, g_b=0.7j, h=0.5, kappa_c=0.1, kappa_q=0.2)
    pulse = PulseSpec("gaussian", width=1.0, delay=6.0)
    runs = [scatter_pulse(p, pulse, 20.0, dt, halving_tol=None) for dt in (0.08, 0.04, 0.01)]
    ref = runs[2].phi_out[::8]
    e1 = np.max(np.abs(runs[0].phi_out - ref))
    e2 = np.max(np.abs(runs[1].phi_out[::2] - ref))
    assert 12 < e1 / e2 < 20


def test_step_too_large():
    pulse = PulseSpec("gaussian", width=0.3, delay=3.0)
    with pytest.raises(StepTooLarge):
        scatter_pulse(SystemParams(g_a=3, g_b=3), pulse, 15.0, 0.3, halving_tol=1e-9)


def test_unstable_step_rejected():
    with pytest.raises(ValueError):
        scatter_pulse(SystemParams(h=50.0), _narrow(), 100.0, 1.0)
    with pytest.raises(ValueError):
        scatter_pulse(SystemParams(), _narrow(), 100.0, 0.0)


def test_record_serialization(tmp_path):
    import json
    rec = scatter_pulse(SystemParams(h=0.5), PulseSpec(width=1.0, delay=5.0), 15.0, 0.05, halving_tol=None)
    rec.to_csv(tmp_path / "w.csv")
    rec.to_json(tmp_path / "w.json")
    lines = (tmp_path / "w.csv").read_text().splitlines()
    assert lines[0] == "t,re_in,im_in,re_out,im_out,re_refl,im_refl" and len(lines) == len(rec.times) + 1
    doc = json.loads((tmp_path / "w.json").read_text())
    assert doc["energy"]["E_T"] == rec.energy.E_T and doc["steps"] == 300


def test_steady_state_random_lossy():
    rng = np.random.default_rng(32)
    for _ in range(5):
        p = oracles.random_params(rng, loss_range=(0.3, 2.0))
        w = p.omega_c + rng.uniform(-10, 10, 20)
        ss = steady_state_transfer(p, w, settle_time=40.0 / slowest_decay(p))
        a = amplitudes_full(p, w)
        assert np.max(np.abs(ss.t_num - a.t)) < 1e-6
        assert np.max(np.abs(ss.r_num - a.r)) < 1e-6


def test_steady_state_far_detuned():
    # |t - 1| itself is about 2 Gamma / |dw| = 0.02 here; the intensity is what approaches 1
    p = SystemParams(kappa_c=0.2)
    ss = steady_state_transfer(p, 100.0, settle_time=40.0)
    assert abs(abs(ss.t_num) ** 2 - 1) < 1e-3
    assert abs(ss.t_num - amplitudes_full(p, 100.0).t) < 1e-6


def test_steady_state_atom_set_resonance():
    ss = steady_state_transfer(TOROID_ATOM, 0.0, settle_time=40.0 / slowest_decay(TOROID_ATOM), dt=0.01)
    assert abs(ss.t_num) ** 2 == pytest.approx(float(amplitudes_full(TOROID_ATOM, 0.0).T), abs=1e-8)


def test_not_settled():
    with pytest.raises(NotSettled):
        steady_state_transfer(SystemParams(gamma_ext=0.01), 0.0, settle_time=10.0)


def test_slowest_decay():
    assert slowest_decay(SystemParams(kappa_c=0.5)) == pytest.approx(0.0)
    assert slowest_decay(SystemParams(kappa_c=0.5, kappa_q=0.2)) == pytest.approx(0.2)
