import math

import numpy as np
import pytest

import oracles
from wgmscatter import (DegenerateDenominator, PreconditionViolated, SpectrumTable, SystemParams, UndefinedPhase,
                        amplitudes_full, amplitudes_h0, amplitudes_wr, denominator, evaluate, group_delay,
                        spectrum)
from wgmscatter.analysis import cubic_coefficients, resonance_report
from wgmscatter.cubic import horner

TOROID_ATOM = SystemParams(g_a=6, g_b=6, h=-9.6, kappa_q=0.16, kappa_c=0.76, gamma_ext=0.44)


# --------------------------------------------------------------- denominator


def test_denominator_decoupled_product():
    dw = np.linspace(-5, 5, 11)
    assert np.allclose(denominator(SystemParams(), dw), (dw + 1j) ** 2 * dw, atol=1e-13)


def test_denominator_on_resonance_h0():
    g = 1.7
    D = denominator(SystemParams(g_a=g, g_b=g), 0.0)
    assert abs(D - (1j) * (-2 * g * g)) < 1e-13


def test_denominator_is_determinant():
    rng = np.random.default_rng(11)
    for _ in range(50):
        p = oracles.random_params(rng)
        w = p.omega_c + rng.uniform(-10, 10, 7)
        assert np.allclose(denominator(p, w), oracles.det_denominator(p, w), rtol=1e-12, atol=1e-12)


def test_denominator_matches_monic_cubic_at_toroid_atom_point():
    dw = abs(TOROID_ATOM.h)
    f, _ = horner(cubic_coefficients(TOROID_ATOM), dw)
    assert abs(denominator(TOROID_ATOM, dw, detuning=True) - f) < 1e-10 * abs(f)


# --------------------------------------------------------------- full model


def test_allpass_on_resonance_phase():
    a = amplitudes_full(SystemParams(), 0.0)
    assert abs(a.t + 1) < 1e-15 and abs(a.r) < 1e-15


def test_backscatter_on_resonance_transmission():
    a = amplitudes_full(SystemParams(h=0.3), 0.0)
    assert float(a.T) == pytest.approx(((0.09 - 1) / (0.09 + 1)) ** 2, abs=1e-14)
    # closed form evaluates to 0.6969952; the quoted 0.696988 is a rounding slip
    assert float(a.T) == pytest.approx(0.696988, abs=1e-5)


def test_critical_set_zero_transmission():
    assert abs(amplitudes_full(SystemParams(kappa_c=0.6, h=0.8), 0.0).t) < 1e-12


def test_full_matches_linear_solve():
    rng = np.random.default_rng(12)
    for i in range(100):
        p = oracles.random_params(rng, lossless=i % 3 == 0)
        w = p.omega_c + np.linspace(-15, 15, 31)
        ref = oracles.linear_solve(p, w)
        got = amplitudes_full(p, w)
        for k, x in enumerate((got.t, got.r, got.e_a, got.e_b, got.e_q)):
            assert np.max(np.abs(x - ref[k])) < 1e-11


def test_output_relations():
    rng = np.random.default_rng(13)
    p = oracles.random_params(rng)
    a = amplitudes_full(p, p.omega_c + np.linspace(-5, 5, 21))
    V = math.sqrt(2 * p.gamma_ext)
    assert np.allclose(a.t, 1 - 1j * V * a.e_a, atol=1e-13)
    assert np.allclose(a.r, -1j * V * a.e_b, atol=1e-13)


def test_degenerate_denominator():
    p = SystemParams(gamma_ext=0.0)
    # atom decoupled: the lossless factor is divided out and only the empty resonator pole remains
    with pytest.raises(DegenerateDenominator):
        amplitudes_full(p, 0.0)


def test_absolute_and_detuning_inputs_agree():
    p = SystemParams(omega_c=100.0, omega_atom=101.0, g_a=1, g_b=1j, h=2, kappa_c=0.1)
    x = np.linspace(-4, 4, 9)
    a = amplitudes_full(p, 100.0 + x)
    b = amplitudes_full(p, x, detuning=True)
    assert np.allclose(a.t, b.t, atol=1e-13) and np.allclose(a.omega, b.omega)


def test_unequal_couplings_flux_and_oracle():
    # |g_a| != |g_b| exercises the G_minus numerator term
    p = SystemParams(g_a=0.5, g_b=2.0 * np.exp(0.4j), h=1.3j, omega_atom=0.7)
    w = np.linspace(-8, 8, 161)
    a = amplitudes_full(p, w)
    assert np.max(np.abs(a.T + a.R - 1)) < 1e-12
    assert np.max(np.abs(a.t - oracles.linear_solve(p, w)[0])) < 1e-12


# --------------------------------------------------------------- wr model


def test_wr_lossless_allpass():
    w = np.linspace(-30, 30, 301)
    assert np.allclose(np.abs(amplitudes_wr(SystemParams(), w).t), 1.0, atol=1e-15)


def test_wr_butterworth():
    w = np.linspace(-10, 10, 401)
    assert np.max(np.abs(amplitudes_wr(SystemParams(h=1.0), w).T - oracles.butterworth2(w, 1.0))) < 1e-12


def test_wr_ignores_atom():
    p = SystemParams(h=0.7, kappa_c=0.2, g_a=3, g_b=1j)
    w = np.linspace(-5, 5, 11)
    assert np.allclose(amplitudes_wr(p, w).t, amplitudes_wr(p.replace(g_a=0, g_b=0), w).t)


def test_wr_h_phase_insensitive():
    w = np.linspace(-5, 5, 41)
    T0 = amplitudes_wr(SystemParams(h=2.0, kappa_c=0.3), w).T
    for beta in (0.3, 1.9, -2.5):
        T1 = amplitudes_wr(SystemParams(h=2.0 * np.exp(1j * beta), kappa_c=0.3), w).T
        assert np.max(np.abs(T1 - T0)) < 1e-14


def test_wr_measured_doublet():
    p = SystemParams(h=7.64947, kappa_c=0.250879, gamma_ext=0.0194301)
    rep = resonance_report(p, np.linspace(-12, 12, 2001), model="wr")
    assert len(rep) == 2
    expected = math.sqrt(7.64947**2 - 0.0194301**2)
    assert np.allclose(np.sort(rep.dip_locations), [-expected, expected], atol=0.01)


# --------------------------------------------------------------- h0 model


def test_h0_decoupled_reduces_to_single_mode():
    w = np.linspace(-5, 5, 21)
    a = amplitudes_h0(SystemParams(kappa_c=0.2), w)
    assert np.allclose(a.t, (w + 0.2j - 1j) / (w + 0.2j + 1j))
    assert np.allclose(a.e_a, math.sqrt(2) / (w + 1.2j)) and np.all(a.r == 0)


def test_h0_butterworth3():
    g = 1 / math.sqrt(2)
    w = np.linspace(-10, 10, 401)
    assert np.max(np.abs(amplitudes_h0(SystemParams(g_a=g, g_b=g), w).T - oracles.butterworth3(w, g))) < 1e-12


def test_h0_equals_full():
    rng = np.random.default_rng(14)
    for _ in range(100):
        base = oracles.random_params(rng)
        p = base.replace(h=0.0, g_b=abs(base.g_a) * np.exp(1j * rng.uniform(-3, 3)))
        w = p.omega_c + np.linspace(-20, 20, 81)
        a, b = amplitudes_full(p, w), amplitudes_h0(p, w)
        for x, y in zip(a.as_tuple()[1:], b.as_tuple()[1:]):
            assert np.max(np.abs(x - y)) < 1e-12


def test_h0_preconditions():
    with pytest.raises(PreconditionViolated):
        amplitudes_h0(SystemParams(g_a=1, g_b=1, h=0.1), 0.0)
    with pytest.raises(PreconditionViolated):
        amplitudes_h0(SystemParams(g_a=1, g_b=2), 0.0)


def test_h0_reflection_phase_factor():
    w = np.linspace(-4, 4, 17)
    g = 1.3
    r0 = amplitudes_h0(SystemParams(g_a=g, g_b=g), w).r
    for th in (0.2, 1.1, -2.0):
        # conjugate phases: g_a * conj(g_b) = g^2 exp(2i th)
        r = amplitudes_h0(SystemParams(g_a=g * np.exp(1j * th), g_b=g * np.exp(-1j * th)), w).r
        assert np.allclose(r, np.exp(2j * th) * r0, atol=1e-14)


def test_common_atom_phase_leaves_observables():
    rng = np.random.default_rng(15)
    p = oracles.random_params(rng).replace(g_b=2.0, g_a=2.0)
    w = p.omega_c + np.linspace(-10, 10, 41)
    a = amplitudes_full(p, w)
    for alpha in (0.4, 2.2):
        q = p.replace(g_a=p.g_a * np.exp(1j * alpha), g_b=p.g_b * np.exp(1j * alpha))
        b = amplitudes_full(q, w)
        for x, y in ((a.T, b.T), (a.R, b.R), (abs(a.e_a), abs(b.e_a)), (abs(a.e_b), abs(b.e_b)),
                     (abs(a.e_q), abs(b.e_q))):
            assert np.max(np.abs(x - y)) < 1e-12


# --------------------------------------------------------------- spectra


def test_spectrum_atom_set_three_dips_two_atomic_peaks():
    tab = spectrum(TOROID_ATOM, np.linspace(-20 * 0.44, 20 * 0.44, 801) * 3)
    T, nq = tab.T, tab.nq
    dips = [i for i in range(1, len(T) - 1) if T[i] < T[i - 1] and T[i] <= T[i + 1]]
    peaks = [i for i in range(1, len(nq) - 1) if nq[i] > nq[i - 1] and nq[i] >= nq[i + 1]]
    assert len(dips) == 3
    assert len(peaks) == 2


def test_spectrum_backscatter_zeros():
    rep = resonance_report(SystemParams(h=2.0), np.linspace(-10, 10, 201))
    assert np.allclose(np.sort(rep.dip_locations), [-math.sqrt(3), math.sqrt(3)], atol=1e-9)


def test_spectrum_empty_physics():
    p = SystemParams(gamma_ext=0.0)
    tab = spectrum(p, np.linspace(-3, 3, 7) + 0.05)
    assert np.max(np.abs(tab.T - 1)) < 1e-15 and np.all(tab.R == 0.0)


def test_spectrum_bounds_lossy():
    rng = np.random.default_rng(16)
    for _ in range(50):
        tab = spectrum(oracles.random_params(rng), np.linspace(-20, 20, 201))
        assert np.all(tab.T >= 0) and np.all(tab.T <= 1 + 1e-12)
        assert np.all(tab.T + tab.R <= 1 + 1e-12)


def test_spectrum_rejects_bad_grid():
    with pytest.raises(ValueError):
        spectrum(SystemParams(), [0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        spectrum(SystemParams(), [])


def test_spectrum_models_agree():
    p = SystemParams(h=0.0, g_a=1.1, g_b=1.1, kappa_q=0.2)
    w = np.linspace(-6, 6, 61)
    assert spectrum(p, w, "full").T == pytest.approx(spectrum(p, w, "h0").T, abs=1e-13)


def test_spectrum_csv_json_round_trip(tmp_path):
    tab = spectrum(SystemParams(kappa_c=0.6, h=0.8), np.linspace(-5, 5, 11))
    assert np.isnan(tab.group_delay[5])
    tab.to_csv(tmp_path / "s.csv")
    tab.to_json(tmp_path / "s.json")
    assert SpectrumTable.from_csv(tmp_path / "s.csv").equals(tab)
    assert SpectrumTable.from_json(tmp_path / "s.json").equals(tab)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "omega,T,R,na,nb,nq,group_delay"


def test_excitation_normalization():
    p = SystemParams(g_a=1, g_b=1, kappa_q=0.3)
    tab = spectrum(p, np.array([0.3]))
    a = evaluate(p, 0.3)
    assert tab.nq[0] == pytest.approx(0.5 * abs(a.e_q) ** 2)


# --------------------------------------------------------------- group delay


def test_group_delay_allpass_analytic():
    w = np.linspace(-10, 10, 201)
    d = group_delay(SystemParams(), w)
    ref = oracles.allpass_delay(w, 1.0)
    assert np.max(np.abs(d / ref - 1)) < 1e-6
    assert group_delay(SystemParams(), 0.0) == pytest.approx(2.0, rel=1e-8)


def test_group_delay_far_detuned_vanishes():
    assert abs(group_delay(SystemParams(), 1e4)) < 1e-7


def test_group_delay_butterworth_split_peaks():
    w = np.linspace(-4, 4, 801)
    d = group_delay(SystemParams(h=1.0), w + 1e-3)
    peaks = [i for i in range(1, len(d) - 1) if d[i] > d[i - 1] and d[i] >= d[i + 1]]
    assert len(peaks) == 2
    assert w[peaks[0]] < 0 < w[peaks[1]]


def test_group_delay_undefined_at_zero():
    with pytest.raises(UndefinedPhase):
        group_delay(SystemParams(kappa_c=0.6, h=0.8), 0.0)


def test_group_delay_unwrap_across_branch_cut():
    # narrow resonance, larger step: the phase passes through -pi inside the stencil
    p = SystemParams(gamma_ext=0.01)
    d = group_delay(p, 0.0, step=1e-3)
    assert d == pytest.approx(2 / 0.01, rel=1e-3)
