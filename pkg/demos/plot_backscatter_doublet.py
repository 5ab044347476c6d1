"""
Backscattering doublet of a bare resonator
==========================================

A side-coupled resonator without an atom. Coupling between the two
counter-propagating modes splits the single Lorentzian dip into a doublet
once ``|h|`` exceeds the waveguide linewidth.
"""

# Frequencies are in units of the waveguide linewidth gamma_ext = 1.
import numpy as np

from wgmscatter import SystemParams, critical_coupling_check, resonance_report, spectrum

dw = np.linspace(-6, 6, 1201) + 1e-4

# Without loss the resonator is an all-pass filter: |t| = 1 everywhere.
tab = spectrum(SystemParams(), dw)
print("all-pass  max |T - 1| =", np.abs(tab.T - 1).max())
print("          group delay on resonance =", tab.group_delay[np.argmin(np.abs(dw))])

# Sweep the backscattering strength and watch the doublet open up.
for h in (0.5, 1.0, 2.0, 4.0):
    rep = resonance_report(SystemParams(h=h), dw)
    locs = ", ".join(f"{x:+.4f}" for x in rep.dip_locations)
    print(f"h = {h:3.1f}: {len(rep)} dip(s) at {locs}")

# At h = 1 the lineshape is maximally flat (second-order Butterworth).
T = spectrum(SystemParams(h=1.0), dw).T
print("Butterworth deviation:", np.abs(T - dw**4 / (dw**4 + 4)).max())

# Intrinsic loss kappa_c**2 + |h|**2 = gamma_ext**2 gives zero on-resonance transmission.
rep = critical_coupling_check(SystemParams(kappa_c=0.6, h=0.8))
print("critical coupling:", rep.satisfied, "|t(omega_c)| =", abs(rep.t_resonance))
