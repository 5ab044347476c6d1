"""
Atom in the resonator: three dips and their nature
==================================================

A two-level atom couples to both travelling modes. With no backscattering
only one standing-wave combination sees the atom, giving a vacuum Rabi
doublet plus an untouched cavity dip in the middle. Strong backscattering
rearranges the same three resonances so that the middle one is atomic.
"""

import math

import numpy as np

from wgmscatter import SystemParams, resonance_report, spectrum

dw = np.linspace(-15, 15, 3001) + 1e-4

# h = 0, g = 2.5: side dips at +-sqrt(2 g^2 - 1), the middle dip has no atom weight.
rep = resonance_report(SystemParams(g_a=2.5, g_b=2.5), dw)
print("h = 0  dips:", np.round(rep.dip_locations, 4), " atomic weight:", np.round(rep.nature_weights, 3))
print("       side-dip separation", rep.dip_locations[-1] - rep.dip_locations[0], "vs", 2 * math.sqrt(11.5))

# 2 g^2 = 1 is the third-order Butterworth point.
g = 1 / math.sqrt(2)
T = spectrum(SystemParams(g_a=g, g_b=g), dw).T
print("3rd-order Butterworth deviation:", np.abs(T - dw**6 / (dw**6 + 8 * g**6)).max())

# Large g: the transmission between the dips approaches one.
for g in (4.0, 8.0, 16.0):
    x = np.linspace(0.05, math.sqrt(2) * g - 0.5, 20001)
    T = spectrum(SystemParams(g_a=g, g_b=g), x).T
    print(f"g = {g:4.1f}: max T between dips = {T.max():.6f}, large-g estimate {1 - 27 / 8 / g**2:.6f}")

# h = 10: the left dip is a cavity resonance, the middle one atomic.
strong = SystemParams(g_a=2.5, g_b=2.5, h=10.0)
rep = resonance_report(strong, dw)
print("h = 10 dips:", np.round(rep.dip_locations, 3), " atomic weight:", np.round(rep.nature_weights, 3))

# Atom loss barely touches the cavity dip; resonator loss lifts every dip.
for label, p in (("kappa_q = 20", strong.replace(kappa_q=20.0)), ("kappa_c = 20", strong.replace(kappa_c=20.0))):
    T0 = spectrum(strong, rep.dip_locations).T
    T1 = spectrum(p, rep.dip_locations).T
    print(f"{label}: change of T at the three dips", np.round(T1 - T0, 5))
