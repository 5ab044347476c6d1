"""
A single-photon pulse through the resonator
===========================================

Integrate the equations of motion for a slow Gaussian pulse and compare
the transmitted and reflected energies with the steady-state spectrum.
"""

import numpy as np

from wgmscatter import PulseSpec, SystemParams, amplitudes_full, scatter_pulse, steady_state_transfer

pulse = PulseSpec("gaussian", carrier=0.0, width=200.0, delay=1200.0)
cases = {
    "all-pass": SystemParams(),
    "h = 0.3": SystemParams(h=0.3),
    "critical": SystemParams(kappa_c=0.6, h=0.8),
    "atom g = 1": SystemParams(g_a=1.0, g_b=1.0, kappa_q=0.2, omega_atom=0.5),
}
print(f"{'case':>12s}  {'E_T':>9s} {'|t|^2':>9s}  {'E_R':>9s} {'|r|^2':>9s}  {'ledger':>8s}")
for name, p in cases.items():
    rec = scatter_pulse(p, pulse, t_end=3700.0, dt=0.2)
    e = rec.energy
    a = amplitudes_full(p, 0.0)
    print(f"{name:>12s}  {e.E_T:9.6f} {float(a.T):9.6f}  {e.E_R:9.6f} {float(a.R):9.6f}  {e.residual:8.1e}")

# A monochromatic drive settles onto the closed-form amplitudes.
p = cases["atom g = 1"]
w = np.linspace(-3, 3, 7)
ss = steady_state_transfer(p, w, settle_time=300.0)
print("steady state vs closed form:", np.abs(ss.t_num - amplitudes_full(p, w).t).max())
