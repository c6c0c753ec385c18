# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: light
#       format_version: '1.5'
#       jupytext_version: 1.16.1
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# # Fluid picture above and below the critical rate
#
# Scaling space and time together turns the queue counts into an ODE on a
# window `[-N, N]`.  Above the critical rate a quadratic functional `J`
# keeps growing; below it the mass drains away.

import numpy as np

from iqnet.fluid import check_trajectory, integrate, lyapunov, scaling_check, unimodal_profile
from iqnet.interference import ones

seq = ones(3)
start = unimodal_profile(20, peak=1.0, decay=0.1)
print("initial mass:", round(start.total, 4))

# ## Supercritical: lam = 0.4

sup = integrate(start, 0.4, seq, step=1e-3, horizon=50.0, sample_interval=5.0)
for t, J, y in zip(sup.times, sup.J, sup.states):
    print(f"t={t:5.1f}  J={J:9.3f}  center={y[20]:.3f}  edge={y[-1]:.3f}")

verdict = check_trajectory(sup, seq, 0.4)
print(verdict)

# The lower bound on dJ/dt at the last sample, for comparison with the
# finite-difference slope above:

print(lyapunov(sup.state(len(sup) - 1), seq, 0.4))

# ## Subcritical: lam = 0.2

sub = integrate(start, 0.2, seq, step=1e-3, horizon=200.0, sample_interval=20.0)
print("mass by time:", np.round(sub.states.sum(axis=1), 5).tolist())

# What is left after the drain is clamping noise at zero, of the order of
# the step size.

# ## Does the stochastic system follow the ODE?
#
# Multiply the profile by `z`, simulate for time `z * t` in a box, divide by
# `z`.  The sup-norm gap to the ODE should shrink as `z` grows.

pts = scaling_check(unimodal_profile(10, 1.0, 0.2), 0.4, seq, horizon=1.0, scales=(50, 400), seeds=(0, 1))
for p in pts:
    print(f"z={p.scale:4d} seed={p.seed}  sup error {p.sup_error:.4f}")
