"""Transporting a normal frame along a helix.

The shape-rotor transport of a curve's normal vectors is Fermi-Walker
transport: the frame does not spin about the tangent, so relative to the
Frenet normal it drifts at the torsion rate.
"""

import math

import numpy as np

from shapeflow import ParametricChart, chart_curve_trace, transport_rotors

helix = ParametricChart.from_strings(
    ["cos(x1/sqrt(2))", "sin(x1/sqrt(2))", "x1/sqrt(2)"], 1, [(-20.0, 20.0)]
)
trace = chart_curve_trace(helix, 0.0, 6.0, step=1e-2)
rotors = transport_rotors(trace)

n0 = np.array([-1.0, 0.0, 0.0])  # Frenet normal at s = 0
for i in range(0, len(trace), 100):
    s = trace.taus[i]
    n = rotors[i].apply_vector(n0)
    frenet = np.array([-math.cos(s / math.sqrt(2)), -math.sin(s / math.sqrt(2)), 0.0])
    turned = math.acos(np.clip(n @ frenet, -1, 1))
    print(f"s = {s:4.2f}  angle to Frenet normal {turned:.6f}  torsion * s = {0.5 * s:.6f}")
