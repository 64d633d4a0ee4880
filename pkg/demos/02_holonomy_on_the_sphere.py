"""Carry a vector around closed loops on the sphere and watch it come back rotated.

The rotation angle equals the solid angle enclosed by the loop.
"""

import math

from shapeflow import Sphere, holonomy, latitude_loop, octant_loop

sphere = Sphere(1.0)

loop = octant_loop(sphere, step=1e-2)
angle = holonomy(sphere, loop).angle
print(f"octant triangle: rotation {angle:.9f}, solid angle {math.pi / 2:.9f}")

print("latitude circles (rotation angle is defined modulo 2 pi):")
for deg in (0, 15, 30, 45, 60, 75):
    rotor = holonomy(sphere, latitude_loop(sphere, deg, step=1e-2))
    cap = 2 * math.pi * (1 - math.sin(math.radians(deg)))
    print(f"  {deg:2d} deg  rotation {rotor.angle % (2 * math.pi):.6f}  cap solid angle {cap % (2 * math.pi):.6f}")

# Running the loop backwards undoes the rotation.
fwd = holonomy(sphere, loop)
back = holonomy(sphere, loop.reversed())
print("forward * backward =", (fwd.value * back.value).to_dict())
