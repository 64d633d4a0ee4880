"""How the tangent plane turns: shape tensors and curvature on a sphere and an ellipsoid.

Run with ``python demos/01_shape_and_curvature.py``.
"""

import numpy as np

from shapeflow import LinearMap, Quadric, Sphere, shape_tensor, total_curvature
from shapeflow.ga import magnitude

e1, e2, e3 = np.eye(3)

# On the unit sphere the shape tensor is just x a: moving along e2 from the
# point e1 turns the tangent plane in the e1e2 plane at unit rate.
sphere = Sphere(1.0)
print("sphere S(e2) at e1:", shape_tensor(sphere, e1, e2).to_dict())

# Doubling the radius halves the turning rate.
big = Sphere(2.0)
print("radius 2, |S(e2)| at 2e1:", magnitude(shape_tensor(big, 2 * e1, e2)))

# The ellipsoid x.A(x) = 1 with semi-axes 1, 2, 3 turns more slowly along its long axes.
ellipsoid = Quadric(LinearMap.diag(1.0, 0.25, 1.0 / 9.0))
for name, a in (("e2", e2), ("e3", e3)):
    print(f"ellipsoid |S({name})| at e1:", magnitude(shape_tensor(ellipsoid, e1, a)))

# Curvature is the commutator of two shape tensors. For a surface in R^3 all of
# it is intrinsic, and its size is the Gaussian curvature.
cv = total_curvature(ellipsoid, e1, e2, e3)
print("ellipsoid Omega(e2^e3):", cv.total.to_dict(), "(Gaussian curvature 1/36 =", 1 / 36, ")")
print("extrinsic part:", magnitude(cv.extrinsic))
