"""Collision-avoidance constraint formulations and trajectory planning.

Subpackages cover planar geometry, direct signed distance (GJK/EPA), classic
CSG blending, signed-distance lower bounds with LogSumExp smoothing, dual
collision constraints, a 3-DOF vessel model with flat parametrization, direct
transcription with an augmented-Lagrangian solver, and a benchmark CLI.
"""

from .geometry import ConvexPolygon, Ellipse, HalfSpace, Pose2
from .sdist import SignedDistanceResult, signed_distance

__all__ = [
    "ConvexPolygon",
    "Ellipse",
    "HalfSpace",
    "Pose2",
    "SignedDistanceResult",
    "signed_distance",
]
