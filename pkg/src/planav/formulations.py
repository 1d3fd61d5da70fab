"""Uniform constraint-provider interface over the collision formulations.

Every provider turns a batch of sample poses (and, for the dual formulation,
the extra multiplier variables) into one ConstraintBlock: residual values in
the solver convention (equalities = 0, inequalities <= 0), per-row gradients
with respect to the sample pose, and sparse Jacobians with respect to the
extra variables where applicable.  Mapping pose gradients onto the ansatz
coefficients is the transcription layer's job.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .bounds import (
    LseConfig,
    PrimitiveObstacle,
    VehiclePrimitives,
    lower_bound_shape,
    lse,
    shape_bound_terms,
)
from .csg import evaluate_region, union_over_obstacles
from .dual import dual_point_residuals, dual_shape_residuals, init_point_duals, init_shape_duals
from .errors import ConfigurationError
from .geometry import ConvexPolygon, Pose2, halfspace_arrays, transform_polygon
from .sdist import sd_gradient, sd_points_polygon, signed_distance

KNOWN_NAMES = ("ellipsoidal", "csg-classic", "csg-bound-hard", "csg-bound-lse", "dual", "direct-sd")

_VALID = {
    "ellipsoidal": {"modes": ("separate",), "bodies": ("point",)},
    "csg-classic": {"modes": ("union", "separate"), "bodies": ("point",)},
    "csg-bound-hard": {"modes": ("union", "separate"), "bodies": ("point", "shape")},
    "csg-bound-lse": {"modes": ("union", "separate"), "bodies": ("point", "shape")},
    "dual": {"modes": ("separate",), "bodies": ("point", "shape")},
    "direct-sd": {"modes": ("separate",), "bodies": ("point", "shape")},
}


@dataclass(frozen=True)
class FormulationKind:
    """A formulation id plus its union/separate and point/shape switches."""

    name: str
    mode: str = "separate"
    body: str = "point"

    def __post_init__(self):
        if self.name not in _VALID:
            raise ConfigurationError(f"unknown formulation {self.name!r}")
        rules = _VALID[self.name]
        if self.mode not in ("union", "separate"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.body not in ("point", "shape"):
            raise ConfigurationError(f"unknown body {self.body!r}")
        if self.mode not in rules["modes"]:
            raise ConfigurationError(
                f"{self.name} supports mode in {rules['modes']}, not {self.mode!r}"
            )
        if self.body not in rules["bodies"]:
            raise ConfigurationError(
                f"{self.name} supports body in {rules['bodies']}, not {self.body!r}"
            )

    @property
    def label(self):
        return f"{self.name}/{self.mode}/{self.body}"


@dataclass(frozen=True)
class ConstraintBlock:
    """Residuals of one provider evaluation over all sample poses.

    ``jacobian_pose[i]`` holds d value[i] / d (x, y, psi) of the sample the
    row belongs to; ``jacobian_dual`` covers the provider's extra variables
    (empty for primal-only formulations).  ``nonsmooth`` marks rows whose
    gradient is unreliable at this point (active-term ties, degenerate
    geometry).
    """

    values: np.ndarray  # (m,)
    is_equality: np.ndarray  # (m,) bool
    sample_index: np.ndarray  # (m,) int
    jacobian_pose: np.ndarray  # (m, 3)
    jacobian_dual: sparse.csr_matrix  # (m, extra_variable_count)
    extra_variable_count: int
    nonsmooth: np.ndarray  # (m,) bool

    def __post_init__(self):
        m = len(self.values)
        assert self.jacobian_pose.shape == (m, 3)
        assert self.jacobian_dual.shape == (m, self.extra_variable_count)


@dataclass(frozen=True)
class ProviderCounts:
    constraints: int
    extra_variables: int


def _block(values, is_eq, sample_index, jac_pose, jac_dual=None, extra=0, nonsmooth=None):
    values = np.asarray(values, dtype=float)
    m = len(values)
    if jac_dual is None:
        jac_dual = sparse.csr_matrix((m, extra))
    if nonsmooth is None:
        nonsmooth = np.zeros(m, dtype=bool)
    return ConstraintBlock(
        values=values,
        is_equality=np.asarray(is_eq, dtype=bool),
        sample_index=np.asarray(sample_index, dtype=int),
        jacobian_pose=np.asarray(jac_pose, dtype=float),
        jacobian_dual=sparse.csr_matrix(jac_dual),
        extra_variable_count=extra,
        nonsmooth=np.asarray(nonsmooth, dtype=bool),
    )


class EllipsoidalProvider:
    """Keep every sample point outside each bounding ellipse: 1 - f(p) <= 0."""

    def __init__(self, kind, ellipses):
        if not ellipses:
            raise ConfigurationError("ellipsoidal formulation needs ellipse obstacles")
        self.kind = kind
        self.ellipses = list(ellipses)

    def count(self, samples):
        return ProviderCounts(samples * len(self.ellipses), 0)

    def evaluate(self, poses, duals=None):
        poses = np.asarray(poses, dtype=float)
        s = len(poses)
        m = len(self.ellipses)
        values = np.empty(s * m)
        jac = np.zeros((s * m, 3))
        idx = np.repeat(np.arange(s), m)
        p = poses[:, :2]
        for j, e in enumerate(self.ellipses):
            d = p - e.center
            f = np.einsum("sd,de,se->s", d, e.shape, d)
            values[j::m] = 1.0 - f
            jac[j::m, :2] = -2.0 * d @ e.shape
        return _block(values, np.zeros(s * m, bool), idx, jac)


class CsgClassicProvider:
    """Smooth-CSG membership constraints 1 - f(p) <= 0 on the approximated regions."""

    def __init__(self, kind, regions, p=4):
        if not regions:
            raise ConfigurationError("csg-classic formulation needs CSG region obstacles")
        self.kind = kind
        self.regions = list(regions)
        if kind.mode == "union":
            self.union_region = union_over_obstacles(self.regions, p=p)

    def count(self, samples):
        n = 1 if self.kind.mode == "union" else len(self.regions)
        return ProviderCounts(samples * n, 0)

    def evaluate(self, poses, duals=None):
        poses = np.asarray(poses, dtype=float)
        s = len(poses)
        regions = [self.union_region] if self.kind.mode == "union" else self.regions
        m = len(regions)
        values = np.empty(s * m)
        jac = np.zeros((s * m, 3))
        idx = np.repeat(np.arange(s), m)
        for i in range(s):
            p = poses[i, :2]
            for j, region in enumerate(regions):
                f, g = evaluate_region(region, p)
                values[i * m + j] = 1.0 - f
                jac[i * m + j, :2] = -g
        return _block(values, np.zeros(s * m, bool), idx, jac)


class CsgBoundProvider:
    """Primitive-decomposition signed-distance lower bound, hard or LSE-smoothed."""

    def __init__(self, kind, polygons, footprint=None, d_min=0.0, alpha=20.0, alpha_union=-20.0):
        if not polygons:
            raise ConfigurationError("csg-bound formulation needs polygon obstacles")
        if kind.body == "shape" and footprint is None:
            raise ConfigurationError("shape body needs a vehicle footprint")
        self.kind = kind
        self.obstacles = [PrimitiveObstacle.from_polygon(p) for p in polygons]
        self.footprint = footprint
        self.d_min = float(d_min)
        self.smooth = kind.name == "csg-bound-lse"
        self.alpha = float(alpha)
        self.alpha_union = float(alpha_union)
        if self.smooth:
            if self.alpha <= 0.0:
                raise ConfigurationError("csg-bound-lse needs alpha > 0")
            if kind.mode == "union" and self.alpha_union >= 0.0:
                raise ConfigurationError("csg-bound-lse union needs alpha_union < 0")

    def count(self, samples):
        n = 1 if self.kind.mode == "union" else len(self.obstacles)
        return ProviderCounts(samples * n, 0)

    def term_count(self):
        """Smoothed terms per constraint row (for the LSE error bound)."""
        extra = 0 if self.kind.body == "point" else len(self.footprint)
        per_obs = [len(o.offsets) + extra for o in self.obstacles]
        if self.kind.mode == "union":
            return sum(per_obs)
        return max(per_obs)

    def _per_obstacle(self, pose):
        """Bound value, pose gradient and tie flag for every obstacle at one pose."""
        out = []
        if self.kind.body == "point":
            p = pose[:2]
            for obs in self.obstacles:
                vals = obs.normals @ p - obs.offsets
                grads = np.zeros((len(vals), 3))
                grads[:, :2] = obs.normals
                out.append(self._combine(vals, grads))
        else:
            vehicle = VehiclePrimitives.from_polygon(self.footprint, Pose2(*pose))
            for obs in self.obstacles:
                vals, grads = shape_bound_terms(vehicle, obs)
                out.append(self._combine(vals, grads))
        return out

    def _combine(self, vals, grads):
        if self.smooth:
            v, g = lse(vals, LseConfig(self.alpha), gradients=grads)
            return v, g, False
        i = int(np.argmax(vals))
        tie = len(vals) > 1 and vals[i] - np.partition(vals, -2)[-2] < 1e-9
        return float(vals[i]), grads[i], tie

    def evaluate(self, poses, duals=None):
        poses = np.asarray(poses, dtype=float)
        s = len(poses)
        rows = 1 if self.kind.mode == "union" else len(self.obstacles)
        values = np.empty(s * rows)
        jac = np.zeros((s * rows, 3))
        flags = np.zeros(s * rows, dtype=bool)
        idx = np.repeat(np.arange(s), rows)
        for i in range(s):
            per = self._per_obstacle(poses[i])
            if self.kind.mode == "separate":
                for j, (v, g, tie) in enumerate(per):
                    values[i * rows + j] = self.d_min - v
                    jac[i * rows + j] = -g
                    flags[i * rows + j] = tie
            else:
                vs = np.array([p[0] for p in per])
                gs = np.stack([p[1] for p in per])
                if self.smooth:
                    v, g = lse(vs, LseConfig(self.alpha_union), gradients=gs)
                    tie = any(p[2] for p in per)
                else:
                    k = int(np.argmin(vs))
                    v, g = float(vs[k]), gs[k]
                    tie = per[k][2] or (
                        len(vs) > 1 and np.partition(vs, 1)[1] - vs[k] < 1e-9
                    )
                values[i] = self.d_min - v
                jac[i] = -g
                flags[i] = tie
        return _block(values, np.zeros(s * rows, bool), idx, jac, nonsmooth=flags)


class DualProvider:
    """Multiplier-certificate collision constraints with extra dual variables."""

    def __init__(self, kind, polygons, footprint=None, d_min=0.0):
        if not polygons:
            raise ConfigurationError("dual formulation needs polygon obstacles")
        if kind.body == "shape" and footprint is None:
            raise ConfigurationError("shape body needs a vehicle footprint")
        self.kind = kind
        self.polygons = list(polygons)
        self.halfspaces = [halfspace_arrays(p) for p in polygons]
        self.footprint = footprint
        self.d_min = float(d_min)
        self.faces = [len(b) for _, b in self.halfspaces]
        self.vehicle_faces = 0 if kind.body == "point" else len(footprint)

    def duals_per_sample(self):
        return sum(self.faces) + len(self.polygons) * self.vehicle_faces

    def count(self, samples):
        m = len(self.polygons)
        rows_per = 2 if self.kind.body == "point" else 4
        return ProviderCounts(rows_per * samples * m, samples * self.duals_per_sample())

    def dual_bounds(self, samples):
        """All multipliers are sign-constrained: mu, lambda >= 0."""
        n = samples * self.duals_per_sample()
        return np.zeros(n), np.full(n, np.inf)

    def init_duals(self, poses):
        poses = np.asarray(poses, dtype=float)
        out = []
        for pose in poses:
            if self.kind.body == "shape":
                vehicle = VehiclePrimitives.from_polygon(self.footprint, Pose2(*pose))
            for (a, b) in self.halfspaces:
                if self.kind.body == "point":
                    out.append(init_point_duals(pose[:2], a, b))
                else:
                    mu, lam = init_shape_duals(Pose2(*pose), vehicle, a, b)
                    out.append(mu)
                    out.append(lam)
        return np.concatenate(out)

    def evaluate(self, poses, duals=None):
        poses = np.asarray(poses, dtype=float)
        if duals is None:
            raise ConfigurationError("dual provider needs the multiplier variables")
        s = len(poses)
        per = self.duals_per_sample()
        rows_per = (2 if self.kind.body == "point" else 4) * len(self.polygons)
        m = s * rows_per
        values = np.empty(m)
        is_eq = np.zeros(m, dtype=bool)
        idx = np.repeat(np.arange(s), rows_per)
        jac_pose = np.zeros((m, 3))
        jd = sparse.lil_matrix((m, s * per))
        row = 0
        for i in range(s):
            pose = poses[i]
            off = i * per
            if self.kind.body == "shape":
                vehicle = VehiclePrimitives.from_polygon(self.footprint, Pose2(*pose))
            for (a, b), k in zip(self.halfspaces, self.faces):
                if self.kind.body == "point":
                    mu = duals[off : off + k]
                    res = dual_point_residuals(pose[:2], a, b, mu, d_min=self.d_min)
                    values[row] = res.ineq
                    jac_pose[row, :2] = res.d_ineq_dp
                    jd[row, off : off + k] = res.d_ineq_dmu
                    values[row + 1] = res.eq
                    is_eq[row + 1] = True
                    jd[row + 1, off : off + k] = res.d_eq_dmu
                    row += 2
                    off += k
                else:
                    ell = self.vehicle_faces
                    mu = duals[off : off + k]
                    lam = duals[off + k : off + k + ell]
                    res = dual_shape_residuals(
                        Pose2(*pose), vehicle, a, b, mu, lam, d_min=self.d_min
                    )
                    values[row] = res.ineq
                    jac_pose[row] = res.d_ineq_dpose
                    jd[row, off : off + k] = res.d_ineq_dmu
                    jd[row, off + k : off + k + ell] = res.d_ineq_dlam
                    for c in range(2):
                        values[row + 1 + c] = res.eq_coupling[c]
                        is_eq[row + 1 + c] = True
                        jac_pose[row + 1 + c] = res.d_coupling_dpose[c]
                        jd[row + 1 + c, off : off + k] = res.d_coupling_dmu[c]
                        jd[row + 1 + c, off + k : off + k + ell] = res.d_coupling_dlam[c]
                    values[row + 3] = res.eq_norm
                    is_eq[row + 3] = True
                    jd[row + 3, off : off + k] = res.d_norm_dmu
                    row += 4
                    off += k + ell
        return _block(values, is_eq, idx, jac_pose, jd.tocsr(), s * per)


class DirectSdProvider:
    """Exact signed-distance constraints d_min - sd <= 0 via GJK/EPA."""

    def __init__(self, kind, polygons, footprint=None, d_min=0.0):
        if not polygons:
            raise ConfigurationError("direct-sd formulation needs polygon obstacles")
        if kind.body == "shape" and footprint is None:
            raise ConfigurationError("shape body needs a vehicle footprint")
        self.kind = kind
        self.polygons = list(polygons)
        self.footprint = footprint
        self.d_min = float(d_min)

    def count(self, samples):
        return ProviderCounts(samples * len(self.polygons), 0)

    def evaluate(self, poses, duals=None):
        poses = np.asarray(poses, dtype=float)
        s = len(poses)
        m = len(self.polygons)
        values = np.empty(s * m)
        jac = np.zeros((s * m, 3))
        flags = np.zeros(s * m, dtype=bool)
        idx = np.repeat(np.arange(s), m)
        if self.kind.body == "point":
            for j, poly in enumerate(self.polygons):
                vals, grads = sd_points_polygon(poses[:, :2], poly)
                values[j::m] = self.d_min - vals
                jac[j::m, :2] = -grads
        else:
            for i in range(s):
                pose = Pose2(*poses[i])
                world = transform_polygon(self.footprint, pose)
                for j, poly in enumerate(self.polygons):
                    r = signed_distance(world, poly)
                    values[i * m + j] = self.d_min - r.value
                    jac[i * m + j] = -sd_gradient(r, pose)
                    flags[i * m + j] = r.degenerate
        return _block(values, np.zeros(s * m, bool), idx, jac, nonsmooth=flags)


def build_provider(kind, scenario):
    """Construct the constraint provider for one formulation on a scenario.

    ``scenario`` must expose ``obstacle_polygons``, ``obstacle_ellipses``,
    ``csg_regions``, ``footprint`` and the tuning values ``d_min``, ``alpha``,
    ``alpha_union`` and ``csg_p``.
    """
    if kind.name == "ellipsoidal":
        return EllipsoidalProvider(kind, scenario.obstacle_ellipses)
    if kind.name == "csg-classic":
        return CsgClassicProvider(kind, scenario.csg_regions, p=scenario.csg_p)
    if kind.name in ("csg-bound-hard", "csg-bound-lse"):
        return CsgBoundProvider(
            kind,
            scenario.obstacle_polygons,
            footprint=scenario.footprint,
            d_min=scenario.d_min,
            alpha=scenario.alpha,
            alpha_union=scenario.alpha_union,
        )
    if kind.name == "dual":
        return DualProvider(
            kind, scenario.obstacle_polygons, footprint=scenario.footprint, d_min=scenario.d_min
        )
    if kind.name == "direct-sd":
        return DirectSdProvider(
            kind, scenario.obstacle_polygons, footprint=scenario.footprint, d_min=scenario.d_min
        )
    raise ConfigurationError(f"unknown formulation {kind.name!r}")


def audit_violation(poses, polygons, body, footprint=None, d_min=0.0):
    """Worst clearance violation against the true polygon obstacles.

    Uses the exact signed distance (never a smoothed surrogate) and clamps at
    zero, so a collision-free trajectory audits to 0.
    """
    poses = np.asarray(poses, dtype=float)
    worst = 0.0
    for pose in poses:
        if body == "point":
            sd = min(sd_points_polygon(pose[None, :2], poly)[0][0] for poly in polygons)
        elif body == "shape":
            world = transform_polygon(footprint, Pose2(*pose))
            sd = min(signed_distance(world, poly).value for poly in polygons)
        else:
            raise ConfigurationError(f"unknown body {body!r}")
        worst = max(worst, d_min - sd)
    return worst
