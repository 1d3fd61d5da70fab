"""Scenario files: schema validation, defaults and the bundled harbor world.

Scenarios are versioned JSON documents.  Validation is explicit and names the
offending field path; clockwise polygons are auto-reversed with a warning
instead of being rejected.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .csg import rounded_rect_region
from .errors import ConfigurationError, InvalidGeometryError
from .geometry import ConvexPolygon, Ellipse
from .solver import SolverOptions
from .vessel import VesselParams, VesselState

SCHEMA_VERSION = 1


def _require(doc, key, path, kind=None):
    if key not in doc:
        raise ConfigurationError(f"missing field {path}.{key}")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigurationError(f"field {path}.{key} has the wrong type")
    return value


def _vector(doc, key, path, length):
    value = _require(doc, key, path, list)
    if len(value) != length or not all(isinstance(v, (int, float)) for v in value):
        raise ConfigurationError(f"field {path}.{key} must be {length} numbers")
    return np.asarray(value, dtype=float)


@dataclass(frozen=True)
class RoundedRect:
    center: np.ndarray
    half_lengths: np.ndarray
    angle: float


@dataclass
class ScenarioConfig:
    """Validated scenario: vessel, world, boundary states and tuning."""

    name: str
    vessel: VesselParams
    start: VesselState
    goal: VesselState
    t_e: float
    samples: int
    obstacle_polygons: list
    obstacle_ellipses: list
    rounded_rects: list
    d_min: float = 0.0
    alpha: float = 20.0
    alpha_union: float = -20.0
    csg_p: int = 4
    n_coeffs: int = 63
    spline_degree: int = 3
    astar_cell: float = 0.25
    solver: SolverOptions = field(default_factory=SolverOptions)
    seed: int = 0

    @property
    def footprint(self):
        return self.vessel.footprint

    @property
    def csg_regions(self):
        return [
            rounded_rect_region(r.center, r.half_lengths, angle=r.angle, p=self.csg_p)
            for r in self.rounded_rects
        ]


def _parse_polygon(raw, path):
    if not isinstance(raw, list) or len(raw) < 3:
        raise ConfigurationError(f"field {path} must list at least 3 vertices")
    pts = np.asarray(raw, dtype=float)
    if pts.shape != (len(raw), 2):
        raise ConfigurationError(f"field {path} vertices must be [x, y] pairs")
    try:
        return ConvexPolygon(pts)
    except InvalidGeometryError:
        try:
            poly = ConvexPolygon(pts[::-1])
        except InvalidGeometryError as exc:
            raise ConfigurationError(f"field {path}: {exc}") from exc
        warnings.warn(f"{path}: clockwise vertex order reversed", stacklevel=2)
        return poly


def parse_scenario(doc, source="scenario"):
    version = _require(doc, "version", source, int)
    if version != SCHEMA_VERSION:
        raise ConfigurationError(f"field {source}.version: unsupported version {version}")
    name = _require(doc, "name", source, str)

    vdoc = doc.get("vessel", {})
    vkw = {}
    for key in ("tau_u_max", "tau_r_max", "tau_u_rate_max", "tau_r_rate_max", "length", "width"):
        if key in vdoc:
            vkw[key] = float(vdoc[key])
    for key, attr in (
        ("inertia_diag", "inertia"),
        ("damping_linear_diag", "damping_linear"),
    ):
        if key in vdoc:
            vkw[attr] = np.diag(_vector(vdoc, key, f"{source}.vessel", 3))
    if "damping_quadratic" in vdoc:
        vkw["damping_quadratic"] = _vector(vdoc, "damping_quadratic", f"{source}.vessel", 3)
    if "footprint" in vdoc:
        vkw["footprint"] = _parse_polygon(vdoc["footprint"], f"{source}.vessel.footprint")
    try:
        vessel = VesselParams(**vkw)
    except ValueError as exc:
        raise ConfigurationError(f"field {source}.vessel: {exc}") from exc

    sdoc = _require(doc, "start", source, dict)
    gdoc = _require(doc, "goal", source, dict)
    start = VesselState(
        eta=_vector(sdoc, "eta", f"{source}.start", 3), nu=_vector(sdoc, "nu", f"{source}.start", 3)
    )
    goal = VesselState(
        eta=_vector(gdoc, "eta", f"{source}.goal", 3), nu=_vector(gdoc, "nu", f"{source}.goal", 3)
    )

    t_e = float(_require(doc, "t_e", source, (int, float)))
    samples = _require(doc, "samples", source, int)
    if t_e <= 0.0:
        raise ConfigurationError(f"field {source}.t_e must be positive")
    if samples < 2:
        raise ConfigurationError(f"field {source}.samples must be at least 2")

    odoc = doc.get("obstacles", {})
    polygons = [
        _parse_polygon(p, f"{source}.obstacles.polygons[{i}]")
        for i, p in enumerate(odoc.get("polygons", []))
    ]
    ellipses = []
    for i, e in enumerate(odoc.get("ellipses", [])):
        path = f"{source}.obstacles.ellipses[{i}]"
        center = _vector(e, "center", path, 2)
        shape = np.asarray(_require(e, "shape", path, list), dtype=float)
        if shape.shape != (2, 2):
            raise ConfigurationError(f"field {path}.shape must be a 2x2 matrix")
        try:
            ellipses.append(Ellipse(center, shape))
        except InvalidGeometryError as exc:
            raise ConfigurationError(f"field {path}: {exc}") from exc
    rects = []
    for i, r in enumerate(odoc.get("rounded_rects", [])):
        path = f"{source}.obstacles.rounded_rects[{i}]"
        rects.append(
            RoundedRect(
                center=_vector(r, "center", path, 2),
                half_lengths=_vector(r, "half_lengths", path, 2),
                angle=float(r.get("angle", 0.0)),
            )
        )

    fdoc = doc.get("formulation", {})
    soldoc = doc.get("solver", {})
    solver = SolverOptions(
        feasibility_tol=float(soldoc.get("feasibility_tol", 1e-6)),
        stationarity_tol=float(soldoc.get("stationarity_tol", 1e-4)),
        rho_initial=float(soldoc.get("rho_initial", 10.0)),
        max_outer=int(soldoc.get("max_outer", 50)),
        max_inner=int(soldoc.get("max_inner", 300)),
    )
    return ScenarioConfig(
        name=name,
        vessel=vessel,
        start=start,
        goal=goal,
        t_e=t_e,
        samples=samples,
        obstacle_polygons=polygons,
        obstacle_ellipses=ellipses,
        rounded_rects=rects,
        d_min=float(fdoc.get("d_min", 0.0)),
        alpha=float(fdoc.get("alpha", 20.0)),
        alpha_union=float(fdoc.get("alpha_union", -20.0)),
        csg_p=int(fdoc.get("csg_p", 4)),
        n_coeffs=int(doc.get("n_coeffs", 63)),
        spline_degree=int(doc.get("spline_degree", 3)),
        astar_cell=float(doc.get("astar_cell", 0.25)),
        solver=solver,
        seed=int(doc.get("seed", 0)),
    )


def load_scenario(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON at line {exc.lineno}") from exc
    return parse_scenario(doc, source=str(path))


def bundled_scenario_path(name="kiel_harbor"):
    return resources.files("planav.data").joinpath(f"{name}.json")


def load_bundled(name="kiel_harbor"):
    with bundled_scenario_path(name).open("r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return parse_scenario(doc, source=name)
