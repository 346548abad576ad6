"""Periodic beam-network geometry: materials, beams, unit-cell graphs and configs.

A unit cell is a small graph whose vertices live in (or on the boundary of) the
cell.  Periodicity enters through *identifications* ``(a, b, m)`` declaring that
vertex ``b`` is the image of vertex ``a`` shifted by ``m[0]*a1 + m[1]*a2``.  A
beam leaving the cell simply ends on such an image vertex.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import jsonschema
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ConfigError, GeometryError, StructuralError, ValidationError

log = logging.getLogger(__name__)

FRAME_TOL = 1e-12
GEOM_TOL = 1e-9

ATTACHMENTS = ("clamped", "stub", "direct")


class Component(str, Enum):
    STIFF = "stiff"
    SOFT = "soft"


@dataclass(frozen=True)
class MaterialParams:
    """Per-unit-length beam constants.

    ``gamma`` is the extensional stiffness, ``eta`` the bending stiffness,
    ``kappa`` the shear stiffness; ``density`` and ``rotary_inertia`` weigh the
    translational and rotational kinetic energy.
    """

    gamma: float = 1.0
    eta: float = 1.0
    kappa: float = 1.0
    density: float = 1.0
    rotary_inertia: float = 1.0

    def __post_init__(self):
        for name in ("gamma", "eta", "kappa", "density", "rotary_inertia"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValidationError(f"material parameter {name} must be positive, got {value!r}")

    def scaled(self, stiffness=1.0, mass=1.0):
        return MaterialParams(
            self.gamma * stiffness,
            self.eta * stiffness,
            self.kappa * stiffness,
            self.density * mass,
            self.rotary_inertia * mass,
        )

    def as_dict(self):
        return {
            "gamma": self.gamma,
            "eta": self.eta,
            "kappa": self.kappa,
            "density": self.density,
            "rotary_inertia": self.rotary_inertia,
        }


def rotate90(t):
    """Rotate a 2-vector by +90 degrees."""
    return np.array([-t[1], t[0]], dtype=float)


@dataclass(frozen=True, eq=False)
class Beam:
    start_vertex: int
    end_vertex: int
    length: float
    tangent: np.ndarray
    normal: np.ndarray
    material: MaterialParams
    component: Component
    attachment: str | None = None

    @property
    def frame(self):
        """3x3 map from global (Ux, Uy, theta) to local (u, v, theta)."""
        t, n = self.tangent, self.normal
        return np.array([[t[0], t[1], 0.0], [n[0], n[1], 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class ScalingParams:
    """Cell size ``epsilon`` and soft/stiff stiffness ratio ``contrast``."""

    epsilon: float
    contrast: float | None = None

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValidationError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.contrast is None:
            object.__setattr__(self, "contrast", self.epsilon**2)
        elif not self.contrast > 0:
            raise ValidationError(f"contrast must be positive, got {self.contrast}")


@dataclass(frozen=True, eq=False)
class UnitCellGraph:
    vertices: np.ndarray
    beams: tuple
    lattice_vectors: np.ndarray
    identifications: tuple = ()
    # vertex representatives held at zero in the soft (resonance) problem
    clamped: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "lattice_vectors", np.asarray(self.lattice_vectors, dtype=float))
        object.__setattr__(self, "beams", tuple(self.beams))
        object.__setattr__(self, "identifications", tuple(
            (int(a), int(b), (int(m[0]), int(m[1]))) for a, b, m in self.identifications
        ))
        rep, shift = _canonicalize(len(self.vertices), self.identifications)
        object.__setattr__(self, "_rep", rep)
        object.__setattr__(self, "_shift", shift)

    # -- periodic structure -------------------------------------------------
    def representative(self, v):
        """Return ``(rep, m)`` with vertex ``v`` = ``rep`` shifted by ``m``."""
        return int(self._rep[v]), self._shift[v].copy()

    def beam_ends(self, b):
        beam = self.beams[b]
        r0, m0 = self.representative(beam.start_vertex)
        r1, m1 = self.representative(beam.end_vertex)
        return r0, m0, r1, m1

    @property
    def used_vertices(self):
        return sorted({v for beam in self.beams for v in (beam.start_vertex, beam.end_vertex)})

    @property
    def reciprocal_vectors(self):
        """Rows b_i with a_i . b_j = 2 pi delta_ij."""
        return 2 * np.pi * np.linalg.inv(self.lattice_vectors).T

    def component_beams(self, component):
        return [i for i, b in enumerate(self.beams) if b.component == component]

    def total_length(self, component=None, weighted=False):
        total = 0.0
        for b in self.beams:
            if component is None or b.component == component:
                total += b.length * (b.material.density if weighted else 1.0)
        return total

    def vertex_components(self):
        """Map vertex representative -> set of incident components."""
        incident = {}
        for b, beam in enumerate(self.beams):
            r0, _, r1, _ = self.beam_ends(b)
            incident.setdefault(r0, set()).add(beam.component)
            incident.setdefault(r1, set()).add(beam.component)
        return incident

    def junctions(self):
        """Representatives where stiff and soft beams meet."""
        return frozenset(r for r, comps in self.vertex_components().items() if len(comps) == 2)

    def clamp_targets(self):
        """Free-standing soft endpoints flagged by ``attachment='clamped'``."""
        degree = {}
        for b in range(len(self.beams)):
            r0, _, r1, _ = self.beam_ends(b)
            degree[r0] = degree.get(r0, 0) + 1
            degree[r1] = degree.get(r1, 0) + 1
        targets = set()
        for b, beam in enumerate(self.beams):
            if beam.component == Component.SOFT and beam.attachment == "clamped":
                r0, _, r1, _ = self.beam_ends(b)
                targets.update(r for r in (r0, r1) if degree[r] == 1)
        return frozenset(targets)

    def _component_edges(self, component):
        beams = self.component_beams(component) if component is not None else range(len(self.beams))
        edges = []
        for b in beams:
            r0, m0, r1, m1 = self.beam_ends(b)
            edges.append((r0, r1, m1 - m0))
        return edges

    def is_periodically_connected(self, component=Component.STIFF):
        """Whether the infinite periodic graph of ``component`` beams is connected.

        Exact test: the quotient graph must be connected and the lattice shifts
        picked up around its cycles must generate all of Z^2.
        """
        edges = self._component_edges(component)
        if not edges:
            return False
        adj = {}
        for r0, r1, m in edges:
            adj.setdefault(r0, []).append((r1, m))
            adj.setdefault(r1, []).append((r0, -m))
        root = next(iter(adj))
        pot = {root: np.zeros(2, dtype=int)}
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w, m in adj[v]:
                if w not in pot:
                    pot[w] = pot[v] + m
                    queue.append(w)
        if len(pot) != len(adj):
            return False
        cycles = [pot[r0] + m - pot[r1] for r0, r1, m in edges]
        cycles = [c for c in cycles if c.any()]
        # the cycle shifts generate Z^2 iff the gcd of their 2x2 minors is 1
        minors = 0
        for i in range(len(cycles)):
            for j in range(i + 1, len(cycles)):
                minors = math.gcd(minors, abs(int(cycles[i][0] * cycles[j][1] - cycles[i][1] * cycles[j][0])))
        return minors == 1

    def tiled_connectivity(self, component=Component.STIFF, tiles=3):
        """Connectivity of ``component`` beams on a ``tiles`` x ``tiles`` torus."""
        edges = self._component_edges(component)
        if not edges:
            return False
        reps = sorted({r for e in edges for r in e[:2]})
        index = {r: i for i, r in enumerate(reps)}
        nrep = len(reps)

        def node(r, i, j):
            return (int(i) % tiles * tiles + int(j) % tiles) * nrep + index[r]

        rows, cols = [], []
        for r0, r1, m in edges:
            for i in range(tiles):
                for j in range(tiles):
                    rows.append(node(r0, i, j))
                    cols.append(node(r1, i + m[0], j + m[1]))
        n = tiles * tiles * nrep
        adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        return connected_components(adj, directed=False)[0] == 1

    def validate(self, allow_free_soft_ends=False):
        """Check every graph invariant; raise :class:`ValidationError` on failure."""
        if abs(np.linalg.det(self.lattice_vectors)) < GEOM_TOL:
            raise ValidationError("lattice vectors are not linearly independent")
        for a, b, m in self.identifications:
            expected = self.vertices[a] + np.asarray(m) @ self.lattice_vectors
            if np.linalg.norm(expected - self.vertices[b]) > GEOM_TOL:
                raise ValidationError(f"identification ({a}, {b}, {m}) does not match vertex positions")
        for i, beam in enumerate(self.beams):
            d = self.vertices[beam.end_vertex] - self.vertices[beam.start_vertex]
            if abs(np.linalg.norm(d) - beam.length) > FRAME_TOL * max(1.0, beam.length):
                raise ValidationError(f"beam {i}: length does not match vertex distance")
            if abs(np.linalg.norm(beam.tangent) - 1) > FRAME_TOL:
                raise ValidationError(f"beam {i}: tangent is not a unit vector")
            if np.abs(beam.normal - rotate90(beam.tangent)).max() > FRAME_TOL:
                raise ValidationError(f"beam {i}: normal is not the tangent rotated by +90 degrees")
            if np.abs(d / beam.length - beam.tangent).max() > 1e-9:
                raise ValidationError(f"beam {i}: tangent does not point from start to end vertex")
        if not self.component_beams(Component.STIFF):
            raise ValidationError("lattice has no stiff beams")
        if not self.is_periodically_connected(Component.STIFF):
            raise ValidationError("stiff component not periodically connected")
        if not allow_free_soft_ends:
            comps = self.vertex_components()
            flagged = self.clamp_targets()
            degree = {}
            for b in self.component_beams(Component.SOFT):
                r0, _, r1, _ = self.beam_ends(b)
                degree[r0] = degree.get(r0, 0) + 1
                degree[r1] = degree.get(r1, 0) + 1
            for r, deg in degree.items():
                if Component.STIFF not in comps[r] and deg == 1 and r not in flagged:
                    raise ValidationError(
                        f"soft beam endpoint at vertex {r} is dangling (neither on the stiff "
                        "component, on another soft beam, nor flagged attachment='clamped')"
                    )
        return self


def _canonicalize(nvert, identifications):
    """Union the identification graph into representatives with integer shifts."""
    adj = {v: [] for v in range(nvert)}
    for a, b, m in identifications:
        if not (0 <= a < nvert and 0 <= b < nvert):
            raise StructuralError(f"identification refers to unknown vertex ({a}, {b})")
        m = np.asarray(m, dtype=int)
        adj[a].append((b, m))
        adj[b].append((a, -m))
    rep = np.full(nvert, -1, dtype=int)
    shift = np.zeros((nvert, 2), dtype=int)
    for root in range(nvert):
        if rep[root] >= 0:
            continue
        rep[root] = root
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w, m in adj[v]:
                s = shift[v] + m
                if rep[w] < 0:
                    rep[w] = root
                    shift[w] = s
                    queue.append(w)
                elif not np.array_equal(shift[w], s):
                    raise StructuralError(
                        f"vertex {w} is identified with vertex {root} under two different shifts "
                        f"{tuple(shift[w])} and {tuple(s)}"
                    )
    return rep, shift


def make_beam(vertices, v0, v1, material, component, attachment=None):
    d = np.asarray(vertices[v1], dtype=float) - np.asarray(vertices[v0], dtype=float)
    length = float(np.linalg.norm(d))
    if length <= GEOM_TOL:
        raise ValidationError(f"beam ({v0}, {v1}) has zero length")
    t = d / length
    return Beam(int(v0), int(v1), length, t, rotate90(t), material, Component(component), attachment)


def stiff_subgraph(g):
    beams = [b for b in g.beams if b.component == Component.STIFF]
    return UnitCellGraph(g.vertices, beams, g.lattice_vectors, g.identifications)


def soft_subgraph(g):
    """Soft beams only; junctions with the stiff part (and flagged ends) are clamped."""
    beams = [b for b in g.beams if b.component == Component.SOFT]
    clamped = g.junctions() | g.clamp_targets()
    return UnitCellGraph(g.vertices, beams, g.lattice_vectors, g.identifications, clamped=clamped)


# ---------------------------------------------------------------------------
# The square-grid example: stiff cross plus one inclined soft segment.


def build_square_example(alpha, half_length=None, stiff=None, soft=None, attachment="clamped"):
    """Unit cell of a square stiff grid with one inclined soft segment.

    The stiff grid lines run along the cell edges through the joint at the
    origin (one horizontal and one vertical beam of length 1); the soft segment
    of length ``2 * half_length`` at angle ``alpha`` (degrees) is centred in the
    hole at (1/2, 1/2).

    ``attachment`` selects how the segment meets the grid:

    * ``"clamped"``: the segment floats; its ends are clamp targets of the
      limit model only (not usable for direct Bloch computations).
    * ``"stub"``: collinear stiff stubs join each end to the grid.
    * ``"direct"``: the soft segment itself spans the hole from grid to grid;
      ``half_length`` is then implied by ``alpha``.
    """
    if not 0.0 < alpha < 90.0:
        raise GeometryError(f"alpha must lie in (0, 90) degrees, got {alpha}")
    if attachment not in ATTACHMENTS:
        raise GeometryError(f"unknown attachment {attachment!r}; expected one of {ATTACHMENTS}")
    stiff = stiff or MaterialParams()
    soft = soft or MaterialParams()
    rad = math.radians(alpha)
    tau = np.array([math.cos(rad), math.sin(rad)])
    reach = 0.5 / max(abs(tau[0]), abs(tau[1]))  # centre-to-grid distance along tau
    if attachment == "direct":
        if half_length is not None and abs(half_length - reach) > 1e-12:
            raise GeometryError(
                f"direct attachment at alpha={alpha} needs half_length={reach:.15g}, got {half_length}"
            )
        half_length = reach
    else:
        if half_length is None or half_length <= 0:
            raise GeometryError("half_length must be positive")
        if half_length >= reach - GEOM_TOL:
            raise GeometryError(
                f"soft segment of half-length {half_length} at {alpha} deg exits the cell hole "
                f"(needs half_length < {reach:.6g})"
            )

    verts = [np.zeros(2), np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    idents = [(0, 1, (1, 0)), (0, 2, (0, 1))]
    centre = np.array([0.5, 0.5])

    def add(p):
        verts.append(np.asarray(p, dtype=float))
        return len(verts) - 1

    beams = []
    soft_ends = None
    if attachment == "clamped":
        p0 = add(centre - half_length * tau)
        p1 = add(centre + half_length * tau)
        beams += [make_beam(verts, 0, 1, stiff, "stiff"), make_beam(verts, 0, 2, stiff, "stiff")]
        soft_ends = (p0, p1)
    else:
        # grid points hit by the segment's line; split the grid beams there
        q0 = centre - reach * tau
        q1 = centre + reach * tau
        if abs(alpha - 45.0) < 1e-12:
            g0 = 0
            g1 = add([1.0, 1.0])
            idents.append((0, g1, (1, 1)))
            beams += [make_beam(verts, 0, 1, stiff, "stiff"), make_beam(verts, 0, 2, stiff, "stiff")]
        elif alpha < 45.0:
            # crosses the vertical grid line at x=0 (and its image x=1)
            s0 = add([0.0, q0[1]])
            s1 = add([0.0, q1[1]])
            g1 = add([1.0, q1[1]])
            idents.append((s1, g1, (1, 0)))
            g0 = s0
            beams += [
                make_beam(verts, 0, 1, stiff, "stiff"),
                make_beam(verts, 0, s0, stiff, "stiff"),
                make_beam(verts, s0, s1, stiff, "stiff"),
                make_beam(verts, s1, 2, stiff, "stiff"),
            ]
        else:
            s0 = add([q0[0], 0.0])
            s1 = add([q1[0], 0.0])
            g1 = add([q1[0], 1.0])
            idents.append((s1, g1, (0, 1)))
            g0 = s0
            beams += [
                make_beam(verts, 0, s0, stiff, "stiff"),
                make_beam(verts, s0, s1, stiff, "stiff"),
                make_beam(verts, s1, 1, stiff, "stiff"),
                make_beam(verts, 0, 2, stiff, "stiff"),
            ]
        if attachment == "direct":
            soft_ends = (g0, g1)
        else:
            p0 = add(centre - half_length * tau)
            p1 = add(centre + half_length * tau)
            beams += [make_beam(verts, g0, p0, stiff, "stiff"), make_beam(verts, p1, g1, stiff, "stiff")]
            soft_ends = (p0, p1)
    beams.append(make_beam(verts, *soft_ends, soft, "soft", attachment))
    g = UnitCellGraph(np.array(verts), beams, np.eye(2), idents)
    return g.validate()


# ---------------------------------------------------------------------------
# JSON configs

_MATERIAL_SCHEMA = {
    "type": "object",
    "properties": {k: {"type": "number"} for k in ("gamma", "eta", "kappa", "density", "rotary_inertia")},
    "required": ["gamma", "eta", "kappa", "density", "rotary_inertia"],
}
_VEC2 = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_IVEC2 = {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["lattice_vectors", "vertices", "beams"],
    "properties": {
        "lattice_vectors": {"type": "array", "items": _VEC2, "minItems": 2, "maxItems": 2},
        "vertices": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "pos"],
                "properties": {"id": {"type": ["integer", "string"]}, "pos": _VEC2},
            },
        },
        "identifications": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["a", "b", "shift"],
                "properties": {
                    "a": {"type": ["integer", "string"]},
                    "b": {"type": ["integer", "string"]},
                    "shift": _IVEC2,
                },
            },
        },
        "beams": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["v0", "v1", "component", "material"],
                "properties": {
                    "v0": {"type": ["integer", "string"]},
                    "v1": {"type": ["integer", "string"]},
                    "component": {"enum": ["stiff", "soft"]},
                    "material": _MATERIAL_SCHEMA,
                    "attachment": {"enum": [*ATTACHMENTS, None]},
                    "tangent": _VEC2,
                    "normal": _VEC2,
                },
            },
        },
    },
}


def parse_config(data):
    """Build a validated graph from an already-decoded config mapping."""
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config field {where}: {exc.message}") from None
    ids = {}
    positions = []
    for entry in data["vertices"]:
        if entry["id"] in ids:
            raise ConfigError(f"duplicate vertex id {entry['id']!r}")
        ids[entry["id"]] = len(positions)
        positions.append(entry["pos"])

    def vid(key, where):
        try:
            return ids[key]
        except KeyError:
            raise ConfigError(f"{where}: unknown vertex id {key!r}") from None

    idents = [
        (vid(e["a"], f"identifications/{i}/a"), vid(e["b"], f"identifications/{i}/b"), tuple(e["shift"]))
        for i, e in enumerate(data.get("identifications", []))
    ]
    beams = []
    for i, e in enumerate(data["beams"]):
        v0, v1 = vid(e["v0"], f"beams/{i}/v0"), vid(e["v1"], f"beams/{i}/v1")
        beam = make_beam(positions, v0, v1, MaterialParams(**e["material"]), e["component"], e.get("attachment"))
        if "tangent" in e:
            t = np.asarray(e["tangent"], dtype=float)
            norm = np.linalg.norm(t)
            if norm == 0:
                raise ValidationError(f"beam {i}: zero tangent")
            if abs(norm - 1) > FRAME_TOL:
                warnings.warn(f"beam {i}: tangent renormalized from length {norm:.6g}", stacklevel=2)
                t = t / norm
            if np.abs(t - beam.tangent).max() > 1e-9:
                raise ValidationError(f"beam {i}: tangent does not point from v0 to v1")
        beams.append(beam)
    g = UnitCellGraph(np.array(positions, dtype=float), beams, np.array(data["lattice_vectors"]), idents)
    return g.validate()


def load_config(path):
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(data)


def graph_to_config(g):
    """Inverse of :func:`parse_config` (normals and tangents are not written)."""
    beams = []
    for beam in g.beams:
        entry = {
            "v0": beam.start_vertex,
            "v1": beam.end_vertex,
            "component": beam.component.value,
            "material": beam.material.as_dict(),
        }
        if beam.attachment is not None:
            entry["attachment"] = beam.attachment
        beams.append(entry)
    return {
        "lattice_vectors": g.lattice_vectors.tolist(),
        "vertices": [{"id": i, "pos": p.tolist()} for i, p in enumerate(g.vertices)],
        "identifications": [{"a": a, "b": b, "shift": list(m)} for a, b, m in g.identifications],
        "beams": beams,
    }


def save_config(g, path):
    Path(path).write_text(json.dumps(graph_to_config(g), indent=2) + "\n")


def with_materials(g, stiff=None, soft=None):
    """Copy of ``g`` with the materials of one or both components replaced."""
    beams = []
    for beam in g.beams:
        mat = beam.material
        if beam.component == Component.STIFF and stiff is not None:
            mat = stiff
        elif beam.component == Component.SOFT and soft is not None:
            mat = soft
        beams.append(replace(beam, material=mat))
    return UnitCellGraph(g.vertices, beams, g.lattice_vectors, g.identifications, g.clamped)
