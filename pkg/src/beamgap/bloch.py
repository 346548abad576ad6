"""Floquet-Bloch band structures of physical and high-contrast scaled lattices.

A Bloch wave with quasi-momentum ``k`` satisfies ``u(x + m.A) = exp(i k.(m.A)) u(x)``
where ``A`` holds the lattice vectors as rows, so the unit cell is closed with
one phase per lattice vector.  The scaled problem lives on cells of size
``epsilon``; in cell coordinates it reads

    (K_stiff + delta K_soft) x = lambda epsilon^2 M x,

with phases ``exp(i epsilon k.a_i)`` for the macroscopic quasi-momentum ``k``.
"""

from __future__ import annotations

import logging
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sl

from .errors import EigenSolverError, StructuralError
from .fem import BeamMesh, Constraints, assemble
from .lattice import Component

log = logging.getLogger(__name__)

CORNERS = {"G": (0.0, 0.0), "X": (0.5, 0.0), "Y": (0.0, 0.5), "M": (0.5, 0.5)}
PATH_ONLY = "sampled-path only"
FULL_ZONE = "full-zone grid"


@dataclass(frozen=True)
class QuasiMomentum:
    k: tuple

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(float(c) for c in np.asarray(self.k, dtype=float).ravel()[:2]))

    @property
    def vector(self):
        return np.array(self.k)

    def reduced(self, lattice_vectors):
        """Equivalent quasi-momentum in the first zone (fractional coords in [-1/2, 1/2))."""
        A = np.asarray(lattice_vectors, dtype=float)
        frac = A @ self.vector / (2 * np.pi)
        frac = frac - np.floor(frac + 0.5)
        return QuasiMomentum(np.linalg.solve(A, 2 * np.pi * frac))


def _as_k(k):
    return k if isinstance(k, QuasiMomentum) else QuasiMomentum(k)


def bloch_phases(g, k, scale=1.0):
    k = _as_k(k).vector
    return tuple(np.exp(1j * scale * float(k @ a)) for a in g.lattice_vectors)


def _check_bloch_graph(g):
    floating = g.clamp_targets() - set(g.clamped)
    if floating:
        raise StructuralError(
            "soft segment ends are only clamp targets of the limit model "
            f"(vertices {sorted(floating)}); use attachment 'stub' or 'direct' for Bloch computations"
        )


def _solve_pencil(K, M, n_bands):
    n = K.shape[0]
    if n_bands < 1:
        raise ValueError("n_bands must be at least 1")
    if n_bands > n:
        raise EigenSolverError(f"requested {n_bands} bands but the discretization has only {n} dofs")
    if n_bands > n / 6:
        warnings.warn(f"{n_bands} bands requested from {n} dofs; refine the mesh for reliable upper bands", stacklevel=3)
    try:
        w = sl.eigh(K, M, eigvals_only=True, subset_by_index=[0, n_bands - 1], check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenSolverError(f"generalized Hermitian eigensolver failed: {exc}") from exc
    if len(w) != n_bands or not np.all(np.isfinite(w)):
        raise EigenSolverError("eigensolver returned an incomplete spectrum")
    return np.sort(w)


def assemble_bloch(g, k, h=None, mesh=None):
    """Physical Bloch operators at quasi-momentum ``k``."""
    _check_bloch_graph(g)
    return assemble(g, mesh, Constraints.Bloch(bloch_phases(g, k), g.clamped), h=h)


def dispersion_at(g, k, n_bands, h, mesh=None):
    """Lowest ``n_bands`` eigenvalues ``lambda = omega^2`` at quasi-momentum ``k``."""
    ops = assemble_bloch(g, k, h, mesh)
    return _solve_pencil(ops.stiffness, ops.mass, n_bands)


def _scaled_operators(g, epsilon, contrast, k, h=None, mesh=None):
    _check_bloch_graph(g)
    cons = Constraints.Bloch(bloch_phases(g, k, epsilon), g.clamped)
    return assemble(
        g, mesh, cons, h=h, stiffness_scale={Component.STIFF: 1.0, Component.SOFT: contrast}, mass_scale=epsilon**2
    )


def assemble_scaled(g, s, k, h=None, mesh=None):
    """High-contrast operators on the epsilon-cell at macroscopic quasi-momentum ``k``."""
    return _scaled_operators(g, s.epsilon, s.contrast, k, h, mesh)


def scaled_dispersion_at(g, s, k, n_bands, h, mesh=None, vectors=False):
    ops = assemble_scaled(g, s, k, h, mesh)
    if not vectors:
        return _solve_pencil(ops.stiffness, ops.mass, n_bands)
    w, v = sl.eigh(ops.stiffness, ops.mass, subset_by_index=[0, n_bands - 1])
    return w, v, ops


# ---------------------------------------------------------------------------
# paths and band structures


def parse_path(path_spec):
    """``"GXMG"`` or ``["Γ", "X", "M", "Γ"]`` -> list of corner labels."""
    labels = list(path_spec) if isinstance(path_spec, str) else list(path_spec)
    out = []
    for lab in labels:
        lab = {"Γ": "G", "Gamma": "G", "GAMMA": "G"}.get(lab, lab).upper()
        if lab not in CORNERS:
            raise ValueError(f"unknown zone corner {lab!r}; use G (or Γ), X, Y, M")
        out.append(lab)
    if len(out) < 2:
        raise ValueError("a path needs at least two corners")
    return out


def zone_path(g, path_spec="GXMG", points_per_leg=10, scale=1.0):
    """Sampled path through zone corners.

    Returns ``(ks, coords, ticks)`` with ``ks`` an (n, 2) array of
    quasi-momenta (divided by ``scale``), arclength ``coords`` and the
    ``(label, coord)`` ticks of the corners.
    """
    if points_per_leg < 1:
        raise ValueError("points_per_leg must be at least 1")
    labels = parse_path(path_spec)
    B = g.reciprocal_vectors / scale
    corners = [np.asarray(CORNERS[lab]) @ B for lab in labels]
    ks = []
    for c0, c1 in zip(corners[:-1], corners[1:]):
        for i in range(points_per_leg):
            ks.append(c0 + (c1 - c0) * i / points_per_leg)
    ks.append(corners[-1])
    ks = np.array(ks)
    steps = np.linalg.norm(np.diff(ks, axis=0), axis=1)
    coords = np.concatenate([[0.0], np.cumsum(steps)])
    ticks = [(lab, coords[i * points_per_leg]) for i, lab in enumerate(labels)]
    return ks, coords, ticks


def zone_grid(g, n, scale=1.0):
    frac = (np.arange(n) + 0.5) / n - 0.5
    F = np.array([(f1, f2) for f1 in frac for f2 in frac])
    return F @ g.reciprocal_vectors / scale


def band_gaps(bands, tol=0.0):
    """Complement of the union of per-band ranges within [0, top of the highest band]."""
    bands = np.asarray(bands)
    lo = bands.min(axis=0)
    hi = bands.max(axis=0)
    order = np.argsort(lo)
    gaps = []
    reach = 0.0
    for j in order:
        if lo[j] > reach + tol:
            gaps.append((float(reach), float(lo[j])))
        reach = max(reach, hi[j])
    return gaps


@dataclass
class BandStructure:
    ks: np.ndarray
    coords: np.ndarray
    bands: np.ndarray
    ticks: list
    gap_intervals: list = field(default_factory=list)
    gap_label: str = PATH_ONLY

    def to_csv(self, stream, header=()):
        for line in header:
            stream.write(f"# {line}\n")
        stream.write("path_coord,k1,k2,band_index,lambda,omega\n")
        for s, k, row in zip(self.coords, self.ks, self.bands):
            for j, lam in enumerate(row):
                omega = np.sqrt(max(lam, 0.0))
                stream.write(f"{s:.12g},{k[0]:.12g},{k[1]:.12g},{j + 1},{lam:.12g},{omega:.12g}\n")
        for lo, hi in self.gap_intervals:
            stream.write(f"# gap {lo:.12g} {hi:.12g} ({self.gap_label})\n")


def thread_count():
    """Worker cap from ``BEAMGAP_THREADS`` (default 1: sequential)."""
    value = os.environ.get("BEAMGAP_THREADS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        log.warning("ignoring non-integer BEAMGAP_THREADS=%r", value)
        return 1


def _sweep(func, items, threads=None):
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def band_structure(g, path_spec="GXMG", points_per_leg=10, n_bands=6, h=None, scaling=None, full_zone=0, threads=None):
    """Bands along a zone path, with gaps between sampled band ranges.

    With ``scaling`` (a :class:`~beamgap.lattice.ScalingParams`) the
    high-contrast problem is solved and ``k`` is the macroscopic
    quasi-momentum.  ``full_zone=n > 0`` adds an ``n`` x ``n`` grid over the
    whole zone to the gap certification.
    """
    if h is None:
        h = min(b.length for b in g.beams) / 64
    mesh = BeamMesh(g, h)
    scale = 1.0 if scaling is None else scaling.epsilon
    ks, coords, ticks = zone_path(g, path_spec, points_per_leg, scale)

    def eig(k):
        if scaling is None:
            return dispersion_at(g, k, n_bands, h, mesh)
        return scaled_dispersion_at(g, scaling, k, n_bands, h, mesh)

    bands = np.array(_sweep(eig, list(ks), threads))
    label = PATH_ONLY
    sampled = bands
    if full_zone:
        grid = np.array(_sweep(eig, list(zone_grid(g, full_zone, scale)), threads))
        sampled = np.vstack([bands, grid])
        label = FULL_ZONE
    return BandStructure(ks, coords, bands, ticks, band_gaps(sampled), label)
