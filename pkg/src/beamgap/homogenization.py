"""Cell problems on the stiff component and the homogenized elasticity tensor.

For each unit macroscopic strain ``E_jl`` the corrector ``N^{jl}`` is the
periodic field on the stiff graph minimizing the cell energy

    sum over beams of  gamma (u' + t_j t_l)^2 + eta theta'^2 + kappa (v' - theta + n_j t_l)^2,

and ``C^h_{jlpq}`` is the bilinear form of that energy evaluated at the
minimizers (divided by the cell area).  Tensors use the Voigt order
(e11, e22, 2 e12).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sl

from .errors import AsymmetryError, SingularSystemError
from .fem import BeamMesh, Constraints, assemble, shear_factor, strain_rows
from .lattice import Component, stiff_subgraph

VOIGT = ((0, 0), (1, 1), (0, 1))
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class HomogenizedTensor:
    """Fourth-order tensor ``C[j, l, p, q]`` with minor and major symmetries."""

    C: np.ndarray

    @classmethod
    def from_voigt(cls, V):
        V = np.asarray(V, dtype=float)
        C = np.zeros((2, 2, 2, 2))
        for a, (j, l) in enumerate(VOIGT):
            for b, (p, q) in enumerate(VOIGT):
                for jj, ll in {(j, l), (l, j)}:
                    for pp, qq in {(p, q), (q, p)}:
                        C[jj, ll, pp, qq] = V[a, b]
        return cls(C)

    @property
    def voigt(self):
        return np.array([[self.C[j, l, p, q] for (p, q) in VOIGT] for (j, l) in VOIGT])

    def entry(self, j, l, p, q):
        """Entry with 1-based indices, e.g. ``entry(1, 2, 1, 2)``."""
        return self.C[j - 1, l - 1, p - 1, q - 1]

    def symmetry_residuals(self):
        C = self.C
        scale = max(np.abs(C).max(), 1e-300)
        major = np.abs(C - C.transpose(2, 3, 0, 1)).max() / scale
        minor = max(np.abs(C - C.transpose(1, 0, 2, 3)).max(), np.abs(C - C.transpose(0, 1, 3, 2)).max()) / scale
        return {"major": float(major), "minor": float(minor)}

    def energy(self, e):
        e = np.asarray(e, dtype=float)
        return float(np.einsum("jl,jlpq,pq->", e, self.C, e))

    def acoustic(self, direction):
        """Acoustic tensor ``Q_jp = C_jlpq k_l k_q`` for a direction ``k``."""
        k = np.asarray(direction, dtype=float)
        return np.einsum("jlpq,l,q->jp", self.C, k, k)

    def coercivity(self):
        """Smallest eigenvalue of the strain-energy form on symmetric strains.

        Uses the orthonormal basis (e11, e22, sqrt(2) e12) so the value is a
        true Rayleigh-quotient bound.
        """
        D = np.diag([1.0, 1.0, np.sqrt(2.0)])
        return float(np.linalg.eigvalsh(D @ self.voigt @ D)[0])


def appendix_tensor_closed_form(gamma, eta, kappa):
    """Orthotropic tensor of the square stiff cross with unit period."""
    for name, value in (("gamma", gamma), ("eta", eta), ("kappa", kappa)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")
    shear = 6.0 * eta * kappa / (12.0 * eta + kappa)
    return HomogenizedTensor.from_voigt(np.diag([gamma, gamma, shear]))


def appendix_corrector_theta(y1, eta, kappa):
    """Closed-form theta-part of ``N^{12}`` on the horizontal stiff beam.

    ``y1`` is the coordinate along the beam with the joint at 0 and period 1,
    taken in [-1/2, 1/2].
    """
    alpha_h = 6.0 * eta / (12.0 * eta + kappa)
    r = kappa / eta
    y1 = np.asarray(y1, dtype=float)
    return -0.5 * alpha_h * r * (np.abs(y1) - 0.5) ** 2 + alpha_h * r / 8.0 - 0.5


@dataclass
class CellCorrector:
    """Discrete solution of one cell problem.

    ``field`` is a :class:`~beamgap.fem.DofField` on the stiff graph; the
    global (Ux, Uy) of vertex class ``pinned`` is fixed at zero.
    """

    j: int
    l: int
    field: object
    pinned: int
    residual: float

    def beam_values(self, b):
        return self.field.beam_values(b)

    def theta(self, b):
        return self.beam_values(b)[:, 2]


def _source_vectors(g, mesh, j, l, corrected=True):
    """Per-beam local load vectors of the unit strain ``E_jl``."""
    out = []
    for b, beam in enumerate(g.beams):
        n = int(mesh.elements[b])
        h = beam.length / n
        bu, _, bs = strain_rows(h)
        kap = shear_factor(beam.material, h, corrected)
        axial = beam.tangent[j] * beam.tangent[l]
        shear = beam.normal[j] * beam.tangent[l]
        fe = h * (beam.material.gamma * axial * bu + kap * shear * bs)
        f = np.zeros(3 * (n + 1))
        for e in range(n):
            f[3 * e : 3 * e + 6] += fe
        out.append(f)
    return out


class CellProblem:
    """Shared assembly for the four cell problems of one stiff graph."""

    def __init__(self, g, h, pin=None, corrected=True):
        if any(b.component == Component.SOFT for b in g.beams):
            g = stiff_subgraph(g)
        if not g.is_periodically_connected(Component.STIFF):
            raise SingularSystemError("stiff component not periodically connected")
        self.graph = g
        self.corrected = corrected
        self.mesh = BeamMesh(g, h)
        self.ops = assemble(g, self.mesh, Constraints.Periodic(), corrected=corrected)
        layout = self.ops.layout
        pin = layout.rep[g.used_vertices[0]][0] if pin is None else g.representative(pin)[0]
        self.pinned = pin
        i = layout.vertex_index[pin]
        self.keep = np.setdiff1d(np.arange(layout.ndof), [3 * i, 3 * i + 1])
        K = self.ops.stiffness[np.ix_(self.keep, self.keep)]
        try:
            self._factor = sl.cho_factor(K)
        except np.linalg.LinAlgError:
            raise SingularSystemError("cell-problem stiffness is singular after pinning translations") from None
        self._K = K

    def load(self, j, l):
        F = np.zeros(self.ops.layout.ndof)
        for P, f in zip(self.ops.projectors, _source_vectors(self.graph, self.mesh, j, l, self.corrected)):
            F += P.T @ f
        return F

    def solve(self, j, l):
        rhs = -self.load(j, l)[self.keep]
        x = sl.cho_solve(self._factor, rhs)
        residual = np.linalg.norm(self._K @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
        full = np.zeros(self.ops.layout.ndof)
        full[self.keep] = x
        return CellCorrector(j, l, self.ops.field(full), self.pinned, float(residual))

    def strains(self, corrector, j, l):
        """Per-beam arrays of (axial, curvature, shear) element strains."""
        out = []
        for b, beam in enumerate(self.graph.beams):
            n = int(self.mesh.elements[b])
            h = beam.length / n
            bu, bt, bs = strain_rows(h)
            d = corrector.beam_values(b).ravel()
            idx = 3 * np.arange(n)[:, None] + np.arange(6)[None, :]
            de = d[idx]
            axial = de @ bu + beam.tangent[j] * beam.tangent[l]
            curv = de @ bt
            shear = de @ bs + beam.normal[j] * beam.tangent[l]
            out.append((axial, curv, shear))
        return out

    def energy_form(self, strains_a, strains_b):
        total = 0.0
        for b, beam in enumerate(self.graph.beams):
            n = int(self.mesh.elements[b])
            h = beam.length / n
            kap = shear_factor(beam.material, h, self.corrected)
            (a1, c1, s1), (a2, c2, s2) = strains_a[b], strains_b[b]
            m = beam.material
            total += h * (m.gamma * a1 @ a2 + m.eta * c1 @ c2 + kap * s1 @ s2)
        return total


def solve_cell_problem(g_stiff, j, l, h, pin=None):
    """Corrector ``N^{jl}`` for 1-based indices ``j, l`` in {1, 2}."""
    if j not in (1, 2) or l not in (1, 2):
        raise ValueError(f"cell-problem indices must be 1 or 2, got ({j}, {l})")
    return CellProblem(g_stiff, h, pin).solve(j - 1, l - 1)


def homogenized_tensor(g_stiff, h, pin=None, corrected=True, return_correctors=False):
    """Evaluate ``C^h`` from the four discrete correctors."""
    cp = CellProblem(g_stiff, h, pin, corrected)
    correctors = {}
    strains = {}
    for j, l in itertools.product(range(2), repeat=2):
        correctors[j, l] = cp.solve(j, l)
        strains[j, l] = cp.strains(correctors[j, l], j, l)
    area = abs(np.linalg.det(cp.graph.lattice_vectors))
    C = np.zeros((2, 2, 2, 2))
    for (j, l), (p, q) in itertools.product(strains, repeat=2):
        C[j, l, p, q] = cp.energy_form(strains[j, l], strains[p, q]) / area
    t = HomogenizedTensor(C)
    res = t.symmetry_residuals()
    if max(res.values()) > SYMMETRY_TOL:
        raise AsymmetryError(f"homogenized tensor asymmetry {res} exceeds {SYMMETRY_TOL}")
    sym = C + C.transpose(2, 3, 0, 1)
    sym = sym + sym.transpose(1, 0, 2, 3)
    sym = sym + sym.transpose(0, 1, 3, 2)
    t = HomogenizedTensor(sym / 8.0)
    if return_correctors:
        return t, {(j + 1, l + 1): c for (j, l), c in correctors.items()}
    return t
