"""Soft-component resonances, the frequency-dependent matrix beta(lambda) and gap scans.

The soft beams are solved with their junctions to the stiff part clamped.  For
a macroscopic translation along ``e_j`` the response ``(U^j, V^j, Theta^j)``
solves

    (K0 - lambda M0) X^j = lambda M0 E_j,

with ``E_j`` the rigid translation field.  Then

    beta_jp(lambda) = lambda * ( delta_jp |Gamma|_rho + int rho (U^j t_p + V^j n_p) ),

per unit cell area.  The signature of ``beta`` classifies ``lambda`` as a band
(both eigenvalues positive), a full gap (both negative) or a weak gap.

For a single straight soft segment of half-length ``a`` clamped at both ends
(and unit parameters), closed forms are available and serve as oracles.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sl
from scipy.optimize import brentq

from .errors import NearResonanceError, PoleError
from .fem import BeamMesh, Constraints, assemble, rigid_field
from .lattice import Component, soft_subgraph

SIGN_TOL = 1e-10
CONDITION_LIMIT = 1e12
PARTICIPATION_TOL = 1e-8
ZERO_XTOL = 1e-9


class GapClass(str, Enum):
    BAND = "Band"
    FULL_GAP = "FullGap"
    WEAK_GAP = "WeakGap"
    RESONANCE = "Resonance"

    @property
    def mode_count(self):
        return {GapClass.BAND: 2, GapClass.WEAK_GAP: 1, GapClass.FULL_GAP: 0}.get(self)


def exclusion_radius(pole):
    return max(1e-6, 1e-9 * abs(pole))


def classify_signs(eigenvalues):
    """Band / FullGap / WeakGap from the two eigenvalues of beta."""
    positive = [e > -SIGN_TOL for e in eigenvalues]
    if all(positive):
        return GapClass.BAND
    if not any(positive):
        return GapClass.FULL_GAP
    return GapClass.WEAK_GAP


def classify(lam, eigenvalues, poles=()):
    if any(abs(lam - p) < exclusion_radius(p) for p in poles):
        return GapClass.RESONANCE
    return classify_signs(eigenvalues)


@dataclass
class BetaMatrix:
    lam: float
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    classification: GapClass
    note: str = ""

    @classmethod
    def build(cls, lam, matrix, poles=(), note=""):
        matrix = np.asarray(matrix, dtype=float)
        matrix = 0.5 * (matrix + matrix.T)
        w, v = np.linalg.eigh(matrix)
        return cls(float(lam), matrix, w, v, classify(lam, w, poles), note)

    @property
    def mode_count(self):
        return self.classification.mode_count


# ---------------------------------------------------------------------------
# closed forms for one clamped segment of half-length a


def _check_lambda(lam):
    if lam < 0 or not np.isfinite(lam):
        raise ValueError(f"lambda must be a finite non-negative number, got {lam}")


def _mu1(lam):
    return math.sqrt(lam + math.sqrt(lam))


def _sc(z, a):
    """``(sin(mu a)/mu, cos(mu a))`` for ``mu^2 = z``, real for either sign of z."""
    x = z * a * a
    if abs(x) < 1e-3:
        # entire in z; short series avoids the removable singularity at z = 0
        s = a * (1 - x / 6 + x * x / 120 - x**3 / 5040)
        c = 1 - x / 2 + x * x / 24 - x**3 / 720
        return s, c
    if z > 0:
        mu = math.sqrt(z)
        return math.sin(mu * a) / mu, math.cos(mu * a)
    nu = math.sqrt(-z)
    return math.sinh(nu * a) / nu, math.cosh(nu * a)


def transverse_denominator(lam, a):
    """Smooth function whose zeros are the transverse clamped resonances."""
    m1 = _mu1(lam)
    s, c = _sc(lam - math.sqrt(lam), a)
    return m1 * math.cos(m1 * a) * s + c * math.sin(m1 * a)


def beta1_closed(lam, a):
    """``2 lambda + 2 sqrt(lambda) tan(sqrt(lambda) a)``."""
    _check_lambda(lam)
    r = math.sqrt(lam)
    ra = r * a
    if lam > 0 and abs(math.remainder(ra - math.pi / 2, math.pi)) < 1e-8:
        raise PoleError(f"beta1 has a longitudinal pole at lambda={lam:.12g} (a={a})")
    return 2 * lam + 2 * r * math.tan(ra)


def beta2_closed(lam, a):
    """``2 lambda + 4 lambda / (mu1 cot mu1 a + mu2 cot mu2 a)`` on both branches of mu2."""
    _check_lambda(lam)
    if lam == 0:
        return 0.0
    m1 = _mu1(lam)
    s, _ = _sc(lam - math.sqrt(lam), a)
    d = transverse_denominator(lam, a)
    if abs(d) < 1e-8:
        raise PoleError(f"beta2 has a transverse pole near lambda={lam:.12g} (a={a})")
    return 2 * lam + 4 * lam * s * math.sin(m1 * a) / d


def mean_u_closed(lam, a):
    """Integral of ``U`` over the segment, ``2 tan(sqrt(l) a)/sqrt(l) - 2a``."""
    if lam == 0:
        return 0.0
    r = math.sqrt(lam)
    return 2 * math.tan(r * a) / r - 2 * a


def mean_v_closed(lam, a):
    """Integral of ``V`` over the segment, ``4/(mu1 cot mu1 a + mu2 cot mu2 a) - 2a``."""
    if lam == 0:
        return 0.0
    m1 = _mu1(lam)
    s, _ = _sc(lam - math.sqrt(lam), a)
    return 4 * s * math.sin(m1 * a) / transverse_denominator(lam, a) - 2 * a


def u_profile_closed(lam, a):
    """``y -> cos(sqrt(l) y) / cos(sqrt(l) a) - 1``."""
    r = math.sqrt(lam)
    return lambda y: np.cos(r * np.asarray(y)) / math.cos(r * a) - 1.0


@dataclass(frozen=True)
class TransverseMode:
    lam: float
    a: float
    A: float
    B: float
    mean_v: float
    mu1: float
    mu2_squared: float

    def profile(self, y):
        """``V_hat(y) = A cos(mu1 y) + B cos(mu2 y)`` (cosh branch for lambda < 1)."""
        y = np.asarray(y, dtype=float)
        z = self.mu2_squared
        if z >= 0:
            second = np.cos(math.sqrt(z) * y)
        else:
            second = np.cosh(math.sqrt(-z) * y)
        return self.A * np.cos(self.mu1 * y) + self.B * second


def transverse_mode_closed(lam, a):
    """Amplitudes of the symmetric transverse response ``V_hat`` with ``V_hat(+-a) = 1``."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    m1 = _mu1(lam)
    z = lam - math.sqrt(lam)
    s, _ = _sc(z, a)
    d = transverse_denominator(lam, a)
    if abs(d) < 1e-8:
        raise PoleError(f"transverse pole near lambda={lam:.12g} (a={a})")
    A = m1 * s / d
    B = math.sin(m1 * a) / d
    return TransverseMode(lam, a, A, B, 4 * s * math.sin(m1 * a) / d - 2 * a, m1, z)


def longitudinal_poles(a, lam_max):
    """``lambda_m = pi^2 (m - 1/2)^2 / a^2`` up to ``lam_max``."""
    out = []
    m = 1
    while True:
        lam = (math.pi * (m - 0.5) / a) ** 2
        if lam > lam_max:
            return out
        out.append(lam)
        m += 1


@functools.lru_cache(maxsize=64)
def transverse_poles(a, lam_max, samples=20000):
    """Zeros of :func:`transverse_denominator` in ``(0, lam_max]``."""
    grid = np.linspace(0.0, lam_max, samples + 1)[1:]
    vals = np.array([transverse_denominator(x, a) for x in grid])
    poles = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        poles.append(brentq(transverse_denominator, grid[i], grid[i + 1], args=(a,), xtol=1e-13, rtol=1e-15))
    return tuple(poles)


def closed_form_poles(a, lam_max):
    return sorted(longitudinal_poles(a, lam_max) + list(transverse_poles(a, lam_max)))


def beta_closed_matrix(lam, a, tangent=(1.0, 0.0)):
    """Closed-form beta in global axes for a segment with the given tangent."""
    t = np.asarray(tangent, dtype=float)
    n = np.array([-t[1], t[0]])
    R = np.column_stack([t, n])
    D = np.diag([beta1_closed(lam, a), beta2_closed(lam, a)])
    return BetaMatrix.build(lam, R @ D @ R.T, closed_form_poles(a, lam + 1.0))


# ---------------------------------------------------------------------------
# finite-element path


@dataclass
class SoftResonanceSolution:
    """Responses ``X^j`` (j = 1, 2) of the clamped soft part at ``lam``."""

    lam: float
    fields: list
    problem: "SoftProblem" = field(repr=False, default=None)

    def beam_values(self, j, b):
        """Local (U, V, Theta) nodal values of response ``j`` (1-based) on beam ``b``."""
        return self.fields[j - 1].beam_values(b)


class SoftProblem:
    """Assembled clamped soft problem of a lattice, with its modal data."""

    def __init__(self, g, h):
        self.graph = g
        self.soft = soft_subgraph(g) if any(b.component == Component.STIFF for b in g.beams) else g
        soft = self.soft
        if not soft.beams:
            raise ValueError("lattice has no soft beams")
        self.mesh = BeamMesh(soft, h)
        clamped = set(soft.clamped) | set(g.clamped)
        self.ops = assemble(soft, self.mesh, Constraints.Periodic(clamped))
        layout = self.ops.layout
        free = layout.free
        self.area = abs(np.linalg.det(g.lattice_vectors))
        self.total_mass = g.total_length(weighted=True)
        self.forcing = np.zeros((len(free), 2))
        self.weights = np.zeros((len(free), 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = 1.0
            E = rigid_field(layout, translation=e)
            self.forcing[:, j] = (self.ops.mass_full @ E)[free]
        # Simpson rule on each soft beam: int rho (U t_p + V n_p)
        for b, beam in enumerate(soft.beams):
            n = int(self.mesh.elements[b])
            hb = beam.length / n
            w = np.ones(n + 1)
            w[1:-1:2] = 4
            w[2:-1:2] = 2
            w *= hb / 3 * beam.material.density
            P = self.ops.projectors[b]
            for p in range(2):
                local = np.zeros(3 * (n + 1))
                local[0::3] = w * beam.tangent[p]
                local[1::3] = w * beam.normal[p]
                self.weights[:, p] += (P.T @ local)[free]
        self.eigenvalues, self.modes = sl.eigh(self.ops.stiffness, self.ops.mass)
        self.modal_forcing = self.modes.T @ self.forcing
        self.modal_weights = self.modes.T @ self.weights
        part = np.abs(self.modal_forcing).max(axis=1)
        self.participation = part / max(part.max(), 1e-300)

    @property
    def single_segment(self):
        return len(self.soft.beams) == 1

    def poles(self, lam_max=np.inf):
        """Clamped soft eigenvalues that actually appear in beta."""
        keep = (self.participation > PARTICIPATION_TOL) & (self.eigenvalues <= lam_max)
        return self.eigenvalues[keep]

    def nearest_eigenvalue(self, lam):
        i = int(np.argmin(np.abs(self.eigenvalues - lam)))
        return float(self.eigenvalues[i])

    def check_resonance(self, lam):
        gaps = np.abs(self.eigenvalues - lam)
        nearest = self.nearest_eigenvalue(lam)
        cond = gaps.max() / max(gaps.min(), 1e-300)
        if cond > CONDITION_LIMIT or abs(lam - nearest) < exclusion_radius(nearest):
            raise NearResonanceError(
                f"lambda={lam:.12g} is resonant with the clamped soft spectrum "
                f"(nearest eigenvalue {nearest:.12g}, condition ~{cond:.3g})",
                nearest=nearest,
            )

    def solve(self, lam):
        if lam < 0:
            raise ValueError(f"lambda must be non-negative, got {lam}")
        if lam == 0:
            return np.zeros_like(self.forcing)
        self.check_resonance(lam)
        A = self.ops.stiffness - lam * self.ops.mass
        X = sl.solve(A, lam * self.forcing, assume_a="sym")
        return X

    def residual(self, lam, X):
        A = self.ops.stiffness - lam * self.ops.mass
        rhs = lam * self.forcing
        return float(np.linalg.norm(A @ X - rhs) / max(np.linalg.norm(rhs), 1e-300))

    def beta_from(self, lam, X):
        B = lam * (self.total_mass * np.eye(2) + self.weights.T @ X) / self.area
        return 0.5 * (B + B.T)

    def beta_modal(self, lam):
        """beta from the modal expansion (fast; used in scans)."""
        denom = self.eigenvalues - lam
        X_modal = lam * self.modal_forcing / denom[:, None]
        B = lam * (self.total_mass * np.eye(2) + self.modal_weights.T @ X_modal) / self.area
        return 0.5 * (B + B.T)

    def note(self):
        return "" if self.single_segment else "beyond worked example"


def solve_soft(g, lam, h, problem=None):
    """Clamped soft responses at ``lam`` for unit translations along x and y."""
    problem = problem or SoftProblem(g, h)
    X = problem.solve(lam)
    fields = [problem.ops.field(X[:, j]) for j in range(2)]
    return SoftResonanceSolution(float(lam), fields, problem)


def beta_matrix(g, lam, h, problem=None):
    """beta(lambda) from a direct solve of the soft problem."""
    problem = problem or SoftProblem(g, h)
    X = problem.solve(lam)
    return BetaMatrix.build(lam, problem.beta_from(lam, X), problem.poles(lam + 1.0), problem.note())


# ---------------------------------------------------------------------------
# gap scans


@dataclass(frozen=True)
class GapInterval:
    lo: float
    hi: float
    classification: GapClass
    lo_type: str
    hi_type: str

    @property
    def width(self):
        return self.hi - self.lo


def _zeros(f, lo, hi, samples):
    xs = np.linspace(lo, hi, samples)
    vals = np.array([f(x) for x in xs])
    out = []
    for i in range(len(xs) - 1):
        if vals[i] == 0:
            out.append(xs[i])
        elif vals[i] * vals[i + 1] < 0:
            out.append(brentq(f, xs[i], xs[i + 1], xtol=ZERO_XTOL, rtol=1e-15))
    return out


def _scan(eigs, poles, lam_max, samples):
    """Generic scan given ``eigs(lam) -> (e_lo, e_hi)`` analytic between poles."""
    poles = sorted(p for p in poles if 0 < p < lam_max)
    edges = [0.0, *poles, lam_max]
    boundaries = [(0.0, "end")]
    for lo, hi in zip(edges[:-1], edges[1:]):
        pad_lo = exclusion_radius(lo) if lo > 0 else 0.0
        pad_hi = exclusion_radius(hi) if hi < lam_max else 0.0
        a, b = lo + pad_lo, hi - pad_hi
        if b <= a:
            continue
        n = max(16, int(samples * (hi - lo) / lam_max) + 2)
        # a hair inside the ends so lambda = 0 and the poles are never evaluated
        a_in = a if lo > 0 else min(1e-9 * lam_max, 0.5 * b)
        zs = []
        for k in range(2):
            zs += _zeros(lambda x, k=k: eigs(x)[k], a_in, b, n)
        boundaries += [(z, "zero") for z in sorted(zs)]
        boundaries.append((hi, "pole" if hi < lam_max else "end"))
    intervals = []
    for (lo, lt), (hi, ht) in zip(boundaries[:-1], boundaries[1:]):
        if hi - lo <= 0:
            continue
        cls = classify_signs(eigs(0.5 * (lo + hi)))
        if intervals and intervals[-1].classification == cls and lt == "zero":
            prev = intervals[-1]
            intervals[-1] = GapInterval(prev.lo, hi, cls, prev.lo_type, ht)
        else:
            intervals.append(GapInterval(lo, hi, cls, lt, ht))
    return intervals


def scan_gaps(source, lambda_max, samples=2000, mode="closed-form", h=None, problem=None):
    """Partition ``(0, lambda_max]`` into Band / FullGap / WeakGap intervals.

    ``source`` is the half-length ``a`` for ``mode="closed-form"`` and a
    lattice for ``mode="fe"``.  Poles always appear as interval boundaries.
    """
    if not lambda_max > 0:
        raise ValueError("lambda_max must be positive")
    if samples < 100:
        raise ValueError("samples must be at least 100")
    mode = mode.replace("_", "-").lower()
    if mode in ("closed-form", "closedform"):
        a = float(source)

        def eigs(x):
            b = sorted((beta1_closed(x, a), beta2_closed(x, a)))
            return b

        poles = closed_form_poles(a, lambda_max)
    elif mode in ("fe", "finite-element", "finiteelement"):
        problem = problem or SoftProblem(source, h)

        def eigs(x):
            return np.linalg.eigvalsh(problem.beta_modal(x))

        poles = problem.poles(lambda_max)
        # merge numerically repeated poles (symmetric soft graphs)
        merged = []
        for p in sorted(poles):
            if not merged or p - merged[-1] > exclusion_radius(p):
                merged.append(float(p))
        poles = merged
    else:
        raise ValueError(f"unknown scan mode {mode!r}")
    return _scan(eigs, poles, lambda_max, samples)


def compare_scans(reference, other, tol=1e-2):
    """Largest boundary shift between two scans with identical class sequences.

    Returns ``(agree, max_shift)``; ``agree`` is False if the sequences of
    classifications differ.
    """
    if [i.classification for i in reference] != [i.classification for i in other]:
        return False, math.inf
    shift = 0.0
    for r, o in zip(reference, other):
        shift = max(shift, abs(r.lo - o.lo), abs(r.hi - o.hi))
    return shift <= tol, shift
