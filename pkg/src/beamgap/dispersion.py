"""Plane waves of the two-scale limit and their comparison with scaled Bloch spectra.

A macroscopic wave ``u0 = A exp(i k.x)`` solves the limit problem when

    (Q(k_hat) |k|^2 - beta(lambda)) A = 0,    Q_jp = C^h_jlpq k_hat_l k_hat_q.

Since ``Q`` is positive definite, the number of admissible real ``|k|`` equals
the number of positive eigenvalues of ``beta``: two in a band, one in a weak gap
and none in a full gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sl
from scipy.optimize import brentq

from .bloch import scaled_dispersion_at
from .errors import ConvergenceError, NearResonanceError
from .homogenization import homogenized_tensor
from .lattice import ScalingParams
from .resonance import SIGN_TOL, GapClass, SoftProblem


@dataclass
class LimitMode:
    lam: float
    direction: np.ndarray
    wavenumbers: list
    amplitudes: list
    classification: GapClass

    @property
    def count(self):
        return len(self.wavenumbers)


def _unit(direction):
    d = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d)
    if norm == 0:
        raise ValueError("direction must be non-zero")
    return d / norm


def limit_modes(Ch, beta, direction):
    """Propagating macroscopic modes at ``beta.lam`` along ``direction``."""
    if beta.classification == GapClass.RESONANCE:
        raise NearResonanceError(f"lambda={beta.lam} is at a soft resonance; the limit relation is undefined")
    d = _unit(direction)
    Q = Ch.acoustic(d)
    s, A = sl.eigh(beta.matrix, Q)
    qmax = np.linalg.eigvalsh(Q)[-1]
    wavenumbers, amplitudes = [], []
    for i in np.argsort(s):
        # s = |k|^2; the tolerance mirrors the sign threshold on beta's eigenvalues
        if s[i] > -SIGN_TOL / qmax:
            a = A[:, i] / np.linalg.norm(A[:, i])
            wavenumbers.append(math.sqrt(max(s[i], 0.0)))
            amplitudes.append(a)
    return LimitMode(float(beta.lam), d, wavenumbers, amplitudes, beta.classification)


def dispersion_residual(Ch, beta, mode):
    """Largest ``|(Q k^2 - beta) A| / (|beta| |A|)`` over the modes."""
    Q = Ch.acoustic(mode.direction)
    worst = 0.0
    for k, a in zip(mode.wavenumbers, mode.amplitudes):
        r = np.linalg.norm(Q @ a * k * k - beta.matrix @ a) / (np.linalg.norm(beta.matrix, 2) * np.linalg.norm(a))
        worst = max(worst, r)
    return worst


def quadratic_roots(Q, beta):
    """Roots ``s = |k|^2`` of ``det(Q s - beta) = 0`` written as a quadratic."""
    Q = np.asarray(Q, dtype=float)
    B = np.asarray(beta, dtype=float)
    a2 = np.linalg.det(Q)
    a1 = -(Q[0, 0] * B[1, 1] + Q[1, 1] * B[0, 0] - 2 * Q[0, 1] * B[0, 1])
    a0 = np.linalg.det(B)
    disc = max(a1 * a1 - 4 * a2 * a0, 0.0)
    sq = math.sqrt(disc)
    # the stable pair avoids cancellation in -a1 +- sq
    q = -0.5 * (a1 + math.copysign(sq, a1)) if a1 != 0 else 0.5 * sq
    r1 = q / a2
    r2 = a0 / q if q != 0 else -q / a2
    return tuple(sorted((r1, r2)))


# ---------------------------------------------------------------------------
# k -> lambda for the limit problem


def limit_lambda(Ch, beta_fn, mass, k, tol=1e-10, max_iter=100, bracket=None):
    """Smallest ``lambda`` solving the limit dispersion relation at wavevector ``k``.

    ``beta_fn(lam)`` returns the 2x2 beta matrix and ``mass`` is its
    quasistatic slope ``beta'(0)`` (total density per cell area).  A
    fixed-point iteration on the effective mass ``beta(lam)/lam`` is tried
    first; if it fails, bisection on ``lam_min(Q |k|^2 - beta(lam))`` over
    ``bracket`` (default: up to the first pole) is used.
    """
    k = np.asarray(k, dtype=float)
    knorm = np.linalg.norm(k)
    if knorm == 0:
        return 0.0, [0.0]
    S = Ch.acoustic(k / knorm) * knorm**2
    lam = float(sl.eigh(S, mass * np.eye(2), eigvals_only=True)[0])
    trace = [lam]
    for _ in range(max_iter):
        eff = beta_fn(lam) / lam
        try:
            new = float(sl.eigh(S, eff, eigvals_only=True)[0])
        except np.linalg.LinAlgError:
            break
        trace.append(new)
        if abs(new - lam) <= tol * max(abs(new), 1e-300):
            return new, trace
        lam = new
    if bracket is None:
        raise ConvergenceError(f"fixed point did not converge in {max_iter} iterations", trace)

    def f(x):
        return np.linalg.eigvalsh(S - beta_fn(x))[0]

    lo, hi = bracket
    xs = np.linspace(lo, hi, 400)
    vals = [f(x) for x in xs]
    for i in range(len(xs) - 1):
        if vals[i] > 0 >= vals[i + 1]:
            root = brentq(f, xs[i], xs[i + 1], xtol=tol * xs[i + 1])
            trace.append(root)
            return root, trace
    raise ConvergenceError("no root of the limit dispersion relation in the bracket", trace)


@dataclass
class ValidationRow:
    epsilon: float
    lambda_bloch: float
    lambda_limit: float
    rel_dev: float
    order_estimate: float


@dataclass
class ValidationReport:
    k_macro: np.ndarray
    rows: list
    trace: list = field(default_factory=list)

    @property
    def deviations(self):
        return [r.rel_dev for r in self.rows]

    @property
    def monotone(self):
        d = self.deviations
        return all(b < a for a, b in zip(d[:-1], d[1:]))

    def to_csv(self, stream, header=()):
        for line in header:
            stream.write(f"# {line}\n")
        stream.write("epsilon,lambda_bloch,lambda_limit,rel_dev,order_estimate\n")
        for r in self.rows:
            order = "" if math.isnan(r.order_estimate) else f"{r.order_estimate:.6g}"
            stream.write(f"{r.epsilon:.12g},{r.lambda_bloch:.12g},{r.lambda_limit:.12g},{r.rel_dev:.6e},{order}\n")


class LimitModel:
    """Homogenized tensor plus soft-problem beta for one lattice."""

    def __init__(self, g, h):
        self.graph = g
        self.h = h
        self.tensor = homogenized_tensor(g, h)
        self.soft = SoftProblem(g, h)
        self.mass = self.soft.total_mass / self.soft.area

    def beta(self, lam):
        return self.soft.beta_modal(lam)

    def first_pole(self):
        poles = self.soft.poles()
        return float(poles[0]) if len(poles) else np.inf

    def lam(self, k):
        top = self.first_pole()
        bracket = (1e-12, top * (1 - 1e-9)) if np.isfinite(top) else None
        return limit_lambda(self.tensor, self.beta, self.mass, k, bracket=bracket)


def lowest_nonzero(values, floor=1e-8):
    values = np.sort(np.asarray(values))
    scale = max(abs(values[-1]), 1.0)
    for v in values:
        if v > floor * scale:
            return float(v)
    raise ValueError("no non-zero eigenvalue among the computed bands")


def validate_limit(g, epsilons, k_macro, h, n_bands=4, model=None):
    """Compare the lowest non-zero scaled Bloch eigenvalue with the limit prediction."""
    eps = [float(e) for e in epsilons]
    if any(b >= a for a, b in zip(eps[:-1], eps[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    model = model or LimitModel(g, h)
    k = np.asarray(k_macro, dtype=float)
    lam_limit, trace = model.lam(k)
    rows = []
    for i, e in enumerate(eps):
        s = ScalingParams(e)
        w = scaled_dispersion_at(g, s, k, n_bands, h)
        lam_b = lowest_nonzero(w) if np.linalg.norm(k) > 0 else float(w[0])
        dev = abs(lam_b - lam_limit) / abs(lam_limit) if lam_limit != 0 else abs(lam_b)
        order = math.nan
        if i > 0 and rows[-1].rel_dev > 0 and dev > 0:
            order = math.log(rows[-1].rel_dev / dev) / math.log(eps[i - 1] / e)
        rows.append(ValidationRow(e, lam_b, lam_limit, dev, order))
    return ValidationReport(k, rows, trace)
