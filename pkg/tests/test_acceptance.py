"""Acceptance criteria 1-8, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict which is printed as it runs
and repeated in the terminal summary.
"""

import math

import numpy as np
import scipy.linalg as sl

from beamgap.bloch import band_structure, dispersion_at
from beamgap.dispersion import LimitModel, limit_modes, validate_limit
from beamgap.fem import Constraints, assemble
from beamgap.homogenization import (
    CellProblem,
    appendix_corrector_theta,
    appendix_tensor_closed_form,
    homogenized_tensor,
    solve_cell_problem,
)
from beamgap.lattice import MaterialParams, ScalingParams, build_square_example, with_materials
from beamgap.resonance import (
    PARTICIPATION_TOL,
    GapClass,
    SoftProblem,
    beta1_closed,
    beta2_closed,
    beta_closed_matrix,
    compare_scans,
    mean_u_closed,
    mean_v_closed,
    scan_gaps,
    solve_soft,
)

from conftest import record_acceptance, segment_graph


def simpson_weights(s):
    w = np.ones(len(s))
    w[1:-1:2], w[2:-1:2] = 4, 2
    return w * (s[1] - s[0]) / 3


def tensor_error(t, ref):
    V, R = t.voigt, ref.voigt
    scale = np.abs(R).max()
    rel = np.where(R != 0, np.abs(V - R) / np.where(R != 0, np.abs(R), 1), np.abs(V - R) / scale)
    return float(rel.max())


def test_criterion_1_appendix_tensor(cross):
    errors = [tensor_error(homogenized_tensor(cross, 1 / 64), appendix_tensor_closed_form(1, 1, 1))]
    rng = np.random.default_rng(2024)
    for gamma, eta, kappa in rng.uniform(0.1, 10.0, size=(5, 3)):
        g = with_materials(cross, stiff=MaterialParams(gamma, eta, kappa))
        errors.append(tensor_error(homogenized_tensor(g, 1 / 64), appendix_tensor_closed_form(gamma, eta, kappa)))
    worst = max(errors)
    ok = record_acceptance(1, worst <= 1e-6, f"max relative error {worst:.2e} over unit + 5 random triples, tol 1e-6")
    assert ok


def test_criterion_2_corrector(cross):
    def sup_error(h, corrected=True):
        c = solve_cell_problem(cross, 1, 2, h) if corrected else CellProblem(cross, h, corrected=False).solve(0, 1)
        s = c.field.ops.mesh.coordinates(0)
        y = np.where(s <= 0.5, s, s - 1.0)
        return float(np.abs(c.theta(0) - appendix_corrector_theta(y, 1.0, 1.0)).max())

    hs = (1 / 16, 1 / 32, 1 / 64)
    errs = [sup_error(h) for h in hs]
    plain = [sup_error(h, corrected=False) for h in hs]
    plain_order = min(np.log2(np.array(plain[:-1]) / plain[1:]))
    # the shear-corrected element is nodally exact, so its errors are round-off and carry no rate
    exact = max(errs) <= 1e-11
    order = math.nan if exact else min(np.log2(np.array(errs[:-1]) / errs[1:]))
    ok = errs[-1] <= 1e-6 and (exact or order >= 1.8)
    detail = (
        f"sup error {errs[-1]:.2e} at h=1/64 (tol 1e-6); errors {', '.join(f'{e:.1e}' for e in errs)}"
        f" are at round-off so order is {'unmeasurable' if exact else f'{order:.2f}'};"
        f" uncorrected element order {plain_order:.2f} (tol 1.8)"
    )
    assert record_acceptance(2, ok, detail)


def test_criterion_3_beta_oracle():
    a = 0.5
    g = build_square_example(30.0, a)
    problem = SoftProblem(g, a / 128)
    R = np.column_stack([g.beams[-1].tangent, g.beams[-1].normal])
    worst = 0.0
    for lam in (0.25, 0.5, 2.0, 5.0, 8.0):
        B = problem.beta_from(lam, problem.solve(lam))
        D = R.T @ B @ R
        w = np.linalg.eigvalsh(B)
        ref = np.array([beta1_closed(lam, a), beta2_closed(lam, a)])
        # eigenvalues paired through the frame alignment
        paired = np.array([D[0, 0], D[1, 1]])
        assert np.allclose(np.sort(paired), w, rtol=1e-8, atol=1e-12)
        worst = max(worst, float(np.max(np.abs(paired - ref) / np.abs(ref))))
    seg = segment_graph(a)
    integral = 0.0
    for lam in (0.25, 2.0, 8.0):
        sol = solve_soft(seg, lam, a / 128)
        w = simpson_weights(sol.problem.mesh.coordinates(0))
        u = sol.beam_values(1, 0)[:, 0]
        v = sol.beam_values(2, 0)[:, 1]
        integral = max(
            integral,
            abs(w @ u - mean_u_closed(lam, a)) / abs(mean_u_closed(lam, a)),
            abs(w @ v - mean_v_closed(lam, a)) / abs(mean_v_closed(lam, a)),
        )
    ok = worst <= 1e-4 and integral <= 1e-5
    detail = f"max beta eigenvalue rel error {worst:.2e} (tol 1e-4); integral identities rel error {integral:.2e} (tol 1e-5)"
    assert record_acceptance(3, ok, detail)


def test_criterion_4_gap_existence():
    a = 0.5
    closed = scan_gaps(a, 200.0, 2000, "closed-form")
    kinds = [iv.classification for iv in closed]
    n_full, n_weak = kinds.count(GapClass.FULL_GAP), kinds.count(GapClass.WEAK_GAP)
    negative = True
    for iv in closed:
        if iv.classification == GapClass.FULL_GAP:
            for lam in np.linspace(iv.lo, iv.hi, 102)[1:-1]:
                negative &= beta1_closed(lam, a) < 0 and beta2_closed(lam, a) < 0
    fe = scan_gaps(build_square_example(45.0, a), 200.0, 2000, "fe", h=a / 128)
    agree, shift = compare_scans(closed, fe, 1e-2)
    ok = n_full >= 1 and n_weak >= 1 and negative and agree
    detail = (
        f"{n_full} FullGap, {n_weak} WeakGap; FullGap interiors negative definite: {negative};"
        f" FE scan classes agree: {agree}, max boundary shift {shift:.1e} (tol 1e-2)"
    )
    assert record_acceptance(4, ok, detail)


def test_criterion_5_mode_counts(cross):
    a = 0.5
    tensor = homogenized_tensor(cross, 1 / 64)
    rng = np.random.default_rng(5)
    tangent = np.array([math.cos(math.radians(30)), math.sin(math.radians(30))])
    expected = {GapClass.FULL_GAP: 0, GapClass.WEAK_GAP: 1, GapClass.BAND: 2}
    checked, mismatches = 0, 0
    for iv in scan_gaps(a, 200.0, 2000, "closed-form"):
        if iv.classification not in expected:
            continue
        for lam in np.linspace(iv.lo, iv.hi, 12)[1:-1]:
            B = beta_closed_matrix(lam, a, tangent)
            if B.classification != iv.classification:
                continue
            for theta in rng.uniform(0, 2 * np.pi, 32):
                mode = limit_modes(tensor, B, (math.cos(theta), math.sin(theta)))
                checked += 1
                mismatches += mode.count != expected[iv.classification]
    ok = checked > 0 and mismatches == 0
    assert record_acceptance(5, ok, f"{mismatches} mismatches in {checked} (lambda, direction) samples")


def test_criterion_6_epsilon_convergence(direct45):
    h = 1 / 64
    model = LimitModel(direct45, h)
    report = validate_limit(direct45, [1 / 4, 1 / 8, 1 / 16], (1.0, 0.0), h, model=model)
    devs = report.deviations

    gaps = [iv for iv in scan_gaps(direct45, 20.0, 2000, "fe", h=h, problem=model.soft) if iv.classification == GapClass.FULL_GAP]
    lo, hi = gaps[0].lo, gaps[0].hi
    # shrinking by 10% trims 5% of the width at each end
    pad = 0.05 * (hi - lo)
    inner = (lo + pad, hi - pad)
    bands = band_structure(direct45, "GXMG", 10, 12, h, ScalingParams(1 / 16)).bands
    assert bands.max() > hi, "not enough bands to cover the predicted gap"
    inside = np.sort(bands[(bands > inner[0]) & (bands < inner[1])])

    # in-gap values sit next to clamped soft eigenvalues that beta does not see
    silent = model.soft.eigenvalues[model.soft.participation <= PARTICIPATION_TOL]
    near = [float(np.min(np.abs(silent - x)) / x) for x in inside] if len(inside) else []

    monotone = report.monotone
    avoids = len(inside) == 0
    detail = (
        f"deviations {', '.join(f'{d:.2e}' for d in devs)} strictly decreasing: {monotone};"
        f" {len(inside)} Bloch values inside shrunk FullGap [{inner[0]:.3f}, {inner[1]:.3f}]"
    )
    if not avoids:
        detail += (
            f" spanning [{inside[0]:.3f}, {inside[-1]:.3f}], within {max(near):.1e} relative of"
            " soft eigenvalues with zero participation in beta"
        )
    assert record_acceptance(6, monotone and avoids, detail)


def test_criterion_7_structural_invariants(cross, direct45):
    def nullity(K):
        w = sl.eigvalsh(K)
        return int(np.sum(w < 1e-9 * w.max())), float(w.min() / w.max())

    seg = segment_graph(0.5)
    n_clamped, min_clamped = nullity(assemble(seg, h=1 / 32, constraints=Constraints.Clamped([0, 1])).stiffness)
    n_periodic, min_periodic = nullity(assemble(cross, h=1 / 32, constraints=Constraints.Periodic()).stiffness)
    psd = min_clamped > 0 and min_periodic > -1e-12

    problem = SoftProblem(build_square_example(30.0, 0.5), 0.5 / 64)
    beta_sym = max(
        float(np.abs(B - B.T).max()) for B in (problem.beta_from(lam, problem.solve(lam)) for lam in np.linspace(0.1, 50, 25))
    )

    t = homogenized_tensor(cross, 1 / 64)
    sym = max(t.symmetry_residuals().values())
    antisym = abs(t.energy([[0.0, 1.0], [-1.0, 0.0]]))

    reverse = 0.0
    for k in ((0.7, 0.2), (1.5, -2.0), (2.9, 2.9)):
        wp = dispersion_at(direct45, k, 6, 1 / 32)
        wm = dispersion_at(direct45, (-k[0], -k[1]), 6, 1 / 32)
        reverse = max(reverse, float(np.max(np.abs(wp - wm) / np.maximum(np.abs(wp), 1e-300))))

    ok = (
        psd
        and n_clamped == 0
        and n_periodic == 2
        and beta_sym <= 1e-12
        and sym <= 1e-10
        and antisym <= 1e-10
        and reverse <= 1e-10
    )
    detail = (
        f"nullity clamped {n_clamped}, periodic cross {n_periodic}; PSD {psd}; beta asymmetry {beta_sym:.1e};"
        f" C^h symmetry {sym:.1e}; antisymmetric energy {antisym:.1e}; lambda(k) vs lambda(-k) {reverse:.1e}"
    )
    assert record_acceptance(7, ok, detail)


def test_criterion_8_fe_rate():
    a = 0.5
    exact = math.pi**2 / (4 * a * a)
    errs = []
    for n in (16, 32, 64, 128):
        ops = assemble(segment_graph(a), h=2 * a / n, constraints=Constraints.Clamped([0, 1]))
        w = sl.eigh(ops.stiffness, ops.mass, eigvals_only=True, subset_by_index=[0, 5])
        errs.append(float(np.min(np.abs(w - exact)) / exact))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    ok = bool(np.all(orders >= 1.8))
    detail = f"relative errors {', '.join(f'{e:.2e}' for e in errs)}; orders {', '.join(f'{o:.2f}' for o in orders)} (tol 1.8)"
    assert record_acceptance(8, ok, detail)
