"""Command-line interface: ``beamgap <command> [options]``.

Every command writes CSV (to stdout or ``--out``) preceded by ``#`` provenance
lines recording the command line, a SHA-256 of the lattice and the mesh size.
Exit status is 0 on success, 1 on domain errors (resonance, invalid geometry)
and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from .bloch import band_structure
from .dispersion import validate_limit
from .errors import BeamgapError, NearResonanceError, PoleError
from .homogenization import VOIGT, appendix_tensor_closed_form, homogenized_tensor
from .lattice import (
    ATTACHMENTS,
    MaterialParams,
    ScalingParams,
    build_square_example,
    graph_to_config,
    load_config,
    stiff_subgraph,
)
from .resonance import SoftProblem, beta1_closed, beta2_closed, classify, closed_form_poles, scan_gaps

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

COMMANDS = ("homogenize", "beta", "gaps", "bloch", "validate")
DEFAULT_SAMPLES = 2000
DEFAULT_LAMBDA_MAX = 50.0


def _positive(kind):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return parse


def _non_negative(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if value < 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be a non-negative number, got {text}")
    return value


def _float_list(text):
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("list is empty")
    return values


def _vector(text):
    values = _float_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated components, got {text!r}")
    return values


def build_parser():
    p = argparse.ArgumentParser(
        prog="beamgap",
        description="Band structures and high-contrast homogenization of periodic Timoshenko beam lattices.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS, help="what to compute")
    src = p.add_argument_group("lattice")
    src.add_argument("--config", type=Path, help="JSON lattice config")
    src.add_argument("--builtin", choices=["square"], help="built-in lattice (square grid with one soft segment)")
    src.add_argument("--alpha", type=_positive(float), default=45.0, help="soft segment angle in degrees")
    src.add_argument("--a", type=_positive(float), help="soft segment half-length (omit with --attachment direct)")
    src.add_argument("--attachment", choices=ATTACHMENTS, default=None,
                     help="how the soft segment meets the grid (default: clamped, or direct for bloch/validate)")
    num = p.add_argument_group("numerics")
    num.add_argument("--h", type=_positive(float), help="mesh size (default: shortest beam / 64)")
    num.add_argument("--lambda-min", type=_non_negative, default=0.0, help="lower end of the lambda range")
    num.add_argument("--lambda-max", type=_positive(float), default=DEFAULT_LAMBDA_MAX, help="upper end of the lambda range")
    num.add_argument("--samples", type=_positive(int), default=DEFAULT_SAMPLES, help="lambda samples")
    num.add_argument("--mode", choices=["closed-form", "fe"], default="closed-form", help="beta evaluation path")
    num.add_argument("--epsilons", type=_float_list, default=[0.25, 0.125, 0.0625], help="decreasing cell sizes")
    num.add_argument("--epsilon", type=_positive(float), help="solve the scaled problem with this cell size (bloch)")
    num.add_argument("--k", type=_vector, default=[1.0, 0.0], help="macroscopic quasi-momentum k1,k2 (validate)")
    num.add_argument("--path", default="GXMG", help="zone path through corners G, X, Y, M")
    num.add_argument("--points", type=_positive(int), default=10, help="samples per path leg")
    num.add_argument("--bands", type=_positive(int), default=6, help="number of bands")
    num.add_argument("--full-zone", type=_positive(int), default=None, help="also certify gaps on an N x N zone grid")
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    return p


def _lattice(args, parser):
    if args.config and args.builtin:
        parser.error("use either --config or --builtin, not both")
    if args.config:
        g = load_config(args.config)
        digest = hashlib.sha256(args.config.read_bytes()).hexdigest()
        return g, digest, False
    if not args.builtin:
        parser.error("a lattice is required: --config PATH or --builtin square")
    attachment = args.attachment or ("direct" if args.command in ("bloch", "validate") else "clamped")
    if attachment != "direct" and args.a is None:
        parser.error(f"--a is required with attachment {attachment!r}")
    a = None if attachment == "direct" else args.a
    g = build_square_example(args.alpha, a, MaterialParams(), MaterialParams(), attachment)
    digest = hashlib.sha256(json.dumps(graph_to_config(g), sort_keys=True).encode()).hexdigest()
    return g, digest, True


def _half_length(g):
    soft = [b for b in g.beams if b.component.value == "soft"]
    return soft[0].length / 2 if len(soft) == 1 else None


def _fmt(x):
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.12g}"


def _homogenize(args, g, builtin, h, out):
    t = homogenized_tensor(stiff_subgraph(g), h)
    ref = appendix_tensor_closed_form(1.0, 1.0, 1.0).voigt if builtin else None
    out.write("quantity,value,closed_form,rel_error\n")
    names = ["".join(str(i + 1) for i in (*VOIGT[a], *VOIGT[b])) for a in range(3) for b in range(a, 3)]
    pairs = [(a, b) for a in range(3) for b in range(a, 3)]
    scale = np.abs(t.voigt).max()
    for name, (a, b) in zip(names, pairs):
        value = t.voigt[a, b]
        if ref is None:
            out.write(f"C{name},{_fmt(value)},,\n")
        else:
            cf = ref[a, b]
            err = abs(value - cf) / (abs(cf) if cf != 0 else scale)
            out.write(f"C{name},{_fmt(value)},{_fmt(cf)},{err:.3e}\n")
    res = t.symmetry_residuals()
    out.write(f"symmetry_major,{res['major']:.3e},,\n")
    out.write(f"symmetry_minor,{res['minor']:.3e},,\n")
    out.write(f"antisymmetric_energy,{t.energy([[0, 1], [-1, 0]]):.3e},,\n")
    out.write(f"coercivity,{_fmt(t.coercivity())},,\n")


def _lambda_grid(args):
    if args.lambda_min >= args.lambda_max:
        raise argparse.ArgumentTypeError("--lambda-min must be below --lambda-max")
    return np.linspace(args.lambda_min, args.lambda_max, args.samples)


def _beta(args, g, h, out, grid):
    if args.mode == "closed-form":
        a = _half_length(g) if args.a is None else args.a
        poles = closed_form_poles(a, args.lambda_max + 1.0)
        out.write("lambda,beta1,beta2,class\n")
        for lam in grid:
            try:
                b1, b2 = beta1_closed(lam, a), beta2_closed(lam, a)
                cls = classify(lam, (b1, b2), poles).value
            except PoleError:
                b1 = b2 = math.nan
                cls = "Resonance"
            out.write(f"{_fmt(lam)},{_fmt(b1)},{_fmt(b2)},{cls}\n")
        return
    problem = SoftProblem(g, h)
    poles = problem.poles(args.lambda_max + 1.0)
    out.write("lambda,b11,b12,b22,eig1,eig2,class\n")
    for lam in grid:
        try:
            B = problem.beta_from(lam, problem.solve(lam))
            w = np.linalg.eigvalsh(B)
            cls = classify(lam, w, poles).value
            vals = [B[0, 0], B[0, 1], B[1, 1], w[0], w[1]]
        except NearResonanceError:
            vals = [math.nan] * 5
            cls = "Resonance"
        out.write(",".join([_fmt(lam), *(_fmt(v) for v in vals), cls]) + "\n")


def _gaps(args, g, h, out):
    if args.mode == "closed-form":
        a = _half_length(g) if args.a is None else args.a
        intervals = scan_gaps(a, args.lambda_max, args.samples, "closed-form")
    else:
        intervals = scan_gaps(g, args.lambda_max, args.samples, "fe", h=h)
    out.write("lambda_lo,lambda_hi,class,boundary_type\n")
    for iv in intervals:
        if iv.hi <= args.lambda_min:
            continue
        out.write(f"{_fmt(max(iv.lo, args.lambda_min))},{_fmt(iv.hi)},{iv.classification.value},{iv.hi_type}\n")


def run(argv=None):
    """Run the CLI; returns the process exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    argv_text = " ".join(["beamgap", *(sys.argv[1:] if argv is None else argv)])
    try:
        if args.command in ("beta", "gaps"):
            try:
                grid = _lambda_grid(args)
            except argparse.ArgumentTypeError as exc:
                parser.error(str(exc))
        else:
            grid = None
        if args.command == "validate" and any(b >= a for a, b in zip(args.epsilons[:-1], args.epsilons[1:])):
            parser.error("--epsilons must be strictly decreasing")
        if args.command == "validate" and not all(0 < e < 1 for e in args.epsilons):
            parser.error("--epsilons must lie in (0, 1)")
        g, digest, builtin = _lattice(args, parser)
        h = args.h or min(b.length for b in g.beams) / 64
        buf = io.StringIO()
        buf.write(f"# {argv_text}\n# config sha256 {digest}\n# h {h:.12g}\n")
        if args.command == "homogenize":
            _homogenize(args, g, builtin, h, buf)
        elif args.command == "beta":
            _beta(args, g, h, buf, grid)
        elif args.command == "gaps":
            _gaps(args, g, h, buf)
        elif args.command == "bloch":
            scaling = ScalingParams(args.epsilon) if args.epsilon else None
            bs = band_structure(g, args.path, args.points, args.bands, h, scaling, args.full_zone or 0)
            bs.to_csv(buf)
        elif args.command == "validate":
            report = validate_limit(g, args.epsilons, args.k, h)
            report.to_csv(buf)
    except BeamgapError as exc:
        print(f"beamgap: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"beamgap: error: {exc}", file=sys.stderr)
        return 1
    text = buf.getvalue()
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None):
    try:
        return run(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
