"""Command-line entry point: ``hexatile <command> [flags]``.

Exit codes: 0 success, 2 bad flags, 3 values out of range, 4 a tolerance or
verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .lattice import LozengeType, column_span, format_rational, interior_faces, parse_alpha, read_tiling, write_tiling

EXIT_FLAGS = 2
EXIT_RANGE = 3
EXIT_TOLERANCE = 4

DENSITY_HEADER = ["x", "y", "parity", "p_I", "p_II", "p_III", "source"]
SAMPLE_HEADER = ["x", "y", "parity", "p_I", "p_II", "p_III", "se_I", "se_II", "se_III", "samples"]
HEATMAP_HEADER = ["xi", "eta", "parity", "p_I", "p_II", "p_III", "classification"]


class RangeError(ValueError):
    pass


class ToleranceError(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_FLAGS)


def num(v) -> str:
    """Rationals as "p/q", floats as the shortest round-trip decimal."""
    if isinstance(v, Fraction):
        return format_rational(v)
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _alpha(s: str) -> str:
    """Syntax only; the range is checked after parsing so it maps to EXIT_RANGE."""
    try:
        Fraction(s) if "/" in s else float(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    return s


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _query(s: str) -> tuple[int, int, int, int]:
    parts = s.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("query must be x1,y1,x2,y2")
    return tuple(int(p) for p in parts)  # type: ignore[return-value]


def _faces(s: str):
    if s == "all":
        return None
    out = []
    for item in s.split(";"):
        xy = item.split(",")
        if len(xy) != 2:
            raise argparse.ArgumentTypeError("faces must be 'all' or 'x,y;x,y;...'")
        out.append((int(xy[0]), int(xy[1])))
    return out


def _write_csv(rows, header, out: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if out in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        Path(out).write_text(buf.getvalue())


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hexatile", description="Random lozenge tilings of the hexagon with a 2-periodic weight.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", help="draw random tilings")
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--alpha", type=_alpha, required=True)
    s.add_argument("--count", type=_positive, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=["exact", "float"], default="exact")
    s.add_argument("--method", choices=["sequential", "mcmc"], default="sequential")
    s.add_argument("--sweeps", type=_positive, default=None, help="mcmc thinning (default n^2)")
    s.add_argument("--output", choices=["both", "tilings", "aggregate"], default="both")
    s.add_argument("--out", required=True)
    s.add_argument("--threads", type=_positive, default=1)

    d = sub.add_parser("densities", help="lozenge densities at faces")
    d.add_argument("--n", type=_positive, required=True)
    d.add_argument("--alpha", type=_alpha, required=True)
    d.add_argument("--faces", type=_faces, default=None)
    d.add_argument("--exact", action="store_true")
    d.add_argument("--tol", type=float, default=1e-8)
    d.add_argument("--no-fallback", action="store_true", help="fail instead of recomputing inexact faces exactly")
    d.add_argument("--out", default=None)
    d.add_argument("--threads", type=_positive, default=1)

    k = sub.add_parser("kernel", help="correlation kernel values")
    k.add_argument("--n", type=_positive, required=True)
    k.add_argument("--alpha", type=_alpha, required=True)
    k.add_argument("--query", type=_query, action="append", required=True)
    k.add_argument("--tol", type=float, default=1e-8)
    k.add_argument("--threads", type=_positive, default=1)

    r = sub.add_parser("region", help="arctic curve and phase diagram")
    r.add_argument("--alpha", type=_alpha, required=True)
    r.add_argument("--resolution", type=_positive, default=200)
    r.add_argument("--out", default=".")
    r.add_argument("--heatmap", type=int, default=0, metavar="G", help="also write a G x G density CSV")
    r.add_argument("--threads", type=_positive, default=1)

    v = sub.add_parser("verify", help="exact oracle cross-checks")
    v.add_argument("--max-n", type=_positive, default=3)
    v.add_argument("--alphas", default="1/16,1/9,1/4,1")
    v.add_argument("--threads", type=_positive, default=1)

    g = sub.add_parser("render", help="tiling JSON to SVG")
    g.add_argument("tiling")
    g.add_argument("--out", required=True)
    g.add_argument("--overlay", default=None, help="region JSON whose boundary is drawn on top")
    g.add_argument("--threads", type=_positive, default=1)
    return p


def cmd_sample(a) -> int:
    from .sampler import SamplerConfig, empirical_densities, mcmc_chain, sample_batch

    # the flip chain only uses floats, so the exact-size cap does not apply to it
    mode = "exact" if a.mode == "exact" and a.method == "sequential" else "log_float"
    try:
        cfg = SamplerConfig(a.n, a.alpha, seed=a.seed, arithmetic_mode=mode, samples=a.count)
    except ValueError as e:
        raise RangeError(str(e)) from None
    if a.method == "sequential":
        batch = sample_batch(cfg, threads=a.threads)
    else:
        batch = mcmc_chain(cfg, thin=a.sweeps)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    if a.output in ("both", "tilings"):
        width = max(5, len(str(a.count - 1)))
        for i, p in enumerate(batch):
            write_tiling(out / f"tiling_{i:0{width}d}.json", p, a.alpha)
    if a.output in ("both", "aggregate"):
        grid = empirical_densities(batch, a.alpha)
        rows = []
        se = grid.stderr
        for x, y in grid.faces():
            rows.append(
                [x, y, x % 2]
                + [num(Fraction(int(grid.counts[t, x, y]), grid.total)) for t in LozengeType]
                + [num(se[t, x, y]) for t in LozengeType]
                + [grid.total]
            )
        _write_csv(rows, SAMPLE_HEADER, str(out / "densities.csv"))
    return 0


def cmd_densities(a) -> int:
    from .exact import SeparableKernel
    from .floatkernel import density_table

    n = a.n
    faces = interior_faces(n) if a.faces is None else a.faces
    allowed = set(interior_faces(n))
    bad = [f for f in faces if f not in allowed]
    if bad:
        raise RangeError(f"faces outside columns 1..{2 * n - 1} of the hexagon: {bad[:5]}")
    rows = []
    if a.exact:
        sep = SeparableKernel(n, a.alpha)
        for x, y in faces:
            rows.append([x, y, x % 2, *(num(v) for v in sep.probabilities(x, y)), "exact"])
        _write_csv(rows, DENSITY_HEADER, a.out)
        return 0
    cols = sorted({x for x, _ in faces})
    table = density_table(n, a.alpha, tol=a.tol, fallback=not a.no_fallback, columns=cols)
    failed = 0
    for x, y in faces:
        src = table.source[x, y]
        if src == "float" and (np.nanmax(table.error[:, x, y]) >= a.tol or np.nanmax(table.doubled[:, x, y]) >= a.tol):
            failed += 1
        rows.append([x, y, x % 2, *(num(table.p[t, x, y]) for t in LozengeType), src])
    _write_csv(rows, DENSITY_HEADER, a.out)
    if failed:
        raise ToleranceError(f"{failed} faces missed the tolerance {a.tol}")
    return 0


def cmd_kernel(a) -> int:
    from .exact import kernel_K
    from .floatkernel import kernel_K_float

    n = a.n
    for q in a.query:
        x1, y1, x2, y2 = q
        if not (1 <= x1 <= 2 * n - 1 and 1 <= x2 <= 2 * n - 1 and 0 <= y1 < 2 * n and 0 <= y2 < 2 * n):
            raise RangeError(f"query {q} outside columns 1..{2 * n - 1}, heights 0..{2 * n - 1}")
    worst = 0.0
    for q in a.query:
        exact = kernel_K(n, a.alpha, *q)
        fl = kernel_K_float(n, a.alpha, *q, tol=a.tol)
        worst = max(worst, abs(fl.value - float(exact)))
        print(f"K({','.join(map(str, q))}) exact={num(exact)} float={num(fl.value)}")
    if worst >= a.tol:
        raise ToleranceError(f"float kernel differs from the exact value by {worst:.3e}")
    return 0


def _heatmap_rows(alpha, g: int) -> list[list]:
    from .asymptotics import ScaledPoint, in_hexagon, phase_densities, saddle

    rows = []
    ax = np.linspace(-1, 1, g)
    for xi in ax:
        for eta in ax:
            if not in_hexagon(xi, eta):
                continue
            rep = saddle(ScaledPoint(float(xi), float(eta)), alpha)
            ev, od = phase_densities(rep)
            for parity, d in ((0, ev), (1, od)):
                vals = [num(v) for v in d] if d is not None else ["", "", ""]
                rows.append([num(float(xi)), num(float(eta)), parity, *vals, rep.classification.value])
    return rows


def cmd_region(a) -> int:
    from .asymptotics import arctic_geometry
    from .render import region_svg

    if a.resolution < 3:
        raise RangeError("resolution must be at least 3")
    geo = arctic_geometry(a.alpha, a.resolution)
    obj = geo.to_json()
    obj["alpha"] = num(a.alpha)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "region.json").write_text(json.dumps(obj) + "\n")
    (out / "region.svg").write_text(region_svg(obj))
    if a.heatmap:
        if a.heatmap < 2:
            raise RangeError("heatmap grid must be at least 2")
        _write_csv(_heatmap_rows(a.alpha, a.heatmap), HEATMAP_HEADER, str(out / "heatmap.csv"))
    print(f"{len(geo.boundary)} boundary curves, {geo.components()} liquid components -> {out}")
    return 0


def cmd_verify(a) -> int:
    from .oracle import MAX_ORACLE_N
    from .verify import oracle_suite

    if a.max_n > MAX_ORACLE_N:
        raise RangeError(f"--max-n is limited to {MAX_ORACLE_N}")
    try:
        alphas = [parse_alpha(s) for s in a.alphas.split(",")]
    except ValueError as e:
        raise RangeError(str(e)) from None
    alphas = [Fraction(v) if isinstance(v, Fraction) else v for v in alphas]
    if not all(isinstance(v, Fraction) for v in alphas):
        raise RangeError("verify needs exact rational alphas")
    checks = oracle_suite(a.max_n, alphas)
    for c in checks:
        print(c.row())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else EXIT_TOLERANCE


def cmd_render(a) -> int:
    from .render import tiling_svg

    try:
        p, alpha = read_tiling(a.tiling)
    except (KeyError, ValueError, json.JSONDecodeError) as e:
        raise RangeError(f"cannot read tiling: {e}") from None
    overlay = json.loads(Path(a.overlay).read_text()) if a.overlay else None
    Path(a.out).write_text(tiling_svg(p, num(alpha), overlay))
    return 0


COMMANDS = {
    "sample": cmd_sample,
    "densities": cmd_densities,
    "kernel": cmd_kernel,
    "region": cmd_region,
    "verify": cmd_verify,
    "render": cmd_render,
}


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if getattr(args, "alpha", None) is not None:
            try:
                args.alpha = parse_alpha(args.alpha)
            except ValueError as e:
                raise RangeError(str(e)) from None
        return COMMANDS[args.command](args)
    except (RangeError, IndexError) as e:
        print(f"hexatile: {e}", file=sys.stderr)
        return EXIT_RANGE
    except ToleranceError as e:
        print(f"hexatile: {e}", file=sys.stderr)
        return EXIT_TOLERANCE
    except FileNotFoundError as e:
        print(f"hexatile: {e}", file=sys.stderr)
        return EXIT_FLAGS


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
