"""Command-line front end: equilibrium scans, quench series and exact-diagonalization checks.

Exit codes: 0 success, 1 computation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib.metadata import PackageNotFoundError, version
from typing import Callable, Iterable, Sequence

import numpy as np

from .corefuncs import QUAD_TOL, T_MAX, ModelParams, contractions
from .dynamics import dephased_chsh, ergodicity_report, quench_series
from .errors import XYChainError
from .oracle import FiniteChain, correlator, ground_state
from .results import ScanResult
from .threesite import (
    block_entropy,
    mermin_lower_bound,
    mermin_max,
    mermin_upper_bound,
    tensor_from_table,
)
from .twosite import assemble_two_site, chsh_max, concurrence, tensor_from_contractions

CRITICAL_SHIFT = 1e-6
ED_TOLERANCE = 1e-3
ED_MIN_SITES = 4


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def h_grid(h_min: float = 0.0, h_max: float = 3.0, steps: int = 301) -> np.ndarray:
    """Uniform grid in h; a point landing on h = 1 moves to 1 + 1e-6."""
    if steps < 1 or h_max < h_min or (steps > 1 and h_max == h_min):
        raise ValueError("empty h range")
    grid = np.linspace(h_min, h_max, steps)
    grid[np.isclose(grid, 1.0, rtol=0.0, atol=1e-12)] = 1.0 + CRITICAL_SHIFT
    return grid


def _pmap(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _chsh_point(args):
    gamma, h, rs, tol = args
    table = contractions(ModelParams.at_equilibrium(gamma, h), max(rs), tol=tol)
    out = []
    for R in rs:
        tensor = tensor_from_contractions(R, table)
        out.append(
            {
                "gamma": gamma,
                "h": h,
                "R": R,
                "chsh_max": chsh_max(tensor),
                "concurrence": concurrence(assemble_two_site(tensor)),
                "mz": 0.5 * tensor.tz,
                "t_xy": tensor.txy,
            }
        )
    return out


def _mermin_point(args):
    gamma, h, configs, tol, starts = args
    reach = max(a + b for a, b in configs)
    table = contractions(ModelParams.at_equilibrium(gamma, h), reach, tol=tol)
    g0 = table.G(0)
    s_vn = block_entropy(ModelParams.at_equilibrium(gamma, h), tol=tol)
    out = []
    for a, b in configs:
        tensor = tensor_from_table(a, b, table)
        out.append(
            {
                "gamma": gamma,
                "h": h,
                "a": a,
                "b": b,
                "mermin_max": mermin_max(tensor, random_starts=starts),
                "mermin_lb": mermin_lower_bound(tensor),
                "mermin_ub": mermin_upper_bound(tensor),
                "s_vn": s_vn,
                "mz": 0.5 * g0,
            }
        )
    return out


def _flatten(chunks: Iterable[list]) -> list:
    return [row for chunk in chunks for row in chunk]


def cmd_chsh_scan(
    gammas: Sequence[float],
    hs: Sequence[float],
    rs: Sequence[int],
    tol: float = QUAD_TOL,
    workers: int = 1,
) -> ScanResult:
    rs = sorted(set(rs))
    if not rs or rs[0] < 1:
        raise ValueError("separations must be >= 1")
    items = [(float(g), float(h), rs, tol) for g in gammas for h in hs]
    rows = _flatten(_pmap(_chsh_point, items, workers))
    meta = {
        "command": "chsh-scan",
        "parameters": {"gamma": list(gammas), "h": [float(h) for h in hs], "R": rs},
        "version": tool_version(),
        "tolerances": {"quadrature": tol},
    }
    cols = ["gamma", "h", "R", "chsh_max", "concurrence", "mz", "t_xy"]
    return ScanResult(meta, cols, rows)


def cmd_mermin_scan(
    gammas: Sequence[float],
    hs: Sequence[float],
    configs: Sequence[tuple[int, int]],
    tol: float = QUAD_TOL,
    workers: int = 1,
    starts: int = 128,
) -> ScanResult:
    configs = [tuple(c) for c in configs]
    if not configs or any(a < 1 or b < 1 for a, b in configs):
        raise ValueError("configurations need a, b >= 1")
    items = [(float(g), float(h), configs, tol, starts) for g in gammas for h in hs]
    rows = _flatten(_pmap(_mermin_point, items, workers))
    meta = {
        "command": "mermin-scan",
        "parameters": {
            "gamma": list(gammas),
            "h": [float(h) for h in hs],
            "configs": [list(c) for c in configs],
            "random_starts": starts,
        },
        "version": tool_version(),
        "tolerances": {"quadrature": tol},
    }
    cols = ["gamma", "h", "a", "b", "mermin_max", "mermin_lb", "mermin_ub", "s_vn", "mz"]
    return ScanResult(meta, cols, rows)


def cmd_quench(
    gamma: float,
    h0: float,
    hf: float,
    t_max: float,
    samples: int,
    tol: float = QUAD_TOL,
    tail_fraction: float = 0.5,
) -> ScanResult:
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if not 0 < t_max <= T_MAX:
        raise ValueError(f"t-max must lie in (0, {T_MAX:g}]")
    params = ModelParams(gamma=gamma, h0=h0, hf=hf)
    series = quench_series(params, np.linspace(0.0, t_max, samples), tol=tol)
    rows = [
        {"t": r.t, "chsh_max": r.chsh_max, "concurrence": r.concurrence, "mz": r.mz, "t_xy": r.t_xy}
        for r in series.records()
    ]
    meta = {
        "command": "quench",
        "parameters": {"gamma": gamma, "h0": h0, "hf": hf, "t_max": t_max, "samples": samples},
        "version": tool_version(),
        "tolerances": {"quadrature": tol},
    }
    try:
        rep = ergodicity_report(series, tail_fraction, tol=tol)
        meta["ergodicity"] = {
            "time_average": rep.time_average,
            "equilibrium_value": rep.equilibrium_value,
            "gap": rep.gap,
            "tail_start": rep.tail_start,
            "tail_samples": rep.tail_samples,
            "dephased_value": dephased_chsh(params, tol=tol),
        }
    except XYChainError as exc:
        meta["ergodicity"] = {"skipped": str(exc)}
    return ScanResult(meta, ["t", "chsh_max", "concurrence", "mz", "t_xy"], rows)


def _ed_rows(n: int, gamma: float, h: float, tol: float) -> list[dict]:
    state = ground_state(FiniteChain(n, gamma, h))
    table = contractions(ModelParams.at_equilibrium(gamma, h), 4)
    rows = []

    def add(kind, where, label, ed, exact):
        diff = abs(ed - exact)
        rows.append(
            {
                "kind": kind,
                "sites": where,
                "correlator": label,
                "ed": ed,
                "exact": exact,
                "abs_diff": diff,
                "tolerance": tol,
                "pass": bool(diff <= tol),
            }
        )

    add("one-site", "0", "z", correlator(state, {0: "z"}), table.G(0))
    for R in (1, 2):
        t = tensor_from_contractions(R, table)
        for label, exact in (("xx", t.txx), ("yy", t.tyy), ("zz", t.tzz)):
            add("two-site", f"0-{R}", label, correlator(state, {0: label[0], R: label[1]}), exact)
    for a, b in ((1, 1), (1, 2), (2, 2)):
        t = tensor_from_table(a, b, table)
        sites = (0, a, a + b)
        for label, exact in zip(("xxz", "xzx", "zxx", "zzz"), t.components()):
            ed = correlator(state, dict(zip(sites, label)))
            add("three-site", "-".join(map(str, sites)), label, ed, float(exact))
    return rows


def cmd_ed_check(n: int, gamma: float, h: float, tol: float = ED_TOLERANCE) -> ScanResult:
    if not ED_MIN_SITES <= n <= 14:
        raise ValueError(f"n must lie in [{ED_MIN_SITES}, 14]")
    rows = _ed_rows(n, gamma, h, tol)
    meta = {
        "command": "ed-check",
        "parameters": {"n": n, "gamma": gamma, "h": h},
        "version": tool_version(),
        "tolerances": {"comparison": tol},
        "all_pass": all(r["pass"] for r in rows),
    }
    cols = ["kind", "sites", "correlator", "ed", "exact", "abs_diff", "tolerance", "pass"]
    return ScanResult(meta, cols, rows)


def _config(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a,b got {text!r}") from None
    return a, b


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xychain", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=tool_version())
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol_default, tol_help):
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", default="-", help="output path ('-' writes to stdout)")
        sp.add_argument("--tolerance", type=float, default=tol_default, help=tol_help)

    def grid(sp):
        sp.add_argument("--gamma", type=float, action="append", help="anisotropy, repeatable")
        sp.add_argument("--h-min", type=float, default=0.0)
        sp.add_argument("--h-max", type=float, default=3.0)
        sp.add_argument("--h-steps", type=int, default=301)
        sp.add_argument("--workers", type=int, default=1)

    quad_help = "absolute quadrature tolerance"
    sp = sub.add_parser("chsh-scan", help="equilibrium CHSH maximum and concurrence versus h")
    grid(sp)
    sp.add_argument("--r", type=int, action="append", help="separation, repeatable (default 1)")
    common(sp, QUAD_TOL, quad_help)

    sp = sub.add_parser("mermin-scan", help="equilibrium Mermin maximum, bounds and entropy versus h")
    grid(sp)
    sp.add_argument("--config", type=_config, action="append", help="a,b separations, repeatable")
    sp.add_argument("--starts", type=int, default=128, help="random optimizer starts")
    common(sp, QUAD_TOL, quad_help)

    sp = sub.add_parser("quench", help="nearest-neighbour measures after a field quench")
    sp.add_argument("--gamma", type=float, default=0.5)
    sp.add_argument("--h0", type=float, default=0.5)
    sp.add_argument("--hf", type=float, default=0.0)
    sp.add_argument("--t-max", type=float, default=T_MAX)
    sp.add_argument("--samples", type=int, default=4001)
    common(sp, QUAD_TOL, quad_help)

    sp = sub.add_parser("ed-check", help="exact diagonalization versus infinite-chain correlators")
    sp.add_argument("--n", type=int, default=12)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--h", type=float, default=0.5)
    common(sp, ED_TOLERANCE, "allowed absolute difference")
    return p


def _emit(result: ScanResult, out: str, fmt: str) -> None:
    if out == "-":
        sys.stdout.write(result.to_json() if fmt == "json" else result.to_csv())
    else:
        result.write(out, fmt)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("chsh-scan", "mermin-scan"):
            try:
                hs = h_grid(args.h_min, args.h_max, args.h_steps)
            except ValueError as exc:
                parser.error(str(exc))
            gammas = args.gamma or [0.5]
            if any(not 0.0 <= g <= 1.0 for g in gammas) or args.h_min < 0:
                parser.error("gamma must lie in [0, 1] and h must be non-negative")
            if args.workers < 1:
                parser.error("--workers must be >= 1")
            if args.command == "chsh-scan":
                rs = args.r or [1]
                if min(rs) < 1:
                    parser.error("--r must be >= 1")
                result = cmd_chsh_scan(gammas, hs, rs, args.tolerance, args.workers)
            else:
                configs = args.config or [(1, 1), (1, 2), (2, 2)]
                if min(min(c) for c in configs) < 1:
                    parser.error("--config entries must be >= 1")
                result = cmd_mermin_scan(gammas, hs, configs, args.tolerance, args.workers, args.starts)
        elif args.command == "quench":
            if not 0.0 <= args.gamma <= 1.0 or min(args.h0, args.hf) < 0:
                parser.error("gamma must lie in [0, 1] and fields must be non-negative")
            if args.samples < 2:
                parser.error("--samples must be at least 2")
            if not 0 < args.t_max <= T_MAX:
                parser.error(f"--t-max must lie in (0, {T_MAX:g}]")
            result = cmd_quench(args.gamma, args.h0, args.hf, args.t_max, args.samples, args.tolerance)
        else:
            if not ED_MIN_SITES <= args.n <= 14:
                parser.error(f"--n must lie in [{ED_MIN_SITES}, 14]")
            if not 0.0 <= args.gamma <= 1.0 or args.h < 0:
                parser.error("gamma must lie in [0, 1] and h must be non-negative")
            result = cmd_ed_check(args.n, args.gamma, args.h, args.tolerance)
        _emit(result, args.out, args.format)
    except (XYChainError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"xychain: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"xychain: cannot write output: {exc}", file=sys.stderr)
        return 1
    if result.metadata.get("all_pass") is False:
        failed = sum(not r["pass"] for r in result.rows)
        print(f"xychain: {failed} ed-check rows exceed tolerance {args.tolerance:g}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
