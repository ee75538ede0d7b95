"""Command-line front end: one subcommand per experiment, deterministic CSV/JSON output."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .config import Param, config_hash, read_config_file, resolve
from .errors import ArgumentError, ConfigError, KdqiError
from .seeding import SEED_RULE, derive_seed

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


@dataclass
class Output:
    rows: list[list[Any]]
    summary: dict = field(default_factory=dict)
    extra: dict[str, list[list[Any]]] = field(default_factory=dict)  # suffix -> rows
    message: str | None = None
    ok: bool = True


def _fmt(v: Any) -> Any:
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return v


def _csv(rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _parse_csv_text(text: str) -> list[list[str]]:
    return [r for r in csv.reader(io.StringIO(text))]


def _noise(v: dict, seed: int):
    from .noise import NoiseModel
    return NoiseModel(v["eta"], v["w"], v["tau"], derive_seed(seed, "mixing"))


# subcommands


def cmd_opi_scan(v: dict, seed: int, threads: int) -> Output:
    from .opi import OpiInstance, theta_scan
    m = v["m"] or v["p"]
    inst = OpiInstance.contiguous(v["p"], m, v["a"], v["b"], v["c"])
    hi = v["theta_max"] if v["theta_max"] is not None else float(v["p"])
    grid = np.linspace(v["theta_min"], hi, v["theta_steps"])
    tab = theta_scan(inst, grid, _noise(v, seed), v["d"], v["threshold"])
    summary = tab.summary()
    return Output(_parse_csv_text(tab.csv_text()), summary,
                  message=f"argmax theta {summary['argmax']:.6g}, peak {summary['peak']:.6g}, "
                          f"width {summary['peak_width']:.6g}")


def cmd_de_map(v: dict, seed: int, threads: int) -> Output:
    from .ldpc import BlaParams, LdpcEnsemble, bla_shift, de_map, de_map_deriv
    ens = LdpcEnsemble(v["dv"], v["dc"])
    xs = np.linspace(0.0, 1.0, v["points"])
    rows = [["dsigma", "eps_eff", "x", "phi", "dphi", "phi_minus_x"]]
    for ds in v["dsigma"]:
        e = bla_shift(v["eps"], BlaParams(v["kappa"], ds))
        phi, dphi = de_map(ens, e, xs), de_map_deriv(ens, e, xs)
        for x, f, df in zip(xs, phi, dphi):
            rows.append([ds, e, x, f, df, f - x])
    return Output(rows, {"ensemble": [v["dv"], v["dc"]], "eps": v["eps"], "dsigma": list(v["dsigma"])})


def _ensembles(v: dict) -> list[tuple[int, int]]:
    if v["dv"] is not None or v["dc"] is not None:
        if v["dv"] is None or v["dc"] is None:
            raise ArgumentError("give both --dv and --dc")
        return [(v["dv"], v["dc"])]
    out = []
    for item in v["ensembles"].split(","):
        a, b = item.split(":")
        out.append((int(a), int(b)))
    return out


def cmd_de_threshold(v: dict, seed: int, threads: int) -> Output:
    from .ldpc import LdpcEnsemble, de_threshold
    rows = [["d_v", "d_c", "rate", "eps_star", "x_star"]]
    found = []
    for dv, dc in _ensembles(v):
        ens = LdpcEnsemble(dv, dc)
        th = de_threshold(ens, tol=v["tol"])
        rows.append([dv, dc, ens.rate, th.eps_star, th.x_star])
        found.append(f"({dv},{dc}) eps* = {th.eps_star:.6f}")
    return Output(rows, {"thresholds": [dict(zip(rows[0], r)) for r in rows[1:]]}, message="\n".join(found))


_FER_GRIDS = {
    "bec": (0.30, 0.35, 0.40, 0.42, 0.44, 0.47),
    "bsc": (0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10),
    "awgn": (0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8),
}


def cmd_bp_fer(v: dict, seed: int, threads: int) -> Output:
    from .ldpc import LdpcEnsemble, build_code, fer_scan
    kind = v["channel"].lower()
    if kind not in _FER_GRIDS:
        raise ArgumentError(f"unknown channel {v['channel']!r}")
    grid = v["grid"] or _FER_GRIDS[kind]
    code = build_code(LdpcEnsemble(v["dv"], v["dc"]), v["n"], seed=derive_seed(seed, "code") % 2**32)
    tab = fer_scan(code, kind, grid, v["trials"], seed=seed, max_iters=v["max_iters"], threads=threads)
    rows = list(tab.csv_rows())
    rows = [["channel"] + rows[0]] + [[kind] + r for r in rows[1:]]
    mid = tab.waterfall_midpoint()
    return Output(rows, {"channel": kind, "n": v["n"], "waterfall_midpoint": mid},
                  message=f"{kind} waterfall midpoint: {mid if mid is None else f'{mid:.6g}'}")


def cmd_landscape(v: dict, seed: int, threads: int) -> Output:
    from .noise import NoiseModel
    from .opi import OpiInstance
    from .variational import (Ansatz, OptimizerConfig, default_grid, far_inits, grid_max,
                              landscape_csv, landscape_scan, optimize)
    ansatz = Ansatz(OpiInstance.full(v["p"], v["a"], v["b"], v["c"]), reduced=v["reduced"])
    nm = NoiseModel(v["eta"])
    g1, g2 = default_grid(ansatz, v["n1"], v["n2"])
    pts = landscape_scan(ansatz, g1, g2, nm, v["d"], v["shots"], seed, v["h"])
    if v["init_theta1"] is not None and v["init_theta2"] is not None:
        init = (v["init_theta1"], v["init_theta2"])
    else:
        init = far_inits(ansatz, nm, v["d"], 1, seed=seed)[0]
    cfg = OptimizerConfig(v["gradient"], v["h"], v["lr"], v["decay"], v["step_rule"])
    traj = optimize(ansatz, nm, v["d"], init, v["shots"], v["iters"], seed, cfg)
    gmax = grid_max(ansatz, nm, v["d"])
    summary = {"grid_max": gmax, "init": list(init), "best": traj.best, "final": list(traj.final),
               "iterations_to_target": traj.iterations_to(gmax - 0.05)}
    return Output(_parse_csv_text(landscape_csv(pts)), summary,
                  extra={"trajectory": _parse_csv_text(traj.csv_text())},
                  message=f"grid max {gmax:.6g}, best after {v['iters']} iterations {traj.best:.6g}")


def cmd_headmass(v: dict, seed: int, threads: int) -> Output:
    from .headmass import kernel_head_mass
    from .opi import OpiInstance, opi_shaped_state, scan_kernel
    inst = OpiInstance.contiguous(v["p"], v["m"] or v["p"], v["a"], v["b"], v["c"])
    theta = v["theta"] if v["theta"] is not None else float(inst.h_coeffs[0])
    rep = kernel_head_mass(opi_shaped_state(inst), scan_kernel(inst, theta), _noise(v, seed), v["d"])
    d = rep.to_dict()
    head = " ".join(str(i) for i in d.pop("head"))
    rows = [["theta", "head"] + list(d), [theta, head] + list(d.values())]
    return Output(rows, {"theta": theta, **rep.to_dict()},
                  message=f"sigma_K {rep.sigma_K:.6g}, effective head {rep.effective_head:.6g}")


def cmd_audit(v: dict, seed: int, threads: int) -> Output:
    from .headmass import LdpcDe, RsThreshold, ldpc_audit, monotonicity_audit
    from .ldpc import LdpcEnsemble
    from .opi import OpiInstance, opi_shaped_state, scan_kernel
    if v["family"] == "opi":
        inst = OpiInstance.full(v["p"], v["a"], v["b"], v["c"])
        a = inst.h_coeffs[0]
        lo = v["theta_min"] if v["theta_min"] is not None else a - 0.5
        hi = v["theta_max"] if v["theta_max"] is not None else a + 0.5
        grid = np.linspace(lo, hi, v["kernels"])
        rep = monotonicity_audit([scan_kernel(inst, g) for g in grid], opi_shaped_state(inst), _noise(v, seed),
                                 v["d"], RsThreshold(v["threshold"]), labels=[f"theta={g:.12g}" for g in grid])
    elif v["family"] == "ldpc":
        resp = LdpcDe(LdpcEnsemble(v["dv"], v["dc"]), v["kappa"], v["eps"], v["sigma_I"] - v["delta_w"])
        rep = ldpc_audit(v["sigma_I"], v["eta_min"], v["delta_w"], v["dsigma"], resp)
    else:
        raise ArgumentError(f"unknown audit family {v['family']!r}")
    summary = rep.to_dict()
    summary.pop("rows")
    return Output(_parse_csv_text(rep.csv_text()), summary,
                  message=f"{len(rep.violations)} violating pairs, {len(rep.strict_gains)} strict gains")


def cmd_cost_frontier(v: dict, seed: int, threads: int) -> Output:
    from .cost import QuadraticPhaseInstance, frontier_table
    from .noise import NoiseModel
    insts = [QuadraticPhaseInstance.random(v["p"], v["m"], seed, i) for i in range(v["instances"])]
    tab = frontier_table(insts, NoiseModel(v["eta"]), v["d"], v["b"], v["mistuned"], v["ell"], seed)
    labels = ("baseline", "mistuned_global", "block_local", "tuned_global")
    summary = {l: {"relative_depth": tab.relative_depth(l), "mean_gain": tab.mean_gain(l)} for l in labels}
    return Output(_parse_csv_text(tab.csv_text()), summary)


def cmd_cost_scaling(v: dict, seed: int, threads: int) -> Output:
    from .cost import DEFAULT_N_GRID, scaling_table
    tab = scaling_table(v["ns"] or DEFAULT_N_GRID, v["b"], v["ell"])
    slopes = {k: tab.slope(k) for k in tab.depths}
    return Output(_parse_csv_text(tab.csv_text()), {"slopes": slopes},
                  message=" ".join(f"{k} slope {s:.4f}" for k, s in slopes.items()))


def cmd_selftest(v: dict, seed: int, threads: int) -> Output:
    from .selftest import run_selftest
    res = run_selftest()
    rows = [["check", "ok", "detail"]] + [[r.name, r.ok, r.detail] for r in res]
    failed = [r.name for r in res if not r.ok]
    return Output(rows, {"passed": len(res) - len(failed), "failed": failed}, ok=not failed,
                  message=f"{len(res) - len(failed)}/{len(res)} checks passed")


_INSTANCE = [
    Param("p", "int", 31, "prime modulus"),
    Param("a", "int", 5, "quadratic coefficient"),
    Param("b", "int", 11, "linear coefficient"),
    Param("c", "int", 2, "constant coefficient"),
]
_NOISE = [
    Param("eta", "float", 0.1, "local depolarizing rate"),
    Param("w", "int", 0, "mixing width"),
    Param("tau", "float", 1.0, "uniform transmittance"),
]


@dataclass
class Command:
    name: str
    run: Callable[[dict, int, int], Output]
    params: list[Param]
    help: str


COMMANDS = [
    Command("opi-scan", cmd_opi_scan, _INSTANCE + _NOISE + [
        Param("m", "int", None, "contiguous evaluation subset size (default p)"),
        Param("theta_min", "float", 0.0, ""), Param("theta_max", "float", None, "default p"),
        Param("theta_steps", "int", 3101, ""), Param("d", "int", 1, "head size"),
        Param("threshold", "float", 0.7, "decoding threshold line"),
    ], "chirp-rate scan of the noise-weighted head mass"),
    Command("de-map", cmd_de_map, [
        Param("dv", "int", 3, ""), Param("dc", "int", 6, ""), Param("eps", "float", 0.44, "erasure rate"),
        Param("kappa", "float", 1.0, ""), Param("dsigma", "floats", (0.0, 0.02, 0.04, 0.06), "local gains"),
        Param("points", "int", 201, ""),
    ], "density-evolution map, derivative and shifted family"),
    Command("de-threshold", cmd_de_threshold, [
        Param("dv", "int", None, ""), Param("dc", "int", None, ""),
        Param("ensembles", "str", "3:6,4:8,5:10", "dv:dc list used without --dv/--dc"),
        Param("tol", "float", 1e-6, "bisection tolerance"),
    ], "BEC belief-propagation thresholds"),
    Command("bp-fer", cmd_bp_fer, [
        Param("channel", "str", "bsc", "bec, bsc or awgn"), Param("n", "int", 2048, "block length"),
        Param("dv", "int", 3, ""), Param("dc", "int", 6, ""), Param("grid", "floats", None, "channel grid"),
        Param("trials", "int", 1000, "frames per point"), Param("max_iters", "int", 100, ""),
    ], "finite-length frame error rates"),
    Command("landscape", cmd_landscape, _INSTANCE + [
        Param("eta", "float", 0.1, ""), Param("shots", "int", 5000, ""), Param("d", "int", 1, ""),
        Param("n1", "int", 41, "theta1 grid points"), Param("n2", "int", 41, "theta2 grid points"),
        Param("reduced", "bool", True, "reduced chirp generator"),
        Param("h", "float", 0.02, "finite-difference step"), Param("lr", "float", 0.3, ""),
        Param("decay", "str", "sqrt", ""), Param("step_rule", "str", "plain", ""),
        Param("gradient", "str", "central", "central or spsa"), Param("iters", "int", 40, ""),
        Param("init_theta1", "float", None, ""), Param("init_theta2", "float", None, ""),
    ], "two-parameter landscape and one optimizer trajectory"),
    Command("headmass", cmd_headmass, _INSTANCE + _NOISE + [
        Param("m", "int", None, ""), Param("theta", "float", None, "chirp rate (default a)"),
        Param("d", "int", 1, ""),
    ], "head-mass report for one kernel"),
    Command("audit-monotone", cmd_audit, _INSTANCE + _NOISE + [
        Param("family", "str", "opi", "opi or ldpc"), Param("kernels", "int", 50, "chirps in the opi grid"),
        Param("theta_min", "float", None, ""), Param("theta_max", "float", None, ""),
        Param("d", "int", 1, ""), Param("threshold", "float", 0.7, ""),
        Param("dv", "int", 3, ""), Param("dc", "int", 6, ""), Param("kappa", "float", 1.0, ""),
        Param("eps", "float", 0.44, ""), Param("sigma_I", "float", 0.5, ""), Param("eta_min", "float", 0.9, ""),
        Param("delta_w", "float", 0.01, ""), Param("dsigma", "floats", (0.0, 0.02, 0.04, 0.06), ""),
    ], "response-vs-head-mass ordering audit"),
    Command("cost-frontier", cmd_cost_frontier, [
        Param("p", "int", 5, ""), Param("m", "int", 4, "digits"), Param("b", "int", 2, "block width in digits"),
        Param("instances", "int", 5, ""), Param("eta", "float", 0.1, ""), Param("d", "int", 1, ""),
        Param("mistuned", "int", 2, "mis-tuned kernels per instance"), Param("ell", "int", 2, "shaping degree"),
    ], "relative depth vs head-mass gain"),
    Command("cost-scaling", cmd_cost_scaling, [
        Param("ns", "ints", None, "qubit grid"), Param("b", "int", 8, ""), Param("ell", "int", 2, ""),
    ], "depth scaling and log-log slopes"),
    Command("selftest", cmd_selftest, [], "fast invariant suite"),
]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


_ARG_TYPES = {"int": int, "float": float, "str": str}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kdqi", description=__doc__)
    parser.add_argument("--version", action="version", version=f"kdqi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd.name, help=cmd.help)
        sp.add_argument("--config", help="flat key = value file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (env KDQI_THREADS)")
        for p in cmd.params:
            flag = "--" + p.name.replace("_", "-")
            if p.kind in _ARG_TYPES:
                sp.add_argument(flag, dest=p.name, type=_ARG_TYPES[p.kind], default=None, help=p.help)
            else:
                sp.add_argument(flag, dest=p.name, type=p.parse, default=None, help=p.help)
    return parser


def provenance(command: str, chash: str, seed: int) -> list[str]:
    return [
        f"# kdqi {__version__}",
        f"# command: {command}",
        f"# config_hash: {chash}",
        f"# seed: {seed}",
        f"# seed_rule: {SEED_RULE}",
    ]


def _render(fmt: str, header: list[str], rows: list[list[Any]], summary: dict, command: str, chash: str,
            seed: int) -> str:
    if fmt == "json":
        cols, body = (rows[0], rows[1:]) if rows else ([], [])
        doc = {"provenance": {"tool": f"kdqi {__version__}", "command": command, "config_hash": chash,
                              "seed": seed, "seed_rule": SEED_RULE},
               "summary": summary, "columns": cols, "rows": [[_fmt(v) for v in r] for r in body]}
        return json.dumps(doc, sort_keys=True, indent=1, default=_json_default) + "\n"
    return "\n".join(header) + "\n" + _csv(rows)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.ndarray, tuple)):
        return list(o)
    if isinstance(o, float) and not math.isfinite(o):
        return None
    raise TypeError(type(o).__name__)


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(f"{path.stem}.{suffix}{path.suffix}")


def _write_all(files: dict[Path, str]) -> None:
    """Write every file via a temporary name; on any failure remove what was written."""
    done: list[Path] = []
    try:
        for path, text in files.items():
            tmp = path.with_name(path.name + ".partial")
            done.append(tmp)
            with open(tmp, "w", newline="\n") as fh:
                fh.write(text)
        for path in files:
            os.replace(path.with_name(path.name + ".partial"), path)
    except BaseException:
        for tmp in done:
            tmp.unlink(missing_ok=True)
        for path in files:
            path.unlink(missing_ok=True)
        raise


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cmd = next(c for c in COMMANDS if c.name == args.command)
        file_values = read_config_file(args.config) if args.config else {}
        values = resolve(cmd.params, file_values, {p.name: getattr(args, p.name) for p in cmd.params})
        seed = args.seed if args.seed is not None else int(file_values.get("seed", 0))
        env_threads = os.environ.get("KDQI_THREADS")
        threads = args.threads if args.threads is not None else int(env_threads) if env_threads else 1
        if threads < 1:
            raise ConfigError("threads must be positive")
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except (ConfigError, ValueError) as exc:
        print(f"kdqi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    chash = config_hash(cmd.name, values, seed)
    header = provenance(cmd.name, chash, seed)
    try:
        result = cmd.run(values, seed, threads)
        texts = {"": _render(args.format, header, result.rows, result.summary, cmd.name, chash, seed)}
        for suffix, rows in result.extra.items():
            texts[suffix] = _render(args.format, header + [f"# table: {suffix}"], rows, {}, cmd.name, chash, seed)
        if args.out:
            out = Path(args.out)
            _write_all({(out if not s else _sibling(out, s)): t for s, t in texts.items()})
            if result.message:
                print(result.message)
        else:
            sys.stdout.write("\n".join(texts.values()))
            if result.message:
                print(result.message, file=sys.stderr)
    except (ArgumentError, ConfigError) as exc:
        print(f"kdqi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KdqiError, ArithmeticError, RuntimeError, OSError, ValueError) as exc:
        print(f"kdqi: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK if result.ok else EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
