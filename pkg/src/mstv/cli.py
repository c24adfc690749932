"""Command-line front end: denoise, simulate, bench, diagnose.

Every command resolves its configuration the same way: schema defaults,
then a strict JSON config file (unknown keys rejected), then explicit
flags. ``--dump-config`` prints the fully-resolved configuration and
exits; feeding that file back reproduces the run. Exit codes are stable:
0 success, 1 usage or input error, 2 numerical non-convergence (or a
failed diagnostic check).
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    ExperimentSpec,
    check_interpolation,
    estimate_risk,
    interpolation_corpus,
)
from .frames import FrameIndex, make_frame, write_coefficients
from .grid import lq_norm, sup_norm
from .madic import local_means_sup
from .noise import (
    DEFAULT_KAPPA,
    NoiseSpec,
    estimate_pixel_sd,
    observations_from_pixels,
    observe,
)
from .sigio import read_signal, write_signal
from .solver import SolverConfig, solve_frame_constrained_tv
from .svgplot import loglog_risk_svg
from .truths import truth_library

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NONCONVERGED = 2

_WAVELET_FRAME = {"kind": "wavelet", "vanishing_moments": 2}

_SCHEMAS = {
    "denoise": {
        "input": None,
        "sigma": None,
        "estimate_sigma": False,
        "kappa": DEFAULT_KAPPA,
        "n": None,
        "frame": _WAVELET_FRAME,
        "solver": {},
        "out": ".",
        "seed": 202,
        "threads": 1,
    },
    "simulate": {
        "truth": None,
        "truth_params": {},
        "d": 1,
        "grid_side": 256,
        "sigma": 0.5,
        "kappa": DEFAULT_KAPPA,
        "n": None,
        "frame": _WAVELET_FRAME,
        "out": ".",
        "seed": 202,
        "threads": 1,
    },
    "bench": {
        "d": 1,
        "q": 2.0,
        "truth": "step_ramp",
        "truth_params": {},
        "frame": {"vanishing_moments": 2},
        "sigma": 0.5,
        "kappa": DEFAULT_KAPPA,
        "ladder": [1024, 2048, 4096],
        "replicates": 4,
        "estimator": "frame_tv",
        "solver": {},
        "grid_side": None,
        "rof_lambdas": None,
        "out": ".",
        "seed": 202,
        "threads": 1,
    },
    "diagnose": {
        "input": None,
        "corpus": None,
        "d": None,
        "grid_side": None,
        "q": None,
        "n": None,
        "out": ".",
        "seed": 7,
        "threads": 1,
    },
}


class _Parser(argparse.ArgumentParser):
    # the exit-code contract reserves 2 for non-convergence
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _resolve_config(command: str, args) -> dict:
    cfg = copy.deepcopy(_SCHEMAS[command])
    if args.config is not None:
        data = json.loads(Path(args.config).read_text())
        if not isinstance(data, dict):
            raise ValueError(f"{args.config}: config must be a JSON object")
        unknown = sorted(set(data) - set(cfg))
        if unknown:
            raise ValueError(f"{args.config}: unknown config keys {unknown}")
        for key, value in data.items():
            if isinstance(cfg.get(key), dict) and isinstance(value, dict):
                cfg[key] = {**cfg[key], **value}
            else:
                cfg[key] = value
    for key in cfg:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    for key, nested in (("solver_over", "solver"), ("frame_over", "frame")):
        over = getattr(args, key, None)
        if over:
            cfg[nested] = {**cfg.get(nested, {}), **over}
    return cfg


def _dump(cfg: dict) -> int:
    print(json.dumps(cfg, sort_keys=True, indent=2))
    return EXIT_OK


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _frame_for(cfg: dict, d: int):
    params = dict(cfg["frame"])
    kind = params.pop("kind", "wavelet")
    params.pop("d", None)
    return make_frame(kind, d, **params)


# -- commands ----------------------------------------------------------------


def cmd_denoise(args) -> int:
    cfg = _resolve_config("denoise", args)
    if args.dump_config:
        return _dump(cfg)
    if cfg["input"] is None:
        raise ValueError("denoise needs an input signal path")
    signal = read_signal(cfg["input"])
    n = cfg["n"] if cfg["n"] is not None else signal.n_cells
    sigma = cfg["sigma"]
    if sigma is None:
        if not cfg["estimate_sigma"]:
            raise ValueError("missing sigma: pass --sigma or --estimate-sigma")
        moments = cfg["frame"].get("vanishing_moments", 2)
        pixel_sd = estimate_pixel_sd(signal, moments)
        sigma = pixel_sd * math.sqrt(n / signal.n_cells)
        if sigma <= 0:
            raise ValueError("estimated noise level is zero; pass --sigma")
    frame = _frame_for(cfg, signal.d)
    obs = observations_from_pixels(
        signal, frame, NoiseSpec(sigma=sigma, n=n, kappa=cfg["kappa"])
    )
    solver = SolverConfig(**cfg["solver"])
    if solver.linf_bound is None:
        # real data may exceed the theoretical log-n box; widen it
        bound = max(math.log(max(n, 2)), 2.0 * sup_norm(signal))
        solver = dataclasses.replace(solver, linf_bound=bound)
    result = solve_frame_constrained_tv(obs, solver)
    out = _out_dir(cfg)
    estimate_path = out / ("estimate" + Path(cfg["input"]).suffix.lower())
    write_signal(estimate_path, result.estimate)
    report = {
        "input": str(cfg["input"]),
        "estimate_path": str(estimate_path),
        "sigma": sigma,
        "sigma_estimated": cfg["sigma"] is None,
        "kappa": cfg["kappa"],
        "n": n,
        "gamma": obs.gamma,
        "cardinality": obs.plan.cardinality,
        **result.summary_dict(),
    }
    _write_json(out / "report.json", report)
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def cmd_simulate(args) -> int:
    cfg = _resolve_config("simulate", args)
    if args.dump_config:
        return _dump(cfg)
    if cfg["truth"] is None:
        raise ValueError("simulate needs a truth name (--truth)")
    truth, info = truth_library(
        cfg["truth"], cfg["d"], cfg["grid_side"], **cfg["truth_params"]
    )
    n = cfg["n"] if cfg["n"] is not None else truth.n_cells
    frame = _frame_for(cfg, cfg["d"])
    noise = NoiseSpec(sigma=cfg["sigma"], n=n, kappa=cfg["kappa"])
    obs = observe(truth, frame, noise, cfg["seed"], replicate=0)
    out = _out_dir(cfg)
    ext = {1: ".csv", 2: ".pgm", 3: ".tsig"}[cfg["d"]]
    write_signal(out / f"truth{ext}", truth)
    write_signal(out / f"noisy{ext}", obs.pixels)
    write_coefficients(out / "coefficients.csv", obs.coefficients, frame)
    _write_json(
        out / "observation.json",
        {
            "truth": cfg["truth"],
            "truth_params": cfg["truth_params"],
            "d": cfg["d"],
            "grid_side": cfg["grid_side"],
            "n": n,
            "sigma": cfg["sigma"],
            "kappa": cfg["kappa"],
            "seed": cfg["seed"],
            "gamma": obs.gamma,
            "cardinality": obs.plan.cardinality,
            "truth_sup_norm": info.sup_norm,
            "truth_bv_anisotropic": info.bv_anisotropic,
            "frame": obs.frame_params,
        },
    )
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _resolve_config("bench", args)
    if args.dump_config:
        return _dump(cfg)
    spec = ExperimentSpec(
        d=cfg["d"],
        q=cfg["q"],
        truth=cfg["truth"],
        truth_params=dict(cfg["truth_params"]),
        frame_params=dict(cfg["frame"]),
        sigma=cfg["sigma"],
        kappa=cfg["kappa"],
        ladder=tuple(cfg["ladder"]),
        replicates=cfg["replicates"],
        estimator=cfg["estimator"],
        solver=SolverConfig(**cfg["solver"]),
        seed=cfg["seed"],
        grid_side=cfg["grid_side"],
        rof_lambdas=tuple(cfg["rof_lambdas"]) if cfg["rof_lambdas"] else None,
    )
    report = estimate_risk(spec, threads=cfg["threads"])
    out = _out_dir(cfg)
    (out / "bench.csv").write_text(report.to_csv())
    (out / "bench.json").write_text(report.to_json())
    drawable = [
        (p.n, p.mean_risk, p.stderr)
        for p in report.points
        if p.reps > 0 and math.isfinite(p.mean_risk) and p.mean_risk > 0
    ]
    if drawable:
        fit = (report.fit.slope, report.fit.intercept) if report.fit else None
        svg = loglog_risk_svg(
            drawable,
            fit=fit,
            target_slope=report.target,
            title=(
                f"L{cfg['q']:g} risk, d={cfg['d']}, {cfg['estimator']}, "
                f"{cfg['replicates']} reps"
            ),
        )
        (out / "bench.svg").write_text(svg)
    return EXIT_OK


def _diagnose_signal(signal, q, budget, seed_for_corpus=None):
    d, side = signal.d, signal.grid_side
    cells = signal.n_cells
    frame = make_frame("wavelet", d, vanishing_moments=2)

    coeffs = frame.analyze_values(signal.values, cells)
    energy = float(coeffs @ coeffs)
    reference = lq_norm(signal, 2) ** 2
    parseval_err = abs(energy - reference) / max(reference, 1e-300)
    parseval = {
        "status": "pass" if parseval_err < 1e-10 else "fail",
        "relative_error": parseval_err,
    }

    n = budget if budget is not None else max(4, cells // 16)
    constant = frame.jackson_constant(n, side)
    full_sup = frame.besov_sup_norm(signal)
    family = frame.analyze_values(signal.values, n)
    family_sup = float(np.max(np.abs(family))) if family.size else 0.0
    bound = family_sup + constant * sup_norm(signal) / math.sqrt(n)
    jackson = {
        "status": "pass" if full_sup <= bound + 1e-12 else "fail",
        "besov_all_scales": full_sup,
        "family_sup": family_sup,
        "constant": constant,
        "budget": n,
    }

    if not np.any(signal.values):
        interpolation = {"status": "skipped", "reason": "zero signal"}
    else:
        q_eff = q if q is not None else min(2.0, (d + 2) / d if d > 1 else 2.0)
        report = check_interpolation(signal, d, q_eff)
        interpolation = {"status": "pass", **report}

    madic = make_frame("madic", d, m=2)
    lm_sup = local_means_sup(signal, madic, n)
    atom0 = madic.atom(FrameIndex(0, (0,) * d, (0,)), side)
    lm_bound = sup_norm(signal) * lq_norm(atom0, 1)
    local_means = {
        "status": "pass" if lm_sup <= lm_bound + 1e-12 else "fail",
        "sup": lm_sup,
        "holder_bound": lm_bound,
        "budget": n,
    }
    return {
        "parseval": parseval,
        "jackson": jackson,
        "interpolation": interpolation,
        "local_means": local_means,
    }


def cmd_diagnose(args) -> int:
    cfg = _resolve_config("diagnose", args)
    if args.dump_config:
        return _dump(cfg)
    if cfg["input"] is not None:
        signals = [read_signal(cfg["input"])]
        source = {"input": str(cfg["input"])}
    elif cfg["corpus"] is not None:
        if cfg["d"] is None or cfg["grid_side"] is None:
            raise ValueError("corpus mode needs --d and --grid-side")
        signals = list(
            interpolation_corpus(cfg["d"], cfg["corpus"], cfg["grid_side"], cfg["seed"])
        )
        source = {
            "corpus": cfg["corpus"],
            "d": cfg["d"],
            "grid_side": cfg["grid_side"],
            "seed": cfg["seed"],
        }
    else:
        raise ValueError("diagnose needs an input path or --corpus COUNT")

    per_signal = [_diagnose_signal(s, cfg["q"], cfg["n"]) for s in signals]
    checks = {}
    for name in ("parseval", "jackson", "interpolation", "local_means"):
        statuses = [r[name]["status"] for r in per_signal]
        if "fail" in statuses:
            status = "fail"
        elif all(s == "skipped" for s in statuses):
            status = "skipped"
        else:
            status = "pass"
        entry = {"status": status, "signals": len(statuses)}
        if len(per_signal) == 1:
            entry.update(per_signal[0][name])
        checks[name] = entry
    ratios = [
        r["interpolation"]["ratio"]
        for r in per_signal
        if "ratio" in r["interpolation"]
    ]
    if ratios:
        checks["interpolation"]["max_ratio"] = max(ratios)
    all_pass = all(c["status"] != "fail" for c in checks.values())
    out = _out_dir(cfg)
    _write_json(
        out / "diagnose.json", {"source": source, "checks": checks, "all_pass": all_pass}
    )
    return EXIT_OK if all_pass else EXIT_NONCONVERGED


# -- argument wiring ----------------------------------------------------------


def _common_flags(sub):
    sub.add_argument("--config", default=None, help="JSON config file (strict keys)")
    sub.add_argument("--seed", type=int, default=None, help="master seed")
    sub.add_argument("--threads", type=int, default=None, help="replicate worker count")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument(
        "--dump-config",
        action="store_true",
        default=False,
        help="print the resolved config and exit",
    )


def _solver_flags(sub):
    sub.add_argument("--max-iters", type=int, default=None)
    sub.add_argument("--rel-obj-tol", type=float, default=None)
    sub.add_argument("--feas-tol", type=float, default=None)
    sub.add_argument("--tv-flavor", choices=("anisotropic", "isotropic"), default=None)


def _collect_solver(args) -> dict:
    pairs = (
        ("max_iters", getattr(args, "max_iters", None)),
        ("rel_obj_tol", getattr(args, "rel_obj_tol", None)),
        ("feas_tol", getattr(args, "feas_tol", None)),
        ("tv_flavor", getattr(args, "tv_flavor", None)),
    )
    return {k: v for k, v in pairs if v is not None}


def _collect_frame(args) -> dict:
    pairs = (
        ("kind", getattr(args, "frame_kind", None)),
        ("vanishing_moments", getattr(args, "vanishing_moments", None)),
        ("m", getattr(args, "madic_m", None)),
    )
    return {k: v for k, v in pairs if v is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mstv", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    den = commands.add_parser("denoise", help="denoise a signal file")
    den.add_argument("input", nargs="?", default=None)
    den.add_argument("--sigma", type=float, default=None)
    den.add_argument("--estimate-sigma", dest="estimate_sigma", action="store_true",
                     default=None)
    den.add_argument("--kappa", type=float, default=None)
    den.add_argument("--budget", dest="n", type=int, default=None,
                     help="sample budget n (default: cell count)")
    den.add_argument("--frame-kind", choices=("wavelet", "madic"), default=None)
    den.add_argument("--vanishing-moments", type=int, default=None)
    den.add_argument("--madic-m", type=int, default=None)
    _solver_flags(den)
    _common_flags(den)
    den.set_defaults(func=cmd_denoise)

    sim = commands.add_parser("simulate", help="write a seeded synthetic instance")
    sim.add_argument("--truth", default=None)
    sim.add_argument("--d", type=int, default=None)
    sim.add_argument("--grid-side", dest="grid_side", type=int, default=None)
    sim.add_argument("--sigma", type=float, default=None)
    sim.add_argument("--kappa", type=float, default=None)
    sim.add_argument("--budget", dest="n", type=int, default=None)
    sim.add_argument("--frame-kind", choices=("wavelet", "madic"), default=None)
    sim.add_argument("--vanishing-moments", type=int, default=None)
    sim.add_argument("--madic-m", type=int, default=None)
    _common_flags(sim)
    sim.set_defaults(func=cmd_simulate)

    ben = commands.add_parser("bench", help="run a risk ladder and fit the rate")
    ben.add_argument("--d", type=int, default=None)
    ben.add_argument("--q", type=float, default=None)
    ben.add_argument("--truth", default=None)
    ben.add_argument("--sigma", type=float, default=None)
    ben.add_argument("--kappa", type=float, default=None)
    ben.add_argument("--replicates", type=int, default=None)
    ben.add_argument("--estimator", default=None,
                     choices=("frame_tv", "rof_oracle", "wavelet_threshold", "identity"))
    ben.add_argument("--ladder", type=lambda s: [int(v) for v in s.split(",")],
                     default=None, help="comma-separated budgets")
    ben.add_argument("--grid-side", dest="grid_side", type=int, default=None)
    _solver_flags(ben)
    _common_flags(ben)
    ben.set_defaults(func=cmd_bench)

    dia = commands.add_parser("diagnose", help="run frame/norm checks on a signal")
    dia.add_argument("input", nargs="?", default=None)
    dia.add_argument("--corpus", type=int, default=None,
                     help="diagnose a seeded corpus of this many signals")
    dia.add_argument("--d", type=int, default=None)
    dia.add_argument("--grid-side", dest="grid_side", type=int, default=None)
    dia.add_argument("--q", type=float, default=None)
    dia.add_argument("--budget", dest="n", type=int, default=None)
    _common_flags(dia)
    dia.set_defaults(func=cmd_diagnose)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.solver_over = _collect_solver(args)
    args.frame_over = _collect_frame(args)
    try:
        return args.func(args)
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"mstv {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        print(f"mstv {args.command}: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    raise SystemExit(main())
