"""Command-line front end: subcommands, config files, deterministic runs.

Every subcommand writes a JSON sidecar next to its output recording the
fully resolved configuration (defaults filled in) plus the package
version, so a run can be reproduced later with ``--config sidecar``.
Exit codes: 0 on success, 1 on a usage error (the message names the
offending flag), 2 when a module raises at runtime (the error text is
printed as-is).

Randomness is reproducibility-first: subcommands that sample fields
require ``--seed`` unless ``--entropy`` is passed, in which case a seed
is drawn once, printed, and recorded in the sidecar.
"""

from __future__ import annotations

import argparse
import csv
import json
import secrets
import sys

import numpy as np

from . import __version__, field, fourarm, invasion, mc, percolation, weights
from .errors import CritFppError
from .field import mix_seed

USAGE_EXIT = 1
RUNTIME_EXIT = 2
MAX_EXPONENT = 16


class UsageError(Exception):
    """Bad flag value or combination; carries the flag name when known."""

    def __init__(self, flag: str | None, message: str):
        self.flag = flag
        self.message = message
        super().__init__(f"{flag}: {message}" if flag else message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse API
        raise UsageError(None, message)


# ---------------------------------------------------------------------------
# Flag value parsers
# ---------------------------------------------------------------------------


def _parse_exp_range(text: str) -> list[int]:
    """'2:9' -> [2..9]; a bare '9' -> [9]."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            lo = hi = int(parts[0])
        elif len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise UsageError("--n-exp", f"expected 'a' or 'a:b', got {text!r}")
    if lo > hi:
        raise UsageError("--n-exp", f"empty range {text!r}")
    if lo < 0 or hi > MAX_EXPONENT:
        raise UsageError("--n-exp", f"exponents must lie in 0..{MAX_EXPONENT}")
    return list(range(lo, hi + 1))


def _parse_radii(text: str) -> list[int]:
    """Comma-separated radii, each a power of two, mapped to exponents."""
    exps = []
    for piece in text.split(","):
        try:
            n = int(piece)
        except ValueError:
            raise UsageError("--n", f"not an integer: {piece!r}")
        if n < 1 or n & (n - 1):
            raise UsageError(
                "--n",
                f"radius {n} is not a power of two; every scale contract "
                "here is dyadic (use --n-exp for exponents)",
            )
        exps.append(n.bit_length() - 1)
    if not exps:
        raise UsageError("--n", "no radii given")
    return exps


def _parse_point(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError("--x", f"expected 'dx,dy', got {text!r}")
    try:
        return (int(parts[0]), int(parts[1]))
    except ValueError:
        raise UsageError("--x", f"coordinates must be integers: {text!r}")


def _parse_dist(token: str) -> weights.CriticalDistribution:
    try:
        return weights.parse_distribution(token)
    except ValueError as e:
        raise UsageError("--dist", str(e))


def _require(resolved: dict, key: str, flag: str):
    if resolved.get(key) is None:
        raise UsageError(flag, "required (or supply it via --config)")
    return resolved[key]


def _fmt(x: float) -> str:
    return f"{x:.6g}"


# ---------------------------------------------------------------------------
# Config resolution and sidecar
# ---------------------------------------------------------------------------


def _load_config(path: str, defaults: dict) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as e:
        raise UsageError("--config", str(e))
    except json.JSONDecodeError as e:
        raise UsageError("--config", f"{path}: {e}")
    body = raw.get("config", raw) if isinstance(raw, dict) else None
    if not isinstance(body, dict):
        raise UsageError("--config", f"{path}: expected a JSON object")
    unknown = sorted(set(body) - set(defaults))
    if unknown:
        raise UsageError("--config", f"unknown keys {unknown} for this subcommand")
    return body


def _resolve(defaults: dict, config_path: str | None, cli: dict) -> dict:
    resolved = dict(defaults)
    if config_path:
        resolved.update(_load_config(config_path, defaults))
    resolved.update({k: v for k, v in cli.items() if v is not None})
    return resolved


def _settle_seed(resolved: dict, entropy: bool) -> dict:
    if resolved.get("seed") is None:
        if not entropy:
            raise UsageError("--seed", "required (pass --entropy to draw one)")
        resolved["seed"] = secrets.randbits(63)
        print(f"seed drawn from entropy: {resolved['seed']}")
    seed = resolved["seed"]
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise UsageError("--seed", "must be an integer in [0, 2^64)")
    return resolved


def _sidecar_path(resolved: dict, subcommand: str) -> str:
    if resolved.get("sidecar"):
        return resolved["sidecar"]
    out = resolved.get("out")
    if out:
        stem = out[: -len(".csv")] if out.endswith(".csv") else out
        stem = stem[: -len(".json")] if stem.endswith(".json") else stem
        return stem + ".config.json"
    return f"{subcommand}.config.json"


def _write_sidecar(subcommand: str, resolved: dict) -> str:
    path = _sidecar_path(resolved, subcommand)
    resolved = dict(resolved)
    resolved["sidecar"] = path
    doc = {
        "artifact": "critfpp",
        "version": __version__,
        "subcommand": subcommand,
        "config": resolved,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Subcommand: criterion
# ---------------------------------------------------------------------------

CRITERION_DEFAULTS = {"dist": None, "kmax": 40, "out": None, "sidecar": None}


def _add_criterion(sub):
    p = sub.add_parser(
        "criterion",
        help="classify a weight family: bounded or diverging passage time",
        description="Partial sums of the quantile series and the verdict.",
    )
    p.add_argument("--dist", help="distribution token, e.g. bernoulli, fa:a=1, gb:b=1")
    p.add_argument("--kmax", type=int, help="series terms k = 2..kmax (default: 40)")
    p.add_argument("--out", help="write the report as JSON here (default: none)")
    _add_plumbing(p)


def _run_criterion(resolved: dict, record) -> int:
    d = _parse_dist(_require(resolved, "dist", "--dist"))
    kmax = resolved["kmax"]
    if kmax < 2:
        raise UsageError("--kmax", "need at least the k = 2 term")
    record()
    report = weights.series_criterion(d, k_max=kmax)
    for i, s in enumerate(report.partial_sums):
        print(f"k={i + 2:3d}  partial_sum={_fmt(s)}")
    tail = (
        f"  tail_exponent={_fmt(report.tail_exponent)}"
        if report.tail_exponent is not None
        else ""
    )
    print(f"classification: {report.classification}  (method: {report.method}{tail})")
    if resolved["out"]:
        _write_json(
            resolved["out"],
            {
                "dist": d.to_token(),
                "kmax": kmax,
                "classification": report.classification,
                "method": report.method,
                "tail_exponent": report.tail_exponent,
                "partial_sums": list(report.partial_sums),
            },
        )
    return 0


# ---------------------------------------------------------------------------
# Subcommands: sim-mean / sim-var
# ---------------------------------------------------------------------------

SIM_DEFAULTS = {
    "dist": None,
    "quantity": "box",
    "scales": None,
    "points": None,
    "reps": None,
    "seed": None,
    "workers": 1,
    "guard_ratio": 2.0,
    "p": weights.P_C,
    "bootstrap_stderr": False,
    "out": None,
    "partial": None,
    "sidecar": None,
}


def _add_sim(sub, name: str, headline: str):
    p = sub.add_parser(
        name,
        help=f"replicated passage-time estimates, {headline}-focused report",
        description=(
            "Monte Carlo estimates of a passage-time quantity over dyadic "
            "scales; writes the results CSV plus a JSON summary with fits."
        ),
    )
    p.add_argument("--dist", help="distribution token (required)")
    p.add_argument(
        "--quantity",
        choices=("box", "point", "circuit", "constrained"),
        help="what to time per replicate (default: box)",
    )
    p.add_argument("--n-exp", dest="n_exp", help="dyadic exponents a:b, scales 2^a..2^b")
    p.add_argument("--n", help="raw radii, comma-separated powers of two")
    p.add_argument(
        "--x",
        action="append",
        help="target dx,dy for --quantity point (repeatable)",
    )
    p.add_argument("--reps", type=int, help="replicates per scale (required, >= 2)")
    p.add_argument("--workers", type=int, help="replicate pool size (default: 1)")
    p.add_argument(
        "--guard-ratio",
        dest="guard_ratio",
        type=float,
        help="box-to-target ratio for point/constrained runs (default: 2.0)",
    )
    p.add_argument(
        "--p",
        type=float,
        help="circuit level for --quantity circuit; at 0.5 hits are rare "
        "in any bounded window, raise it for exploratory runs (default: 0.5)",
    )
    p.add_argument(
        "--bootstrap-stderr",
        dest="bootstrap_stderr",
        action="store_const",
        const=True,
        help="bootstrap the variance stderr (1000 resamples) instead of "
        "the fourth-moment formula (default: off)",
    )
    p.add_argument("--out", help="results CSV path (default: print table only)")
    p.add_argument(
        "--partial",
        help="flush completed scales here if a replicate aborts "
        "(default: <out>.partial.csv when --out is set)",
    )
    _add_plumbing(p, seeded=True)


def _sim_cli_values(args) -> dict:
    cli = {
        "dist": args.dist,
        "quantity": args.quantity,
        "reps": args.reps,
        "seed": args.seed,
        "workers": args.workers,
        "guard_ratio": args.guard_ratio,
        "p": args.p,
        "bootstrap_stderr": args.bootstrap_stderr,
        "out": args.out,
        "partial": getattr(args, "partial", None),
        "sidecar": args.sidecar,
    }
    if args.n_exp and args.n:
        raise UsageError("--n-exp", "give either --n-exp or --n, not both")
    if args.n_exp:
        cli["scales"] = _parse_exp_range(args.n_exp)
    elif args.n:
        cli["scales"] = _parse_radii(args.n)
    else:
        cli["scales"] = None
    cli["points"] = [list(_parse_point(t)) for t in args.x] if args.x else None
    return cli


def _build_quantity(resolved: dict):
    kind = resolved["quantity"]
    if kind == "point":
        pts = resolved.get("points")
        if not pts:
            raise UsageError("--x", "required for --quantity point")
        return mc.PointTime(tuple(tuple(int(c) for c in pt) for pt in pts))
    scales = resolved.get("scales")
    if not scales:
        raise UsageError("--n-exp", f"required for --quantity {kind}")
    scales = tuple(int(n) for n in scales)
    if kind == "box":
        return mc.BoxTime(scales)
    if kind == "circuit":
        return mc.CircuitTime(scales, p=float(resolved["p"]))
    return mc.ConstrainedTime(scales)


def _run_sim(resolved: dict, headline: str, record) -> int:
    d = _parse_dist(_require(resolved, "dist", "--dist"))
    reps = _require(resolved, "reps", "--reps")
    try:
        quantity = _build_quantity(resolved)
        cfg = mc.ExperimentConfig(
            d, quantity, int(reps), resolved["seed"], float(resolved["guard_ratio"])
        )
    except ValueError as e:
        raise UsageError(None, str(e))
    workers = int(resolved["workers"])
    if workers < 1:
        raise UsageError("--workers", "must be >= 1")
    partial = resolved["partial"]
    if partial is None and resolved["out"]:
        partial = resolved["out"] + ".partial.csv"
    record()
    table = mc.run_experiment(
        cfg,
        workers=workers,
        bootstrap_stderr=bool(resolved["bootstrap_stderr"]),
        partial_path=partial,
    )
    print("scale      mean        var         stderr_mean  stderr_var  reps")
    for row in table.rows:
        scale = mc._scale_str(row.scale)
        print(
            f"{scale:<10} {_fmt(row.mean):<11} {_fmt(row.variance):<11} "
            f"{_fmt(row.stderr_mean):<12} {_fmt(row.stderr_var):<11} {row.reps}"
        )
    fit = table.fit if headline == "mean" else table.variance_fit
    if fit is not None:
        print(
            f"{headline} fit: {fit.model}  c_hat={_fmt(fit.c_hat)}  "
            f"r_squared={_fmt(fit.r_squared)}"
        )
    if resolved["out"]:
        mc.write_results_csv(table, resolved["out"])
        summary = resolved["out"]
        summary = summary[:-4] if summary.endswith(".csv") else summary
        mc.write_summary_json(mc.table_summary(table), summary + ".summary.json")
        print(f"wrote {resolved['out']} and {summary + '.summary.json'}")
    return 0


# ---------------------------------------------------------------------------
# Subcommand: clt
# ---------------------------------------------------------------------------

CLT_DEFAULTS = {
    "dist": None,
    "scale": None,
    "reps": None,
    "seed": None,
    "workers": 1,
    "out": None,
    "sidecar": None,
}


def _add_clt(sub):
    p = sub.add_parser(
        "clt",
        help="normality check of the standardized box-time sample",
        description=(
            "Replicates the box time at one dyadic scale, standardizes by "
            "the sample's own moments, and reports the KS verdict."
        ),
    )
    p.add_argument("--dist", help="distribution token (required)")
    p.add_argument("--n-exp", dest="n_exp", help="single dyadic exponent")
    p.add_argument("--n", help="single radius, a power of two")
    p.add_argument("--reps", type=int, help="sample size (required; < 500 is Underpowered)")
    p.add_argument("--workers", type=int, help="replicate pool size (default: 1)")
    p.add_argument("--out", help="sample CSV path rep,value,standardized (default: none)")
    _add_plumbing(p, seeded=True)


def _clt_cli_values(args) -> dict:
    cli = {
        "dist": args.dist,
        "reps": args.reps,
        "seed": args.seed,
        "workers": args.workers,
        "out": args.out,
        "sidecar": args.sidecar,
        "scale": None,
    }
    if args.n_exp and args.n:
        raise UsageError("--n-exp", "give either --n-exp or --n, not both")
    if args.n_exp:
        exps = _parse_exp_range(args.n_exp)
        if len(exps) != 1:
            raise UsageError("--n-exp", "clt takes a single scale")
        cli["scale"] = exps[0]
    elif args.n:
        exps = _parse_radii(args.n)
        if len(exps) != 1:
            raise UsageError("--n", "clt takes a single radius")
        cli["scale"] = exps[0]
    return cli


def _run_clt(resolved: dict, record) -> int:
    d = _parse_dist(_require(resolved, "dist", "--dist"))
    scale = _require(resolved, "scale", "--n-exp")
    reps = _require(resolved, "reps", "--reps")
    try:
        cfg = mc.ExperimentConfig(
            d, mc.BoxTime((int(scale),)), int(reps), resolved["seed"]
        )
    except ValueError as e:
        raise UsageError(None, str(e))
    record()
    report = mc.clt_test(cfg, int(scale), workers=int(resolved["workers"]))
    band = mc.KS_BAND_COEFF / np.sqrt(report.reps)
    print(
        f"n=2^{report.n} reps={report.reps} ks={_fmt(report.ks_statistic)} "
        f"band={_fmt(band)} skew={_fmt(report.skewness)} "
        f"verdict={report.verdict}"
    )
    if resolved["out"]:
        mc.write_clt_csv(report, resolved["out"])
        summary = resolved["out"]
        summary = summary[:-4] if summary.endswith(".csv") else summary
        mc.write_summary_json(mc.clt_summary(report), summary + ".summary.json")
        print(f"wrote {resolved['out']} and {summary + '.summary.json'}")
    return 0


# ---------------------------------------------------------------------------
# Subcommand: corr-length
# ---------------------------------------------------------------------------

CORR_DEFAULTS = {
    "p": None,
    "eps": percolation.DEFAULT_EPSILON,
    "reps": 400,
    "cap": percolation.LENGTH_CAP,
    "seed": None,
    "out": None,
    "sidecar": None,
}


def _add_corr(sub):
    p = sub.add_parser(
        "corr-length",
        help="finite-size correlation length at a supercritical level",
        description=(
            "Smallest n whose n-by-n crossing estimate clears 1 - eps; "
            "doubling probes then bisection."
        ),
    )
    p.add_argument("--p", type=float, help="edge level in (0.5, 1] (required)")
    p.add_argument("--eps", type=float, help="crossing threshold margin (default: 0.02)")
    p.add_argument("--reps", type=int, help="crossing replicates per size (default: 400)")
    p.add_argument("--cap", type=int, help="give up above this size (default: 4096)")
    p.add_argument("--out", help="write the report as JSON here (default: none)")
    _add_plumbing(p, seeded=True)


def _run_corr(resolved: dict, record) -> int:
    p = _require(resolved, "p", "--p")
    if not weights.P_C < float(p) <= 1:
        raise UsageError("--p", "needs 0.5 < p <= 1")
    record()
    try:
        report = percolation.correlation_length(
            float(p),
            float(resolved["eps"]),
            int(resolved["reps"]),
            resolved["seed"],
            cap=int(resolved["cap"]),
        )
    except ValueError as e:
        raise UsageError("--p", str(e))
    for n, value, err in report.sigma_curve:
        print(f"n={n:5d}  sigma={_fmt(value)}  stderr={_fmt(err)}")
    caveat = "  (caveat: within two stderr of the threshold)" if report.caveat else ""
    print(f"L(p={_fmt(report.p)}, eps={_fmt(report.epsilon)}) = {report.length}{caveat}")
    if resolved["out"]:
        _write_json(
            resolved["out"],
            {
                "p": report.p,
                "epsilon": report.epsilon,
                "length": report.length,
                "reps": report.reps,
                "seed": report.seed,
                "caveat": report.caveat,
                "sigma_curve": [list(row) for row in report.sigma_curve],
            },
        )
    return 0


# ---------------------------------------------------------------------------
# Subcommand: p-n
# ---------------------------------------------------------------------------

PN_DEFAULTS = {
    "n": None,
    "eps": percolation.DEFAULT_EPSILON,
    "reps": 400,
    "steps": 10,
    "seed": None,
    "out": None,
    "sidecar": None,
}


def _add_pn(sub):
    p = sub.add_parser(
        "p-n",
        help="smallest level whose correlation length fits inside n",
        description="Bisects p against corr-length with cap n.",
    )
    p.add_argument("--n", type=int, help="target length scale (required)")
    p.add_argument("--eps", type=float, help="crossing threshold margin (default: 0.02)")
    p.add_argument("--reps", type=int, help="crossing replicates per size (default: 400)")
    p.add_argument("--steps", type=int, help="bisection steps (default: 10)")
    p.add_argument("--out", help="write the report as JSON here (default: none)")
    _add_plumbing(p, seeded=True)


def _run_pn(resolved: dict, record) -> int:
    n = _require(resolved, "n", "--n")
    record()
    try:
        est = percolation.p_n_estimate(
            int(n),
            float(resolved["eps"]),
            int(resolved["reps"]),
            resolved["seed"],
            steps=int(resolved["steps"]),
        )
    except ValueError as e:
        raise UsageError("--n", str(e))
    for p, length in est.trace:
        verdict = f"L={length}" if length is not None else f"L>{n}"
        print(f"p={p:.6f}  {verdict}")
    print(f"p_n({est.n}) ~= {est.p_n:.6f}  (eps={_fmt(est.epsilon)})")
    if resolved["out"]:
        _write_json(
            resolved["out"],
            {
                "n": est.n,
                "p_n": est.p_n,
                "epsilon": est.epsilon,
                "trace": [list(row) for row in est.trace],
            },
        )
    return 0


# ---------------------------------------------------------------------------
# Subcommand: invasion
# ---------------------------------------------------------------------------

INVASION_DEFAULTS = {
    "stop": None,
    "radius": None,
    "drain_p": weights.P_C,
    "p_hat": None,
    "dist": None,
    "seed": None,
    "out": None,
    "sidecar": None,
}


def _add_invasion(sub):
    p = sub.add_parser(
        "invasion",
        help="grow one invasion cluster and dump its trace",
        description=(
            "Invades from the origin until the cluster reaches the stop "
            "radius and the boundary minimum exceeds the drain level."
        ),
    )
    p.add_argument("--stop", type=int, help="stop radius (required)")
    p.add_argument(
        "--radius",
        type=int,
        help="field box radius (default: 2*stop, at least stop+2)",
    )
    p.add_argument(
        "--drain-p",
        dest="drain_p",
        type=float,
        help="drain level; negative disables draining (default: 0.5)",
    )
    p.add_argument(
        "--p-hat",
        dest="p_hat",
        help="comma-separated exponents n to report p_hat(n) for (default: none)",
    )
    p.add_argument("--dist", help="distribution for t_hat values (default: none)")
    p.add_argument("--out", help="trace CSV path (default: none)")
    _add_plumbing(p, seeded=True)


def _run_invasion(resolved: dict, record) -> int:
    stop = int(_require(resolved, "stop", "--stop"))
    if stop < 1:
        raise UsageError("--stop", "must be >= 1")
    radius = resolved["radius"]
    if radius is None:
        radius = max(2 * stop, stop + 2)
        resolved["radius"] = radius
    radius = int(radius)
    if radius < stop + 2:
        raise UsageError("--radius", f"must be >= stop + 2 = {stop + 2}")
    record()
    f = field.sample(radius, resolved["seed"])
    c = invasion.invade(f, stop, float(resolved["drain_p"]))
    clip = c.first_clip if c.first_clip >= 0 else None
    print(
        f"invaded {len(c)} edges (faithful prefix {c.prefix_len}, "
        f"first rim clip: {clip if clip is not None else 'none'})"
    )
    print(f"cluster radius {c.vertex_radius()} on a box of radius {radius}")
    if resolved["p_hat"]:
        tokens = str(resolved["p_hat"]).split(",")
        d = _parse_dist(resolved["dist"]) if resolved["dist"] else None
        for tok in tokens:
            try:
                n = int(tok)
            except ValueError:
                raise UsageError("--p-hat", f"not an integer: {tok!r}")
            value = c.p_hat(n)
            extra = f"  t_hat={_fmt(d.quantile(value))}" if d else ""
            print(f"p_hat({n}) = {_fmt(value)}{extra}")
    if resolved["out"]:
        invasion.dump_trace(c, resolved["out"])
        print(f"wrote {resolved['out']}")
    return 0


# ---------------------------------------------------------------------------
# Subcommand: fourarm
# ---------------------------------------------------------------------------

FOURARM_DEFAULTS = {
    "m1": None,
    "m2": None,
    "p": None,
    "reps": 1,
    "seed": None,
    "out": None,
    "sidecar": None,
}


def _add_fourarm(sub):
    p = sub.add_parser(
        "fourarm",
        help="count four-arm edges in a dyadic edge shell",
        description=(
            "Exact count of edges in E(B(2*m2)) minus E(B(m2)) whose label "
            "lies in (0.5, p] and which carry two open and two closed arms "
            "to distance m1."
        ),
    )
    p.add_argument("--m1", type=int, help="arm length (required)")
    p.add_argument("--m2", type=int, help="shell scale (required)")
    p.add_argument("--p", type=float, help="level in (0.5, 1] (required)")
    p.add_argument("--reps", type=int, help="independent fields (default: 1)")
    p.add_argument("--out", help="per-field CSV rep,count (default: none)")
    _add_plumbing(p, seeded=True)


def _run_fourarm(resolved: dict, record) -> int:
    m1 = int(_require(resolved, "m1", "--m1"))
    m2 = int(_require(resolved, "m2", "--m2"))
    p = float(_require(resolved, "p", "--p"))
    reps = int(resolved["reps"])
    if m1 < 1:
        raise UsageError("--m1", "must be >= 1")
    if m2 < 1:
        raise UsageError("--m2", "must be >= 1")
    if not weights.P_C < p <= 1:
        raise UsageError("--p", "needs 0.5 < p <= 1")
    if reps < 1:
        raise UsageError("--reps", "must be >= 1")
    record()
    radius = 2 * m2 + m1
    counts = []
    for rep in range(reps):
        f = field.sample(radius, mix_seed(resolved["seed"], rep))
        result = fourarm.count_four_arm(f, m1, m2, p)
        counts.append(result.count)
        print(f"rep={rep}  count={result.count}")
    arr = np.asarray(counts, dtype=float)
    if reps > 1:
        err = arr.std(ddof=1) / np.sqrt(reps)
        print(f"mean count {_fmt(arr.mean())}  stderr {_fmt(err)}  reps {reps}")
    if resolved["out"]:
        with open(resolved["out"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rep", "count"])
            for rep, n in enumerate(counts):
                w.writerow([rep, n])
        print(f"wrote {resolved['out']}")
    return 0


# ---------------------------------------------------------------------------
# Subcommand: circuits
# ---------------------------------------------------------------------------

CIRCUITS_DEFAULTS = {
    "n": None,
    "p": weights.P_C,
    "radius": None,
    "scan_cap": percolation.ANNULUS_SCAN_CAP,
    "seed": None,
    "out": None,
    "sidecar": None,
}


def _add_circuits(sub):
    p = sub.add_parser(
        "circuits",
        help="first annulus holding an open circuit, and the circuit",
        description=(
            "Scans dyadic annuli from index n outward for an innermost "
            "p-open circuit around the origin.  Confined circuits at "
            "p = 0.5 are rare in any bounded window; raise --p to see hits."
        ),
    )
    p.add_argument("--n", type=int, help="starting annulus index (required)")
    p.add_argument("--p", type=float, help="openness level (default: 0.5)")
    p.add_argument(
        "--radius",
        type=int,
        help="field box radius (default: 2^(n+2))",
    )
    p.add_argument(
        "--scan-cap",
        dest="scan_cap",
        type=int,
        help="give up after this many annuli (default: 12)",
    )
    p.add_argument("--out", help="write the circuit as JSON here (default: none)")
    _add_plumbing(p, seeded=True)


def _run_circuits(resolved: dict, record) -> int:
    n = int(_require(resolved, "n", "--n"))
    if n < -1:
        raise UsageError("--n", "annulus index must be >= -1")
    p = float(resolved["p"])
    if not weights.P_C <= p < 1:
        raise UsageError("--p", "needs 0.5 <= p < 1")
    radius = resolved["radius"]
    if radius is None:
        radius = 2 ** (max(n, 0) + 2)
        resolved["radius"] = radius
    record()
    f = field.sample(int(radius), resolved["seed"])
    m, circuit = percolation.find_m_and_circuit(
        f, n, p, scan_cap=int(resolved["scan_cap"])
    )
    print(
        f"m = {m}: circuit with {len(circuit.vertices) - 1} vertices, "
        f"diameter {_fmt(circuit.diameter())}, "
        f"enclosed cells {circuit.enclosed_cells}"
    )
    if resolved["out"]:
        _write_json(
            resolved["out"],
            {
                "m": m,
                "level": circuit.level,
                "kind": circuit.kind,
                "annulus": circuit.annulus,
                "enclosed_cells": circuit.enclosed_cells,
                "diameter": circuit.diameter(),
                "vertices": [list(v) for v in circuit.vertices],
            },
        )
    return 0


# ---------------------------------------------------------------------------
# Subcommand: audit-lemma32
# ---------------------------------------------------------------------------

AUDIT_DEFAULTS = {
    "k": None,
    "n": None,
    "p": None,
    "dist": None,
    "reps": 1,
    "radius": None,
    "seed": None,
    "out": None,
    "sidecar": None,
}


def _add_audit(sub):
    p = sub.add_parser(
        "audit-lemma32",
        help="audit the shell-weight bound on grown invasion clusters",
        description=(
            "Grows a cluster past B(2^(n+1)), takes the constrained "
            "geodesic, and checks the shell-k weight against the four-arm "
            "count times the level quantile."
        ),
    )
    p.add_argument("--k", type=int, help="audited shell index (required)")
    p.add_argument("--n", type=int, help="geodesic scale, k <= n-1 (required)")
    p.add_argument("--p", type=float, help="level in (0.5, 1] (required)")
    p.add_argument("--dist", help="distribution token (required)")
    p.add_argument("--reps", type=int, help="independent clusters (default: 1)")
    p.add_argument(
        "--radius",
        type=int,
        help="field box radius (default: 2^(n+1) + 2)",
    )
    p.add_argument("--out", help="per-cluster CSV (default: none)")
    _add_plumbing(p, seeded=True)


def _run_audit(resolved: dict, record) -> int:
    k = int(_require(resolved, "k", "--k"))
    n = int(_require(resolved, "n", "--n"))
    p = float(_require(resolved, "p", "--p"))
    d = _parse_dist(_require(resolved, "dist", "--dist"))
    reps = int(resolved["reps"])
    if reps < 1:
        raise UsageError("--reps", "must be >= 1")
    if not 1 <= k <= n - 1:
        raise UsageError("--k", f"need 1 <= k <= n-1 = {n - 1}")
    if not weights.P_C < p <= 1:
        raise UsageError("--p", "needs 0.5 < p <= 1")
    radius = resolved["radius"]
    if radius is None:
        radius = 2 ** (n + 1) + 2
        resolved["radius"] = radius
    record()
    rows = []
    holds = 0
    for rep in range(reps):
        f = field.sample(int(radius), mix_seed(resolved["seed"], rep))
        c = invasion.invade(f, 2 ** (n + 1))
        audit = invasion.shell_bound_check(c, d, k, n, p)
        holds += audit.holds
        rows.append(audit)
        print(
            f"rep={rep}  t_k={_fmt(audit.t_k)}  p_hat_k={_fmt(audit.p_hat_k)} "
            f"indicator={int(audit.indicator)}  four_arm={audit.four_arm_count} "
            f"lhs={_fmt(audit.lhs)}  rhs={_fmt(audit.rhs)}  holds={audit.holds}"
        )
    print(f"bound holds on {holds}/{reps} clusters")
    if resolved["out"]:
        with open(resolved["out"], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["rep", "t_k", "p_hat_k", "indicator", "four_arm_count",
                 "lhs", "rhs", "holds"]
            )
            for rep, a in enumerate(rows):
                w.writerow(
                    [rep, repr(a.t_k), repr(a.p_hat_k), int(a.indicator),
                     a.four_arm_count, repr(a.lhs), repr(a.rhs), int(a.holds)]
                )
        print(f"wrote {resolved['out']}")
    return 0


# ---------------------------------------------------------------------------
# Wiring
# ---------------------------------------------------------------------------


def _add_plumbing(p, seeded: bool = False):
    if seeded:
        p.add_argument("--seed", type=int, help="master seed (required unless --entropy)")
        p.add_argument(
            "--entropy",
            action="store_true",
            help="draw a seed from the OS and record it in the sidecar",
        )
    p.add_argument("--config", help="JSON config; explicit flags override its values")
    p.add_argument(
        "--sidecar",
        help="sidecar path (default: derived from --out, else <subcommand>.config.json)",
    )


_SUBCOMMANDS = {
    "criterion": (CRITERION_DEFAULTS, False),
    "sim-mean": (SIM_DEFAULTS, True),
    "sim-var": (SIM_DEFAULTS, True),
    "clt": (CLT_DEFAULTS, True),
    "corr-length": (CORR_DEFAULTS, True),
    "p-n": (PN_DEFAULTS, True),
    "invasion": (INVASION_DEFAULTS, True),
    "fourarm": (FOURARM_DEFAULTS, True),
    "circuits": (CIRCUITS_DEFAULTS, True),
    "audit-lemma32": (AUDIT_DEFAULTS, True),
}


def build_parser() -> _Parser:
    parser = _Parser(
        prog="critfpp",
        description="Critical first-passage percolation laboratory.",
    )
    sub = parser.add_subparsers(dest="subcommand")
    _add_criterion(sub)
    _add_sim(sub, "sim-mean", "mean")
    _add_sim(sub, "sim-var", "variance")
    _add_clt(sub)
    _add_corr(sub)
    _add_pn(sub)
    _add_invasion(sub)
    _add_fourarm(sub)
    _add_circuits(sub)
    _add_audit(sub)
    return parser


def _cli_values(name: str, args) -> dict:
    if name in ("sim-mean", "sim-var"):
        return _sim_cli_values(args)
    if name == "clt":
        return _clt_cli_values(args)
    defaults, seeded = _SUBCOMMANDS[name]
    values = {k: getattr(args, k, None) for k in defaults}
    return values


def _dispatch(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    name = args.subcommand
    if name is None:
        parser.print_help()
        return USAGE_EXIT
    defaults, seeded = _SUBCOMMANDS[name]
    resolved = _resolve(defaults, args.config, _cli_values(name, args))
    if seeded:
        resolved = _settle_seed(resolved, getattr(args, "entropy", False))
    runner = {
        "criterion": _run_criterion,
        "sim-mean": lambda r, rec: _run_sim(r, "mean", rec),
        "sim-var": lambda r, rec: _run_sim(r, "variance", rec),
        "clt": _run_clt,
        "corr-length": _run_corr,
        "p-n": _run_pn,
        "invasion": _run_invasion,
        "fourarm": _run_fourarm,
        "circuits": _run_circuits,
        "audit-lemma32": _run_audit,
    }[name]

    def record():
        path = _write_sidecar(name, resolved)
        print(f"config recorded in {path}")

    return runner(resolved, record)


def main(argv=None) -> int:
    try:
        return _dispatch(argv)
    except UsageError as e:
        flag = f"{e.flag}: " if e.flag else ""
        print(f"error: {flag}{e.message}", file=sys.stderr)
        return USAGE_EXIT
    except CritFppError as e:
        print(f"error: {e}", file=sys.stderr)
        return RUNTIME_EXIT
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
