"""kaclab command line: simulate, constant, kacrice, continuity, rerun.

Every run writes CSV (floats with 17 significant digits, LF line endings)
and a JSON manifest next to it. ``kaclab rerun --manifest FILE`` replays the
recorded configuration; the output does not depend on the worker count.
Exit codes: 0 success, 2 configuration error, 3 certification failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
from datetime import datetime, timezone
from fractions import Fraction

from . import __version__
from .distributions import LawError, builtin_law, law_from_json, ternary_path_law
from .gauss import expected_roots_gaussian
from .montecarlo import (CertificationError, ConfigError, coupled_continuity_experiment,
                         estimate_constant, estimate_constant_corollary, simulate)
from .results import log_weight
from .rootcount import IntervalSpec

EXIT_CONFIG = 2
EXIT_CERT = 3
FOUR_LAWS = ("gaussian", "uniform-sym", "rademacher", "four-moment")

COLUMNS = {
    "simulate": ["law", "n", "interval", "mean", "stderr", "trials", "degenerate", "seed"],
    "constant": ["law", "method", "interval", "row", "param", "centered", "stderr", "trials",
                 "seed", "cauchy_gap"],
    "kacrice": ["n", "interval", "expected", "error_estimate", "log_weight", "centered"],
    "continuity": ["family", "m", "law", "interval", "constant", "stderr", "gap",
                   "limit_constant", "trials", "seed"],
}


def fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return "%.17g" % v
    return str(v)


def parse_schedule(text: str) -> list[int]:
    """'256,512,1024' or '2^8..2^14' (every power of two in between)."""
    t = text.replace(" ", "")
    m = re.fullmatch(r"2\^(\d+)\.\.2\^(\d+)", t)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        if b < a:
            raise ConfigError(f"empty schedule {text!r}")
        return [2 ** k for k in range(a, b + 1)]
    try:
        vals = [int(x) for x in t.split(",") if x]
    except ValueError:
        raise ConfigError(f"cannot parse degree list {text!r}") from None
    if not vals:
        raise ConfigError("empty degree list")
    return vals


def parse_interval(text: str) -> IntervalSpec:
    try:
        return IntervalSpec.parse(text)
    except ValueError as exc:
        raise ConfigError(f"--interval: {exc}") from None


def _resolve_law(name: str | None, law_file: str | None):
    if law_file:
        with open(law_file, encoding="utf-8") as fh:
            return law_from_json(fh.read())
    return builtin_law(name)


def _laws(args):
    if args.law_file:
        return [_resolve_law(None, args.law_file)]
    names = args.law or []
    if not names:
        raise ConfigError("give --law (repeatable) or --law-file")
    out = []
    for item in names:
        for nm in item.split(";"):
            if nm.strip() == "four-laws":
                out.extend(builtin_law(x) for x in FOUR_LAWS)
            elif nm.strip():
                out.append(builtin_law(nm.strip()))
    return out


# ---------------------------------------------------------------------------
# commands; each returns a list of rows (lists of values)


def cmd_simulate(args):
    laws = _laws(args)
    ns = parse_schedule(args.n)
    ivs = [parse_interval(s) for s in args.interval]
    rows = []
    for law in laws:
        tallies, _ = simulate(law, ns, ivs, args.trials, args.seed, args.workers)
        for n in sorted(set(ns)):
            for iv in ivs:
                r = tallies[(n, str(iv))].result(n, iv)
                rows.append([law.name, n, str(iv), r.mean, r.stderr, r.trials,
                             r.degenerate_samples, args.seed])
    return rows


def cmd_constant(args):
    laws = _laws(args)
    iv = parse_interval(args.interval)
    rows = []
    for law in laws:
        if args.method == "direct":
            est = estimate_constant(law, iv, parse_schedule(args.n_schedule), args.trials,
                                    args.seed, args.workers)
        else:
            cs = [float(Fraction(c)) for c in args.C_values.split(",")]
            est = estimate_constant_corollary(law, cs, args.trials, args.seed, args.workers)
            iv = IntervalSpec(0.0, 1.0, False, True)
        for p, v, se in est.per_n_values:
            rows.append([law.name, args.method, str(iv), "per-n" if args.method == "direct"
                         else "per-C", p, v, se, args.trials, args.seed, ""])
        rows.append([law.name, args.method, str(iv), "final", est.per_n_values[-1][0],
                     est.value, est.stderr, args.trials, args.seed, est.cauchy_gap])
    return rows


def cmd_kacrice(args):
    iv = parse_interval(args.interval)
    w = log_weight(iv)
    rows = []
    for n in parse_schedule(args.n):
        if n < 1:
            raise ConfigError("kacrice needs n >= 1")
        q = expected_roots_gaussian(n, iv)
        rows.append([n, str(iv), q.value, q.error_estimate, w, q.value - w * math.log(n)])
    return rows


def _continuity_laws(family: str, ms, q: str):
    if family == "gaussian-quantile-discretization":
        limit = builtin_law("gaussian")
        seq = [limit if m == "inf" else builtin_law(f"gauss-quantile({m})") for m in ms]
    elif family == "ternary-q-path":
        limit = builtin_law(f"ternary({q})")
        seq = [limit if m == "inf" else ternary_path_law(Fraction(q), int(m)) for m in ms]
    else:
        raise ConfigError(f"unknown family {family!r}")
    return seq, limit


def cmd_continuity(args):
    if not args.m_list:
        raise ConfigError("--m-list is required")
    ms = [m.strip() for m in args.m_list.split(",") if m.strip()]
    for m in ms:
        if m != "inf" and not m.isdigit():
            raise ConfigError(f"bad --m-list entry {m!r}")
    seq, limit = _continuity_laws(args.family, ms, args.q)
    iv = parse_interval(args.interval)
    ests, lim, gaps = coupled_continuity_experiment(seq, limit, iv, parse_schedule(args.n_schedule),
                                                    args.trials, args.seed, args.workers,
                                                    independent=args.independent)
    return [[args.family, m, law.name, str(iv), e.value, e.stderr, g, lim.value, args.trials,
             args.seed] for m, law, e, g in zip(ms, seq, ests, gaps)]


COMMANDS = {"simulate": cmd_simulate, "constant": cmd_constant, "kacrice": cmd_kacrice,
            "continuity": cmd_continuity}


# ---------------------------------------------------------------------------
# plumbing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kaclab", description="Real roots of random Kac polynomials.")
    p.add_argument("--version", action="version", version=f"kaclab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seeded=True):
        sp.add_argument("--out", default="-", help="CSV path, '-' for stdout")
        sp.add_argument("--manifest", help="manifest path (default: OUT.manifest.json)")
        if seeded:
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--trials", type=int, default=10000)
            sp.add_argument("--workers", type=int, default=None,
                            help="worker processes (default: KACLAB_THREADS or CPU count)")

    sp = sub.add_parser("simulate", help="estimate E N(I) for given laws, degrees, intervals")
    sp.add_argument("--law", action="append")
    sp.add_argument("--law-file")
    sp.add_argument("--n", required=True, help="degree or comma list or 2^a..2^b")
    sp.add_argument("--interval", action="append", required=True)
    common(sp)

    sp = sub.add_parser("constant", help="estimate C_xi,I along a schedule")
    sp.add_argument("--law", action="append", help="law name, repeatable; 'four-laws' for gaussian, uniform-sym, rademacher, four-moment")
    sp.add_argument("--law-file")
    sp.add_argument("--interval", default="R")
    sp.add_argument("--n-schedule", default="2^8..2^14")
    sp.add_argument("--method", choices=["direct", "corollary"], default="direct")
    sp.add_argument("--C-values", default="8,16,32,64")
    common(sp)

    sp = sub.add_parser("kacrice", help="Gaussian expected counts by quadrature")
    sp.add_argument("--n", required=True)
    sp.add_argument("--interval", default="R")
    common(sp, seeded=False)

    sp = sub.add_parser("continuity", help="coupled constants along a family of laws")
    sp.add_argument("--family", required=True,
                    choices=["gaussian-quantile-discretization", "ternary-q-path"])
    sp.add_argument("--m-list", required=True, help="comma list; 'inf' means the limit law")
    sp.add_argument("--q", default="1/3", help="limit parameter for ternary-q-path")
    sp.add_argument("--interval", default="(0,1]")
    sp.add_argument("--n-schedule", default="2^6..2^10")
    sp.add_argument("--independent", action="store_true", help="independent streams instead of CRN")
    common(sp)

    sp = sub.add_parser("rerun", help="replay a run from its manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", default=None)
    sp.add_argument("--workers", type=int, default=None)
    return p


_NON_CONFIG = {"out", "manifest", "workers", "command"}


def config_of(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in _NON_CONFIG}
    if cfg.get("law_file"):
        with open(cfg["law_file"], encoding="utf-8") as fh:
            cfg["law_file_content"] = json.loads(fh.read())
    cfg["command"] = args.command
    return cfg


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def write_csv(rows, columns, out: str):
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    text = buf.getvalue()
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def write_manifest(args, argv, path: str | None):
    cfg = config_of(args)
    if path is None:
        path = (args.out + ".manifest.json") if args.out != "-" else "kaclab.manifest.json"
    man = {
        "config_hash": config_hash(cfg),
        "seed": cfg.get("seed"),
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "command": " ".join(["kaclab"] + list(argv)),
        "argv": list(argv),
        "config": cfg,
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _strip_flags(argv, names):
    """Drop '--flag value' / '--flag=value' pairs for the given flags."""
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        key = a.split("=", 1)[0]
        if key in names:
            skip = "=" not in a
            continue
        out.append(a)
    return out


def _rerun(args):
    with open(args.manifest, encoding="utf-8") as fh:
        man = json.load(fh)
    argv = _strip_flags(man["argv"], {"--out", "--manifest", "--workers"})
    parser = build_parser()
    new = parser.parse_args(argv)
    if config_hash(config_of(new)) != man["config_hash"]:
        raise ConfigError("manifest config hash does not match its recorded command")
    new.out = args.out or "-"
    new.workers = args.workers
    rows = COMMANDS[new.command](new)
    write_csv(rows, COLUMNS[new.command], new.out)
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "rerun":
            return _rerun(args)
        if getattr(args, "trials", 1) < 1:
            raise ConfigError("--trials must be >= 1")
        if getattr(args, "workers", None) is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        rows = COMMANDS[args.command](args)
        write_csv(rows, COLUMNS[args.command], args.out)
        write_manifest(args, _strip_flags(argv, {"--workers"}), args.manifest)
        return 0
    except (ConfigError, LawError, ValueError, OSError) as exc:
        print(f"kaclab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CertificationError as exc:
        print(f"kaclab: certification failure: {exc}", file=sys.stderr)
        return EXIT_CERT


if __name__ == "__main__":
    sys.exit(main())
