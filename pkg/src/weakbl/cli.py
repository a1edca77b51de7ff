"""Command-line front end: ``python3 -m weakbl <command> ...``.

Commands: certify, scan, weaklimit, counterexample, defect, selftest.

Exit codes: 0 success, 1 selftest failure, 2 bad input (flags, files, out-of-domain
parameters), 3 no counterexample witness, 4 ``violated`` under ``--expect nonneg``.

Every output starts with a header holding the command and its full effective
configuration; JSON bodies are written with sorted keys, so identical
configurations give byte-identical output.  ``--timestamp`` adds a wall-clock
field to the header and nothing else.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import inspect
import json
import os
import re
import sys
from pathlib import Path

from . import counterex, defect, inequality, oscillate
from .funcspace import StepFunction, ValidationError, function_from_dict, scalar_map
from .selftest import run_selftest

EXIT_OK, EXIT_SELFTEST, EXIT_USAGE, EXIT_NO_WITNESS, EXIT_VIOLATED = 0, 1, 2, 3, 4

SCAN_P = (1.2, 1.5, 2.0, 2.5, 2.9, 3.0, 3.5, 4.0, 5.0)


class InputError(ValidationError):
    """Malformed command-line value or input file."""


# --------------------------------------------------------------------------
# Value parsers
# --------------------------------------------------------------------------


def parse_box(text):
    """``lo:hi`` or ``lo:hi,lo:hi`` -> list of ``(lo, hi)``."""
    try:
        box = [tuple(float(x) for x in part.split(":")) for part in text.split(",")]
    except ValueError:
        raise InputError(f"bad box {text!r}; expected lo:hi or lo:hi,lo:hi") from None
    if not box or any(len(b) != 2 or not b[0] < b[1] for b in box):
        raise InputError(f"bad box {text!r}; each interval must be lo:hi with lo < hi")
    return box


def parse_floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"bad number list {text!r}") from None


def parse_j(text):
    """``geometric:lo:hi``, ``range:lo:hi`` or ``list:j1,j2,...``."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "geometric":
            lo, hi = (int(x) for x in rest.split(":"))
            return defect.geometric_j(lo, hi)
        if kind == "range":
            lo, hi = (int(x) for x in rest.split(":"))
            return list(range(lo, hi + 1))
        if kind == "list":
            return [int(x) for x in rest.split(",")]
    except ValueError:
        pass
    raise InputError(f"bad j list {text!r}; use geometric:1:1024, range:1:64 or list:1,2,3")


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _unwrap(doc):
    """Accept a bare function, a report, or a CLI output whose result is one."""
    if isinstance(doc, dict) and "result" in doc and isinstance(doc["result"], dict):
        doc = doc["result"]
    if isinstance(doc, dict) and "profile" in doc:
        if doc["profile"] is None:
            raise InputError("the report holds no profile (no witness was found)")
        doc = doc["profile"]
    if not isinstance(doc, dict):
        raise InputError("expected a JSON object describing a function")
    return function_from_dict(doc)


def parse_function(text, allow_const=True):
    """``const:c``, ``file:path`` or ``witness:path``."""
    kind, _, rest = text.partition(":")
    if kind == "const" and allow_const:
        try:
            return StepFunction.constant(float(rest))
        except ValueError:
            raise InputError(f"bad constant in {text!r}") from None
    if kind in ("file", "witness") and rest:
        return _unwrap(_read_json(rest))
    forms = "const:<c>, file:<json>" if allow_const else "file:<json>, witness:<report.json>"
    raise InputError(f"bad function {text!r}; use {forms}")


def parse_step(text):
    f = parse_function(text)
    if not isinstance(f, StepFunction):
        raise InputError(f"{text!r} must be a step function")
    return f


def parse_psi(text):
    """``indicator:lo:hi``, ``const:c`` or ``file:path`` (step functions only)."""
    if text.startswith("indicator:"):
        try:
            lo, hi = (float(x) for x in text.split(":")[1:])
        except ValueError:
            raise InputError(f"bad indicator {text!r}; use indicator:lo:hi") from None
        if not 0 <= lo < hi <= 1:
            raise InputError(f"indicator interval must satisfy 0 <= lo < hi <= 1, got {text!r}")
        return StepFunction.indicator(lo, hi)
    return parse_step(text)


_MAP_PARAM = {"power_sign": "q", "abs_power": "q", "F_p": "p", "g_p": "p", "Phi_p": "p",
              "constant": "c"}


def parse_map(text):
    """``identity``, ``power_sign:q``, ``abs_power:q``, ``F_p:p``, ``g_p:p``, ``Phi_p:p``, ``constant:c``."""
    name, _, arg = text.partition(":")
    if name in _MAP_PARAM:
        try:
            return scalar_map(name, **{_MAP_PARAM[name]: float(arg)})
        except ValueError:
            raise InputError(f"{name} needs a numeric parameter, e.g. {name}:2.5") from None
    if name == "identity" and not arg:
        return scalar_map("identity")
    raise InputError(f"unknown map {text!r}; known: identity, " + ", ".join(f"{k}:<x>" for k in _MAP_PARAM))


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "timestamp")}


def _header(args):
    h = {"command": args.command, "config": _config(args)}
    if args.timestamp:
        h["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return h


def _emit(args, result, csv_text=None):
    header = _header(args)
    fmt = args.format
    if fmt == "csv":
        if csv_text is None:
            raise InputError(f"{args.command} has no CSV form; use --format json")
        text = "# " + json.dumps(header, sort_keys=True) + "\n" + csv_text
    else:
        indent = 2 if fmt == "pretty" else None
        text = json.dumps({"header": header, "result": result}, sort_keys=True, indent=indent) + "\n"
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise InputError(f"cannot write {args.out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def _threads():
    raw = os.environ.get("BLB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"BLB_THREADS must be a positive integer, got {raw!r}") from None
    return max(1, min(n, os.cpu_count() or 1))


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_certify(args):
    r = inequality.Residual(args.residual, args.p, args.variant)
    cert = inequality.certify_nonneg(r, parse_box(args.box), h=args.h, tol=args.tol)
    _emit(args, cert.to_dict())
    if args.expect == "nonneg" and cert.verdict == inequality.VIOLATED:
        return EXIT_VIOLATED
    return EXIT_OK


def cmd_scan(args):
    rows = inequality.scan_p(parse_floats(args.p_list), args.residual, parse_box(args.box),
                             h=args.h, tol=args.tol, threads=_threads())
    result = [{"p": r.p, "grid_min": r.grid_min, "argmin": list(r.argmin), "verdict": r.verdict}
              for r in rows]
    _emit(args, result, inequality.scan_to_csv(rows))
    if args.expect == "nonneg" and any(r.verdict == inequality.VIOLATED for r in rows):
        return EXIT_VIOLATED
    return EXIT_OK


def cmd_weaklimit(args):
    v = parse_function(args.v)
    phi = parse_map(args.phi) if args.phi else None
    est = oscillate.convergence_table(v, parse_psi(args.psi), parse_j(args.j), phi)
    _emit(args, est.to_dict(), est.to_csv())
    return EXIT_OK


def cmd_counterexample(args):
    spec = counterex.MomentSpec(args.p, a=args.a, eps_mom=args.eps_mom, delta=args.delta)
    js = parse_j(args.j)
    if args.route == "step":
        if args.levels < 3:
            raise InputError("--levels must be at least 3")
        report = counterex.search_step_profile(spec, levels=args.levels, seed=args.seed, j_list=js)
    else:
        report = counterex.ode_counterexample(spec, basis_size=args.basis_size,
                                              n_steps=args.n_steps, j_list=js)
    result = report.to_dict()
    if args.verify and report.profile is not None:
        result["verification"] = counterex.verify_counterexample(report, js).to_dict()
    _emit(args, result)
    print(f"{report.reason} (objective {report.objective:.6g})", file=sys.stderr)
    return EXIT_OK if report.verdict else EXIT_NO_WITNESS


def cmd_defect(args):
    series = defect.defect_series(parse_step(args.u), parse_function(args.v), args.p,
                                  parse_j(args.j))
    _emit(args, series.to_dict(), series.to_csv())
    return EXIT_OK


def cmd_selftest(args):
    ok, rows = run_selftest()
    _emit(args, {"passed": ok, "checks": rows})
    return EXIT_OK if ok else EXIT_SELFTEST


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _common(p, default_format):
    p.add_argument("--format", choices=("json", "csv", "pretty"), default=default_format,
                   help="output format")
    p.add_argument("--out", default=None, help="write output to this file instead of stdout")
    p.add_argument("--timestamp", action="store_true", help="add a UTC timestamp to the header")


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="weakbl", description=inspect.cleandoc(__doc__).split("\n")[0],
                                     formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="certify residual >= -tol on a box", formatter_class=fmt)
    p.add_argument("--residual", choices=inequality.KINDS, default="g_p")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--box", default="-1:1", help="lo:hi, or lo:hi,lo:hi for two-variable residuals")
    p.add_argument("--h", type=float, default=1e-4, help="grid step")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--variant", choices=inequality.PSI_VARIANTS, default="sign_corrected",
                   help="Psi_p variant")
    p.add_argument("--expect", choices=("nonneg",), default=None,
                   help="exit 4 when the verdict is 'violated'")
    _common(p, "json")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("scan", help="grid minimum of a residual across p", formatter_class=fmt)
    p.add_argument("--residual", choices=inequality.KINDS, default="g_p")
    p.add_argument("--p-list", default=",".join(map(str, SCAN_P)), help="comma-separated p values")
    p.add_argument("--box", default="-1:1")
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--expect", choices=("nonneg",), default=None)
    _common(p, "csv")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("weaklimit", help="pairings <phi(T_j v), psi> against their limit",
                       formatter_class=fmt)
    p.add_argument("--v", required=True, help="const:<c>, file:<json> or witness:<report.json>")
    p.add_argument("--psi", default="const:1", help="indicator:lo:hi, const:<c> or file:<json>")
    p.add_argument("--phi", default=None, help="map applied to T_j v, e.g. power_sign:2.5")
    p.add_argument("--j", default="geometric:1:1024")
    _common(p, "json")
    p.set_defaults(func=cmd_weaklimit)

    p = sub.add_parser("counterexample", help="search for a profile breaking the defect bound",
                       formatter_class=fmt)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--route", choices=("step", "ode"), default="step")
    p.add_argument("--a", type=float, default=None,
                   help="range bound; None means 1 for p < 2 and 16 for p > 2")
    p.add_argument("--eps-mom", type=float, default=1e-8)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--basis-size", type=int, default=None, help="ode route: spline segments")
    p.add_argument("--n-steps", type=int, default=None, help="ode route: RK4 steps")
    p.add_argument("--j", default="geometric:1:1024")
    p.add_argument("--verify", action="store_true", help="also run the weak-limit verification")
    _common(p, "json")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("defect", help="Brezis-Lieb defect series D_j", formatter_class=fmt)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--u", default="const:1", help="const:<c> or file:<json>")
    p.add_argument("--v", required=True, help="file:<json> or witness:<report.json>")
    p.add_argument("--j", default="geometric:1:1024")
    _common(p, "csv")
    p.set_defaults(func=cmd_defect)

    p = sub.add_parser("selftest", help="run the built-in quick checks", formatter_class=fmt)
    _common(p, "json")
    p.set_defaults(func=cmd_selftest)
    return parser


_NEGATIVE_VALUE = re.compile(r"^-(\d|\.\d|inf)")


def _join_negative_values(argv):
    """Turn ``--box -1:1`` into ``--box=-1:1`` so argparse does not read a flag."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok.startswith("--") and "=" not in tok and nxt is not None and _NEGATIVE_VALUE.match(nxt):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
