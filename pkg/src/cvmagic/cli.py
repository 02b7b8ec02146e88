"""Command-line interface: ``cvmagic <subcommand> ...``.

Exit codes: 0 success, 2 input error, 3 numerics error, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib.metadata import PackageNotFoundError, version as _dist_version
from pathlib import Path

import numpy as np

from .errors import CVMagicError, InvalidParameterError, NumericsError, OptimizationError
from .magic import classify
from .numerics import NumericsConfig
from .ssdmaps import QubitDensityMatrix, SsdKind, ssd
from .states import norm_sq, psi_eval, state_from_json, state_to_json
from .sweep import SweepSpec, optimize_rom, run_sweep, sweep_summary, write_csv
from .wigner import PhaseSpaceGrid, wln

try:
    __version__ = _dist_version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

EXIT_OK, EXIT_INPUT, EXIT_NUMERICS, EXIT_NOCONV = 0, 2, 3, 4


class InputError(Exception):
    pass


def _load_json(arg: str):
    """Inline JSON, ``-`` for stdin, or a path to a JSON file."""
    try:
        if arg.lstrip().startswith(("{", "[")):
            return json.loads(arg)
        if arg == "-":
            return json.load(sys.stdin)
        return json.loads(Path(arg).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc}") from None
    except OSError as exc:
        raise InputError(f"cannot read {arg!r}: {exc}") from None


def _load_config(args) -> tuple[NumericsConfig, dict]:
    opts = {"output_path": None, "format": None, "threads": None}
    numerics = {}
    if args.config:
        obj = _load_json(args.config)
        if not isinstance(obj, dict):
            raise InputError("config must be a JSON object")
        unknown = set(obj) - {"numerics", "output_path", "format", "threads"}
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        numerics = obj.get("numerics") or {}
        for k in opts:
            opts[k] = obj.get(k)
    for k, flag in (("output_path", "out"), ("format", "format"), ("threads", "threads")):
        v = getattr(args, flag, None)
        if v is not None:
            opts[k] = v
    if opts["format"] not in (None, "csv", "json"):
        raise InputError("format must be csv or json")
    if opts["threads"] is not None and (not isinstance(opts["threads"], int) or opts["threads"] < 1):
        raise InputError("threads must be an integer >= 1")
    return NumericsConfig.from_json(numerics), opts


def _emit(text: str, opts):
    if opts["output_path"]:
        Path(opts["output_path"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["true" if v is True else "false" if v is False else
                    format(v, ".9g") if isinstance(v, float) else v for v in r])
    return buf.getvalue()


# --------------------------------------------------------------------------
# subcommands

def cmd_state_eval(args, cfg, opts):
    model = state_from_json(_load_json(args.state))
    if args.x:
        xs = np.array(args.x, dtype=float)
    else:
        lo, hi, n = args.grid
        xs = np.linspace(float(lo), float(hi), int(n))
    psi = psi_eval(model, xs, cfg)
    if (opts["format"] or "json") == "csv":
        return _csv(["x", "psi_re", "psi_im"], [(float(x), float(v.real), float(v.imag)) for x, v in zip(xs, psi)])
    return _dump({"state": state_to_json(model), "norm_sq_raw": norm_sq(model, cfg),
                  "x": xs.tolist(), "psi_re": psi.real.tolist(), "psi_im": psi.imag.tolist()})


def _qubit_output(q: QubitDensityMatrix, opts, extra=None):
    report = classify(q)
    if (opts["format"] or "json") == "csv":
        qj, rj = q.to_json(), report.to_json()
        header = list(qj) + list(rj)
        return _csv(header, [[qj[k] for k in qj] + [rj[k] for k in rj]])
    out = dict(extra or {})
    out.update({"qubit": q.to_json(), "magic": report.to_json()})
    return _dump(out)


def cmd_ssd(args, cfg, opts):
    model = state_from_json(_load_json(args.state))
    q = ssd(model, SsdKind.parse(args.map), cfg)
    return _qubit_output(q, opts, {"state": state_to_json(model)})


def cmd_magic(args, cfg, opts):
    obj = _load_json(args.qubit)
    if not isinstance(obj, dict):
        raise InputError("qubit JSON must be an object")
    return _qubit_output(QubitDensityMatrix.from_json(obj), opts)


def cmd_sweep(args, cfg, opts):
    spec = SweepSpec.from_json(_load_json(args.spec))
    rows = run_sweep(spec, cfg, threads=opts["threads"])
    print(sweep_summary(rows, spec), file=sys.stderr)
    if opts["format"] == "json":
        return _dump({"spec": spec.to_json(), "rows": [
            {"params": r.params, **(r.report.to_json() if r.report else {}),
             **({"wln": r.wln} if spec.include_wln else {}), "error": r.error} for r in rows]})
    return write_csv(rows, spec)


def cmd_optimize(args, cfg, opts):
    obj = _load_json(args.problem)
    if not isinstance(obj, dict) or "family" not in obj or "bounds" not in obj:
        raise InputError("optimize input needs 'family' and 'bounds'")
    bounds = obj["bounds"]
    if not isinstance(bounds, dict) or not all(isinstance(v, list) and len(v) == 2 for v in bounds.values()):
        raise InputError("bounds must map parameter names to [lo, hi]")
    result = optimize_rom(obj["family"], obj.get("fixed", {}), {k: tuple(v) for k, v in bounds.items()},
                          map=args.map, starts=args.starts, cfg=cfg, threads=opts["threads"])
    out = result.to_json()
    if opts["format"] == "csv":
        names = list(result.best_params)
        text = _csv(names + ["best_rom_raw", "evaluations", "starts", "converged"],
                    [[result.best_params[n] for n in names]
                     + [result.best_rom_raw, result.evaluations, result.starts, result.converged]])
    else:
        text = _dump(out)
    return text, (EXIT_OK if result.converged else EXIT_NOCONV)


def cmd_wln(args, cfg, opts):
    model = state_from_json(_load_json(args.state))
    grid = None
    if args.grid:
        g = _load_json(args.grid)
        try:
            grid = PhaseSpaceGrid(**g)
        except TypeError as exc:
            raise InputError(f"bad grid: {exc}") from None
    value = wln(model, grid, cfg)
    if opts["format"] == "csv":
        return _csv(["wln"], [[value]])
    return _dump({"state": state_to_json(model), "wln": value})


# --------------------------------------------------------------------------

def _global_flags(p, suppress=False):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", metavar="PATH", default=d,
                   help="JSON file with keys numerics, output_path, format, threads")
    p.add_argument("--out", metavar="PATH", default=d, help="write output here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default=d, help="output format")
    p.add_argument("--threads", type=int, metavar="N", default=d,
                   help="worker processes for sweeps and optimizer starts (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvmagic",
        description="Map CV states to logical qubits and quantify their magic.",
        epilog="JSON arguments may be inline, a file path, or '-' for stdin. "
               "Exit codes: 0 ok, 2 input error, 3 numerics error, 4 non-convergence.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        _global_flags(p, suppress=True)
        p.set_defaults(func=func)
        return p

    maps = [k.value for k in SsdKind]
    p = add("state-eval", cmd_state_eval, "evaluate a normalized wavefunction at positions")
    p.add_argument("state", help='state JSON, e.g. {"family":"gaussian","params":{...}}')
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--x", type=float, nargs="+", help="positions")
    g.add_argument("--grid", nargs=3, metavar=("LO", "HI", "N"), help="uniform position grid")

    p = add("ssd", cmd_ssd, "apply a subsystem decomposition and report magic")
    p.add_argument("state", help="state JSON")
    p.add_argument("--map", choices=maps, default="stabilizer")

    p = add("magic", cmd_magic, "magic report for a qubit density matrix")
    p.add_argument("qubit", help='{"rho00":..,"rho11":..,"rho01_re":..,"rho01_im":..}')

    p = add("sweep", cmd_sweep, "run a parameter grid and write CSV")
    p.add_argument("spec", help='{"family":..,"fixed":{..},"axes":[{"name","lo","hi","steps"}],"map":..}')

    p = add("optimize", cmd_optimize, "maximize rom_raw with multi-start Nelder-Mead")
    p.add_argument("problem", help='{"family":..,"fixed":{..},"bounds":{"name":[lo,hi]}}')
    p.add_argument("--map", choices=maps, default="stabilizer")
    p.add_argument("--starts", type=int, default=16)

    p = add("wln", cmd_wln, "Wigner logarithmic negativity")
    p.add_argument("state", help="state JSON")
    p.add_argument("--grid", help="PhaseSpaceGrid JSON (default: sized automatically)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, opts = _load_config(args)
        result = args.func(args, cfg, opts)
        text, code = result if isinstance(result, tuple) else (result, EXIT_OK)
        _emit(text, opts)
        return code
    except (InputError, InvalidParameterError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericsError as exc:
        print(f"numerics error: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except OptimizationError as exc:
        print(f"optimization failed: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except CVMagicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
