"""Parameter sweeps, multi-start ROM maximization and map-hierarchy probes."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .errors import CVMagicError, InvalidParameterError, OptimizationError
from .magic import MagicReport, classify
from .numerics import NumericsConfig, resolve
from .ssdmaps import SsdKind, ssd
from .states import FAMILIES, StateModel, make_state

REPORT_COLUMNS = ("rom", "rom_raw", "fidelity_T", "fidelity_H", "t_distillable", "h_distillable")


def _family_fields(family: str):
    if family not in FAMILIES:
        raise InvalidParameterError(f"unknown or non-sweepable family {family!r}")
    return tuple(FAMILIES[family].__dataclass_fields__)


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    steps: int

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)


@dataclass(frozen=True)
class SweepSpec:
    """One- or two-axis grid over a state family's parameters.

    Parameters
    ----------
    family : str
        One of ``gaussian``, ``gkp``, ``cat``, ``cubic``.
    fixed : dict
        Parameters held constant.
    axes : sequence of Axis or (name, lo, hi, steps)
    map : SsdKind or str
    include_wln : bool
        Also compute the Wigner logarithmic negativity per point.
    """

    family: str
    fixed: dict
    axes: tuple
    map: SsdKind = SsdKind.STABILIZER
    include_wln: bool = False

    def __post_init__(self):
        names = _family_fields(self.family)
        axes = tuple(a if isinstance(a, Axis) else Axis(str(a[0]), float(a[1]), float(a[2]), int(a[3]))
                     for a in self.axes)
        if not 1 <= len(axes) <= 2:
            raise InvalidParameterError("a sweep needs one or two axes")
        for a in axes:
            if a.name not in names:
                raise InvalidParameterError(f"{a.name!r} is not a parameter of family {self.family!r}")
            if a.steps < 2:
                raise InvalidParameterError(f"axis {a.name!r} needs at least 2 steps")
            if not (math.isfinite(a.lo) and math.isfinite(a.hi) and a.lo < a.hi):
                raise InvalidParameterError(f"axis {a.name!r} needs finite lo < hi")
            if a.name in self.fixed:
                raise InvalidParameterError(f"{a.name!r} is both fixed and swept")
        if len({a.name for a in axes}) != len(axes):
            raise InvalidParameterError("axis names must be distinct")
        unknown = set(self.fixed) - set(names)
        if unknown:
            raise InvalidParameterError(f"unknown fixed parameters for {self.family!r}: {sorted(unknown)}")
        object.__setattr__(self, "fixed", dict(self.fixed))
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "map", SsdKind.parse(self.map))
        object.__setattr__(self, "include_wln", bool(self.include_wln))

    def points(self) -> list[dict]:
        """Grid points in row-major order (last axis fastest)."""
        grids = [a.values() for a in self.axes]
        mesh = np.meshgrid(*grids, indexing="ij")
        flat = [m.ravel() for m in mesh]
        return [{a.name: float(v[i]) for a, v in zip(self.axes, flat)} for i in range(flat[0].size)]

    @classmethod
    def from_json(cls, obj: dict) -> "SweepSpec":
        try:
            return cls(family=obj["family"], fixed=obj.get("fixed", {}),
                       axes=tuple((a["name"], a["lo"], a["hi"], a["steps"]) for a in obj["axes"]),
                       map=obj.get("map", "stabilizer"), include_wln=obj.get("include_wln", False))
        except (KeyError, TypeError) as exc:
            raise InvalidParameterError(f"malformed sweep spec: {exc}") from None

    def to_json(self) -> dict:
        return {"family": self.family, "fixed": dict(self.fixed),
                "axes": [{"name": a.name, "lo": a.lo, "hi": a.hi, "steps": a.steps} for a in self.axes],
                "map": self.map.value, "include_wln": self.include_wln}


@dataclass(frozen=True)
class SweepRow:
    params: dict
    report: MagicReport | None = None
    wln: float | None = None
    error: str | None = None

    @property
    def rom_raw(self) -> float:
        return self.report.rom_raw if self.report is not None else math.nan


def _evaluate_point(args) -> SweepRow:
    family, fixed, point, kind, include_wln, cfg = args
    try:
        model = make_state(family, **fixed, **point)
        report = classify(ssd(model, kind, cfg))
        w = None
        if include_wln:
            from .wigner import wln
            w = wln(model, None, cfg)
        return SweepRow(point, report, w)
    except CVMagicError as exc:
        return SweepRow(point, None, None, f"{type(exc).__name__}: {exc}")


def _workers(threads: int | None) -> int:
    if threads is None:
        return os.cpu_count() or 1
    if int(threads) != threads or threads < 1:
        raise InvalidParameterError("threads must be a positive integer")
    return int(threads)


def _parallel_map(fn, tasks: Sequence, threads: int | None):
    n = min(_workers(threads), len(tasks))
    if n <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * n))
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


def run_sweep(spec: SweepSpec, cfg: NumericsConfig | None = None, threads: int | None = None) -> list[SweepRow]:
    """Evaluate every grid point; per-point failures are recorded, not raised.

    Rows come back in row-major order whatever the worker count.
    """
    cfg = resolve(cfg)
    tasks = [(spec.family, spec.fixed, pt, spec.map, spec.include_wln, cfg) for pt in spec.points()]
    return _parallel_map(_evaluate_point, tasks, threads)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return format(float(v), ".9g")


def sweep_header(spec: SweepSpec) -> list[str]:
    cols = [a.name for a in spec.axes] + list(REPORT_COLUMNS)
    if spec.include_wln:
        cols.append("wln")
    return cols + ["error"]


def write_csv(rows: Iterable[SweepRow], spec: SweepSpec, stream=None) -> str:
    """Serialize rows as CSV. Returns the text and writes it to ``stream`` if given."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(sweep_header(spec))
    for row in rows:
        out = [_fmt(row.params[a.name]) for a in spec.axes]
        if row.report is not None:
            out += [_fmt(getattr(row.report, c)) for c in REPORT_COLUMNS]
        else:
            out += [""] * len(REPORT_COLUMNS)
        if spec.include_wln:
            out.append(_fmt(row.wln))
        out.append(row.error or "")
        writer.writerow(out)
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def sweep_summary(rows: Sequence[SweepRow], spec: SweepSpec) -> str:
    shape = "x".join(str(a.steps) for a in spec.axes)
    good = [r for r in rows if r.report is not None]
    failed = len(rows) - len(good)
    if not good:
        return f"grid {shape} ({len(rows)} points): no successful points, {failed} errors"
    best = max(good, key=lambda r: r.rom_raw)
    at = ", ".join(f"{k}={_fmt(v)}" for k, v in best.params.items())
    return (f"grid {shape} ({len(rows)} points): max rom_raw {_fmt(best.rom_raw)} at {at}; "
            f"{failed} errors")


# --------------------------------------------------------------------------
# optimization

@dataclass(frozen=True)
class OptimizeResult:
    best_params: dict
    best_rom_raw: float
    evaluations: int
    starts: int
    converged: bool
    start_values: tuple = field(default_factory=tuple)

    def to_json(self) -> dict:
        return {"best_params": dict(self.best_params), "best_rom_raw": self.best_rom_raw,
                "evaluations": self.evaluations, "starts": self.starts, "converged": self.converged,
                "start_values": list(self.start_values)}


def start_points(bounds: np.ndarray, starts: int) -> np.ndarray:
    """Bounds centre followed by an unscrambled Halton sequence over the box."""
    lo, hi = bounds[:, 0], bounds[:, 1]
    pts = [0.5 * (lo + hi)]
    if starts > 1:
        h = qmc.Halton(d=len(lo), scramble=False)
        h.fast_forward(1)  # the first Halton point is the lower corner
        pts.extend(lo + u * (hi - lo) for u in h.random(starts - 1))
    return np.array(pts)


def _simplex(x0, lo, hi):
    d = len(x0)
    sim = np.tile(x0, (d + 1, 1))
    for i in range(d):
        step = 0.1 * (hi[i] - lo[i])
        sim[i + 1, i] = x0[i] + step if x0[i] + step <= hi[i] else x0[i] - step
    return sim


def _run_start(args):
    family, fixed, names, x0, lo, hi, kind, cfg = args
    evals = 0
    failures = 0

    def objective(x):
        nonlocal evals, failures
        evals += 1
        try:
            model = make_state(family, **fixed, **dict(zip(names, map(float, x))))
            return -classify(ssd(model, kind, cfg)).rom_raw
        except CVMagicError:
            failures += 1
            return math.inf

    res = minimize(objective, x0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                   options={"xatol": 1e-5, "fatol": math.inf, "maxfev": 500,
                            "initial_simplex": _simplex(x0, lo, hi)})
    ok = evals > failures and math.isfinite(res.fun)
    return np.asarray(res.x, dtype=float), (-float(res.fun) if ok else math.nan), evals, bool(res.success), ok


def optimize_rom(family: str, fixed: dict, bounds: dict, map=SsdKind.STABILIZER, starts: int = 16,
                 cfg: NumericsConfig | None = None, threads: int | None = None) -> OptimizeResult:
    """Maximize rom_raw over the free parameters of one family.

    Parameters
    ----------
    family : str
    fixed : dict
        Parameters held constant.
    bounds : dict
        ``name -> (lo, hi)``. A parameter with ``lo == hi`` is held fixed.
    map : SsdKind or str
    starts : int
        Number of Nelder-Mead runs; the first starts at the centre of the box.

    Returns
    -------
    OptimizeResult
        ``converged`` reports whether the winning start met the simplex
        size tolerance before the evaluation budget ran out.
    """
    kind = SsdKind.parse(map)
    cfg = resolve(cfg)
    names_ok = _family_fields(family)
    if int(starts) != starts or starts < 1:
        raise InvalidParameterError("starts must be a positive integer")
    fixed = dict(fixed)
    free, box = [], []
    for name, (lo, hi) in bounds.items():
        lo, hi = float(lo), float(hi)
        if name not in names_ok:
            raise InvalidParameterError(f"{name!r} is not a parameter of family {family!r}")
        if name in fixed:
            raise InvalidParameterError(f"{name!r} is both fixed and free")
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise InvalidParameterError(f"bounds for {name!r} must be finite with lo <= hi")
        if lo == hi:
            fixed[name] = lo
        else:
            free.append(name)
            box.append((lo, hi))

    if not free:
        try:
            report = classify(ssd(make_state(family, **fixed), kind, cfg))
        except CVMagicError as exc:
            raise OptimizationError(f"single-point evaluation failed: {exc}") from exc
        return OptimizeResult({}, report.rom_raw, 1, 1, True, (report.rom_raw,))

    box = np.array(box)
    x0s = start_points(box, int(starts))
    tasks = [(family, fixed, tuple(free), x0, box[:, 0], box[:, 1], kind, cfg) for x0 in x0s]
    results = _parallel_map(_run_start, tasks, threads)

    total = sum(r[2] for r in results)
    usable = [(i, r) for i, r in enumerate(results) if r[4]]
    if not usable:
        raise OptimizationError(f"all {len(results)} starts failed to evaluate")
    best_i, best = max(usable, key=lambda ir: (ir[1][1], -ir[0]))
    params = {n: float(v) for n, v in zip(free, best[0])}
    return OptimizeResult(params, best[1], total, len(results), best[3],
                          tuple(r[1] for r in results))


# --------------------------------------------------------------------------
# hierarchy probe

@dataclass(frozen=True)
class Gradient:
    central: float
    forward: float
    backward: float
    kink: bool


@dataclass(frozen=True)
class HierarchyReport:
    """rom_raw of two states under two maps, plus optional finite-difference gradients.

    ``rom_raw[s][m]`` and ``gradients[s][m]`` are keyed by ``"a"``/``"b"`` and map name.
    ``ordering[m]`` is ``"a>b"``, ``"b>a"`` or ``"a=b"``.
    """

    rom_raw: dict
    ordering: dict
    gradients: dict | None = None
    scan: str | None = None

    def to_json(self) -> dict:
        out = {"rom_raw": self.rom_raw, "ordering": self.ordering, "scan": self.scan}
        if self.gradients is not None:
            out["gradients"] = {s: {m: g.__dict__ for m, g in d.items()} for s, d in self.gradients.items()}
        return out


def _with(model: StateModel, name: str, value: float) -> StateModel:
    params = {k: getattr(model, k) for k in model.__dataclass_fields__}
    if name not in params:
        raise InvalidParameterError(f"{name!r} is not a parameter of {type(model).__name__}")
    params[name] = value
    return type(model)(**params)


def _gradient(model, name, kind, cfg, step):
    if name not in model.__dataclass_fields__:
        raise InvalidParameterError(f"{name!r} is not a parameter of {type(model).__name__}")
    x = getattr(model, name)
    f0 = classify(ssd(model, kind, cfg)).rom_raw
    fp = classify(ssd(_with(model, name, x + step), kind, cfg)).rom_raw
    fm = classify(ssd(_with(model, name, x - step), kind, cfg)).rom_raw
    fwd, bwd = (fp - f0) / step, (f0 - fm) / step
    # a |.| kink shows up as a jump between the one-sided slopes
    kink = abs(fwd - bwd) > 0.1 * max(abs(fwd), abs(bwd)) + 1e-6
    return Gradient((fp - fm) / (2 * step), fwd, bwd, bool(kink))


def hierarchy_probe(state_a: StateModel, state_b: StateModel, map_a, map_b,
                    cfg: NumericsConfig | None = None, scan: str | None = None,
                    step: float = 1e-3, tol: float = 1e-10) -> HierarchyReport:
    """Compare two states under two maps.

    With ``scan`` set, also reports central and one-sided differences of
    rom_raw with respect to that parameter for every (state, map) pair.
    """
    cfg = resolve(cfg)
    kinds = [SsdKind.parse(map_a), SsdKind.parse(map_b)]
    kinds = list(dict.fromkeys(kinds))
    states = {"a": state_a, "b": state_b}
    rom = {s: {k.value: classify(ssd(m, k, cfg)).rom_raw for k in kinds} for s, m in states.items()}
    ordering = {}
    for k in kinds:
        a, b = rom["a"][k.value], rom["b"][k.value]
        ordering[k.value] = "a=b" if abs(a - b) <= tol else ("a>b" if a > b else "b>a")
    grads = None
    if scan is not None:
        grads = {s: {k.value: _gradient(m, scan, k, cfg, step) for k in kinds} for s, m in states.items()}
    return HierarchyReport(rom, ordering, grads, scan)
