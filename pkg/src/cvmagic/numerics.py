"""Shared quadrature settings and helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

from .errors import InvalidParameterError, NumericsError

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class NumericsConfig:
    """Truncation and quadrature settings used by every integral evaluation.

    Parameters
    ----------
    nodes_per_cell : int
        Starting number of Gauss-Legendre nodes on each cell of width sqrt(pi).
    lattice_halfwidth : int
        Hard cap on the number of cells on either side of the origin.
    tail_eps : float
        Relative amplitude below which wavefunction tails are dropped.
    refine_tol : float
        Absolute tolerance for refinement by doubling.
    max_doublings : int
        Number of node doublings attempted before giving up.
    """

    nodes_per_cell: int = 16
    lattice_halfwidth: int = 2000
    tail_eps: float = 1e-12
    refine_tol: float = 1e-11
    max_doublings: int = 9

    def __post_init__(self):
        if int(self.nodes_per_cell) != self.nodes_per_cell or self.nodes_per_cell < 8:
            raise InvalidParameterError("nodes_per_cell must be an integer >= 8")
        if int(self.lattice_halfwidth) != self.lattice_halfwidth or self.lattice_halfwidth < 1:
            raise InvalidParameterError("lattice_halfwidth must be a positive integer")
        for name in ("tail_eps", "refine_tol"):
            v = getattr(self, name)
            if not (0.0 < v <= 1e-3):
                raise InvalidParameterError(f"{name} must lie in (0, 1e-3], got {v!r}")
        if self.max_doublings < 0:
            raise InvalidParameterError("max_doublings must be >= 0")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict | None) -> "NumericsConfig":
        if not obj:
            return cls()
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise InvalidParameterError(f"unknown numerics fields: {sorted(unknown)}")
        return cls(**obj)

    def with_(self, **changes) -> "NumericsConfig":
        return replace(self, **changes)


DEFAULT_CONFIG = NumericsConfig()


def resolve(cfg: NumericsConfig | None) -> NumericsConfig:
    return DEFAULT_CONFIG if cfg is None else cfg


@lru_cache(maxsize=64)
def _legendre(n: int):
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float, b: float):
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    x, w = _legendre(int(n))
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def cell_rule(n: int):
    """Gauss-Legendre rule on the centred cell [-sqrt(pi)/2, sqrt(pi)/2]."""
    return gauss_legendre(n, -0.5 * SQRT_PI, 0.5 * SQRT_PI)


def composite_rule(a: float, b: float, panels: int, order: int = 8):
    """Composite Gauss-Legendre rule with equal-width panels."""
    x, w = _legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def refine_by_doubling(estimate: Callable[[int], np.ndarray], n0: int, tol: float,
                       max_doublings: int, what: str = "integral", relative: bool = False):
    """Evaluate ``estimate(n)`` for n0, 2*n0, ... until successive results agree.

    Agreement is measured in the max-abs norm over all entries (scaled by
    ``max(1, max|estimate|)`` when ``relative``). Returns the finer of the two
    agreeing estimates and the node count that produced it.
    """
    n = int(n0)
    prev = np.asarray(estimate(n))
    last = (prev,)
    for _ in range(max_doublings):
        n *= 2
        cur = np.asarray(estimate(n))
        scale = max(1.0, float(np.max(np.abs(cur)))) if relative else 1.0
        if np.max(np.abs(cur - prev)) < tol * scale:
            return cur, n
        last = (prev, cur)
        prev = cur
    raise NumericsError(
        f"{what} did not converge to {tol:g} after {max_doublings} doublings (n={n})",
        estimates=last,
    )
