"""Wigner functions and Wigner logarithmic negativity.

``W(q, p) = (1/pi) integral dy rho(q + y, q - y) exp(-2 i p y)``, with the
sign chosen so that the p-marginal is the momentum density. The
oscillatory integral is done on Gauss-Legendre panels no wider than half a
period of the fastest phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoverageError, InvalidParameterError, NumericsError
from .numerics import NumericsConfig, composite_rule, refine_by_doubling, resolve
from .states import GkpEnvelope, StateModel, components, psi_eval

#: Smallest GKP width accepted by :func:`wln`.
GKP_MIN_DELTA = 0.2
_PANEL_ORDER = 8
_ROW_CHUNK = 128


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Uniform (q, p) grid plus the half-width of the inner y integral."""

    q_max: float
    p_max: float
    nq: int
    np: int
    x_cutoff: float

    def __post_init__(self):
        for name in ("q_max", "p_max", "x_cutoff"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise InvalidParameterError(f"{name} must be positive and finite")
            object.__setattr__(self, name, v)
        for name in ("nq", "np"):
            v = getattr(self, name)
            if int(v) != v or v < 64:
                raise InvalidParameterError(f"{name} must be an integer >= 64")
            object.__setattr__(self, name, int(v))

    @property
    def q(self):
        return np.linspace(-self.q_max, self.q_max, self.nq)

    @property
    def p(self):
        return np.linspace(-self.p_max, self.p_max, self.np)

    @classmethod
    def auto(cls, model: StateModel, cfg: NumericsConfig | None = None,
             points_per_feature: float = 3.0, max_points: int = 4097) -> "PhaseSpaceGrid":
        """Grid sized from the state's position/momentum extent and finest feature."""
        cfg = resolve(cfg)
        # W decays like |psi|^2, so an amplitude cut at sqrt(tail_eps) is enough
        eps = 1e-2 * math.sqrt(cfg.tail_eps)
        q_max = model.support_bound(eps)
        p_max = model.momentum_bound(eps)
        h = model.feature_scale() / points_per_feature
        nq = min(max(64, 2 * int(math.ceil(q_max / h)) + 1), max_points)
        np_ = min(max(64, 2 * int(math.ceil(p_max / h)) + 1), max_points)
        return cls(q_max, p_max, nq, np_, model.support_bound(cfg.tail_eps))


def _y_rule(Y, p_eff, n_per_panel):
    panels = max(1, int(math.ceil(Y * p_eff / math.pi)))
    return composite_rule(0.0, Y, panels * max(1, n_per_panel // _PANEL_ORDER), _PANEL_ORDER)


def _grid_once(model, q, p, Y, p_eff, n, cfg):
    y, w = _y_rule(Y, p_eff, n)
    C = np.cos(2.0 * np.outer(y, p)) * w[:, None]
    S = np.sin(2.0 * np.outer(y, p)) * w[:, None]
    W = np.zeros((len(q), len(p)))
    for weight, m in components(model):
        for lo in range(0, len(q), _ROW_CHUNK):
            qs = q[lo:lo + _ROW_CHUNK, None]
            F = psi_eval(m, qs + y, cfg) * np.conj(psi_eval(m, qs - y, cfg))
            # strided .real/.imag views would bypass BLAS
            W[lo:lo + _ROW_CHUNK] += weight * (np.ascontiguousarray(F.real) @ C
                                               + np.ascontiguousarray(F.imag) @ S)
    return W * (2.0 / math.pi)


def _check_gkp(model):
    for _, m in components(model):
        if isinstance(m, GkpEnvelope) and m.Delta < GKP_MIN_DELTA:
            raise CoverageError(
                f"GKP Wigner functions need Delta >= {GKP_MIN_DELTA}; got Delta={m.Delta}")


def wigner_grid(model: StateModel, grid: PhaseSpaceGrid, cfg: NumericsConfig | None = None):
    """Wigner function on a grid.

    Returns
    -------
    q, p : ndarray
        Grid axes.
    W : ndarray
        Shape (nq, np). Real by construction: the integrand is Hermitian in y.
    """
    cfg = resolve(cfg)
    _check_gkp(model)
    q, p = grid.q, grid.p
    p_eff = grid.p_max + model.momentum_bound(cfg.tail_eps)
    W, _ = refine_by_doubling(
        lambda n: _grid_once(model, q, p, grid.x_cutoff, p_eff, n, cfg),
        _PANEL_ORDER, cfg.refine_tol, cfg.max_doublings, what="Wigner grid quadrature")
    return q, p, W


def wigner_eval(model: StateModel, q: float, p: float, cfg: NumericsConfig | None = None) -> float:
    """Wigner function at one phase-space point.

    The full symmetric y integral is evaluated; an imaginary part above
    1e-9 signals a quadrature problem and raises NumericsError.

    Examples
    --------
    >>> from cvmagic.states import GaussianPure
    >>> round(wigner_eval(GaussianPure(), 0.0, 0.0), 6)
    0.31831
    """
    cfg = resolve(cfg)
    q, p = float(q), float(p)
    if not (math.isfinite(q) and math.isfinite(p)):
        raise InvalidParameterError("phase-space point must be finite")
    Y = model.support_bound(cfg.tail_eps) + abs(q)
    p_eff = abs(p) + model.momentum_bound(cfg.tail_eps)

    def estimate(n):
        panels = max(1, int(math.ceil(2 * Y * p_eff / math.pi))) * max(1, n // _PANEL_ORDER)
        y, w = composite_rule(-Y, Y, panels, _PANEL_ORDER)
        phase = np.exp(-2j * p * y) * w
        total = 0.0
        for weight, m in components(model):
            total = total + weight * np.sum(psi_eval(m, q + y, cfg) * np.conj(psi_eval(m, q - y, cfg)) * phase)
        return np.asarray(total / math.pi)

    val, _ = refine_by_doubling(estimate, _PANEL_ORDER, cfg.refine_tol, cfg.max_doublings,
                                what="Wigner quadrature")
    val = complex(val)
    if abs(val.imag) > 1e-9:
        raise NumericsError(f"Wigner value has imaginary residue {val.imag:.3g}", estimates=(val,))
    return val.real


def _trapz2(W, q, p):
    return float(np.trapezoid(np.trapezoid(W, p, axis=1), q))


def check_coverage(W, tail_eps: float):
    """Raise CoverageError if any grid edge carries weight above ``tail_eps * max|W|``."""
    peak = float(np.max(np.abs(W)))
    limit = tail_eps * peak
    edges = {"q_min": W[0, :], "q_max": W[-1, :], "p_min": W[:, 0], "p_max": W[:, -1]}
    for name, edge in edges.items():
        worst = float(np.max(np.abs(edge)))
        if worst >= limit:
            raise CoverageError(
                f"grid does not cover the state: |W| at the {name} boundary is "
                f"{worst:.3g}, above {tail_eps:g} * max|W| = {limit:.3g}")


def wln(model: StateModel, grid: PhaseSpaceGrid | None = None, cfg: NumericsConfig | None = None) -> float:
    """Wigner logarithmic negativity ``log2(integral |W| / integral W)``.

    Parameters
    ----------
    model : StateModel
    grid : PhaseSpaceGrid, optional
        Defaults to :meth:`PhaseSpaceGrid.auto`.
    cfg : NumericsConfig, optional

    Raises
    ------
    CoverageError
        If the grid edges are not negligible, or for GKP states with
        Delta below 0.2.
    """
    cfg = resolve(cfg)
    _check_gkp(model)
    if grid is None:
        grid = PhaseSpaceGrid.auto(model, cfg)
    q, p, W = wigner_grid(model, grid, cfg)
    check_coverage(W, cfg.tail_eps)
    total = _trapz2(W, q, p)
    absolute = _trapz2(np.abs(W), q, p)
    return math.log2(absolute / total)
