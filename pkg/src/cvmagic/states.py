"""Single-mode CV state families and their position-basis wavefunctions.

Units are hbar = 1 with [q, p] = i, so the vacuum is
``psi(x) = pi**-0.25 * exp(-x**2 / 2)``.  Every family exposes an
unnormalized ``raw(x)``; :func:`psi_eval` divides by the cached norm.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    DegenerateStateError,
    InvalidParameterError,
    WrongVariantError,
)
from .numerics import SQRT_PI, NumericsConfig, cell_rule, refine_by_doubling, resolve

TWO_PI = 2.0 * math.pi
_PI_QUARTER = math.pi ** -0.25
# relative size of the first dropped theta-series term
THETA_EPS = 1e-17


def _finite(name, value):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(v):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")
    return v


def _wrap(angle):
    a = math.fmod(angle, TWO_PI)
    if a < 0:
        a += TWO_PI
    return 0.0 if a == TWO_PI else a


def _amp_cut(eps):
    """Distance (in Gaussian widths) at which exp(-u^2/2) falls below eps."""
    return math.sqrt(2.0 * math.log(1.0 / eps))


# --------------------------------------------------------------------------
# Jacobi theta function

def theta_series_cutoff(Delta: float) -> int:
    """Fixed-width truncation ``ceil(6 / (sqrt(pi) Delta)) + 4`` for the GKP theta series."""
    return int(math.ceil(6.0 / (SQRT_PI * Delta))) + 4


def jacobi_theta(z, t: float, terms: int | None = None, eps: float = THETA_EPS):
    """Jacobi theta function ``sum_m exp(-pi m^2 t) exp(2 pi i m z)`` for real z.

    Parameters
    ----------
    z : array_like
        Real argument.
    t : float
        Imaginary part of the nome parameter, ``tau = i t`` with t > 0.
    terms : int, optional
        If given, sum the direct series over ``|m| <= terms`` exactly.
        Otherwise the direct series is used for ``t >= 1`` and the
        Poisson-dual series ``t**-0.5 sum_k exp(-pi (z - k)^2 / t)`` for
        smaller t, each truncated once terms fall below ``eps``.

    Returns
    -------
    ndarray
        Real values with the shape of ``z``.
    """
    z = np.asarray(z, dtype=float)
    if not t > 0:
        raise InvalidParameterError("theta parameter t must be positive")
    if terms is not None or t >= 1.0:
        M = int(terms) if terms is not None else int(math.ceil(math.sqrt(math.log(1 / eps) / (math.pi * t)))) + 1
        m = np.arange(1, M + 1, dtype=float)
        coef = np.exp(-math.pi * m * m * t)
        out = 1.0 + 2.0 * np.tensordot(np.cos(TWO_PI * z[..., None] * m), coef, axes=([-1], [0]))
        return out
    J = int(math.ceil(math.sqrt(t * math.log(1 / eps) / math.pi))) + 1
    k0 = np.rint(z)
    d = (z - k0)[..., None] - np.arange(-J, J + 1, dtype=float)
    return np.exp(-math.pi * d * d / t).sum(axis=-1) / math.sqrt(t)


# --------------------------------------------------------------------------
# families

@dataclass(frozen=True)
class GaussianPure:
    """Squeezed, rotated and displaced vacuum ``V(s) R(Theta) S(zeta) |0>``.

    ``zeta > 0`` narrows the position distribution,
    ``Var(q) = exp(-2 zeta) / 2`` at ``Theta = 0``.
    """

    zeta: float = 0.0
    Theta: float = 0.0
    s_q: float = 0.0
    s_p: float = 0.0

    family = "gaussian"

    def __post_init__(self):
        for name in ("zeta", "Theta", "s_q", "s_p"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        object.__setattr__(self, "Theta", _wrap(self.Theta))

    def covariance(self):
        """Position variance and symmetrized q-p covariance of the state."""
        c, s = math.cos(self.Theta), math.sin(self.Theta)
        em, ep = math.exp(-2 * self.zeta), math.exp(2 * self.zeta)
        vqq = 0.5 * (c * c * em + s * s * ep)
        vqp = 0.5 * c * s * (em - ep)
        return vqq, vqp

    def quadratic_form(self):
        """Coefficients (a, b, c) with ``psi(x) = exp(-a x^2/2 + b x + c)``, already normalized."""
        vqq, vqp = self.covariance()
        A = (1.0 - 2j * vqp) / (2.0 * vqq)
        b = A * self.s_q + 1j * self.s_p
        c = -0.5 * A * self.s_q ** 2 + 0.25 * math.log(A.real / math.pi)
        return A, b, c

    def raw(self, x):
        a, b, c = self.quadratic_form()
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * a * x * x + b * x + c)

    def support_bound(self, eps):
        a = self.quadratic_form()[0]
        return abs(self.s_q) + _amp_cut(eps) / math.sqrt(a.real)

    def momentum_bound(self, eps):
        c, s = math.cos(self.Theta), math.sin(self.Theta)
        vpp = 0.5 * (c * c * math.exp(2 * self.zeta) + s * s * math.exp(-2 * self.zeta))
        return abs(self.s_p) + _amp_cut(eps) * math.sqrt(2 * vpp)

    def feature_scale(self):
        vqq, _ = self.covariance()
        c, s = math.cos(self.Theta), math.sin(self.Theta)
        vpp = 0.5 * (c * c * math.exp(2 * self.zeta) + s * s * math.exp(-2 * self.zeta))
        return math.sqrt(min(vqq, vpp))


@dataclass(frozen=True)
class GkpEnvelope:
    """Finite-energy GKP qubit ``cos(theta/2)|0> + exp(i phi) sin(theta/2)|1>``.

    Basis wavefunctions are ``exp(-Delta^2 x^2 / 2) * theta(x / (2 sqrt(pi)) - l/2, i Delta^2 / 2)``.
    ``Delta = 0`` marks the ideal code state, which has no wavefunction and is
    handled analytically by the decomposition maps.
    """

    Delta: float
    theta: float = 0.0
    phi: float = 0.0

    family = "gkp"

    def __post_init__(self):
        for name in ("Delta", "theta", "phi"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))
        if self.Delta < 0:
            raise InvalidParameterError(f"Delta must be >= 0, got {self.Delta}")
        if not (-1e-12 <= self.theta <= math.pi + 1e-12):
            raise InvalidParameterError(f"theta must lie in [0, pi], got {self.theta}")
        object.__setattr__(self, "theta", min(max(self.theta, 0.0), math.pi))
        object.__setattr__(self, "phi", _wrap(self.phi))

    @property
    def is_ideal(self) -> bool:
        return self.Delta == 0.0

    def coefficients(self):
        return math.cos(self.theta / 2), math.sin(self.theta / 2) * complex(math.cos(self.phi), math.sin(self.phi))

    def basis_raw(self, x, label: int):
        if self.is_ideal:
            raise InvalidParameterError("the ideal GKP state (Delta = 0) has no wavefunction")
        x = np.asarray(x, dtype=float)
        t = 0.5 * self.Delta ** 2
        return np.exp(-0.5 * (self.Delta * x) ** 2) * jacobi_theta(x / (2 * SQRT_PI) - 0.5 * label, t)

    def raw(self, x):
        c0, c1 = self.coefficients()
        out = np.zeros(np.shape(x), dtype=complex)
        if c0 != 0:
            out += c0 * self.basis_raw(x, 0)
        if c1 != 0:
            out += c1 * self.basis_raw(x, 1)
        return out

    def support_bound(self, eps):
        if self.is_ideal:
            return math.inf
        u = _amp_cut(eps)
        return u / self.Delta + u * self.Delta + SQRT_PI

    def momentum_bound(self, eps):
        return self.support_bound(eps)

    def feature_scale(self):
        return min(self.Delta, 1.0) / math.sqrt(2.0)


@dataclass(frozen=True)
class Cat:
    """Even (``|alpha> + |-alpha>``) or odd (``|alpha> - |-alpha>``) cat with ``alpha = r exp(i Phi)``."""

    r: float
    Phi: float = 0.0
    logical_label: str = "even"

    family = "cat"

    def __post_init__(self):
        object.__setattr__(self, "r", _finite("r", self.r))
        object.__setattr__(self, "Phi", _wrap(_finite("Phi", self.Phi)))
        if self.r < 0:
            raise InvalidParameterError(f"r must be >= 0, got {self.r}")
        if self.logical_label not in ("even", "odd"):
            raise InvalidParameterError(f"logical_label must be 'even' or 'odd', got {self.logical_label!r}")

    def _coherent(self, x, sign):
        x = np.asarray(x, dtype=float)
        q0 = sign * math.sqrt(2) * self.r * math.cos(self.Phi)
        p0 = sign * math.sqrt(2) * self.r * math.sin(self.Phi)
        return _PI_QUARTER * np.exp(-0.5 * (x - q0) ** 2 + 1j * p0 * x)

    def raw(self, x):
        sign = 1.0 if self.logical_label == "even" else -1.0
        return self._coherent(x, 1.0) + sign * self._coherent(x, -1.0)

    def support_bound(self, eps):
        return math.sqrt(2) * self.r * abs(math.cos(self.Phi)) + _amp_cut(eps)

    def momentum_bound(self, eps):
        return math.sqrt(2) * self.r * abs(math.sin(self.Phi)) + _amp_cut(eps)

    def feature_scale(self):
        # interference fringes have period pi / (2 sqrt(2) r)
        return min(1.0, math.pi / (2.0 * math.sqrt(2.0) * self.r + 1e-300)) / math.sqrt(2.0)


@dataclass(frozen=True)
class CubicPhase:
    """Cubic phase state ``exp(i gamma q^3) S(zeta) |0>``."""

    gamma: float = 0.0
    zeta: float = 0.0

    family = "cubic"

    def __post_init__(self):
        for name in ("gamma", "zeta"):
            object.__setattr__(self, name, _finite(name, getattr(self, name)))

    def raw(self, x):
        x = np.asarray(x, dtype=float)
        env = _PI_QUARTER * math.exp(0.5 * self.zeta) * np.exp(-0.5 * math.exp(2 * self.zeta) * x * x)
        return env * np.exp(1j * self.gamma * x ** 3)

    def support_bound(self, eps):
        return _amp_cut(eps) * math.exp(-self.zeta)

    def momentum_bound(self, eps):
        xb = self.support_bound(eps)
        return 3.0 * abs(self.gamma) * xb * xb + _amp_cut(eps) * math.exp(self.zeta)

    def feature_scale(self):
        width = math.exp(-abs(self.zeta)) / math.sqrt(2.0)
        if self.gamma == 0:
            return width
        return min(width, abs(3.0 * self.gamma) ** (-1.0 / 3.0) / 2.0)


PureModel = Union[GaussianPure, GkpEnvelope, Cat, CubicPhase]
PURE_TYPES = (GaussianPure, GkpEnvelope, Cat, CubicPhase)


@dataclass(frozen=True)
class Mixture:
    """Convex combination of pure states, given as ``((weight, model), ...)``."""

    components: tuple = field(default_factory=tuple)

    family = "mixture"

    def __post_init__(self):
        comps = tuple((float(w), m) for w, m in self.components)
        if not comps:
            raise InvalidParameterError("a mixture needs at least one component")
        for w, m in comps:
            if not isinstance(m, PURE_TYPES):
                raise WrongVariantError("mixture components must be pure state models")
            if not (math.isfinite(w) and w > 0):
                raise InvalidParameterError(f"mixture weights must be positive, got {w}")
        total = sum(w for w, _ in comps)
        if abs(total - 1.0) > 1e-12:
            raise InvalidParameterError(f"mixture weights must sum to 1, got {total!r}")
        object.__setattr__(self, "components", comps)

    def support_bound(self, eps):
        return max(m.support_bound(eps) for _, m in self.components)

    def momentum_bound(self, eps):
        return max(m.momentum_bound(eps) for _, m in self.components)

    def feature_scale(self):
        return min(m.feature_scale() for _, m in self.components)


StateModel = Union[GaussianPure, GkpEnvelope, Cat, CubicPhase, Mixture]
FAMILIES = {"gaussian": GaussianPure, "gkp": GkpEnvelope, "cat": Cat, "cubic": CubicPhase}


def components(model: StateModel):
    """The model as a list of ``(weight, pure_model)`` pairs."""
    if isinstance(model, Mixture):
        return list(model.components)
    if isinstance(model, PURE_TYPES):
        return [(1.0, model)]
    raise WrongVariantError(f"not a state model: {type(model).__name__}")


def is_ideal_gkp(model) -> bool:
    return isinstance(model, GkpEnvelope) and model.is_ideal


# --------------------------------------------------------------------------
# support and normalization

def lattice_cells(model: StateModel, cfg: NumericsConfig | None = None) -> int:
    """Half-width K (in cells of width sqrt(pi)) of the truncated support.

    The support is the smallest multiple of sqrt(pi) beyond which every
    component's amplitude is below ``tail_eps`` times its peak, at least
    ``8 sqrt(pi)`` and at most ``lattice_halfwidth`` cells.
    """
    cfg = resolve(cfg)
    xmax = model.support_bound(cfg.tail_eps)
    k = max(8, int(math.ceil(xmax / SQRT_PI)) if math.isfinite(xmax) else cfg.lattice_halfwidth)
    return min(k, cfg.lattice_halfwidth)


def support_halfwidth(model: StateModel, cfg: NumericsConfig | None = None) -> float:
    return lattice_cells(model, cfg) * SQRT_PI


def lattice_points(K: int, n: int):
    """Cell-wise Gauss-Legendre samples ``k sqrt(pi) + t_j`` for ``|k| <= K``.

    Returns the (2K+1, n) position array, the cell indices and the node weights.
    """
    t, w = cell_rule(n)
    ks = np.arange(-K, K + 1)
    return ks[:, None] * SQRT_PI + t[None, :], ks, w


class _NormCache:
    def __init__(self, maxsize=8192):
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()
        self._maxsize = maxsize

    def clear(self):
        with self._lock:
            self._data.clear()

    def get(self, key, compute):
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                return self._data[key]
            value = compute()
            self._data[key] = value
            if len(self._data) > self._maxsize:
                self._data.popitem(last=False)
            return value


_NORMS = _NormCache()


def clear_norm_cache():
    _NORMS.clear()


def _raw_norm(model: PureModel, cfg: NumericsConfig) -> float:
    if is_ideal_gkp(model):
        raise InvalidParameterError("the ideal GKP state (Delta = 0) is not normalizable")
    return _integrate_abs2(model.raw, lattice_cells(model, cfg), cfg)


def _integrate_abs2(f, K, cfg):
    def estimate(n):
        X, _, w = lattice_points(K, n)
        return np.sum(np.abs(f(X)) ** 2 * w)

    value, _ = refine_by_doubling(estimate, cfg.nodes_per_cell, cfg.refine_tol,
                                  cfg.max_doublings, what="norm integral", relative=True)
    return float(value)


def raw_norm_sq(model: PureModel, cfg: NumericsConfig | None = None) -> float:
    """Cached ``integral |raw(x)|^2 dx`` for a pure model."""
    cfg = resolve(cfg)
    return _NORMS.get((model, cfg), lambda: _raw_norm(model, cfg))


def _scale(model: PureModel, cfg: NumericsConfig) -> float:
    n = raw_norm_sq(model, cfg)
    if not (math.isfinite(n) and n > 1e-280):
        raise DegenerateStateError(f"{model!r} has vanishing norm ({n:g})", estimates=(n,))
    return 1.0 / math.sqrt(n)


def norm_sq(model: StateModel, cfg: NumericsConfig | None = None, normalized: bool = False) -> float:
    """Integral of ``|psi|^2`` (or the trace of a mixture).

    Parameters
    ----------
    model : StateModel
    cfg : NumericsConfig, optional
    normalized : bool
        For pure models, integrate the normalized wavefunction instead of the
        raw one. Mixtures are always built from normalized components.
    """
    cfg = resolve(cfg)
    if isinstance(model, Mixture):
        return float(sum(w * norm_sq(m, cfg, normalized=True) for w, m in model.components))
    n = raw_norm_sq(model, cfg)
    if not normalized:
        return n
    return _integrate_abs2(lambda x: psi_eval(model, x, cfg), lattice_cells(model, cfg), cfg)


# --------------------------------------------------------------------------
# evaluation

def psi_eval(model: PureModel, x, cfg: NumericsConfig | None = None):
    """Normalized wavefunction ``psi(x)`` of a pure model (vectorized over x)."""
    if isinstance(model, Mixture):
        raise WrongVariantError("mixtures have no wavefunction; use rho_eval")
    if not isinstance(model, PURE_TYPES):
        raise WrongVariantError(f"not a state model: {type(model).__name__}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidParameterError("positions must be finite")
    cfg = resolve(cfg)
    return model.raw(x) * _scale(model, cfg)


def rho_eval(model: StateModel, x, x_prime, cfg: NumericsConfig | None = None):
    """Density-matrix kernel ``rho(x, x')``, broadcasting over x and x_prime."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(x_prime, dtype=float)
    out = 0.0
    for w, m in components(model):
        out = out + w * psi_eval(m, x, cfg) * np.conj(psi_eval(m, xp, cfg))
    return out


def is_position_symmetric(model: StateModel, tol: float = 1e-10, cfg: NumericsConfig | None = None) -> bool:
    """Whether ``rho(x, x') == rho(-x, -x')`` on a fixed sample grid."""
    if tol <= 0:
        raise InvalidParameterError("tol must be positive")
    if is_ideal_gkp(model):
        return True
    cfg = resolve(cfg)
    L = min(model.support_bound(cfg.tail_eps), 12.0)
    g = np.linspace(-L, L, 41) + 0.0123
    X, XP = np.meshgrid(g, g, indexing="ij")
    diff = rho_eval(model, X, XP, cfg) - rho_eval(model, -X, -XP, cfg)
    return bool(np.max(np.abs(diff)) <= tol)


# --------------------------------------------------------------------------
# JSON

def state_from_json(obj) -> StateModel:
    """Build a state from ``{"family": ..., "params": {...}}``.

    Mixture params are ``{"components": [{"weight": w, "state": {...}}, ...]}``.
    """
    if not isinstance(obj, dict) or "family" not in obj:
        raise InvalidParameterError("state JSON must be an object with a 'family' key")
    fam = obj["family"]
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise InvalidParameterError("'params' must be an object")
    if fam == "mixture":
        comps = params.get("components")
        if not isinstance(comps, list):
            raise InvalidParameterError("mixture params need a 'components' list")
        pairs = []
        for c in comps:
            if not isinstance(c, dict) or set(c) != {"weight", "state"}:
                raise InvalidParameterError("mixture components must be {'weight', 'state'} objects")
            sub = state_from_json(c["state"])
            if isinstance(sub, Mixture):
                raise WrongVariantError("nested mixtures are not supported")
            pairs.append((_finite("weight", c["weight"]), sub))
        return Mixture(tuple(pairs))
    if fam not in FAMILIES:
        raise InvalidParameterError(f"unknown state family {fam!r}")
    cls = FAMILIES[fam]
    allowed = set(cls.__dataclass_fields__)
    unknown = set(params) - allowed
    if unknown:
        raise InvalidParameterError(f"unknown {fam} parameters: {sorted(unknown)}")
    try:
        return cls(**params)
    except TypeError as exc:
        raise InvalidParameterError(str(exc)) from None


def state_to_json(model: StateModel) -> dict:
    if isinstance(model, Mixture):
        return {"family": "mixture", "params": {"components": [
            {"weight": w, "state": state_to_json(m)} for w, m in model.components]}}
    params = {k: getattr(model, k) for k in model.__dataclass_fields__}
    return {"family": model.family, "params": params}


def make_state(family: str, **params) -> StateModel:
    """Construct a pure state from a family tag and keyword parameters."""
    return state_from_json({"family": family, "params": params})
