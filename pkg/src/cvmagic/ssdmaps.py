"""Subsystem decompositions mapping a CV state to a logical qubit.

All three maps are assembled from the same lattice data.  The normalized
wavefunction is sampled at ``k sqrt(pi) + t`` on Gauss-Legendre nodes ``t``
of the centred cell; samples on even cells (``2a sqrt(pi) + t``) and odd
cells (``(2b+1) sqrt(pi) + t``) give the bin masses and the lag sums

    S[s] = sum_{a - b = s} integral dt psi(2a sqrt(pi) + t) conj(psi((2b+1) sqrt(pi) + t)).

The off-diagonal element is then ``(1/pi) sum_s (-1)^s 2/(1-2s) S[s]`` for the
stabilizer map, ``S[0]`` for the modular map and ``(S[0] + S[1]) / 2`` for
the Gaussian-modular map.  Matrices are normalized by their trace at the end.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateStateError, InvalidParameterError, WrongVariantError
from .numerics import SQRT_PI, NumericsConfig, cell_rule, refine_by_doubling, resolve
from .states import (
    GkpEnvelope,
    Mixture,
    StateModel,
    components,
    clear_norm_cache,
    is_ideal_gkp,
    lattice_cells,
    lattice_points,
    psi_eval,
)


class SsdKind(str, enum.Enum):
    STABILIZER = "stabilizer"
    MODULAR = "modular"
    GAUSSIAN_MODULAR = "gaussian_modular"

    @classmethod
    def parse(cls, value) -> "SsdKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidParameterError(
                f"unknown map {value!r}; expected one of {[k.value for k in cls]}") from None


@dataclass(frozen=True)
class QubitDensityMatrix:
    """Normalized single-qubit state; ``rho10`` is ``conj(rho01)``."""

    rho00: float
    rho11: float
    rho01: complex
    kind: SsdKind | None = None

    def __post_init__(self):
        object.__setattr__(self, "rho00", float(self.rho00))
        object.__setattr__(self, "rho11", float(self.rho11))
        object.__setattr__(self, "rho01", complex(self.rho01))
        vals = (self.rho00, self.rho11, self.rho01.real, self.rho01.imag)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParameterError("density matrix entries must be finite")
        if abs(self.rho00 + self.rho11 - 1.0) > 1e-9:
            raise InvalidParameterError(f"trace must be 1, got {self.rho00 + self.rho11!r}")
        if min(self.rho00, self.rho11) < -1e-12:
            raise InvalidParameterError("diagonal entries must be nonnegative")
        if self.rho00 * self.rho11 - abs(self.rho01) ** 2 < -1e-9:
            raise InvalidParameterError("density matrix is not positive semidefinite")

    @classmethod
    def from_matrix(cls, m, kind=None) -> "QubitDensityMatrix":
        """Normalize a 2x2 array by its trace."""
        m = np.asarray(m, dtype=complex)
        tr = (m[0, 0] + m[1, 1]).real
        if not tr > 1e-12:
            raise DegenerateStateError(f"qubit trace {tr:g} too small to normalize", estimates=(tr,))
        return cls(m[0, 0].real / tr, m[1, 1].real / tr, m[0, 1] / tr, kind)

    def matrix(self) -> np.ndarray:
        return np.array([[self.rho00, self.rho01], [np.conj(self.rho01), self.rho11]], dtype=complex)

    def to_json(self) -> dict:
        out = {"rho00": self.rho00, "rho11": self.rho11,
               "rho01_re": self.rho01.real, "rho01_im": self.rho01.imag}
        if self.kind is not None:
            out["map"] = SsdKind(self.kind).value
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "QubitDensityMatrix":
        try:
            kind = SsdKind.parse(obj["map"]) if obj.get("map") is not None else None
            return cls(obj["rho00"], obj["rho11"], complex(obj["rho01_re"], obj["rho01_im"]), kind)
        except KeyError as exc:
            raise InvalidParameterError(f"missing density matrix field {exc}") from None


@dataclass(frozen=True)
class LogicalResidual:
    """Hermitian 2x2 matrix that need not have unit trace."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise InvalidParameterError("residual must be 2x2")
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise InvalidParameterError("residual must be Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.matrix)))


# --------------------------------------------------------------------------
# lattice assembly

def _lag_sums(psi, ks, w):
    """Bin masses and off-diagonal lag sums for samples ``psi[k, j]``."""
    even = ks % 2 == 0
    E, O = psi[even], psi[~even]
    a = ks[even] // 2
    b = (ks[~even] - 1) // 2
    d0 = float(np.sum(np.abs(E) ** 2 * w))
    d1 = float(np.sum(np.abs(O) ** 2 * w))
    G = (E * w) @ O.conj().T
    lag = (a[:, None] - b[None, :]).ravel()
    off = lag - lag.min()
    S = np.bincount(off, G.real.ravel()) + 1j * np.bincount(off, G.imag.ravel())
    return d0, d1, lag.min(), S


def _stab_coeffs(lags):
    lags = np.asarray(lags, dtype=float)
    return np.where(lags % 2 == 0, 1.0, -1.0) * 2.0 / (1.0 - 2.0 * lags) / math.pi


def _component_elements(model, cfg: NumericsConfig) -> np.ndarray:
    """Unnormalized ``[d0, d1, stab01, mod01, gmod01]`` for one pure component."""
    if is_ideal_gkp(model):
        c0, c1 = model.coefficients()
        off = c0 * np.conj(c1)
        return np.array([abs(c0) ** 2, abs(c1) ** 2, off, off, off], dtype=complex)
    K = lattice_cells(model, cfg)

    def estimate(n):
        X, ks, w = lattice_points(K, n)
        d0, d1, lo, S = _lag_sums(psi_eval(model, X, cfg), ks, w)
        lags = np.arange(lo, lo + len(S))
        stab = np.sum(_stab_coeffs(lags) * S)
        s0 = S[-lo] if 0 <= -lo < len(S) else 0.0
        s1 = S[1 - lo] if 0 <= 1 - lo < len(S) else 0.0
        return np.array([d0, d1, stab, s0, 0.5 * (s0 + s1)], dtype=complex)

    value, _ = refine_by_doubling(estimate, cfg.nodes_per_cell, cfg.refine_tol,
                                  cfg.max_doublings, what="subsystem decomposition quadrature")
    return value


@lru_cache(maxsize=4096)
def _elements(model: StateModel, cfg: NumericsConfig) -> np.ndarray:
    total = np.zeros(5, dtype=complex)
    for w, m in components(model):
        total = total + w * _component_elements(m, cfg)
    total.setflags(write=False)
    return total


def clear_caches():
    """Drop cached decompositions and wavefunction norms (useful for timing)."""
    _elements.cache_clear()
    clear_norm_cache()


_SLOT = {SsdKind.STABILIZER: 2, SsdKind.MODULAR: 3, SsdKind.GAUSSIAN_MODULAR: 4}


def ssd_unnormalized(model: StateModel, kind, cfg: NumericsConfig | None = None) -> np.ndarray:
    """2x2 matrix of a map before trace normalization (components at unit norm)."""
    kind = SsdKind.parse(kind)
    e = _elements(model, resolve(cfg))
    off = e[_SLOT[kind]]
    return np.array([[e[0].real, off], [np.conj(off), e[1].real]], dtype=complex)


def ssd(model: StateModel, kind, cfg: NumericsConfig | None = None) -> QubitDensityMatrix:
    """Apply the decomposition ``kind`` and normalize to unit trace."""
    kind = SsdKind.parse(kind)
    return QubitDensityMatrix.from_matrix(ssd_unnormalized(model, kind, cfg), kind)


def stabilizer_ssd(model: StateModel, cfg: NumericsConfig | None = None) -> QubitDensityMatrix:
    """Qubit state produced by averaged ideal GKP error correction.

    Examples
    --------
    >>> from cvmagic.states import GaussianPure
    >>> q = stabilizer_ssd(GaussianPure())
    >>> round(2 * abs(q.rho01.real) + 2 * abs(q.rho01.imag) + abs(q.rho00 - q.rho11), 3)
    1.16
    """
    return ssd(model, SsdKind.STABILIZER, cfg)


def modular_ssd(model: StateModel, cfg: NumericsConfig | None = None) -> QubitDensityMatrix:
    """Qubit state from binning position modulo ``2 sqrt(pi)`` and tracing the gauge."""
    return ssd(model, SsdKind.MODULAR, cfg)


def gaussian_modular_ssd(model: StateModel, cfg: NumericsConfig | None = None) -> QubitDensityMatrix:
    """Gaussian-implementable part of the modular map, normalized."""
    return ssd(model, SsdKind.GAUSSIAN_MODULAR, cfg)


def modular_nongaussian_part(model: StateModel, cfg: NumericsConfig | None = None) -> LogicalResidual:
    """Unnormalized modular result minus unnormalized Gaussian-modular result.

    Only the off-diagonal survives, ``(S[0] - S[1]) / 2``; it vanishes for
    position-symmetric states.
    """
    m = ssd_unnormalized(model, SsdKind.MODULAR, cfg) - ssd_unnormalized(model, SsdKind.GAUSSIAN_MODULAR, cfg)
    return LogicalResidual(m)


def ssd_all(model: StateModel, cfg: NumericsConfig | None = None) -> dict:
    return {k: ssd(model, k, cfg) for k in SsdKind}


# --------------------------------------------------------------------------
# definitional oracles

def _pi_t_blocks(model, cfg, nq, np_):
    """Integrate ``rho_Pi(t)`` and ``sin(t_p sqrt(pi)) rho_Pi(t)`` over the (t_q, t_p) cell."""
    tq, wq = cell_rule(nq)
    tp, wp = cell_rule(np_)
    plain = np.zeros((2, 2), dtype=complex)
    weighted = np.zeros((2, 2), dtype=complex)
    for weight, m in components(model):
        K = lattice_cells(m, cfg)
        ks = np.arange(-K, K + 1)
        X = ks[:, None] * SQRT_PI + tq[None, :]           # (k, q)
        psi = psi_eval(m, X, cfg)
        phase = np.exp(-1j * np.outer(tp, ks * SQRT_PI))  # (p, k)
        F = []
        for parity in (0, 1):
            sel = ks % 2 == parity
            F.append(phase[:, sel] @ psi[sel])            # (p, q)
        for l in (0, 1):
            for lp in (0, 1):
                prod = F[l] * np.conj(F[lp]) * wq[None, :] * wp[:, None]
                plain[l, lp] += weight * prod.sum() / SQRT_PI
                weighted[l, lp] += weight * (np.sin(tp * SQRT_PI)[:, None] * prod).sum() / SQRT_PI
    return plain, weighted


def _oracle_blocks(model, cfg):
    cfg = resolve(cfg)

    def estimate(n):
        p, w = _pi_t_blocks(model, cfg, n, n)
        return np.stack([p, w])

    value, _ = refine_by_doubling(estimate, cfg.nodes_per_cell, cfg.refine_tol,
                                  cfg.max_doublings, what="definitional double integral")
    return value


def stabilizer_ssd_oracle(model: StateModel, cfg: NumericsConfig | None = None) -> QubitDensityMatrix:
    """Stabilizer map by direct (t_q, t_p) quadrature of the error-correction average.

    The momentum integral is carried out numerically over phase-weighted
    position-lattice sums instead of in closed form, so it is an independent
    check of :func:`stabilizer_ssd`.  Slow; intended for tests.
    """
    if _has_ideal(model):
        return stabilizer_ssd(model, cfg)
    return QubitDensityMatrix.from_matrix(_oracle_blocks(model, cfg)[0], SsdKind.STABILIZER)


def nongaussian_part_oracle(model: StateModel, cfg: NumericsConfig | None = None) -> LogicalResidual:
    """Non-Gaussian modular residual ``-i integral sin(t_p sqrt(pi))/2 (Z rho_Pi - rho_Pi Z)`` by quadrature."""
    if _has_ideal(model):
        return LogicalResidual(np.zeros((2, 2)))
    w = _oracle_blocks(model, cfg)[1]
    Z = np.diag([1.0, -1.0])
    return LogicalResidual(-0.5j * (Z @ w - w @ Z))


def _has_ideal(model) -> bool:
    return any(is_ideal_gkp(m) for _, m in components(model))


def gkp_offdiag_localized_approx(model: StateModel, cfg: NumericsConfig | None = None) -> complex:
    """Single-overlap estimate ``4 integral_{-sqrt(pi)/2}^{sqrt(pi)/2} psi(t) conj(psi(t + sqrt(pi))) dt``.

    Meaningful for symmetric states concentrated within ``|x| < sqrt(pi)``;
    divide by pi to compare with the unnormalized stabilizer off-diagonal.
    The validity condition is not checked.
    """
    if isinstance(model, Mixture):
        raise WrongVariantError("the localized approximation needs a pure state")
    if isinstance(model, GkpEnvelope) and model.is_ideal:
        raise InvalidParameterError("the ideal GKP state has no wavefunction")
    cfg = resolve(cfg)

    def estimate(n):
        t, w = cell_rule(n)
        return np.sum(w * psi_eval(model, t, cfg) * np.conj(psi_eval(model, t + SQRT_PI, cfg)))

    value, _ = refine_by_doubling(estimate, cfg.nodes_per_cell, cfg.refine_tol, cfg.max_doublings)
    return complex(4.0 * value)
