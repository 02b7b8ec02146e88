"""Property-based checks on random states."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from cvmagic.magic import classify, from_bloch, rom_single
from cvmagic.numerics import NumericsConfig
from cvmagic.ssdmaps import QubitDensityMatrix, ssd, ssd_unnormalized
from cvmagic.states import Cat, GaussianPure, GkpEnvelope, Mixture, state_from_json, state_to_json

SQRT_PI = math.sqrt(math.pi)
KINDS = ["stabilizer", "modular", "gaussian_modular"]
PROPS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])

gaussians = st.builds(
    GaussianPure,
    zeta=st.floats(-1.2, 1.2),
    Theta=st.floats(-math.pi, math.pi),
    s_q=st.floats(-2, 2),
    s_p=st.floats(-2, 2),
)
gkps = st.builds(GkpEnvelope, Delta=st.floats(0.15, 1.2), theta=st.floats(0, math.pi), phi=st.floats(0, 2 * math.pi))
cats = st.builds(Cat, r=st.floats(0.1, 2.5), Phi=st.floats(-math.pi, math.pi))
pure_states = st.one_of(gaussians, gkps, cats)
bloch_vectors = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(
    lambda v: v[0] ** 2 + v[1] ** 2 + v[2] ** 2 <= 1)


def shifted(g: GaussianPure, dq=0.0, dp=0.0):
    return GaussianPure(g.zeta, g.Theta, g.s_q + dq, g.s_p + dp)


@PROPS
@given(pure_states, st.sampled_from(KINDS))
def test_ssd_is_a_density_matrix(model, kind):
    m = ssd(model, kind).matrix()
    assert np.allclose(m, m.conj().T, atol=1e-14)
    assert np.trace(m).real == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(m).min() > -1e-9


@PROPS
@given(pure_states, st.sampled_from(KINDS))
def test_report_ranges(model, kind):
    r = classify(ssd(model, kind))
    assert 1.0 <= r.rom <= math.sqrt(3) + 1e-9
    assert 0.5 <= r.fidelity_T <= 1 + 1e-12
    assert 0.5 <= r.fidelity_H <= 1 + 1e-12
    assert r.t_distillable == (r.rom_raw > 3 / math.sqrt(7))


@PROPS
@given(gaussians, st.sampled_from(KINDS))
def test_stabilizer_displacements_leave_logical_state(g, kind):
    base = ssd(g, kind).matrix()
    for dq, dp in ((2 * SQRT_PI, 0.0), (0.0, 2 * SQRT_PI), (-2 * SQRT_PI, 2 * SQRT_PI)):
        assert np.max(np.abs(ssd(shifted(g, dq, dp), kind).matrix() - base)) < 1e-8


@PROPS
@given(gaussians, st.sampled_from(KINDS))
def test_logical_pauli_displacements(g, kind):
    m = ssd(g, kind).matrix()
    X = np.array([[0, 1], [1, 0]])
    Z = np.diag([1, -1])
    mx = ssd(shifted(g, dq=SQRT_PI), kind).matrix()
    assert np.max(np.abs(ssd(shifted(g, dp=SQRT_PI), kind).matrix() - Z @ m @ Z)) < 1e-8
    if kind == "stabilizer":
        assert np.max(np.abs(mx - X @ m @ X)) < 1e-8
    else:
        # modular bins pair 2n with 2n+1 only, so a half-period shift swaps populations
        # but re-pairs the coherences
        assert np.max(np.abs(np.diag(mx) - np.diag(m)[::-1])) < 1e-8


@PROPS
@given(gaussians, gaussians, st.floats(0.05, 0.95), st.sampled_from(KINDS))
def test_unnormalized_map_is_linear(g1, g2, w, kind):
    mix = Mixture(((w, g1), (1 - w, g2)))
    lhs = ssd_unnormalized(mix, kind)
    rhs = w * ssd_unnormalized(g1, kind) + (1 - w) * ssd_unnormalized(g2, kind)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


@PROPS
@given(pure_states)
def test_state_json_round_trip(model):
    assert state_from_json(state_to_json(model)) == model


@settings(max_examples=100, deadline=None)
@given(st.integers(8, 64), st.integers(1, 4000), st.floats(1e-15, 1e-3), st.floats(1e-14, 1e-6),
       st.integers(0, 12))
def test_config_json_round_trip(n, K, tail, tol, doublings):
    cfg = NumericsConfig(n, K, tail, tol, doublings)
    assert NumericsConfig.from_json(cfg.to_json()) == cfg


@settings(max_examples=300, deadline=None)
@given(bloch_vectors)
def test_bloch_round_trip_and_rom_bounds(v):
    q = from_bloch(*v)
    rom, raw = rom_single(q)
    assert raw == pytest.approx(sum(abs(x) for x in v), abs=1e-14)
    assert raw <= math.sqrt(3) + 1e-12
    back = QubitDensityMatrix.from_json(q.to_json())
    assert back == q


@settings(max_examples=200, deadline=None)
@given(bloch_vectors, bloch_vectors, st.floats(0, 1))
def test_rom_convex(a, b, w):
    mix = from_bloch(*(w * np.array(a) + (1 - w) * np.array(b)))
    assert rom_single(mix)[0] <= w * rom_single(from_bloch(*a))[0] + (1 - w) * rom_single(from_bloch(*b))[0] + 1e-12
