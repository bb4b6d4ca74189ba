import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from minl.circuit import InterferometerConfig, run_pipeline
from minl.closedform import (
    PnrCoefficients,
    click_probability,
    click_state,
    no_detection_state,
    no_detection_variance,
    pnr_moments,
    pnr_probability,
    pnr_state,
    special_case_probability,
    special_case_variance,
    theta_from_T,
)
from minl.detect import DetectionEvent
from minl.fock import FockCutoff, PureState
from minl.squeeze import moments, squeezing_db, two_mode_variance

unit = st.floats(0.0, 1.0, allow_nan=False)
angle = st.floats(0.0, math.pi, allow_nan=False)
amp = st.floats(0.0, 1.6, allow_nan=False)


def simulate(theta, phi, alpha, kind="PNR", outcome="ch4_only", placement="internal", cutoff=24):
    cfg = InterferometerConfig(tuple(theta), phi, alpha, DetectionEvent(kind, outcome), cutoff=cutoff, phase_placement=placement)
    return run_pipeline(cfg)


def test_no_detection_identity_beamsplitters():
    c = no_detection_state(1.0, 1.0, 0.7, 0.9)
    assert abs(c.gamma1 - 1) < 1e-15 and abs(c.gamma2) < 1e-15
    assert abs(c.alpha1) < 1e-15 and abs(c.alpha2 - 0.9 * np.exp(0.7j)) < 1e-15


def test_no_detection_balanced():
    assert abs(no_detection_state(0.5, 0.5, 0.3, 1.0).gamma1) < 1e-15


def test_no_detection_state_matches_pipeline():
    rng = np.random.default_rng(5)
    for _ in range(10):
        T1, T4 = rng.uniform(0, 1, 2)
        phi, alpha = rng.uniform(0, 2 * math.pi), rng.uniform(0, 1.6)
        cfg = InterferometerConfig.from_T([T1, 1, 1, T4], phi=phi, alpha_in=alpha, event=DetectionEvent("PNR", "none"), cutoff=24)
        psi, _ = run_pipeline(cfg)
        ref = no_detection_state(T1, T4, phi, alpha).amplitudes(25)
        fidelity = abs(np.vdot(ref, psi.amplitudes)) ** 2
        assert fidelity >= 1 - 1e-9


def test_no_detection_variance_values():
    assert no_detection_variance(0.3, 0.8, 0.0) == 0.5
    assert abs(no_detection_variance(1.0, 1.0, -math.pi / 2) - 0.5) < 1e-15
    g = np.linspace(0, 1, 25)
    phis = np.linspace(0, 2 * math.pi, 25)
    vmin = min(no_detection_variance(a, b, p) for a in g for b in g for p in phis)
    assert abs(vmin - 0.25) < 1e-6


@settings(max_examples=50, deadline=None)
@given(unit, unit, st.floats(0, 2 * math.pi))
def test_no_detection_variance_symmetric(T1, T4, phi):
    assert abs(no_detection_variance(T1, T4, phi) - no_detection_variance(T4, T1, phi)) < 1e-12
    assert no_detection_variance(T1, T4, phi) >= 0.25 - 1e-12


def test_pnr_probability_zero_cases():
    assert pnr_probability(theta_from_T([0.5, 0.6, 1.0, 1.0]), 1.0, "single") == 0
    th = theta_from_T([0.5, 1.0, 0.6, 1.0])
    assert pnr_probability(th, 1.0, "both") == 0
    assert pnr_state(th, 0.2, 1.0, "both").gamma0 == 0


def test_special_case_probability_alternate_reduction():
    # general probability at T1 = 1/2, T2 = T3 = T, T4 = 1 against the alternate special-case factor
    for T in np.linspace(0.05, 0.95, 7):
        for a in (0.3, 1.0, 1.7):
            general = pnr_probability(theta_from_T([0.5, T, T, 1.0]), a, "single")
            assert abs(general - special_case_probability(T, a, form="alternate")) < 1e-12


def test_special_case_probability_reduction():
    for T in np.linspace(0.05, 0.95, 7):
        for a in (0.3, 1.0, 1.7):
            general = pnr_probability(theta_from_T([0.5, T, T, 1.0]), a, "single")
            assert abs(general - special_case_probability(T, a)) < 1e-12


def test_special_case_probability_values():
    assert special_case_probability(1.0, 1.3) == 0
    assert abs(special_case_probability(0.4, 0.0) - 0.3) < 1e-15
    rng = np.random.default_rng(2)
    for _ in range(10):
        T, a = rng.uniform(0, 1), rng.uniform(0, 2)
        _, p = simulate(theta_from_T([0.5, T, T, 1.0]), 0.0, a)
        assert abs(p - special_case_probability(T, a)) < 1e-9


def test_special_case_variance_values():
    assert special_case_variance(0.5, 0.0, 1.0, 2.0) == (0.25, 0.25)
    # phi = pi/2, xi = pi: the best x gives -1.25 dB
    xs = np.linspace(0.01, 3, 3000)
    best = min(special_case_variance(1.0, math.sqrt(x), math.pi / 2, math.pi)[0] for x in xs)
    assert abs(squeezing_db(best) + 1.25) < 0.01


@settings(max_examples=40, deadline=None)
@given(unit, st.floats(0, 2), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_special_case_variance_sum(T, a, phi, xi):
    v1, v2 = special_case_variance(T, a, phi, xi)
    x = T * a * a
    assert abs(v1 + v2 - 2 * (0.25 + x / 2 + x * x / 2 + x * x * math.sin(phi) / 4) / (1 + x) ** 2) < 1e-12


def test_special_case_variance_matches_simulator():
    for T in np.linspace(0.1, 0.9, 4):
        for a in (0.5, 1.0, 1.5):
            for phi in (0.4, math.pi / 2, 4.0):
                psi, _ = simulate(theta_from_T([0.5, T, T, 1.0]), phi, a)
                m = moments(psi)
                for xi in (0.0, 1.1, math.pi):
                    sim = two_mode_variance(m, xi)
                    ref = special_case_variance(T, a, phi, xi)
                    assert abs(sim[0] - ref[0]) < 1e-9 and abs(sim[1] - ref[1]) < 1e-9


def test_pnr_state_matches_simulator():
    rng = np.random.default_rng(8)
    for _ in range(8):
        theta = rng.uniform(0, math.pi, 4)
        phi, alpha = rng.uniform(0, 2 * math.pi), rng.uniform(0, 1.6)
        for variant, outcome in (("single", "ch4_only"), ("both", "both")):
            psi, p = simulate(theta, phi, alpha, outcome=outcome)
            c = pnr_state(theta, phi, alpha, variant)
            assert abs(p - c.P) < 1e-9
            assert np.max(np.abs(c.amplitudes(25) - psi.amplitudes)) < 1e-9


def test_click_single_collapses_without_alpha4():
    # T1 = 1 removes alpha4, so only the k = 1 term of the mixture survives
    theta = theta_from_T([1.0, 0.5, 0.3, 0.7])
    c = click_state(theta, 0.3, 0.8, "single")
    assert c.pnr.alpha4 == 0
    p = c.pnr
    v = PnrCoefficients(p.gamma0, p.gamma1, p.gamma2, p.alpha1, p.alpha2, 0, 0, 1.0, 0, "single").amplitudes(25).ravel()
    v = v / np.linalg.norm(v)
    assert np.allclose(c.density(25), np.outer(v, v.conj()), atol=1e-12)


def test_click_matches_pnr_for_single_photon_input():
    rng = np.random.default_rng(4)
    for _ in range(10):
        theta = rng.uniform(0, math.pi, 4)
        for variant in ("single", "both"):
            assert abs(click_probability(theta, 0.0, variant) - pnr_probability(theta, 0.0, variant)) < 1e-9


def test_click_matches_simulator():
    rng = np.random.default_rng(6)
    for _ in range(5):
        theta = rng.uniform(0, math.pi, 4)
        phi, alpha = rng.uniform(0, 2 * math.pi), rng.uniform(0, 1.6)
        for variant, outcome in (("single", "ch4_only"), ("both", "both")):
            rho, p = simulate(theta, phi, alpha, kind="click", outcome=outcome)
            c = click_state(theta, phi, alpha, variant)
            assert abs(p - c.P) < 1e-7
            assert np.max(np.abs(c.density(25) - rho.matrix)) < 1e-7


def test_click_both_with_closed_detector_arm():
    assert abs(click_probability(theta_from_T([0.6, 1.0, 0.5, 0.8]), 1.2, "both")) < 1e-12
    for T2 in (0.99, 0.999):
        theta = theta_from_T([0.6, T2, 0.5, 0.8])
        _, p = simulate(theta, 0.5, 1.2, kind="click", outcome="both")
        assert abs(click_probability(theta, 1.2, "both") - p) < 1e-7


def test_moment_collapses():
    c = PnrCoefficients(1.0, 0.0, 0.0, 0.4 + 0.1j, -0.2j, 0, 0, 1.0, 1.0, "x")
    m = pnr_moments(c)
    assert abs(m.a - c.alpha1) < 1e-15
    assert abs(m.ab - c.alpha1 * c.alpha2) < 1e-15
    assert abs(m.aad - (abs(c.alpha1) ** 2 + 1)) < 1e-15
    g0, g1, g2 = 0.3, 0.5j, -0.2
    n = 1 / math.sqrt(abs(g0) ** 2 + abs(g1) ** 2 + abs(g2) ** 2)
    c = PnrCoefficients(g0, g1, g2, 0, 0, 0, 0, n, 1.0, "x")
    m = pnr_moments(c)
    assert abs(m.a - n * n * np.conj(g0) * g1) < 1e-15
    assert abs(m.aad - n * n * (abs(g0) ** 2 + 2 * abs(g1) ** 2 + abs(g2) ** 2)) < 1e-15


def test_anchor_moments_match_both_placements():
    theta = theta_from_T([0.68, 0.82, 0.38, 1.0])
    psi, _ = simulate(theta, 3 * math.pi / 2, 1.0)
    ref = pnr_moments(pnr_state(theta, 3 * math.pi / 2, 1.0))
    m = moments(psi)
    assert abs(m.abd - ref.abd) < 1e-8 and abs(m.ab - ref.ab) < 1e-8


@settings(max_examples=60, deadline=None)
@given(angle, angle, angle, angle, amp)
def test_probabilities_are_probabilities(t1, t2, t3, t4, alpha):
    theta = (t1, t2, t3, t4)
    for variant in ("single", "both"):
        p = pnr_probability(theta, alpha, variant)
        assert -1e-15 <= p <= 1
        q = click_probability(theta, alpha, variant)
        assert -1e-12 <= q <= 1 + 1e-12
    T = math.cos(t2) ** 2
    assert 0 <= special_case_probability(T, alpha) <= 1
