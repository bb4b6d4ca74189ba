import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minl.circuit import (
    BeamSplitter,
    InterferometerConfig,
    LossChannel,
    PhaseShifter,
    apply_beamsplitter,
    apply_loss,
    apply_outcoupling,
    apply_phase,
    beamsplitter_matrix,
    loss_channels,
    run_interferometer,
    run_pipeline,
)
from minl.closedform import no_detection_variance
from minl.detect import DetectionEvent, HeraldingError
from minl.fock import (
    FockCutoff,
    PureState,
    coherent_state,
    fock_state,
    mean_photon_number,
    partial_trace,
    tensor,
    to_density,
    vacuum,
)
from minl.squeeze import moments, squeezing_db, two_mode_variance

ANCHOR_T = [0.68, 0.82, 0.38, 1.0]
angle = st.floats(-math.pi, math.pi, allow_nan=False)
unit = st.floats(0.0, 1.0, allow_nan=False)


def test_identity_at_full_transmission():
    s = tensor(fock_state([1], 6), coherent_state(0.5, 6))
    out = apply_beamsplitter(s, BeamSplitter.from_transmissivity(1.0))
    assert np.allclose(out.amplitudes, s.amplitudes, atol=1e-15)


def test_balanced_single_photon_minus_i_sign():
    # |1,0> at T = 1/2 -> (|1,0> - i|0,1>)/sqrt(2) by direct substitution into a1^dag -> t b1^dag - i r b2^dag
    out = apply_beamsplitter(fock_state([1, 0], 4), BeamSplitter.from_transmissivity(0.5))
    assert abs(out.amplitudes[1, 0] - 1 / math.sqrt(2)) < 1e-12
    assert abs(out.amplitudes[0, 1] - (-1j / math.sqrt(2))) < 1e-12


def test_balanced_single_photon_unitary_sign():
    # exp(i theta (a1 a2^dag + a1^dag a2)) maps a1^dag -> t a1^dag + i r a2^dag
    out = apply_beamsplitter(fock_state([1, 0], 4), BeamSplitter.from_transmissivity(0.5))
    assert abs(out.amplitudes[0, 1] - 1j / math.sqrt(2)) < 1e-12
    minus = apply_beamsplitter(fock_state([1, 0], 4), BeamSplitter(-math.pi / 4))
    assert abs(minus.amplitudes[0, 1] + 1j / math.sqrt(2)) < 1e-12


def test_hong_ou_mandel():
    out = apply_beamsplitter(fock_state([1, 1], 4), BeamSplitter.from_transmissivity(0.5))
    a = out.amplitudes
    assert abs(a[1, 1]) < 1e-12
    assert abs(abs(a[2, 0]) - 1 / math.sqrt(2)) < 1e-12
    assert abs(abs(a[0, 2]) - 1 / math.sqrt(2)) < 1e-12
    # brute-force expansion of (t b1 + i r b2)(t b2 + i r b1)|0,0> with t = r = 1/sqrt(2)
    assert abs(a[2, 0] - 1j / math.sqrt(2)) < 1e-12
    assert abs(a[0, 2] - 1j / math.sqrt(2)) < 1e-12


def test_outcoupling_identity_and_coherent_split():
    c = FockCutoff(12)
    s = tensor(tensor(fock_state([1], c), coherent_state(0.8, c)), vacuum(2, c))
    same = apply_outcoupling(s, 1.0, 1.0)
    assert np.allclose(same.amplitudes, s.amplitudes, atol=1e-15)
    T = 0.3
    out = apply_outcoupling(s, T, 1.0)
    assert abs(mean_photon_number(out, 1) - T * 0.64) < 1e-9
    assert abs(mean_photon_number(out, 2) - (1 - T) * 0.64) < 1e-9
    # channel 3 holds the coherent state i r alpha
    red = partial_trace(out, [2])
    amp = complex(np.trace(red.matrix @ np.diag(np.sqrt(np.arange(1, 13)), 1)))
    assert abs(amp - 1j * math.sqrt(1 - T) * 0.8) < 1e-9


def test_outcoupling_moves_photon_to_channel_4():
    s = tensor(fock_state([1, 0], 4), vacuum(2, 4))
    out = apply_outcoupling(s, 1.0, 0.0)
    assert abs(abs(out.amplitudes[0, 0, 0, 1]) - 1) < 1e-12


def test_outcoupling_rejects_occupied_detector_modes():
    with pytest.raises(ValueError):
        apply_outcoupling(fock_state([0, 0, 1, 0], 3), 0.5, 0.5)


def test_partial_trace_after_trivial_outcoupling():
    c = FockCutoff(10)
    two = tensor(fock_state([1], c), coherent_state(0.7, c))
    s = apply_beamsplitter(two, BeamSplitter.from_transmissivity(0.6))
    four = apply_outcoupling(tensor(s, vacuum(2, c)), 1.0, 1.0)
    assert np.allclose(partial_trace(four, [0, 1]).matrix, s.density().matrix, atol=1e-12)


def test_phase_shifter():
    s = coherent_state(0.6, 12)
    assert np.allclose(apply_phase(s, PhaseShifter(0.0, 0)).amplitudes, s.amplitudes)
    assert np.allclose(apply_phase(s, PhaseShifter(2 * math.pi, 0)).amplitudes, s.amplitudes, atol=1e-12)
    rot = apply_phase(s, PhaseShifter(0.9, 0))
    assert np.allclose(rot.amplitudes, coherent_state(0.6 * np.exp(0.9j), 12).amplitudes, atol=1e-12)


def test_loss_channel():
    c = FockCutoff(14)
    s = coherent_state(1.0, c)
    same = apply_loss(s, LossChannel(0.0, 0))
    assert np.allclose(same.matrix, s.density().matrix, atol=1e-15)
    gone = apply_loss(fock_state([3], c), LossChannel(1.0, 0))
    assert abs(gone.matrix[0, 0] - 1) < 1e-12
    out = apply_loss(s, LossChannel(0.05, 0))
    assert abs(mean_photon_number(out, 0) - 0.95) < 1e-9
    # coherences near the top level miss input terms beyond the cutoff
    target = coherent_state(math.sqrt(0.95), c).density()
    assert np.allclose(out.matrix, target.matrix, atol=1e-7)


def test_loss_split():
    ch = loss_channels(0.1, 0.04)
    assert [l.R_loss for l in ch] == [0.05, 0.05, 0.02, 0.02]
    assert loss_channels() == ()


def test_no_detection_pipeline_matches_closed_form():
    rng = np.random.default_rng(3)
    for _ in range(20):
        T1, T4 = rng.uniform(0, 1, 2)
        phi, xi = rng.uniform(0, 2 * math.pi, 2)
        cfg = InterferometerConfig.from_T([T1, 1, 1, T4], phi=phi, alpha_in=rng.uniform(0, 1.5), event=DetectionEvent("PNR", "none"), cutoff=20)
        state, p = run_pipeline(cfg)
        assert abs(p - 1) < 1e-12
        v1, v2 = two_mode_variance(moments(state), xi)
        target = no_detection_variance(T1, T4, phi)
        assert abs(v1 - target) < 1e-9 and abs(v2 - target) < 1e-9


def test_anchor_anchor():
    cfg = InterferometerConfig.from_T(ANCHOR_T, phi=3 * math.pi / 2, alpha_in=1.0)
    state, p = run_pipeline(cfg)
    v1, _ = two_mode_variance(moments(state), math.pi / 2)
    assert abs(p - 0.30) <= 0.01
    assert abs(squeezing_db(v1) + 1.25) <= 0.02
    assert not state.truncated or abs(state.norm2 - 1) < 1e-12


def test_single_photon_without_coherent_input():
    # alpha = 0: the photon leaves BS1 with amplitude t1 in channel 1 and i r1 in
    # channel 2, and survives the vacuum outcome with t3 or t2 respectively
    T = [0.4, 0.7, 0.55, 0.8]
    cfg = InterferometerConfig.from_T(T, phi=0.3, alpha_in=0.0, event=DetectionEvent("PNR", "none"), cutoff=4)
    state, p = run_pipeline(cfg)
    assert abs(p - (T[0] * T[2] + (1 - T[0]) * T[1])) < 1e-12
    probs = np.abs(state.amplitudes) ** 2
    assert abs(probs[1, 0] + probs[0, 1] - 1) < 1e-12


def test_heralding_impossible_raises():
    cfg = InterferometerConfig.from_T([1, 1, 1, 1], alpha_in=0.0)
    with pytest.raises(HeraldingError):
        run_pipeline(cfg)


def test_fast_and_full_routes_agree():
    for kind in ("PNR", "click"):
        for outcome in ("ch4_only", "both", "ch3_only", "none"):
            cfg = InterferometerConfig.from_T([0.6, 0.7, 0.45, 0.8], phi=1.1, alpha_in=0.9, event=DetectionEvent(kind, outcome), cutoff=10)
            a, pa = run_interferometer(cfg, "fast")
            b, pb = run_interferometer(cfg, "full")
            assert abs(pa - pb) < 1e-12
            assert np.allclose(a.matrix, b.matrix, atol=1e-10)


def test_pure_and_density_routes_agree():
    cfg = InterferometerConfig.from_T(ANCHOR_T, phi=3 * math.pi / 2, alpha_in=1.0, losses=(LossChannel(0.0, 0),))
    mixed, pm = run_pipeline(cfg)
    pure, pp = run_pipeline(cfg.with_(losses=()))
    assert isinstance(pure, PureState) and not isinstance(mixed, PureState)
    assert abs(pm - pp) < 1e-12
    assert np.allclose(to_density(pure).matrix, mixed.matrix, atol=1e-10)


def test_losses_keep_output_physical():
    cfg = InterferometerConfig.from_T(ANCHOR_T, phi=3 * math.pi / 2, alpha_in=1.0, losses=loss_channels(0.1, 0.1))
    rho, p = run_interferometer(cfg)
    assert 0 < p < 1
    assert abs(rho.trace - 1) < 1e-12
    assert rho.is_hermitian(1e-12)
    assert rho.min_eigenvalue() > -1e-12


def test_phase_placements_differ_only_by_relabeling_at_unit_T4():
    base = InterferometerConfig.from_T([0.68, 0.82, 0.38, 1.0], phi=3 * math.pi / 2, alpha_in=1.0)
    a, _ = run_interferometer(base)
    b, _ = run_interferometer(base.with_(phase_placement="internal"))
    # at T4 = 1 BS4 is the identity, so the phase acts on channel 2 or channel 1
    assert not np.allclose(a.matrix, b.matrix)
    assert abs(a.trace - b.trace) < 1e-15


def test_cutoff_convergence_of_variances():
    rng = np.random.default_rng(11)
    for _ in range(4):
        theta = tuple(rng.uniform(0, math.pi, 4))
        alpha = rng.uniform(0, 1.6)
        phi, xi = rng.uniform(0, 2 * math.pi, 2)
        vals = []
        for n in (14, 16):
            cfg = InterferometerConfig(theta, phi, alpha, cutoff=n)
            try:
                state, _ = run_pipeline(cfg)
            except HeraldingError:
                break
            vals.append(two_mode_variance(moments(state), xi))
        if len(vals) == 2:
            assert max(abs(x - y) for x, y in zip(*vals)) < 1e-6


@settings(max_examples=40, deadline=None)
@given(angle, st.floats(0, 1, allow_nan=False), st.floats(0, 1, allow_nan=False))
def test_beamsplitter_unitarity_and_inverse(theta, x, y):
    c = FockCutoff(8)
    amps = np.zeros((9, 9), dtype=complex)
    amps[1, 0], amps[0, 2], amps[2, 1] = x, y, 0.3
    s = PureState(amps, c).renormalized()
    out = apply_beamsplitter(s, BeamSplitter(theta))
    assert not out.truncated
    assert abs(out.norm2 - 1) < 1e-12
    back = apply_beamsplitter(out, BeamSplitter(-theta))
    assert np.allclose(back.amplitudes, s.amplitudes, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(angle, unit)
def test_beamsplitter_matrix_block_unitary(theta, _):
    u = beamsplitter_matrix(theta, 6)
    # the sectors with total photon number below the cutoff are closed
    idx = [i * 6 + j for i in range(6) for j in range(6) if i + j <= 5]
    sub = u[np.ix_(idx, idx)]
    assert np.allclose(sub.conj().T @ sub, np.eye(len(idx)), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.5, 0.5, allow_nan=False), st.floats(-0.5, 0.5, allow_nan=False), unit, st.floats(0, 0.5, allow_nan=False))
def test_loss_commutes_with_bs_for_coherent_inputs(a, b, T, R):
    c = FockCutoff(14)
    s = tensor(coherent_state(a, c), coherent_state(b, c))
    bs = BeamSplitter.from_transmissivity(T)
    one = apply_beamsplitter(apply_loss(apply_loss(s, LossChannel(R, 0)), LossChannel(R, 1)), bs)
    two = apply_loss(apply_loss(apply_beamsplitter(s, bs), LossChannel(R, 0)), LossChannel(R, 1))
    assert np.allclose(one.matrix, two.matrix, atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(angle, angle, angle, angle, st.floats(0, 2 * math.pi, allow_nan=False))
def test_phase_periodicity(t1, t2, t3, t4, phi):
    cfg = InterferometerConfig((t1, t2, t3, t4), phi=phi, alpha_in=0.7, cutoff=10)
    try:
        a, _ = run_interferometer(cfg)
    except HeraldingError:
        return
    b, _ = run_interferometer(cfg.with_(phi=phi + 2 * math.pi))
    assert np.allclose(a.matrix, b.matrix, atol=1e-12)
