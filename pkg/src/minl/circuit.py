"""Optical elements and the heralded four-beam-splitter pipeline.

Beam splitter convention: B(theta) = exp(i theta (a_i^dag a_j + a_i a_j^dag)),
so a_i^dag -> t a_i^dag + i r a_j^dag with t = cos(theta), r = sin(theta).

Pipeline (modes 0..3 are channels 1..4):
    |1>|alpha>|0>|0>  -> BS1(0,1) -> [losses before] -> BS2(1,2), BS3(0,3)
    -> detect channels 3, 4 -> trace them out -> [losses after]
    -> BS4(0,1) and the phase shifter.

The phase shifter placement is configurable.  ``"output"`` puts e^{i n phi}
on channel 2 after BS4; ``"internal"`` puts it on channel 1 before BS4.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .detect import CH3, CH4, DetectionEvent, HeraldingError, HERALD_FLOOR, click_povm, pnr_project, reduce_projected
from .fock import (
    DEFAULT_CUTOFF,
    DensityOperator,
    FockCutoff,
    PureState,
    State,
    as_cutoff,
    coherent_state,
    fock_state,
    tensor,
    to_density,
)

PLACEMENTS = ("output", "internal")
POSITIONS = ("before_detection", "after_detection")


@lru_cache(maxsize=None)
def _bs_blocks(dim: int):
    """Eigen-decompositions of the BS generator per total photon number."""
    blocks = []
    for total in range(2 * dim - 1):
        g = np.zeros((total + 1, total + 1))
        k = np.arange(total)
        off = np.sqrt((k + 1) * (total - k))
        g[k + 1, k] = off
        g[k, k + 1] = off
        w, v = np.linalg.eigh(g)
        idx = np.arange(max(0, total - dim + 1), min(total, dim - 1) + 1)
        flat = idx * dim + (total - idx)
        blocks.append((w, v[idx].astype(complex), flat))
    return blocks


@lru_cache(maxsize=32)
def _bs_matrix_cached(theta: float, dim: int) -> np.ndarray:
    u = np.zeros((dim * dim, dim * dim), dtype=complex)
    for w, v, flat in _bs_blocks(dim):
        ub = (v * np.exp(1j * theta * w)) @ v.conj().T
        u[np.ix_(flat, flat)] = ub
    u.setflags(write=False)
    return u


def beamsplitter_matrix(theta: float, dim: int) -> np.ndarray:
    """Two-mode BS unitary as a (dim^2, dim^2) matrix on |n_i, n_j>.

    Matrix elements are exact; states that would leave the truncated space
    simply lose that amplitude.
    """
    return _bs_matrix_cached(float(theta), int(dim))


def outcoupling_kraus(theta: float, k: int, dim: int) -> np.ndarray:
    """<k|_anc B(theta) |0>_anc as a single-mode operator.

    This is the map on a mode that is split against a vacuum ancilla which is
    then found holding ``k`` photons.
    """
    return beamsplitter_matrix(theta, dim).reshape(dim, dim, dim, dim)[:, k, :, 0]


@dataclass(frozen=True)
class BeamSplitter:
    theta: float
    modes: tuple[int, int] = (0, 1)

    def __post_init__(self):
        i, j = self.modes
        if i == j:
            raise ValueError("beam splitter needs two distinct modes")
        object.__setattr__(self, "modes", (int(i), int(j)))
        object.__setattr__(self, "theta", float(self.theta))

    @classmethod
    def from_transmissivity(cls, T: float, modes: tuple[int, int] = (0, 1)) -> "BeamSplitter":
        if not 0.0 <= T <= 1.0:
            raise ValueError(f"T must lie in [0, 1], got {T}")
        return cls(float(np.arccos(np.sqrt(T))), modes)

    @property
    def t(self) -> float:
        return float(np.cos(self.theta))

    @property
    def r(self) -> float:
        return float(np.sin(self.theta))

    @property
    def T(self) -> float:
        return self.t ** 2

    @property
    def R(self) -> float:
        return self.r ** 2


@dataclass(frozen=True)
class PhaseShifter:
    phi: float
    mode: int = 1


@dataclass(frozen=True)
class LossChannel:
    """Beam-splitter loss with reflectivity ``R_loss`` into a traced-out vacuum mode."""

    R_loss: float
    mode: int
    position: str = "before_detection"

    def __post_init__(self):
        if not 0.0 <= self.R_loss <= 1.0:
            raise ValueError(f"R_loss must lie in [0, 1], got {self.R_loss}")
        if self.position not in POSITIONS:
            raise ValueError(f"position must be one of {POSITIONS}")
        if self.mode not in (0, 1):
            raise ValueError("losses act on channel 1 or 2 (mode 0 or 1)")


def loss_channels(Rb_total: float = 0.0, Ra_total: float = 0.0) -> tuple[LossChannel, ...]:
    """Equal split of total before/after-detection loss over the two channels."""
    out = []
    for total, pos in ((Rb_total, "before_detection"), (Ra_total, "after_detection")):
        if total:
            out += [LossChannel(total / 2, 0, pos), LossChannel(total / 2, 1, pos)]
    return tuple(out)


def _with_flag(state: State, truncated: bool) -> State:
    if isinstance(state, PureState):
        return PureState(state.amplitudes, state.cutoff, truncated)
    return DensityOperator(state.matrix, state.modes, state.cutoff, truncated)


def apply_two_mode(state: State, u: np.ndarray, modes: tuple[int, int]) -> State:
    """Apply a (dim^2, dim^2) two-mode operator to ``modes`` of a state."""
    i, j = modes
    d = state.dim
    if isinstance(state, PureState):
        psi = np.moveaxis(state.amplitudes, (i, j), (0, 1))
        shape = psi.shape
        out = (u @ psi.reshape(d * d, -1)).reshape(shape)
        return PureState(np.moveaxis(out, (0, 1), (i, j)), state.cutoff, state.truncated)
    m = state.modes
    t = state.tensor
    axes = (i, j, m + i, m + j)
    t = np.moveaxis(t, axes, (0, 1, 2, 3))
    shape = t.shape
    t = t.reshape(d * d, d * d, -1)
    t = np.tensordot(u, t, axes=([1], [0]))
    t = np.moveaxis(np.tensordot(t, u.conj(), axes=([1], [1])), -1, 1)
    t = np.moveaxis(t.reshape(shape), (0, 1, 2, 3), axes)
    return DensityOperator.from_tensor(t, state.cutoff, state.truncated)


def apply_beamsplitter(state: State, bs: BeamSplitter) -> State:
    i, j = bs.modes
    if max(i, j) >= state.modes:
        raise ValueError(f"beam splitter modes {bs.modes} out of range")
    before = state.norm2 if isinstance(state, PureState) else state.trace
    out = apply_two_mode(state, beamsplitter_matrix(bs.theta, state.dim), bs.modes)
    after = out.norm2 if isinstance(out, PureState) else out.trace
    if before - after > 1e-12 * max(before, 1.0):
        out = _with_flag(out, True)
    return out


def apply_phase(state: State, ps: PhaseShifter) -> State:
    """Multiply amplitudes with n photons in ``ps.mode`` by e^{i n phi}."""
    d = state.dim
    ph = np.exp(1j * ps.phi * np.arange(d))
    m = state.modes
    if isinstance(state, PureState):
        shape = [1] * m
        shape[ps.mode] = d
        return PureState(state.amplitudes * ph.reshape(shape), state.cutoff, state.truncated)
    shape = [1] * (2 * m)
    shape[ps.mode] = d
    t = state.tensor * ph.reshape(shape)
    shape[ps.mode], shape[m + ps.mode] = 1, d
    t = t * ph.conj().reshape(shape)
    return DensityOperator.from_tensor(t, state.cutoff, state.truncated)


def kraus_superoperator(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """sum_k K (.) K^dagger as a (dim^2, dim^2) matrix on (ket, bra) pairs."""
    k = np.asarray(kraus)
    d = k.shape[1]
    return np.einsum("kai,kbc->abic", k, k.conj()).reshape(d * d, d * d)


def apply_channel(rho: DensityOperator, superop: np.ndarray, mode: int) -> DensityOperator:
    """Apply a single-mode channel given as a superoperator."""
    d = rho.dim
    m = rho.modes
    t = np.moveaxis(rho.tensor, (mode, m + mode), (0, 1))
    shape = t.shape
    t = (superop @ t.reshape(d * d, -1)).reshape(shape)
    t = np.moveaxis(t, (0, 1), (mode, m + mode))
    return DensityOperator.from_tensor(t, rho.cutoff, rho.truncated)


def loss_superoperator(R_loss: float, dim: int) -> np.ndarray:
    theta = float(np.arcsin(np.sqrt(R_loss)))
    return kraus_superoperator([outcoupling_kraus(theta, k, dim) for k in range(dim)])


def apply_loss(rho: State, loss: LossChannel) -> DensityOperator:
    """Couple ``loss.mode`` to a vacuum ancilla with reflectivity R and trace it out."""
    rho = to_density(rho)
    if loss.mode >= rho.modes:
        raise ValueError("loss mode out of range")
    return apply_channel(rho, loss_superoperator(loss.R_loss, rho.dim), loss.mode)


def apply_outcoupling(state: PureState, T2: float, T3: float, theta: tuple[float, float] | None = None) -> PureState:
    """BS2 couples channel 2 to channel 3; BS3 couples channel 1 to channel 4.

    Channels 3 and 4 must enter in vacuum.  ``theta`` overrides the angles
    derived from (T2, T3), which allows negative reflection amplitudes.
    """
    if state.modes != 4:
        raise ValueError("out-coupling acts on a four-mode state")
    occupied = np.abs(state.amplitudes[:, :, :, :]) ** 2
    if occupied.sum() - occupied[:, :, 0, 0].sum() > 1e-12:
        raise ValueError("channels 3 and 4 must be vacuum before out-coupling")
    if theta is None:
        theta = (float(np.arccos(np.sqrt(T2))), float(np.arccos(np.sqrt(T3))))
    out = apply_beamsplitter(state, BeamSplitter(theta[0], (1, CH3)))
    return apply_beamsplitter(out, BeamSplitter(theta[1], (0, CH4)))


@dataclass(frozen=True)
class InterferometerConfig:
    """One point of the interferometer.

    The beam splitters are given by angles ``theta`` (T_i = cos^2 theta_i);
    angles rather than transmissivities keep the sign of each reflection
    amplitude, which the optimizer is free to explore.
    """

    theta: tuple[float, float, float, float]
    phi: float = 0.0
    alpha_in: complex = 1.0
    event: DetectionEvent = field(default_factory=DetectionEvent)
    losses: tuple[LossChannel, ...] = ()
    cutoff: int = DEFAULT_CUTOFF
    phase_placement: str = "output"

    def __post_init__(self):
        th = tuple(float(x) for x in self.theta)
        if len(th) != 4 or not all(np.isfinite(th)):
            raise ValueError("theta needs four finite angles")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "losses", tuple(self.losses))
        if self.phase_placement not in PLACEMENTS:
            raise ValueError(f"phase_placement must be one of {PLACEMENTS}")
        as_cutoff(self.cutoff)

    @classmethod
    def from_T(cls, T: Sequence[float], **kwargs) -> "InterferometerConfig":
        T = [float(x) for x in T]
        if len(T) != 4 or any(not 0.0 <= x <= 1.0 for x in T):
            raise ValueError(f"T must be four values in [0, 1], got {T}")
        return cls(tuple(float(np.arccos(np.sqrt(x))) for x in T), **kwargs)

    @property
    def T(self) -> tuple[float, ...]:
        return tuple(float(np.cos(x) ** 2) for x in self.theta)

    @property
    def detector_type(self) -> str:
        return self.event.kind

    def with_(self, **kwargs) -> "InterferometerConfig":
        return replace(self, **kwargs)


def input_state(alpha_in: complex, cutoff) -> PureState:
    """|1>_1 |alpha>_2 on two modes."""
    return tensor(fock_state([1], cutoff), coherent_state(alpha_in, cutoff))


def _finish(state: State, cfg: InterferometerConfig) -> State:
    """Losses after detection, then BS4 and the phase shifter."""
    for loss in cfg.losses:
        if loss.position == "after_detection":
            state = apply_loss(state, loss)
    bs4 = BeamSplitter(cfg.theta[3], (0, 1))
    if cfg.phase_placement == "output":
        state = apply_phase(apply_beamsplitter(state, bs4), PhaseShifter(cfg.phi, 1))
    else:
        state = apply_beamsplitter(apply_phase(state, PhaseShifter(cfg.phi, 0)), bs4)
    return state


def _check_p(p: float) -> None:
    if not p > HERALD_FLOOR:
        raise HeraldingError(f"detection probability {p:.3g} is below {HERALD_FLOOR:g}")


def _run_fast(cfg: InterferometerConfig) -> tuple[State, float]:
    c = as_cutoff(cfg.cutoff)
    d = c.dim
    state: State = apply_beamsplitter(input_state(cfg.alpha_in, c), BeamSplitter(cfg.theta[0], (0, 1)))
    before = [l for l in cfg.losses if l.position == "before_detection"]
    for loss in before:
        state = apply_loss(state, loss)
    s3, s4 = cfg.event.photon_sets(d)
    if isinstance(state, PureState) and len(s3) == 1 and len(s4) == 1:
        k3 = outcoupling_kraus(cfg.theta[1], s3[0], d)
        k4 = outcoupling_kraus(cfg.theta[2], s4[0], d)
        psi = k4 @ state.amplitudes @ k3.T
        p = float(np.vdot(psi, psi).real)
        _check_p(p)
        state = PureState(psi / np.sqrt(p), c, state.truncated)
    else:
        rho = to_density(state)
        sup3 = kraus_superoperator([outcoupling_kraus(cfg.theta[1], k, d) for k in s3])
        sup4 = kraus_superoperator([outcoupling_kraus(cfg.theta[2], k, d) for k in s4])
        rho = apply_channel(apply_channel(rho, sup3, 1), sup4, 0)
        p = rho.trace
        _check_p(p)
        state = DensityOperator(rho.matrix / p, 2, c, rho.truncated)
    return _finish(state, cfg), p


def _run_full(cfg: InterferometerConfig) -> tuple[State, float]:
    if any(l.position == "before_detection" for l in cfg.losses):
        raise ValueError("the full four-mode route does not model losses before detection")
    c = as_cutoff(cfg.cutoff)
    psi = tensor(tensor(input_state(cfg.alpha_in, c), fock_state([0], c)), fock_state([0], c))
    psi = apply_beamsplitter(psi, BeamSplitter(cfg.theta[0], (0, 1)))
    psi = apply_outcoupling(psi, 0.0, 0.0, theta=(cfg.theta[1], cfg.theta[2]))
    if cfg.event.kind == "PNR":
        projected, p = pnr_project(psi, cfg.event)
        _check_p(p)
        state: State = reduce_projected(projected, cfg.event)
        state = PureState(state.amplitudes / np.sqrt(p), c, state.truncated)
    else:
        rho, p = click_povm(psi, cfg.event)
        _check_p(p)
        state = DensityOperator(rho.matrix / p, 2, c, rho.truncated)
    return _finish(state, cfg), p


def run_pipeline(cfg: InterferometerConfig, method: str = "fast") -> tuple[State, float]:
    """Like :func:`run_interferometer` but keeps a pure output as a PureState."""
    if method == "fast":
        return _run_fast(cfg)
    if method == "full":
        return _run_full(cfg)
    raise ValueError("method must be 'fast' or 'full'")


def run_interferometer(cfg: InterferometerConfig, method: str = "fast") -> tuple[DensityOperator, float]:
    """Heralded two-mode output state (normalized) and the detection probability.

    ``method="fast"`` folds each out-coupling beam splitter and its detector
    into single-mode Kraus maps; ``method="full"`` simulates all four modes
    explicitly.  Both give the same result.
    """
    state, p = run_pipeline(cfg, method)
    return to_density(state), p
