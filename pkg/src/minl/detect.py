"""Detector models for the two out-coupled channels.

Channel 3 is array mode index 2 and channel 4 is index 3.  A PNR detector
projects onto exactly zero or one photon; a click detector only tells vacuum
from "at least one photon".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import DensityOperator, PureState, State

KINDS = ("PNR", "click")
OUTCOMES = ("both", "ch4_only", "ch3_only", "none")
HERALD_FLOOR = 1e-12

CH3, CH4 = 2, 3


class HeraldingError(RuntimeError):
    """The requested detection event has (numerically) zero probability."""


@dataclass(frozen=True)
class DetectionEvent:
    kind: str = "PNR"
    outcome: str = "ch4_only"

    def __post_init__(self):
        kind = {"pnr": "PNR", "click": "click"}.get(str(self.kind).lower())
        if kind is None:
            raise ValueError(f"detector kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.outcome not in OUTCOMES:
            raise ValueError(f"outcome must be one of {OUTCOMES}, got {self.outcome!r}")

    @property
    def fires(self) -> tuple[bool, bool]:
        """Whether the channel-3 and channel-4 detectors register light."""
        return {
            "both": (True, True),
            "ch4_only": (False, True),
            "ch3_only": (True, False),
            "none": (False, False),
        }[self.outcome]

    def photon_sets(self, dim: int) -> tuple[list[int], list[int]]:
        """Photon numbers accepted in channels 3 and 4 for this event."""

        def accepted(fired: bool) -> list[int]:
            if not fired:
                return [0]
            return [1] if self.kind == "PNR" else list(range(1, dim))

        f3, f4 = self.fires
        return accepted(f3), accepted(f4)


def all_events(kind: str) -> list[DetectionEvent]:
    return [DetectionEvent(kind, o) for o in OUTCOMES]


def pnr_project(state: PureState, event: DetectionEvent) -> tuple[PureState, float]:
    """Project channels 3 and 4 of a four-mode pure state onto the event."""
    if event.kind != "PNR":
        raise ValueError("pnr_project needs a PNR event")
    if state.modes != 4:
        raise ValueError("pnr_project expects a four-mode state")
    (n3,), (n4,) = event.photon_sets(state.dim)
    out = np.zeros_like(state.amplitudes)
    out[:, :, n3, n4] = state.amplitudes[:, :, n3, n4]
    p = float(np.vdot(out, out).real)
    return PureState(out, state.cutoff, state.truncated), p


def reduce_projected(state: PureState, event: DetectionEvent) -> PureState:
    """Modes 1-2 of a PNR-projected state; channels 3/4 hold definite photon numbers."""
    (n3,), (n4,) = event.photon_sets(state.dim)
    return PureState(state.amplitudes[:, :, n3, n4], state.cutoff, state.truncated)


def click_povm(state: State, event: DetectionEvent) -> tuple[DensityOperator, float]:
    """Apply a click POVM element to channels 3/4 and trace them out.

    Accepts a four-mode pure state (the usual case) or a four-mode density
    operator.  Returns the unnormalized reduced state of modes 1-2 and its
    trace.  Works for PNR events too, where the sets are single numbers.
    """
    if state.modes != 4:
        raise ValueError("click_povm expects a four-mode state")
    d = state.dim
    s3, s4 = event.photon_sets(d)
    if isinstance(state, PureState):
        sub = state.amplitudes[:, :, s3, :][:, :, :, s4].reshape(d * d, -1)
        red = sub @ sub.conj().T
    else:
        t = state.tensor
        red = np.zeros((d * d, d * d), dtype=complex)
        for n3 in s3:
            for n4 in s4:
                red += t[:, :, n3, n4, :, :, n3, n4].reshape(d * d, d * d)
    rho = DensityOperator(red, 2, state.cutoff, state.truncated)
    return rho, rho.trace


def normalize_heralded(state: State, p_det: float) -> State:
    """Divide out the heralding probability (norm or trace)."""
    if p_det <= HERALD_FLOOR:
        raise HeraldingError(f"detection probability {p_det:.3g} is below {HERALD_FLOOR:g}")
    if isinstance(state, PureState):
        return PureState(state.amplitudes / np.sqrt(p_det), state.cutoff, state.truncated)
    return DensityOperator(state.matrix / p_det, state.modes, state.cutoff, state.truncated)


def multiphoton_probability(state: PureState) -> float:
    """Probability that channel 3 or channel 4 holds two or more photons."""
    p = np.abs(state.amplitudes) ** 2
    marg = p.sum(axis=(0, 1))
    return float(marg[2:, :].sum() + marg[:2, 2:].sum())
