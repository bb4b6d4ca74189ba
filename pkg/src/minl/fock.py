"""Truncated multimode Fock-space numerics.

States are dense arrays indexed by per-mode photon numbers ``0..n_max``.
Pure states keep one axis per mode; density operators are stored as square
matrices of dimension ``(n_max+1)**modes`` with row-major mode ordering, so
``np.kron`` of two single-mode matrices is the two-mode product.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np
from scipy.special import gammaln

DEFAULT_CUTOFF = 14
NORM_TOL = 1e-12
COHERENT_DEFICIT_TOL = 1e-6


class CutoffWarning(UserWarning):
    """A truncated state lost more norm than the configured tolerance."""


@dataclass(frozen=True)
class FockCutoff:
    """Maximum photon number kept per mode."""

    n_max: int = DEFAULT_CUTOFF

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def dim(self) -> int:
        return self.n_max + 1


CutoffLike = Union[int, FockCutoff]


def as_cutoff(cutoff: CutoffLike) -> FockCutoff:
    return cutoff if isinstance(cutoff, FockCutoff) else FockCutoff(int(cutoff))


@dataclass(frozen=True, eq=False)
class PureState:
    """State vector with one array axis per mode.

    ``truncated`` records that some amplitude was pushed past the cutoff and
    dropped by an operation that produced this state.
    """

    amplitudes: np.ndarray
    cutoff: FockCutoff
    truncated: bool = False

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim < 1 or any(s != self.cutoff.dim for s in amps.shape):
            raise ValueError(
                f"amplitude shape {amps.shape} does not match cutoff dim {self.cutoff.dim}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def modes(self) -> int:
        return self.amplitudes.ndim

    @property
    def dim(self) -> int:
        return self.cutoff.dim

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @property
    def normalized(self) -> bool:
        return abs(self.norm2 - 1.0) <= NORM_TOL

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    def density(self) -> "DensityOperator":
        v = self.vector
        return DensityOperator(np.outer(v, v.conj()), self.modes, self.cutoff, self.truncated)

    def renormalized(self) -> "PureState":
        n = np.sqrt(self.norm2)
        if n == 0:
            raise ValueError("cannot renormalize the zero vector")
        return PureState(self.amplitudes / n, self.cutoff, self.truncated)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Density matrix over ``modes`` truncated modes."""

    matrix: np.ndarray
    modes: int
    cutoff: FockCutoff
    truncated: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        size = self.cutoff.dim ** self.modes
        if m.shape != (size, size):
            raise ValueError(f"matrix shape {m.shape} does not match {self.modes} modes at dim {self.cutoff.dim}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.cutoff.dim

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def normalized(self) -> bool:
        return abs(self.trace - 1.0) <= NORM_TOL

    @property
    def tensor(self) -> np.ndarray:
        """View with axes (ket_1..ket_m, bra_1..bra_m)."""
        return self.matrix.reshape((self.dim,) * (2 * self.modes))

    @classmethod
    def from_tensor(cls, t: np.ndarray, cutoff: FockCutoff, truncated: bool = False) -> "DensityOperator":
        modes = t.ndim // 2
        size = cutoff.dim ** modes
        return cls(np.asarray(t).reshape(size, size), modes, cutoff, truncated)

    def normalized_copy(self) -> "DensityOperator":
        tr = self.trace
        if tr <= 0:
            raise ValueError("cannot normalize a density operator with non-positive trace")
        return DensityOperator(self.matrix / tr, self.modes, self.cutoff, self.truncated)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol)

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(h)[0])


State = Union[PureState, DensityOperator]


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).T.copy()


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def fock_state(occupations: Sequence[int], cutoff: CutoffLike = DEFAULT_CUTOFF) -> PureState:
    """Product Fock state |n_1, ..., n_m>."""
    c = as_cutoff(cutoff)
    occ = [int(n) for n in occupations]
    if not occ:
        raise ValueError("need at least one mode")
    for n in occ:
        if n < 0 or n > c.n_max:
            raise ValueError(f"occupation {n} outside 0..{c.n_max}")
    amps = np.zeros((c.dim,) * len(occ), dtype=complex)
    amps[tuple(occ)] = 1.0
    return PureState(amps, c)


def vacuum(modes: int, cutoff: CutoffLike = DEFAULT_CUTOFF) -> PureState:
    return fock_state([0] * modes, cutoff)


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    alpha = complex(alpha)
    if alpha == 0:
        out = np.zeros(dim, dtype=complex)
        out[0] = 1.0
        return out
    log_mag = n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1) - 0.5 * abs(alpha) ** 2
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def coherent_state(alpha: complex, cutoff: CutoffLike = DEFAULT_CUTOFF, renormalize: bool = False) -> PureState:
    """Truncated coherent state; the norm deficit is kept unless ``renormalize``."""
    c = as_cutoff(cutoff)
    amps = coherent_amplitudes(alpha, c.dim)
    deficit = 1.0 - float(np.vdot(amps, amps).real)
    if deficit > COHERENT_DEFICIT_TOL:
        warnings.warn(
            f"coherent state |{alpha}> loses {deficit:.3g} of its norm at n_max={c.n_max}",
            CutoffWarning,
            stacklevel=2,
        )
    if renormalize:
        amps = amps / np.linalg.norm(amps)
    return PureState(amps, c)


def two_mode_squeezed_vacuum(z: complex, cutoff: CutoffLike = DEFAULT_CUTOFF) -> PureState:
    """sqrt(1-|z|^2) sum_n z^n |n, n>, truncated at the cutoff."""
    c = as_cutoff(cutoff)
    if abs(z) >= 1:
        raise ValueError("|z| must be < 1")
    amps = np.zeros((c.dim, c.dim), dtype=complex)
    n = np.arange(c.dim)
    amps[n, n] = np.sqrt(1 - abs(z) ** 2) * complex(z) ** n
    return PureState(amps, c)


def tensor(a: State, b: State) -> State:
    if a.cutoff != b.cutoff:
        raise ValueError("cutoff mismatch")
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.multiply.outer(a.amplitudes, b.amplitudes), a.cutoff, a.truncated or b.truncated)
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(np.kron(a.matrix, b.matrix), a.modes + b.modes, a.cutoff, a.truncated or b.truncated)
    raise TypeError("tensor needs two states of the same kind")


def to_density(state: State) -> DensityOperator:
    return state if isinstance(state, DensityOperator) else state.density()


def partial_trace(rho: State, keep: Sequence[int]) -> DensityOperator:
    """Reduced density operator on the modes in ``keep`` (kept in ascending order)."""
    keep = sorted(set(int(k) for k in keep))
    m = rho.modes
    if not keep:
        raise ValueError("keep must be non-empty")
    if keep[0] < 0 or keep[-1] >= m:
        raise ValueError(f"modes {keep} out of range for {m} modes")
    traced = [j for j in range(m) if j not in keep]
    if isinstance(rho, PureState):
        psi = np.moveaxis(rho.amplitudes, keep, range(len(keep)))
        psi = psi.reshape(rho.dim ** len(keep), -1)
        return DensityOperator(psi @ psi.conj().T, len(keep), rho.cutoff, rho.truncated)
    t = rho.tensor
    ket = list(range(m))
    bra = [m + j for j in range(m)]
    for j in traced:
        bra[j] = ket[j]
    out = [ket[j] for j in keep] + [bra[j] for j in keep]
    red = np.einsum(t, ket + bra, out)
    return DensityOperator.from_tensor(red, rho.cutoff, rho.truncated)


def apply_mode_operator(state: State, op: np.ndarray, mode: int) -> State:
    """Apply a single-mode operator; density operators get O rho O^dagger."""
    if not 0 <= mode < state.modes:
        raise ValueError(f"mode {mode} out of range")
    if isinstance(state, PureState):
        out = np.moveaxis(np.tensordot(op, state.amplitudes, axes=([1], [mode])), 0, mode)
        return PureState(out, state.cutoff, state.truncated)
    m = state.modes
    t = np.moveaxis(np.tensordot(op, state.tensor, axes=([1], [mode])), 0, mode)
    t = np.moveaxis(np.tensordot(t, op.conj(), axes=([m + mode], [1])), -1, m + mode)
    return DensityOperator.from_tensor(t, state.cutoff, state.truncated)


def ladder_apply(state: State, mode: int, direction: str) -> State:
    """Apply a or a^dagger to one mode.

    Creation on the top level n_max has nowhere to go; that amplitude is
    dropped and the result carries ``truncated=True``.
    """
    dim = state.dim
    if direction == "annihilate":
        return apply_mode_operator(state, annihilation(dim), mode)
    if direction != "create":
        raise ValueError("direction must be 'create' or 'annihilate'")
    if isinstance(state, PureState):
        top = np.take(state.amplitudes, dim - 1, axis=mode)
    else:
        top = np.take(state.tensor, dim - 1, axis=mode)
    out = apply_mode_operator(state, creation(dim), mode)
    dropped = bool(np.any(np.abs(top) > 0))
    if dropped:
        if isinstance(out, PureState):
            out = PureState(out.amplitudes, out.cutoff, True)
        else:
            out = DensityOperator(out.matrix, out.modes, out.cutoff, True)
    return out


def expectation(rho: State, op: Union[Mapping[int, np.ndarray], np.ndarray]) -> complex:
    """Tr(rho Op).

    ``op`` is either a full matrix on the whole space or a mapping
    ``{mode: single-mode matrix}`` describing a product operator (identity on
    the other modes).
    """
    if isinstance(op, np.ndarray):
        if isinstance(rho, PureState):
            v = rho.vector
            return complex(np.vdot(v, op @ v))
        return complex(np.trace(op @ rho.matrix))
    modes = sorted(op)
    if isinstance(rho, PureState):
        v = rho
        for j in modes:
            v = apply_mode_operator(v, op[j], j)
        return complex(np.vdot(rho.amplitudes, v.amplitudes))
    m = rho.modes
    t = rho.tensor
    for j in modes:
        t = np.moveaxis(np.tensordot(op[j], t, axes=([1], [j])), 0, j)
    size = rho.dim ** m
    return complex(np.trace(t.reshape(size, size)))


def photon_number_distribution(rho: State) -> np.ndarray:
    """Joint photon-number probabilities, one array axis per mode."""
    if isinstance(rho, PureState):
        return np.abs(rho.amplitudes) ** 2
    d = rho.dim
    return np.real(np.diag(rho.matrix)).reshape((d,) * rho.modes).copy()


def mean_photon_number(rho: State, mode: int) -> float:
    return float(expectation(rho, {mode: number(rho.dim)}).real)
