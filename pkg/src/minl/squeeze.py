"""Joint quadratures and two-mode squeezing.

With S = a + b the joint quadratures are

    C1 = (e^{-i xi} S + e^{i xi} S^dag) / sqrt(8)
    C2 = (e^{-i xi} S - e^{i xi} S^dag) / (i sqrt(8))

so that coherent states sit at the shot-noise level 1/4.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .circuit import InterferometerConfig, run_pipeline
from .fock import DensityOperator, PureState, State, annihilation, to_density

SHOT_NOISE = 0.25


@dataclass(frozen=True)
class Moments:
    """Ladder moments of a two-mode state; ``abd`` is <a b^dag>, ``aad`` is <a a^dag>."""

    a: complex
    b: complex
    a2: complex
    b2: complex
    ab: complex
    abd: complex
    aad: complex
    bbd: complex


def _pure_moments(psi: PureState) -> Moments:
    v = psi.amplitudes
    d = psi.dim
    a = annihilation(d)
    av = a @ v
    bv = v @ a.T
    a2v = a @ av
    b2v = bv @ a.T
    abv = av @ a.T
    norm = lambda x: float(np.vdot(x, x).real)
    return Moments(
        a=complex(np.vdot(v, av)),
        b=complex(np.vdot(v, bv)),
        a2=complex(np.vdot(v, a2v)),
        b2=complex(np.vdot(v, b2v)),
        ab=complex(np.vdot(v, abv)),
        abd=complex(np.vdot(bv, av)),
        aad=norm(av) + norm(v),
        bbd=norm(bv) + norm(v),
    )


def moments(rho: State) -> Moments:
    """Ladder moments of a normalized two-mode state."""
    if rho.modes != 2:
        raise ValueError("moments need a two-mode state")
    if isinstance(rho, PureState):
        return _pure_moments(rho)
    rho = to_density(rho)
    if rho.modes != 2:
        raise ValueError("moments need a two-mode state")
    d = rho.dim
    t = rho.tensor
    a = annihilation(d)
    ad = a.T
    ra = np.einsum("ijkj->ik", t)
    rb = np.einsum("ijil->jl", t)

    def one(r, op):
        return complex(np.einsum("ik,ki->", r, op))

    def two(op1, op2):
        return complex(np.einsum("ijkl,ki,lj->", t, op1, op2))

    return Moments(
        a=one(ra, a),
        b=one(rb, a),
        a2=one(ra, a @ a),
        b2=one(rb, a @ a),
        ab=two(a, a),
        abd=two(a, ad),
        # a a^dag = a^dag a + 1 avoids the truncated top level
        aad=one(ra, ad @ a).real + 1.0,
        bbd=one(rb, ad @ a).real + 1.0,
    )


def two_mode_variance(m: Moments, xi: float) -> tuple[float, float]:
    """Variances of C1 and C2 from the ladder moments."""
    e1 = np.exp(-1j * xi)
    e2 = np.exp(-2j * xi)
    quad = e2 * (m.a2 + m.b2 + 2 * m.ab)
    mean = e1 * (m.a + m.b)
    common = m.aad + m.bbd - 1
    v1 = 0.25 * ((quad + 2 * m.abd).real + common) - 0.5 * mean.real ** 2
    v2 = -0.25 * ((quad - 2 * m.abd).real - common) - 0.5 * mean.imag ** 2
    return float(v1), float(v2)


def squeezing_db(var: float) -> float:
    """10 log10(var / (1/4))."""
    if not var > 0:
        raise ValueError(f"variance must be positive, got {var}")
    return float(10 * np.log10(var / SHOT_NOISE))


def quadrature_operators(dim: int, xi: float) -> tuple[np.ndarray, np.ndarray]:
    """C1 and C2 as (dim^2, dim^2) matrices on the truncated two-mode space."""
    a = annihilation(dim)
    eye = np.eye(dim)
    s = np.kron(a, eye) + np.kron(eye, a)
    e = np.exp(-1j * xi)
    c1 = (e * s + np.conj(e) * s.conj().T) / np.sqrt(8)
    c2 = (e * s - np.conj(e) * s.conj().T) / (1j * np.sqrt(8))
    return c1, c2


def direct_variance(rho: State, xi: float) -> tuple[float, float]:
    """Variances from explicit quadrature matrices (independent of the moment route).

    The squares are taken as C^dag C via the un-truncated action of S on the
    state, so the top Fock level does not bias the result.
    """
    rho = to_density(rho)
    d = rho.dim
    # embed in one extra level so S^2 acts exactly on the stored state
    big = d + 1
    m = np.zeros((big, big, big, big), dtype=complex)
    m[:d, :d, :d, :d] = rho.tensor
    m = m.reshape(big * big, big * big)
    out = []
    for c in quadrature_operators(big, xi):
        mean = np.trace(c @ m).real
        second = np.trace(c @ c @ m).real
        out.append(float(second - mean ** 2))
    return out[0], out[1]


def xi_sweep(rho: State, xi_grid: Iterable[float]) -> tuple[np.ndarray, np.ndarray]:
    """Squeezing of C1 and C2 in dB along a grid of quadrature phases."""
    m = moments(rho)
    s1, s2 = [], []
    for xi in xi_grid:
        v1, v2 = two_mode_variance(m, xi)
        s1.append(squeezing_db(v1))
        s2.append(squeezing_db(v2))
    return np.array(s1), np.array(s2)


@dataclass(frozen=True)
class SqueezingReport:
    var_C1: float
    var_C2: float
    S1_dB: float
    S2_dB: float
    P_det: float
    params: InterferometerConfig
    xi: float


def evaluate(cfg: InterferometerConfig, xi: float, method: str = "fast") -> SqueezingReport:
    """Run the pipeline and report both joint-quadrature variances at ``xi``."""
    state, p = run_pipeline(cfg, method)
    v1, v2 = two_mode_variance(moments(state), xi)
    return SqueezingReport(v1, v2, squeezing_db(v1), squeezing_db(v2), p, cfg, float(xi))
