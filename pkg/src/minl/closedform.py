"""Analytic output states, heralding probabilities and moments.

These formulas are independent of the Fock simulator and serve as its oracle.
The PNR and click states (single and both) describe the pipeline with the
phase shifter on channel 1 before BS4 (``phase_placement="internal"``).  The
no-detection state describes the phase on channel 2 after BS4
(``phase_placement="output"``).  Amplitudes use t_i = cos(theta_i) and
r_i = sin(theta_i), so negative reflection amplitudes are allowed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .fock import CutoffWarning, coherent_amplitudes
from .squeeze import Moments

SUM_LIMIT = 30
TAIL_TOL = 1e-9


def _tr(theta: Sequence[float]):
    th = np.asarray(theta, dtype=float)
    return np.cos(th), np.sin(th)


def theta_from_T(T: Sequence[float]) -> tuple[float, ...]:
    return tuple(float(np.arccos(np.sqrt(x))) for x in T)


@dataclass(frozen=True)
class PnrCoefficients:
    """N (gamma0 + gamma1 a1^dag + gamma2 a2^dag) |alpha1, alpha2>."""

    gamma0: complex
    gamma1: complex
    gamma2: complex
    alpha1: complex
    alpha2: complex
    alpha3: complex
    alpha4: complex
    N: float
    P: float
    variant: str

    def amplitudes(self, dim: int) -> np.ndarray:
        """Normalized two-mode Fock amplitudes truncated at ``dim`` levels."""
        return self.N * photon_added_amplitudes(self.gamma0, self.gamma1, self.gamma2, self.alpha1, self.alpha2, dim)


def photon_added_amplitudes(g0, g1, g2, a1, a2, dim: int) -> np.ndarray:
    """Fock amplitudes of (g0 + g1 a1^dag + g2 a2^dag)|a1, a2>, exact per element."""
    c1 = coherent_amplitudes(a1, dim)
    c2 = coherent_amplitudes(a2, dim)
    n = np.arange(dim)
    up1 = np.zeros(dim, dtype=complex)
    up2 = np.zeros(dim, dtype=complex)
    up1[1:] = np.sqrt(n[1:]) * c1[:-1]
    up2[1:] = np.sqrt(n[1:]) * c2[:-1]
    return g0 * np.outer(c1, c2) + g1 * np.outer(up1, c2) + g2 * np.outer(c1, up2)


def no_detection_state(T1: float, T4: float, phi: float, alpha_in: complex, theta: Sequence[float] | None = None) -> PnrCoefficients:
    """Output without out-coupling (T2 = T3 = 1): (g01 a1^dag + g02 a2^dag)|a01, a02>."""
    th = theta if theta is not None else theta_from_T([T1, T4])
    (t1, t4), (r1, r4) = _tr(th)
    e = np.exp(1j * phi)
    g01 = t1 * t4 - r1 * r4
    g02 = 1j * e * (t1 * r4 + r1 * t4)
    a01 = 1j * alpha_in * (t1 * r4 + r1 * t4)
    a02 = alpha_in * e * (t1 * t4 - r1 * r4)
    return PnrCoefficients(0.0, g01, g02, a01, a02, 0.0, 0.0, 1.0, 1.0, "none")


def no_detection_variance(T1: float, T4: float, phi: float) -> float:
    """Joint-quadrature variance without out-coupling; equal for C1 and C2."""
    (t1, t4), (r1, r4) = _tr(theta_from_T([T1, T4]))
    return float(0.5 + np.sin(phi) * (0.5 * (t1 * r1 + t4 * r4) - t1 ** 2 * t4 * r4 - t4 ** 2 * t1 * r1))


def _pnr_common(theta, phi, alpha_in):
    (t1, t2, t3, t4), (r1, r2, r3, r4) = _tr(theta)
    e = np.exp(1j * phi)
    a = complex(alpha_in)
    g0 = 1j * t1 * r3
    g1 = a * r1 * r3 * (r1 * t2 * r4 - t1 * t3 * t4 * e)
    g2 = -1j * a * r1 * r3 * (r1 * t2 * t4 + t1 * t3 * r4 * e)
    a1 = 1j * a * (t1 * t2 * r4 + r1 * t3 * t4 * e)
    a2 = a * (t1 * t2 * t4 - r1 * t3 * r4 * e)
    a3 = 1j * a * t1 * r2
    a4 = -a * r1 * r3
    return g0, g1, g2, a1, a2, a3, a4


def pnr_probability(theta: Sequence[float], alpha_in: complex, variant: str) -> float:
    """Heralding probability for one photon in channel 4 only, or one in each channel."""
    (t1, t2, t3, _), (r1, r2, r3, _) = _tr(theta)
    T1, T2, T3 = t1 ** 2, t2 ** 2, t3 ** 2
    R1, R2, R3 = r1 ** 2, r2 ** 2, r3 ** 2
    x = abs(alpha_in) ** 2
    pre = np.exp(-x * (T1 * R2 + R1 * R3))
    if variant == "single":
        return float(pre * R3 * (x * R1 ** 2 * T2 + T1 * (1 + x * R1 * (3 * T3 - 2 * T2) + x ** 2 * R1 ** 2 * (T2 - T3) ** 2)))
    if variant == "both":
        brace = (
            T1 ** 2
            + R1 ** 2 * (1 + x * T1 * (3 * T2 - 2 * T3) + x ** 2 * T1 ** 2 * (T2 - T3) ** 2)
            + R1 * (-2 * T1 + x * T1 ** 2 * (-2 * T2 + 3 * T3))
        )
        return float(pre * x * R2 * R3 * brace)
    raise ValueError("variant must be 'single' or 'both'")


def pnr_state(theta: Sequence[float], phi: float, alpha_in: complex, variant: str = "single") -> PnrCoefficients:
    """Coefficient bundle of the heralded PNR state after BS4."""
    g0, g1, g2, a1, a2, a3, a4 = _pnr_common(theta, phi, alpha_in)
    (t1, t2, t3, t4), (r1, r2, r3, r4) = _tr(theta)
    if variant == "both":
        g0, g1, g2 = complex(alpha_in) * r2 * r3 * (2 * r1 ** 2 - 1), g1 * a3, g2 * a3
    elif variant != "single":
        raise ValueError("variant must be 'single' or 'both'")
    p = pnr_probability(theta, alpha_in, variant)
    n = p ** -0.5 * np.exp(-0.5 * (abs(a3) ** 2 + abs(a4) ** 2)) if p > 0 else np.inf
    return PnrCoefficients(g0, g1, g2, a1, a2, a3, a4, float(n), p, variant)


def special_case_variance(T: float, alpha: float, phi: float, xi: float) -> tuple[float, float]:
    """Single-PNR variances at T1 = 1/2, T2 = T3 = T, T4 = 1, real alpha."""
    x = T * alpha ** 2
    base = 0.25 + x / 2 + x ** 2 / 2
    br = -np.cos(2 * xi) + np.cos(2 * xi - 2 * phi) + 2 * np.sin(2 * xi - phi)
    v1 = (base + x / 8 * (br + 2 * x * np.sin(phi))) / (1 + x) ** 2
    v2 = (base + x / 8 * (-br + 2 * x * np.sin(phi))) / (1 + x) ** 2
    return float(v1), float(v2)


def special_case_probability(T: float, alpha: float, form: str = "reduced") -> float:
    """Single-PNR probability at T1 = 1/2, T2 = T3 = T, T4 = 1.

    ``form="reduced"`` is the general probability evaluated at these
    parameters, (1 - T)/2 e^{-x(1-T)} (1 + x T) with x = |alpha|^2.
    ``form="alternate"`` uses the factor (1 + 3 x T / 2) instead, which does
    not follow from the general expression and disagrees with the simulator.
    """
    x = abs(alpha) ** 2
    if form == "reduced":
        k = 1.0
    elif form == "alternate":
        k = 1.5
    else:
        raise ValueError("form must be 'reduced' or 'alternate'")
    return float((1 - T) / 2 * np.exp(-x * (1 - T)) * (1 + x * k * T))


# click detection


@dataclass(frozen=True)
class ClickCoefficients:
    g1: complex
    g2: complex
    g3: complex
    g4: complex
    alpha_tilde1: complex
    alpha_tilde2: complex
    alpha_tilde3: complex
    alpha_tilde4: complex
    gamma_tilde3: complex
    gamma_tilde4: complex
    P: float
    variant: str
    pnr: PnrCoefficients
    k_max: int = SUM_LIMIT
    m_max: int = SUM_LIMIT
    n_max_sum: int = SUM_LIMIT

    def density(self, dim: int) -> np.ndarray:
        """Normalized (dim^2, dim^2) density matrix of the heralded mixture."""
        c = self.pnr
        out = np.zeros((dim * dim, dim * dim), dtype=complex)
        pre = np.exp(-abs(c.alpha3) ** 2 - abs(c.alpha4) ** 2) / self.P
        if self.variant == "single":
            for k in range(1, self.k_max + 1):
                w = _weight(c.alpha4, k)
                if w == 0.0:
                    continue
                v = photon_added_amplitudes(k * c.gamma0, c.gamma1, c.gamma2, c.alpha1, c.alpha2, dim).ravel()
                out += w * np.outer(v, v.conj())
        else:
            for m in range(1, self.m_max + 1):
                wm = _weight(c.alpha3, m)
                if wm == 0.0:
                    continue
                for n in range(1, self.n_max_sum + 1):
                    w = wm * _weight(c.alpha4, n)
                    if w == 0.0:
                        continue
                    g0 = m * self.gamma_tilde3 + n * self.gamma_tilde4
                    v = photon_added_amplitudes(g0, c.gamma1 * c.alpha3, c.gamma2 * c.alpha3, c.alpha1, c.alpha2, dim).ravel()
                    out += w * np.outer(v, v.conj())
        return pre * out


def _weight(beta: complex, k: int) -> float:
    """|beta|^{2k-2} / k!, with 0^0 = 1."""
    b = abs(beta)
    if b == 0:
        return 1.0 if k == 1 else 0.0
    return float(np.exp((2 * k - 2) * np.log(b) - gammaln(k + 1)))


def _series(betas: Sequence[complex], gs: Sequence[complex], limit: int) -> float:
    """sum over n of |sum_j g_j n_j b_j^{n_j-1}/sqrt(n_j!) prod_{l!=j} b_l^{n_l}/sqrt(n_l!)|^2.

    The n_j = 0 terms of the derivative factors vanish identically, which is
    the removable form of the n b^{n-1} expressions.
    """
    n = np.arange(limit + 1)
    lf = 0.5 * gammaln(n + 1)
    f, h = [], []
    for b in betas:
        b = complex(b)
        fv = np.zeros(limit + 1, dtype=complex)
        hv = np.zeros(limit + 1, dtype=complex)
        if b == 0:
            fv[0] = 1.0
            hv[1] = 1.0
        else:
            fv = np.exp(n * np.log(abs(b)) - lf) * np.exp(1j * n * np.angle(b))
            hv[1:] = n[1:] * np.exp((n[1:] - 1) * np.log(abs(b)) - lf[1:]) * np.exp(1j * (n[1:] - 1) * np.angle(b))
        f.append(fv)
        h.append(hv)
    total = 0
    for j, g in enumerate(gs):
        factors = [h[l] if l == j else f[l] for l in range(len(betas))]
        term = factors[0]
        for fac in factors[1:]:
            term = np.multiply.outer(term, fac)
        total = total + g * term
    return float(np.sum(np.abs(total) ** 2))


def _tail_check(betas: Sequence[complex], limit: int) -> None:
    # generous bound on the dropped Poisson-like tail of every index
    for b in betas:
        x = abs(b) ** 2
        if x == 0:
            continue
        n = limit + 1
        tail = np.exp(n * np.log(x) - gammaln(n + 1)) * (n + 1) ** 2 * np.exp(x)
        if tail > TAIL_TOL:
            warnings.warn(f"series truncated at {limit} may be inaccurate (tail ~{tail:.2g})", CutoffWarning, stacklevel=3)


def click_state(theta: Sequence[float], phi: float, alpha_in: complex, variant: str = "single", limit: int = SUM_LIMIT) -> ClickCoefficients:
    """Coefficients and probability of the heralded click-detection state."""
    (t1, t2, t3, t4), (r1, r2, r3, r4) = _tr(theta)
    a = complex(alpha_in)
    pnr = pnr_state(theta, phi, alpha_in, "single")
    pnr = PnrCoefficients(pnr.gamma0, pnr.gamma1, pnr.gamma2, pnr.alpha1, pnr.alpha2, pnr.alpha3, pnr.alpha4, 1.0, 0.0, variant)
    g1 = -r1 * r2
    g2 = 1j * r1 * t2
    g3 = pnr.gamma0
    g4 = t1 * t3
    at1 = pnr.alpha3
    at2 = a * t1 * t2
    at3 = pnr.alpha4
    at4 = 1j * a * r1 * t3
    gt3 = a * r1 ** 2 * r2 * r3
    gt4 = -a * t1 ** 2 * r2 * r3
    _tail_check([at1, at2, at3, at4], limit)
    ex = np.exp(-abs(a) ** 2)
    s_ch3_vac = _series([at2, at3, at4], [g2, g3, g4], limit)
    s_both_vac = _series([at2, at4], [g2, g4], limit)
    if variant == "single":
        p = ex * (s_ch3_vac - s_both_vac)
    elif variant == "both":
        s_ch4_vac = _series([at1, at2, at4], [g1, g2, g4], limit)
        p = 1 - ex * (s_ch3_vac + s_ch4_vac - s_both_vac)
    else:
        raise ValueError("variant must be 'single' or 'both'")
    return ClickCoefficients(g1, g2, g3, g4, at1, at2, at3, at4, gt3, gt4, float(p), variant, pnr, limit, limit, limit)


def click_probability(theta: Sequence[float], alpha_in: complex, variant: str, limit: int = SUM_LIMIT) -> float:
    return click_state(theta, 0.0, alpha_in, variant, limit).P


def pnr_moments(c: PnrCoefficients) -> Moments:
    """Ladder moments of N (g0 + g1 a^dag + g2 b^dag)|a1, a2> in closed form."""
    g0, g1, g2 = c.gamma0, c.gamma1, c.gamma2
    a1, a2 = c.alpha1, c.alpha2
    N2 = c.N ** 2
    cj = np.conj
    A1, A2 = abs(a1) ** 2, abs(a2) ** 2
    G0, G1, G2 = abs(g0) ** 2, abs(g1) ** 2, abs(g2) ** 2
    ma = N2 * (
        G0 * a1 + cj(g0) * g1 * (A1 + 1) + cj(g0) * g2 * a1 * cj(a2) + cj(g1) * g0 * a1 ** 2
        + G1 * a1 * (A1 + 2) + cj(g1) * g2 * a1 ** 2 * cj(a2)
        + cj(g2) * g0 * a1 * a2 + cj(g2) * g1 * a2 * (A1 + 1) + G2 * a1 * (A2 + 1)
    )
    mb = N2 * (
        G0 * a2 + cj(g0) * g1 * a2 * cj(a1) + cj(g0) * g2 * (A2 + 1) + cj(g1) * g0 * a1 * a2
        + G1 * a2 * (A1 + 1) + cj(g1) * g2 * a1 * (A2 + 1)
        + cj(g2) * g0 * a2 ** 2 + cj(g2) * g1 * a2 ** 2 * cj(a1) + G2 * a2 * (A2 + 2)
    )
    ma2 = N2 * (
        G0 * a1 ** 2 + cj(g0) * g1 * a1 * (A1 + 2) + cj(g0) * g2 * a1 ** 2 * cj(a2) + cj(g1) * g0 * a1 ** 3
        + G1 * a1 ** 2 * (A1 + 3) + cj(g1) * g2 * a1 ** 3 * cj(a2)
        + cj(g2) * g0 * a2 * a1 ** 2 + cj(g2) * g1 * a2 * a1 * (A1 + 2) + G2 * a1 ** 2 * (A2 + 1)
    )
    mb2 = N2 * (
        G0 * a2 ** 2 + cj(g0) * g1 * a2 ** 2 * cj(a1) + cj(g0) * g2 * a2 * (A2 + 2) + cj(g1) * g0 * a1 * a2 ** 2
        + G1 * (A1 + 1) * a2 ** 2 + cj(g1) * g2 * a1 * a2 * (A2 + 2)
        + cj(g2) * g0 * a2 ** 3 + cj(g2) * g1 * a2 ** 3 * cj(a1) + G2 * a2 ** 2 * (A2 + 3)
    )
    maad = N2 * (
        G0 * (A1 + 1) + 2 * np.real(cj(g0) * g1 * cj(a1) * (A1 + 2)) + 2 * np.real(cj(g0) * g2 * cj(a2) * (A1 + 1))
        + G1 * (A1 ** 2 + 4 * A1 + 2) + 2 * np.real(cj(g1) * g2 * cj(a2) * a1 * (A1 + 2))
        + G2 * (A1 + 1) * (A2 + 1)
    )
    mbbd = N2 * (
        G0 * (A2 + 1) + 2 * np.real(cj(g0) * g1 * cj(a1) * (A2 + 1)) + 2 * np.real(cj(g0) * g2 * cj(a2) * (A2 + 2))
        + G1 * (A1 + 1) * (A2 + 1) + 2 * np.real(cj(g1) * g2 * a1 * cj(a2) * (A2 + 2))
        + G2 * (A2 ** 2 + 4 * A2 + 2)
    )
    mab = N2 * (
        G0 * a1 * a2 + g0 * cj(g1) * a1 ** 2 * a2 + g0 * cj(g2) * a1 * a2 ** 2
        + g1 * cj(g0) * a2 * (A1 + 1) + G1 * a2 * a1 * (A1 + 2) + g1 * cj(g2) * a2 ** 2 * (A1 + 1)
        + g2 * cj(g0) * a1 * (A2 + 1) + g2 * cj(g1) * a1 ** 2 * (A2 + 1) + G2 * a1 * a2 * (A2 + 2)
    )
    mabd = N2 * (
        G0 * a1 * cj(a2) + cj(g0) * g1 * cj(a2) * (A1 + 1) + cj(g0) * g2 * a1 * cj(a2) ** 2
        + cj(g1) * g0 * a1 ** 2 * cj(a2) + G1 * cj(a2) * a1 * (A1 + 2) + cj(g1) * g2 * a1 ** 2 * cj(a2) ** 2
        + cj(g2) * g0 * a1 * (A2 + 1) + cj(g2) * g1 * (A1 + 1) * (A2 + 1) + G2 * a1 * cj(a2) * (A2 + 2)
    )
    return Moments(
        a=complex(ma), b=complex(mb), a2=complex(ma2), b2=complex(mb2), ab=complex(mab),
        abd=complex(mabd), aad=float(np.real(maad)), bbd=float(np.real(mbbd)),
    )
