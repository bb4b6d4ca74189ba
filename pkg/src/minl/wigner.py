"""Two-mode Wigner function and its four reduced (marginal) forms.

W(X1, P1, X2, P2) = 4 Tr[rho D1(2 alpha) D2(2 beta) Pi1 Pi2] with
alpha = (X1 + i P1)/2, beta = (X2 + i P2)/2 and parity Pi = (-1)^n.  The
two-mode vacuum gives W(0) = 4 and the full 4-D integral equals 16 pi^2.

Displacement matrix elements are evaluated exactly through generalized
Laguerre polynomials, so no matrix exponential is truncated.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import eval_genlaguerre, gammaln

from .fock import State, to_density

WHICH = ("X1P1", "X2P2", "X1X2", "P1P2")
FULL_INTEGRAL = 16 * np.pi ** 2
DEFAULT_GRID = np.linspace(-6.0, 6.0, 81)


class CoverageWarning(UserWarning):
    """The integration grid misses a noticeable part of the state."""


def displacement_elements(beta: np.ndarray, dim: int) -> np.ndarray:
    """<m|D(beta)|n> for every beta; output shape beta.shape + (dim, dim)."""
    beta = np.asarray(beta, dtype=complex)
    x = np.abs(beta) ** 2
    m = np.arange(dim)[:, None]
    n = np.arange(dim)[None, :]
    lo = np.minimum(m, n)
    k = np.abs(m - n)
    lg = 0.5 * (gammaln(lo + 1) - gammaln(np.maximum(m, n) + 1))
    b = beta[..., None, None]
    # (beta)^{m-n} above the diagonal of m >= n, (-beta*)^{n-m} below
    power = np.where(m >= n, b ** k, (-np.conj(b)) ** k)
    lag = eval_genlaguerre(lo, k, x[..., None, None])
    return np.exp(lg - 0.5 * x[..., None, None]) * power * lag


def parity_kernel(alpha: np.ndarray, dim: int) -> np.ndarray:
    """<m|D(2 alpha) Pi|n> = (-1)^n <m|D(2 alpha)|n>."""
    sign = (-1.0) ** np.arange(dim)
    return displacement_elements(2 * np.asarray(alpha), dim) * sign


def wigner_point(rho: State, X1: float, P1: float, X2: float, P2: float) -> float:
    rho = to_density(rho)
    if rho.modes != 2:
        raise ValueError("wigner_point needs a two-mode state")
    d = rho.dim
    k1 = parity_kernel(np.array((X1 + 1j * P1) / 2), d)
    k2 = parity_kernel(np.array((X2 + 1j * P2) / 2), d)
    w = 4 * np.einsum("ijkl,ki,lj->", rho.tensor, k1, k2)
    return float(w.real)


@dataclass
class WignerGrid:
    which: str
    axes: tuple[np.ndarray, np.ndarray]
    values: np.ndarray
    integral: float
    l2_norm: float
    imag_residue: float

    def unit_l2(self) -> np.ndarray:
        """Values rescaled so that the integral of W^2 over the grid is 1."""
        return self.values / self.l2_norm

    def centroid(self) -> tuple[float, float]:
        x, y = self.axes
        w = self.values
        tot = trapezoid(trapezoid(w, y, axis=1), x)
        mx = trapezoid(trapezoid(w * x[:, None], y, axis=1), x) / tot
        my = trapezoid(trapezoid(w * y[None, :], y, axis=1), x) / tot
        return float(mx), float(my)

    def covariance(self) -> np.ndarray:
        x, y = self.axes
        w = self.values
        integ = lambda f: trapezoid(trapezoid(f, y, axis=1), x)
        tot = integ(w)
        mx, my = self.centroid()
        dx = (x - mx)[:, None]
        dy = (y - my)[None, :]
        cxx = integ(w * dx ** 2) / tot
        cyy = integ(w * dy ** 2) / tot
        cxy = integ(w * dx * dy) / tot
        return np.array([[cxx, cxy], [cxy, cyy]])


def reduced_wigner(
    rho: State,
    which: str,
    grid: tuple[np.ndarray, np.ndarray] | None = None,
    inner: np.ndarray = DEFAULT_GRID,
) -> WignerGrid:
    """Integrate the 4-D Wigner function over the complementary pair of variables.

    ``grid`` gives the two output axes (in the order of ``which``); ``inner``
    is the 1-D axis used for both integrated variables (trapezoidal rule).
    """
    if which not in WHICH:
        raise ValueError(f"which must be one of {WHICH}")
    rho = to_density(rho)
    if rho.modes != 2:
        raise ValueError("reduced_wigner needs a two-mode state")
    d = rho.dim
    t = rho.tensor
    if grid is None:
        grid = (DEFAULT_GRID, DEFAULT_GRID)
    ax, ay = (np.asarray(g, dtype=float) for g in grid)
    inner = np.asarray(inner, dtype=float)

    if which in ("X1P1", "X2P2"):
        # kernel of the integrated mode, summed over its whole phase plane
        kin = parity_kernel((inner[:, None] + 1j * inner[None, :]) / 2, d)
        g = trapezoid(trapezoid(kin, inner, axis=1), inner, axis=0)
        kout = parity_kernel((ax[:, None] + 1j * ay[None, :]) / 2, d)
        if which == "X1P1":
            sigma = np.einsum("ijkl,lj->ik", t, g)
        else:
            sigma = np.einsum("ijkl,ki->jl", t, g)
        w = 4 * np.einsum("ik,xyki->xy", sigma, kout)
    else:
        if which == "X1X2":
            h1 = trapezoid(parity_kernel((ax[:, None] + 1j * inner[None, :]) / 2, d), inner, axis=1)
            h2 = trapezoid(parity_kernel((ay[:, None] + 1j * inner[None, :]) / 2, d), inner, axis=1)
        else:
            h1 = trapezoid(parity_kernel((inner[:, None] + 1j * ax[None, :]) / 2, d), inner, axis=0)
            h2 = trapezoid(parity_kernel((inner[:, None] + 1j * ay[None, :]) / 2, d), inner, axis=0)
        tmp = np.einsum("ijkl,aki->ajl", t, h1)
        w = 4 * np.einsum("ajl,blj->ab", tmp, h2)

    imag = float(np.max(np.abs(w.imag), initial=0.0))
    w = w.real
    integral = float(trapezoid(trapezoid(w, ay, axis=1), ax))
    l2 = float(np.sqrt(trapezoid(trapezoid(w ** 2, ay, axis=1), ax)))
    expected = FULL_INTEGRAL * rho.trace
    if abs(integral - expected) > 1e-3 * expected:
        warnings.warn(
            f"grid captures {integral / expected:.4f} of the state; widen the axes",
            CoverageWarning,
            stacklevel=2,
        )
    return WignerGrid(which, (ax, ay), w, integral, l2, imag)
