"""Inverse transform: the d-bar problem in lam and reconstruction of v.

For fixed ``z`` the eigenfunction solves

    d mu / d conj(lam) = r(z, lam) conj(mu),    mu -> 1 as lam -> infinity,

equivalently ``mu = 1 + C[r conj(mu)]`` with the solid Cauchy transform
``C f(lam) = (1/pi) iint f(lam') / (lam - lam') dA(lam')``.  On a log-polar
grid ``lam = exp(s)``, ``s = sigma + i phi``, the transform is a convolution:

    1/(lam - lam') = exp(-s) / (1 - exp(-(s - s'))),   dA = |lam'|^2 dsigma dphi,

periodic in ``phi``.  The diagonal value ``1/2`` is the principal-value limit
of the kernel over a square cell.  The potential comes back from the
``1/lam`` coefficient ``mu_{-1}`` as ``v = 2i sqrt(E) d_z mu_{-1}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .eigen import ExceptionalPointError, solve_mu
from .green import SpectralSample, ZeroProximityError, green_table
from .grid import ComplexField, Grid, RealField
from .scatter import data_phase

RMIN, RMAX = 0.1, 10.0
MAX_ITER = 200
TOL = 1e-10
IMAG_LIMIT = 0.1


class ContractionError(RuntimeError):
    """The fixed-point iteration did not contract: data outside the small-data regime."""


@dataclass(frozen=True, eq=False)
class DbarData:
    """Scattering data ``b`` on a log-polar annulus ``rmin <= |lam| <= rmax``.

    ``sigma`` and ``phi`` are the 1-D axes; ``b`` has shape
    ``(len(sigma), len(phi))``.
    """

    sigma: np.ndarray
    phi: np.ndarray
    b: np.ndarray
    esign: int = -1
    filled: int = 0

    def __post_init__(self):
        if self.b.shape != (self.sigma.size, self.phi.size):
            raise ValueError("b must have shape (n_sigma, n_phi)")
        if self.esign not in (-1, 1):
            raise ValueError("esign must be +1 or -1")
        if self.esign > 0:
            raise NotImplementedError("d-bar inversion is implemented for E < 0 only")

    @property
    def lam(self) -> np.ndarray:
        return np.exp(self.sigma[:, None] + 1j * self.phi[None, :])

    @property
    def step(self) -> float:
        return float(self.phi[1] - self.phi[0])

    def with_b(self, b) -> "DbarData":
        return DbarData(self.sigma, self.phi, np.asarray(b, dtype=complex), self.esign, self.filled)

    def to_jsonl(self) -> str:
        lines = []
        for lam, b in zip(self.lam.ravel(), self.b.ravel()):
            lines.append(json.dumps({"lam": [lam.real, lam.imag], "b": [b.real, b.imag]}))
        return "\n".join(lines) + "\n"


def annulus(n_phi: int = 128, rmin: float = RMIN, rmax: float = RMAX) -> tuple[np.ndarray, np.ndarray]:
    """Log-polar axes with square cells (``dsigma == dphi``)."""
    dphi = 2 * np.pi / n_phi
    n_sigma = int(np.ceil(np.log(rmax / rmin) / dphi)) + 1
    sigma = np.log(rmin) + dphi * np.arange(n_sigma)
    phi = dphi * np.arange(n_phi)
    return sigma, phi


def forward_data(v: RealField, n_phi: int = 128, rmin: float = RMIN, rmax: float = RMAX,
                 esign: int = -1, radial: bool = False) -> DbarData:
    """``b`` on the annulus from the forward pipeline (Nystrom ``mu``, then the integral).

    With ``radial=True`` the potential must be rotation invariant about the
    origin; then ``b(e^{i t} lam) = b(lam)`` and one solve per radius suffices.

    Near ``|lam| = 1`` the two symbol zeros merge below the Green's-table
    resolution; those samples are filled by a cubic spline in ``sigma``
    along each ray (``b`` is smooth there for ``E < 0``).  The number of
    filled samples is stored in ``data.filled``.
    """
    sigma, phi = annulus(n_phi, rmin, rmax)
    grid = v.grid
    h2 = grid.h**2

    def b_at(lam):
        s = SpectralSample(complex(lam), esign)
        try:
            table = green_table(s, grid)
        except ZeroProximityError:
            return np.nan
        mu = solve_mu(v, s, table)
        if mu.exceptional:
            raise ExceptionalPointError(f"lam={lam} is exceptional")
        return complex(np.sum(np.exp(data_phase(grid.z, s)) * v.values * mu.field.values) * h2)

    if radial:
        col = np.array([b_at(np.exp(sg)) for sg in sigma], dtype=complex)
        b = np.repeat(col[:, None], phi.size, axis=1)
    else:
        lam = np.exp(sigma[:, None] + 1j * phi[None, :])
        b = np.array([b_at(l) for l in lam.ravel()], dtype=complex).reshape(lam.shape)
    missing = ~np.isfinite(b)
    if missing.any():
        for k in range(phi.size):
            bad = missing[:, k]
            if bad.any():
                good = ~bad
                b[bad, k] = CubicSpline(sigma[good], b[good, k])(sigma[bad])
    return DbarData(sigma, phi, b, esign, int(missing.sum()))


class CauchyTransform:
    """Solid Cauchy transform on a log-polar grid, applied by FFT convolution."""

    def __init__(self, sigma: np.ndarray, phi: np.ndarray):
        ns, nphi = sigma.size, phi.size
        d = float(phi[1] - phi[0])
        self.shape = (ns, nphi)
        self.pad = 2 * ns
        ds = d * np.concatenate([np.arange(ns), np.arange(-ns, 0)])
        dp = d * np.fft.fftfreq(nphi, 1.0 / nphi)
        S = ds[:, None] + 1j * dp[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            K = 1.0 / (1.0 - np.exp(-S))
        K[0, 0] = 0.5
        self.khat = np.fft.fft2(K * d * d / np.pi)
        self.weight = np.exp(2 * sigma)[:, None]
        self.prefactor = np.exp(-(sigma[:, None] + 1j * phi[None, :]))

    def __call__(self, f: np.ndarray) -> np.ndarray:
        """``C f`` on the grid; ``f`` may carry leading batch axes."""
        ns, nphi = self.shape
        g = np.zeros(f.shape[:-2] + (self.pad, nphi), dtype=complex)
        g[..., :ns, :] = f * self.weight
        conv = np.fft.ifft2(np.fft.fft2(g) * self.khat)[..., :ns, :]
        return self.prefactor * conv


def r_field(data: DbarData, z) -> np.ndarray:
    """``r(z, lam)`` on the data grid for each ``z`` (leading axis)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    lam = data.lam
    sq = 1.0 if data.esign > 0 else 1j
    sg = data.esign
    phase = 0.5j * sq * (1 + sg / np.abs(lam) ** 2) * (
        sg * z[:, None, None] * np.conj(lam) + lam * np.conj(z[:, None, None]))
    coef = np.sign(np.abs(lam) ** 2 - 1) * data.b / (4 * np.pi * np.conj(lam))
    return coef * np.exp(-phase)


def solve_dbar_mu(data: DbarData, z, relax: float = 1.0, tol: float = TOL, max_iter: int = MAX_ITER,
                  cauchy: CauchyTransform | None = None, history: list | None = None) -> np.ndarray:
    """``mu(z, .)`` on the annulus grid by relaxed fixed-point iteration.

    ``z`` may be a scalar or 1-D array; the result has shape
    ``(len(z), n_sigma, n_phi)``.  The per-sweep update norms are appended to
    ``history`` when given.

    Raises
    ------
    ContractionError
        No convergence to ``tol`` within ``max_iter`` sweeps, or the update
        grows for three consecutive sweeps.
    """
    C = cauchy or CauchyTransform(data.sigma, data.phi)
    r = r_field(data, z)
    mu = np.ones_like(r)
    prev, grow = np.inf, 0
    for _ in range(max_iter):
        new = 1.0 + C(r * np.conj(mu))
        upd = float(np.max(np.abs(new - mu)))
        mu = mu + relax * (new - mu)
        if history is not None:
            history.append(upd)
        if upd <= tol:
            return mu
        grow = grow + 1 if upd > prev else 0
        if grow >= 3:
            raise ContractionError(f"fixed-point update grew for three sweeps (last {upd:.2e})")
        prev = upd
    raise ContractionError(f"no convergence in {max_iter} sweeps (last update {upd:.2e})")


def born_term(data: DbarData, z) -> np.ndarray:
    """First sweep ``C[r . 1]`` from ``mu = 1``."""
    C = CauchyTransform(data.sigma, data.phi)
    return C(r_field(data, z))


def ring_coefficient(mu_ring: np.ndarray, rho: float, fit_tol: float = 1e-3) -> np.ndarray:
    """``mu_{-1}`` from ``mu`` on the ring ``|lam| = rho`` (angle last axis).

    Outside the data support ``mu - 1`` is a Laurent series in ``1/lam``;
    the discrete Fourier coefficient of ``e^{-i phi}`` gives ``mu_{-1}/rho``.

    Raises
    ------
    ValueError
        Non-negative powers carry more than ``fit_tol`` of the ring energy.
    """
    n = mu_ring.shape[-1]
    c = np.fft.fft(mu_ring - 1.0, axis=-1) / n
    k = np.fft.fftfreq(n, 1.0 / n)
    total = np.sum(np.abs(c) ** 2, axis=-1)
    bad = np.sum(np.abs(c[..., k >= 0]) ** 2, axis=-1)
    scale = float(np.max(total))
    if scale > 0 and float(np.max(bad)) > fit_tol**2 * scale:
        raise ValueError("ring values are not a 1/lam series: data do not vanish at the outer ring")
    return c[..., k == -1][..., 0] * rho


def _dz4(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order centered ``d/dz``, one-sided second order in the outer two layers.

    Local and non-periodic, so the slowly decaying ``mu_{-1} ~ 1/z`` is fine.
    """
    def d(ax):
        out = np.gradient(values, h, axis=ax, edge_order=2)
        f = np.moveaxis(values, ax, 0)
        o = np.moveaxis(out, ax, 0)
        o[2:-2] = (8 * (f[3:-1] - f[1:-3]) - (f[4:] - f[:-4])) / (12 * h)
        return out
    return 0.5 * (d(0) - 1j * d(1))


@dataclass(frozen=True, eq=False)
class Reconstruction:
    v: RealField
    imag_defect: float
    mu_minus1: ComplexField
    born_parameter: float
    sweeps: int


def reconstruct_v(data: DbarData, grid: Grid, batch: int = 256, relax: float = 1.0,
                  imag_limit: float = IMAG_LIMIT) -> Reconstruction:
    """``v = 2i sqrt(E) d_z mu_{-1}`` on ``grid`` from the d-bar data.

    ``imag_defect`` is ``|Im v|_2 / |v|_2``; the real part is returned.
    ``born_parameter`` is ``max |C[r]|`` over the grid, the size of the
    first iterate.

    Raises
    ------
    ValueError
        Imaginary part above ``imag_limit`` of the norm, or a ring-fit failure.
    """
    C = CauchyTransform(data.sigma, data.phi)
    rho = float(np.exp(data.sigma[-1]))
    zs = grid.z.ravel()
    m1 = np.empty(zs.size, dtype=complex)
    born = 0.0
    sweeps = 0
    for i in range(0, zs.size, batch):
        zb = zs[i:i + batch]
        born = max(born, float(np.max(np.abs(C(r_field(data, zb))))))
        hist = []
        mu = solve_dbar_mu(data, zb, relax=relax, cauchy=C, history=hist)
        sweeps = max(sweeps, len(hist))
        m1[i:i + batch] = ring_coefficient(mu[:, -1, :], rho)
    m1 = m1.reshape(grid.N, grid.N)
    sq = 1.0 if data.esign > 0 else 1j
    vc = 2j * sq * _dz4(m1, grid.h)
    nrm = np.linalg.norm(vc)
    defect = float(np.linalg.norm(vc.imag) / nrm) if nrm else 0.0
    if defect > imag_limit:
        raise ValueError(f"imaginary part is {defect:.1%} of the reconstruction (limit {imag_limit:.0%})")
    return Reconstruction(RealField(grid, vc.real), defect, ComplexField(grid, m1), born, sweeps)
