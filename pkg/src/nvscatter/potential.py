"""Test potentials, their decay certificates and the auxiliary field w.

Three radial families, all real and centred at ``center``:

    gaussian             A exp(-r^2/w^2)
    stretched-rational   A (1 + r^2/w^2)^(-6)
    ring                 A e (r/w)^2 exp(-r^2/w^2)       (peak A on r = w)

The rational family is the only one with algebraic decay; its exponent 12
clears the ``(1+|z|)^(-3-j-eps)`` envelope for every derivative order j <= 4.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .grid import ComplexField, Grid, RealField, dz_multiplier, dzbar_multiplier, partial_x

FAMILIES = ("gaussian", "stretched-rational", "ring")
RATIONAL_POWER = 6
BOUNDARY_DECAY = 1e-10
MAX_ORDER = 4


class DecayError(ValueError):
    """Potential not negligible at the grid boundary."""


@dataclass(frozen=True)
class PotentialSpec:
    family: str = "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    center: complex = 0j
    eps: float = 0.5
    q: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if not np.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        if not self.width > 0:
            raise ValueError("width must be positive")
        if not self.eps > 0:
            raise ValueError("decay margin eps must be positive")
        object.__setattr__(self, "center", complex(self.center))

    def profile(self, z) -> np.ndarray:
        """Closed-form template evaluated at arbitrary points."""
        s2 = np.abs(np.asarray(z) - self.center) ** 2 / self.width**2
        if self.family == "gaussian":
            return self.amplitude * np.exp(-s2)
        if self.family == "stretched-rational":
            return self.amplitude * (1.0 + s2) ** (-RATIONAL_POWER)
        return self.amplitude * np.e * s2 * np.exp(-s2)

    def to_json(self) -> str:
        d = asdict(self)
        d["center"] = [self.center.real, self.center.imag]
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text) -> "PotentialSpec":
        d = json.loads(text) if isinstance(text, str) else dict(text)
        c = d.get("center", 0)
        if isinstance(c, (list, tuple)):
            d["center"] = complex(c[0], c[1])
        return cls(**d)


def _envelope(grid: Grid, order: int, eps: float) -> np.ndarray:
    return (1.0 + np.abs(grid.z)) ** (3 + order + eps)


def decay_ratios(values: np.ndarray, grid: Grid, eps: float) -> list[float]:
    """Per order j <= 4, ``max |d^j v| (1+|z|)^(3+j+eps)`` over all mixed partials."""
    out = []
    for order in range(MAX_ORDER + 1):
        worst = 0.0
        for j1 in range(order + 1):
            d = partial_x(values, grid, j1, order - j1).real if order else values
            worst = max(worst, float(np.max(np.abs(d) * _envelope(grid, order, eps))))
        out.append(worst)
    return out


def sample_potential(spec: PotentialSpec, grid: Grid) -> RealField:
    """Sample ``spec`` on ``grid`` and certify the decay bound.

    ``meta`` holds ``q`` and ``eps`` such that
    ``|d^j v| <= q (1+|z|)^(-3-j-eps)`` on the grid for ``j <= 4``.  If
    ``spec.q`` is given it is used when it suffices; otherwise the scanned
    maximum is recorded.

    Raises
    ------
    DecayError
        ``|v|`` on the boundary exceeds ``1e-10 * |amplitude|``.
    """
    vals = np.asarray(spec.profile(grid.z), dtype=float)
    amp = abs(spec.amplitude)
    edge = np.concatenate([vals[0, :], vals[:, 0]])
    if amp and np.max(np.abs(edge)) >= BOUNDARY_DECAY * amp:
        raise DecayError(
            f"|v| at the boundary is {np.max(np.abs(edge)):.2e}, above {BOUNDARY_DECAY:.0e} x amplitude; enlarge R"
        )
    qscan = max(decay_ratios(vals, grid, spec.eps))
    q = spec.q if spec.q is not None and spec.q >= qscan else qscan
    return RealField(grid, vals, meta={"q": q, "eps": spec.eps, "spec": spec.to_json()})


def validate_decay(v: RealField, q: float, eps: float) -> dict:
    """Ratios ``max|d^j v| (1+|z|)^(3+j+eps) / q`` for ``j = 0..4``; pass iff all <= 1."""
    if q <= 0:
        raise ValueError("q must be positive")
    ratios = [r / q for r in decay_ratios(v.values, v.grid, eps)]
    return {"ratios": ratios, "passed": all(r <= 1.0 for r in ratios), "q": q, "eps": eps}


@dataclass(frozen=True, eq=False)
class WField:
    w: ComplexField
    vhat0: complex
    residual: float
    padded: ComplexField | None = None


def _w_symbol(grid: Grid) -> np.ndarray:
    xi1, xi2 = grid.wavenumbers
    p = xi1 + 1j * xi2
    with np.errstate(invalid="ignore", divide="ignore"):
        m = -3.0 * np.conj(p) / p
    m[0, 0] = 0.0
    return m


def solve_w(v: RealField, pad: int = 4, rtol: float = 1e-6) -> WField:
    """Decaying solution of ``d_zbar w = -3 d_z v`` by Fourier division.

    ``v`` is zero-padded to ``pad`` times the box so the periodic images of
    the slowly decaying ``w ~ 1/z^2`` sit far from the original square.

    Raises
    ------
    ValueError
        Residual ``|d_zbar w + 3 d_z v|_inf`` above ``rtol * |v|_2``.
    """
    grid = v.grid
    big = Grid(grid.R * pad, grid.N * pad)
    lo = (big.N - grid.N) // 2
    sl = (slice(lo, lo + grid.N),) * 2
    vb = np.zeros((big.N, big.N))
    vb[sl] = v.values
    vhat = np.fft.fft2(vb)
    wb = np.fft.ifft2(_w_symbol(big) * vhat)
    w = wb[sl]

    fw = np.fft.fft2(wb)
    res = np.fft.ifft2(dzbar_multiplier(big) * fw + 3.0 * dz_multiplier(big) * vhat)[sl]
    resid = float(np.max(np.abs(res)))
    tol = rtol * v.norm(2)
    if resid > max(tol, 1e-300):
        raise ValueError(f"w residual {resid:.2e} exceeds tolerance {tol:.2e}; grid too small")
    vhat0 = complex(np.sum(v.values) * grid.h**2)
    return WField(ComplexField(grid, w), vhat0, resid, ComplexField(big, wb))


def check_w_asymptotics(wf: WField, ring_radius: float, npts: int = 256) -> dict:
    """Fit the leading coefficient ``c`` of ``w ~ c/z^2`` on a ring.

    The field is interpolated spectrally from the padded periodic solution
    (the cropped box is not periodic) at ``npts`` points on ``|z - 0| = ring_radius`` and
    ``c`` is the mean of ``w z^2``.  The target is ``3 vhat(0)/pi``.

    The mean filters out the higher multipoles ``z^(-n-2)``, so ``deviation``
    is tiny at any radius outside the support; ``pointwise`` is
    ``max |w z^2 / target - 1|`` on the ring, which decays like ``1/r``.
    """
    if ring_radius > 0.9 * wf.w.grid.R:
        raise ValueError("ring radius must be at most 0.9 R")
    src = wf.padded if wf.padded is not None else wf.w
    th = 2 * np.pi * np.arange(npts) / npts
    zr = ring_radius * np.exp(1j * th)
    wz = spectral_interpolate(src.values, src.grid, zr)
    coef = complex(np.mean(wz * zr**2))
    target = 3.0 * wf.vhat0 / np.pi
    if target != 0:
        dev = abs(coef - target) / abs(target)
        point = float(np.max(np.abs(wz * zr**2 / target - 1.0)))
    else:
        dev = abs(coef)
        point = float(np.max(np.abs(wz * zr**2)))
    return {"coefficient": coef, "target": target, "deviation": float(dev), "pointwise": point,
            "ring_radius": ring_radius}


def spectral_interpolate(values: np.ndarray, grid: Grid, pts) -> np.ndarray:
    """Trigonometric interpolant of periodic samples at arbitrary points."""
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    c = np.fft.fft2(values) / grid.N**2
    k = np.fft.fftfreq(grid.N, d=1.0 / grid.N)
    k[grid.N // 2] = 0.0  # drop the ambiguous Nyquist term
    ph = 2 * np.pi / (2 * grid.R)
    e1 = np.exp(1j * ph * np.outer(pts.real + grid.R, k))
    e2 = np.exp(1j * ph * np.outer(pts.imag + grid.R, k))
    return np.einsum("pj,jk,pk->p", e1, c, e2)
