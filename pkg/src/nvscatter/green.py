"""The Faddeev-type Green's function

    g(z, lam) = -(2 pi)^-2  \\iint exp(i Re(p conj z)) / s(p) dRe p dIm p,
    s(p) = p conj(p) + sqrt(E) (lam conj(p) + p / lam),

at energy ``E = +-1`` (``sqrt(-1) = i``).  The symbol factors as
``(p + sqrt(E) lam)(conj p + sqrt(E)/lam) - E`` and vanishes at ``p = 0`` and
``p = -sqrt(E) (lam + sgn(E)/conj(lam))``.

Two independent evaluators live here.  :func:`green_table` samples ``g`` on a
grid from an offset frequency lattice, peeling off the two point
singularities of ``1/s`` analytically.  :func:`green_point` is the reference:
polar coordinates about the zero ``p = 0`` with the radial integral done by the
exponential integral and the angular one adaptively.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.special import exp1, ive, roots_legendre

from .grid import ComplexField, Grid, dz_multiplier, dzbar_multiplier

DEFAULT_T_MARGIN = 0.05


class ZeroProximityError(ValueError):
    """A symbol zero lands on (or too near) a sampled frequency."""


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralSample:
    """A spectral parameter ``lam`` at energy sign ``esign``.

    For ``esign=+1`` the unit circle is excluded: ``||lam| - 1| >= margin``.
    """

    lam: complex
    esign: int = -1
    margin: float = DEFAULT_T_MARGIN

    def __post_init__(self):
        lam = complex(self.lam)
        object.__setattr__(self, "lam", lam)
        if self.esign not in (1, -1):
            raise ValueError(f"energy sign must be +1 or -1, got {self.esign}")
        if lam == 0 or not np.isfinite(abs(lam)):
            raise ValueError("spectral parameter must be finite and nonzero")
        if self.esign == 1 and abs(abs(lam) - 1.0) < self.margin:
            raise ValueError(
                f"|lam|={abs(lam):.4g} is within {self.margin} of the unit circle (E>0)"
            )

    @property
    def sqrtE(self) -> complex:
        return 1.0 + 0j if self.esign == 1 else 1j

    @property
    def mirror(self) -> "SpectralSample":
        """The partner ``-sgn(E)/conj(lam)`` of the determinant symmetry."""
        return SpectralSample(-self.esign / np.conj(self.lam), self.esign, self.margin)

    def symbol(self, p):
        return p * np.conj(p) + self.sqrtE * (self.lam * np.conj(p) + p / self.lam)

    def zeros(self) -> list[complex]:
        """Zeros of the symbol; a single entry when they coincide."""
        second = -self.sqrtE * (self.lam + self.esign / np.conj(self.lam))
        if abs(second) < 1e-14:
            return [0j]
        return [0j, complex(second)]

    def linearization(self, p0: complex) -> tuple[complex, complex]:
        """``(A, B)`` with ``s(p0 + q) = A q + B conj(q) + |q|^2``."""
        return (complex(np.conj(p0) + self.sqrtE / self.lam), complex(p0 + self.sqrtE * self.lam))


# ---------------------------------------------------------------------------
# reference point evaluation


def _radial(c: float, beta: complex) -> complex:
    """``int_0^inf exp(i rho c) / (rho + beta) drho`` for ``c != 0``."""
    if c < 0:
        return np.conj(_radial(-c, np.conj(beta)))
    w = -1j * c * beta
    val = np.exp(w) * exp1(w)
    # rotating the ray onto the imaginary axis sweeps past a pole in quadrant I
    if beta.real < 0 and beta.imag < 0:
        val += 2j * np.pi * np.exp(w)
    return val


def green_point(z: complex, sample: SpectralSample, tol: float = 1e-6, max_depth: int = 12) -> complex:
    """Reference value of ``g(z, lam)`` by polar quadrature in frequency.

    With ``p = rho e^{i theta}`` the symbol is ``rho (rho + beta(theta))``, so the
    Jacobian cancels the zero at the origin and the radial integral is an
    exponential integral.  The remaining angular integral has logarithmic
    singularities where ``Re(e^{i theta} conj z) = 0`` and jumps where the second
    zero's ray passes; those angles are handed to the adaptive rule as
    breakpoints.  ``max_depth`` bounds the bisection depth (``2**max_depth``
    subintervals).
    """
    z = complex(z)
    if z == 0:
        raise ValueError("green_point needs z != 0")
    lam, sq = sample.lam, sample.sqrtE
    r, phi = abs(z), np.angle(z)

    def integrand(theta):
        c = r * np.cos(theta - phi)
        if c == 0.0:
            return 0j
        beta = sq * (lam * np.exp(-1j * theta) + np.exp(1j * theta) / lam)
        return _radial(c, beta)

    breaks = {(phi + np.pi / 2) % (2 * np.pi), (phi - np.pi / 2) % (2 * np.pi)}
    for p0 in sample.zeros():
        if p0 != 0:
            breaks.add(np.angle(p0) % (2 * np.pi))
    # the rotation correction switches on/off where beta crosses the axes
    grid_t = np.linspace(0, 2 * np.pi, 4097)
    beta_t = sq * (lam * np.exp(-1j * grid_t) + np.exp(1j * grid_t) / lam)
    for real_part in (True, False):
        vals = beta_t.real if real_part else beta_t.imag
        for i in np.nonzero(np.diff(np.sign(vals)))[0]:
            f = lambda t, rp=real_part: _beta_part(t, sq, lam, rp)  # noqa: E731
            breaks.add(_bisect_sign(f, grid_t[i], grid_t[i + 1]))
    pts = sorted(b for b in breaks if 0 < b < 2 * np.pi)
    edges = [0.0, *pts, 2 * np.pi]
    total = 0j
    limit = 2**max_depth
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a < 1e-14:
            continue
        re, err_r = quad(lambda t: integrand(t).real, a, b, epsabs=tol / 8, epsrel=1e-10, limit=limit)
        im, err_i = quad(lambda t: integrand(t).imag, a, b, epsabs=tol / 8, epsrel=1e-10, limit=limit)
        if err_r + err_i > tol * (2 * np.pi) ** 2:
            raise QuadratureError(f"angular quadrature did not converge (err={err_r + err_i:.2e})")
        total += re + 1j * im
    return complex(-total / (2 * np.pi) ** 2)


def _beta_part(t, sq, lam, real_part):
    beta = sq * (lam * np.exp(-1j * t) + np.exp(1j * t) / lam)
    return beta.real if real_part else beta.imag


def _bisect_sign(f, a, b, iters=60):
    fa = f(a)
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = f(m)
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# tabulated Green's function


@dataclass(frozen=True, eq=False)
class GreenTable:
    """``g(., lam)`` sampled at every node difference of ``grid``.

    ``g`` lives on the doubled grid (same spacing, half-width ``2R``) so that a
    zero-padded FFT convolution against fields on ``grid`` is exact
    aperiodic discrete convolution.
    """

    sample: SpectralSample
    grid: Grid
    g: ComplexField
    residual: float = float("nan")
    info: dict = field(default_factory=dict)

    @property
    def lam(self) -> complex:
        return self.sample.lam

    def kernel_fft(self) -> np.ndarray:
        """FFT of the table in wrap-around order, ready for convolution."""
        cached = self.info.get("_kernel_fft")
        if cached is None:
            cached = np.fft.fft2(np.fft.ifftshift(self.g.values))
            self.info["_kernel_fft"] = cached
        return cached

    def convolve(self, f: np.ndarray) -> np.ndarray:
        """``h^2 sum_zeta g(z - zeta) f(zeta)`` at every node ``z`` of ``grid``."""
        n = self.grid.N
        pad = np.zeros((2 * n, 2 * n), dtype=complex)
        pad[:n, :n] = f
        out = np.fft.ifft2(np.fft.fft2(pad) * self.kernel_fft())
        return out[:n, :n] * self.grid.h**2

    def at_offsets(self, dj: np.ndarray, dk: np.ndarray) -> np.ndarray:
        """``g`` at node offsets ``(dj, dk)`` with ``|dj|, |dk| < N``."""
        n = self.grid.N
        return self.g.values[dj + n, dk + n]


def _window_scale(sample, p0, others, band, dxi):
    """Width (in |q|) of the Gaussian that localizes the subtracted pole."""
    A, B = sample.linearization(p0)
    stretch = abs(A) + abs(B)
    aniso = stretch / max(abs(abs(A) - abs(B)), 1e-300)
    edge = band - max(abs(p0.real), abs(p0.imag))
    # the Gaussian must be negligible (< e^-25) at the band edge
    sigma = min(1.0, edge / (5.0 * aniso))
    return sigma, A, B


def _pole_part(p, p0, A, B, a):
    q = p - p0
    w = A * q + B * np.conj(q)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(-a * np.abs(w) ** 2) / w
    return out


def _pole_kernel(z, p0, A, B, a):
    """Inverse transform ``(2 pi)^-2 \\iint e^{i Re(p conj z)} pole_part(p) dp``."""
    D = abs(A) ** 2 - abs(B) ** 2
    zeta = (A * z - B * np.conj(z)) / D
    with np.errstate(divide="ignore", invalid="ignore"):
        core = 1j / (2 * np.pi * zeta) * (-np.expm1(-np.abs(zeta) ** 2 / (4 * a)))
    core = np.where(np.abs(zeta) < 1e-300, 0.0, core)
    return np.exp(1j * (p0 * np.conj(z)).real) * core / abs(D)


def _quadratic_part(p, p0, A, B, a):
    """Windowed next term ``-|q|^2/w^2`` of ``1/s`` at the zero ``p0``."""
    q = p - p0
    w = A * q + B * np.conj(q)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.exp(-a * np.abs(w) ** 2) * np.abs(q) ** 2 / w**2
    return out


def _gauss_hankel(k, r, a):
    """``int_0^inf exp(-a rho^2) J_k(r rho) rho d rho`` for even ``k``."""
    r = np.asarray(r, dtype=float)
    if k == 0:
        return np.exp(-(r**2) / (4 * a)) / (2 * a)
    x = r**2 / (8 * a)
    return np.sqrt(np.pi) * r / (8 * a**1.5) * (ive((k - 1) / 2, x) - ive((k + 1) / 2, x))


def _quadratic_kernel(z, p0, A, B, a):
    """Inverse transform of :func:`_quadratic_part`.

    With ``q = (conj(A) w - B conj(w))/D`` the term is a sum of the angular
    harmonics ``exp(-i k arg w)``, ``k = 0, 2, 4``, under a radial Gaussian,
    each of which maps to ``i^k exp(-i k arg zeta) H_k(|zeta|)/(2 pi)``.
    """
    D = abs(A) ** 2 - abs(B) ** 2
    zeta = (A * z - B * np.conj(z)) / D
    r = np.abs(zeta)
    ph = np.exp(-1j * np.angle(zeta))
    coef = {0: -np.conj(A) * np.conj(B), 2: abs(A) ** 2 + abs(B) ** 2, 4: -A * B}
    out = 0j
    for k, c in coef.items():
        out = out + c * (1j) ** k * ph**k * _gauss_hankel(k, r, a)
    out = -out / (2 * np.pi * D**2)
    return np.exp(1j * (p0 * np.conj(z)).real) * out / abs(D)


def _cell_average(fun, center, half, p0, nodes=12):
    """Mean of ``fun`` over a square cell by polar (Duffy) quadrature about ``p0``."""
    x, wts = roots_legendre(nodes)
    u = 0.5 * (x + 1)
    wu = 0.5 * wts
    corners = [center + half * c for c in (1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j)]
    total = 0j
    # fan of triangles with apex p0 over the four sides
    for k in range(4):
        v1, v2 = corners[k], corners[(k + 1) % 4]
        e1, e2 = v1 - p0, v2 - p0
        # signed: for an apex outside the cell the fan overlaps and cancels
        jac = (np.conj(e1) * e2).imag
        if jac == 0:
            continue
        # point = p0 + s * (e1 + t (e2 - e1)), area element s * jac ds dt
        s = u[:, None]
        t = u[None, :]
        pts = p0 + s * (e1 + t * (e2 - e1))
        total += np.sum(fun(pts) * s * wu[:, None] * wu[None, :]) * jac
    return total / (2 * half) ** 2


def _symbol_inverse(sample, p):
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 / sample.symbol(p)


def green_table(
    sample: SpectralSample,
    grid: Grid,
    oversample: int = 4,
    correction: bool | str = True,
    cache: bool | None = None,
) -> GreenTable:
    """Tabulate ``g(z, lam)`` on every node difference of ``grid``.

    The frequency lattice has spacing ``2 pi / (oversample * 4R)``, extends to
    the Nyquist band ``|xi_i| < pi/h`` of ``grid`` and is offset by half a cell.
    With ``correction`` on, each in-band zero ``p0`` of the symbol is removed
    by subtracting ``exp(-a|w|^2)/w`` (``w`` the linearization of the symbol at
    ``p0``) whose transform is known in closed form, and the bounded remainder
    on the cells around ``p0`` is replaced by its cell mean from polar
    quadrature about ``p0``.  Both the ``1/w`` pole and the next term
    ``-|q|^2/w^2`` are subtracted, so the remainder is continuous.

    ``correction`` selects ``True`` (full construction), ``"raw"`` (plain
    samples of ``1/s``) or ``False`` (the ablation: regularized lattice sum
    with the analytic kernels and the polar cells zeroed).

    Raises
    ------
    ZeroProximityError
        If a symbol zero lies within ``1e-3`` of a lattice frequency, or the
        two zeros are too close for the lattice to separate.
    """
    cache_dir = os.environ.get("NVSCATTER_CACHE") if cache is not False else None
    if cache_dir:
        hit = _cache_load(cache_dir, sample, grid, oversample, correction)
        if hit is not None:
            return hit

    n, h = grid.N, grid.h
    nf = oversample * 2 * n
    dxi = 2 * np.pi / (nf * h)
    band = np.pi / h
    m = np.fft.fftfreq(nf, d=1.0 / nf)
    xi = (m + 0.5) * dxi
    P = xi[:, None] + 1j * xi[None, :]

    zeros = sample.zeros()
    for p0 in zeros:
        offs = (np.array([p0.real, p0.imag]) / dxi - 0.5) % 1.0
        dist = np.min(np.abs(np.stack([offs, 1 - offs])), axis=0) * dxi
        inside = max(abs(p0.real), abs(p0.imag)) < band
        if inside and np.hypot(*dist) < 1e-3:
            raise ZeroProximityError(f"symbol zero {p0:.6g} within 1e-3 of a frequency node; re-grid")
    if len(zeros) == 2 and abs(zeros[1]) < 4 * dxi and max(abs(zeros[1].real), abs(zeros[1].imag)) < band:
        raise ZeroProximityError(
            f"symbol zeros {abs(zeros[1]):.3g} apart, below the lattice resolution {dxi:.3g}"
        )

    F = _symbol_inverse(sample, P)
    info = {"dxi": dxi, "nf": nf, "poles": []}
    kernels = []
    if correction not in (True, False, "raw"):
        raise ValueError(f"correction must be True, False or 'raw', got {correction!r}")
    if correction != "raw":
        inband = [p0 for p0 in zeros if max(abs(p0.real), abs(p0.imag)) < band - 4 * dxi]
        for p0 in inband:
            others = [q for q in inband if q != p0]
            sigma, A, B = _window_scale(sample, p0, others, band, dxi)
            if sigma < 2 * dxi:
                continue
            a = 1.0 / ((abs(A) + abs(B)) * sigma) ** 2
            kernels.append((p0, A, B, a))
            info["poles"].append({"p0": p0, "sigma": sigma})

        def singular(p):
            out = 0j
            for p0, A, B, a in kernels:
                out = out + _pole_part(p, p0, A, B, a) + _quadratic_part(p, p0, A, B, a)
            return out

        def remainder(p):
            return _symbol_inverse(sample, p) - singular(p)

        F = F - singular(P)
        for p0, _, _, _ in kernels:
            jc = np.rint(p0.real / dxi - 0.5)
            kc = np.rint(p0.imag / dxi - 0.5)
            for dj in (-1, 0, 1):
                for dk in (-1, 0, 1):
                    mj, mk = int(jc + dj), int(kc + dk)
                    centre = complex((mj + 0.5) * dxi, (mk + 0.5) * dxi)
                    cell = _cell_average(remainder, centre, dxi / 2, p0) if correction else 0.0
                    F[mj % nf, mk % nf] = cell
    if not np.all(np.isfinite(F)):
        raise ZeroProximityError("symbol vanishes on the frequency lattice; re-grid")

    # sum_m F_m e^{i xi_m x_n} on the periodic box, x_n = n h
    S = np.fft.ifft2(F) * nf**2
    phase = np.exp(1j * np.pi * m / nf)
    S *= phase[:, None] * phase[None, :]
    G = -S * dxi**2 / (2 * np.pi) ** 2
    G = np.fft.fftshift(G)
    c0 = nf // 2
    G = G[c0 - n : c0 + n, c0 - n : c0 + n]
    ext = grid.doubled()
    if kernels and correction:
        zz = ext.z
        for p0, A, B, a in kernels:
            G = G - _pole_kernel(zz, p0, A, B, a) - _quadratic_kernel(zz, p0, A, B, a)

    table = GreenTable(sample, grid, ComplexField(ext, G), info=info)
    table = GreenTable(sample, grid, table.g, green_residual(table), info)
    if cache_dir:
        _cache_store(cache_dir, table, oversample, correction)
    return table


def green_residual(table: GreenTable, exclude: int = 3) -> float:
    """Max-norm of ``L g + delta_h`` over the inner grid, away from the origin.

    ``L = -4 d_z d_zbar - 2i sqrt(E) lam d_z - (2i sqrt(E)/lam) d_zbar`` has
    symbol ``s``; with the sign convention of ``g`` the table should satisfy
    ``L g = -delta``.  Derivatives are spectral on the doubled grid after a
    smooth taper beyond ``1.5 R``, with the Nyquist rows projected out; the
    check covers ``|x1|, |x2| < R``
    minus ``exclude`` cells around ``z = 0``.
    """
    ext = table.g.grid
    n2 = ext.N
    x = ext.axis / table.grid.R
    taper1 = _taper(np.abs(x))
    taper = taper1[:, None] * taper1[None, :]
    sym = conjugated_symbol(ext, table.sample)
    delta = np.zeros((n2, n2))
    delta[n2 // 2, n2 // 2] = 1.0 / ext.h**2
    rhat = np.fft.fft2(table.g.values * taper) * sym + np.fft.fft2(delta)
    # the Nyquist rows carry aliased +-pi/h content on which L is ambiguous
    rhat[n2 // 2, :] = 0.0
    rhat[:, n2 // 2] = 0.0
    res = np.abs(np.fft.ifft2(rhat))
    zz = ext.z
    R = table.grid.R
    mask = (np.abs(zz.real) < R) & (np.abs(zz.imag) < R)
    mask &= (np.abs(zz.real) > exclude * ext.h) | (np.abs(zz.imag) > exclude * ext.h)
    return float(res[mask].max())


def conjugated_symbol(grid: Grid, sample: SpectralSample) -> np.ndarray:
    """Grid symbol of ``L``; first-order terms vanish on the Nyquist rows."""
    xi1, xi2 = grid.wavenumbers
    sq, lam = sample.sqrtE, sample.lam
    return (xi1**2 + xi2**2) - 2j * sq * lam * dz_multiplier(grid) - 2j * sq / lam * dzbar_multiplier(grid)


def _taper(t):
    """1 for t <= 1.5, 0 for t >= 2, smooth in between."""
    s = np.clip((t - 1.5) / 0.5, 0.0, 1.0)
    out = np.ones_like(s)
    mid = (s > 0) & (s < 1)
    a = np.exp(-1.0 / s[mid])
    b = np.exp(-1.0 / (1.0 - s[mid]))
    out[mid] = b / (a + b)
    out[s >= 1] = 0.0
    return out


# ---------------------------------------------------------------------------
# on-disk cache keyed by (lam, esign, R, N)


def _cache_key(sample, grid, oversample, correction):
    raw = f"{sample.lam.real!r},{sample.lam.imag!r},{sample.esign},{grid.R!r},{grid.N},{oversample},{correction}"
    return hashlib.sha256(raw.encode()).hexdigest()[:24]


def _cache_load(cache_dir, sample, grid, oversample, correction):
    from .fieldio import FieldFormatError, read_field

    path = Path(cache_dir) / f"green_{_cache_key(sample, grid, oversample, correction)}.nvsf"
    if not path.exists():
        return None
    try:
        g = read_field(path)
    except FieldFormatError:
        return None
    table = GreenTable(sample, grid, g)
    return GreenTable(sample, grid, g, green_residual(table), {"cached": str(path)})


def _cache_store(cache_dir, table, oversample, correction):
    from .fieldio import write_field

    d = Path(cache_dir)
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"green_{_cache_key(table.sample, table.grid, oversample, correction)}.nvsf"
    prov = {
        "lam": [table.sample.lam.real, table.sample.lam.imag],
        "esign": table.sample.esign,
        "R": table.grid.R,
        "N": table.grid.N,
        "oversample": oversample,
        "correction": correction,
    }
    write_field(path, table.g, prov)
