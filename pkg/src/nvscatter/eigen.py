"""Nystrom solution of the mu / nu integral equations.

    mu = 1 + g * (v mu),        nu = nu0 + g * (v nu),
    nu0(z) = (i sqrt(E)/2) (lam conj(z) - z/lam).

Unknowns are the samples of ``mu`` (or ``nu - nu0``) on the support of ``v``;
values off the support follow from one more convolution.  Both equations
share the operator ``I - G V`` and differ only in the right-hand side, so a
:class:`NystromOperator` is factored once and reused.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, gmres

from .green import GreenTable, SpectralSample, conjugated_symbol, green_table
from .grid import ComplexField, Grid, RealField

log = logging.getLogger(__name__)

SUPPORT_THRESHOLD = 1e-13
DENSE_LIMIT = 4000
SOLVER_RTOL = 1e-10
RCOND_SINGULAR = 1e-12


class ExceptionalPointError(RuntimeError):
    """The Nystrom system is numerically singular: lam is in the exceptional set."""


@dataclass(frozen=True, eq=False)
class EigenSolution:
    kind: str
    sample: SpectralSample
    field: ComplexField
    solver_residual: float
    schrodinger_residual: float = float("nan")
    exceptional: bool = False
    rcond: float = float("nan")

    def full(self) -> np.ndarray:
        """``mu`` itself, or ``nu = nu0 + correction`` on the grid."""
        if self.kind == "mu":
            return self.field.values
        return nu_leading(self.field.grid, self.sample) + self.field.values


def nu_leading(grid: Grid, sample: SpectralSample) -> np.ndarray:
    z = grid.z
    return 0.5j * sample.sqrtE * (sample.lam * np.conj(z) - z / sample.lam)


def support_mask(v: np.ndarray, threshold: float = SUPPORT_THRESHOLD) -> np.ndarray:
    vmax = np.max(np.abs(v))
    if vmax == 0:
        return np.zeros(v.shape, dtype=bool)
    return np.abs(v) > threshold * vmax


@dataclass(eq=False)
class NystromOperator:
    """``I - G V`` restricted to the support of ``v``.

    ``method`` is ``"dense"`` (LU, with a LAPACK reciprocal-condition
    estimate) or ``"gmres"`` (FFT matvecs); ``"auto"`` takes dense when the
    support has at most ``DENSE_LIMIT`` nodes.
    """

    v: RealField
    table: GreenTable
    method: str = "auto"
    mask: np.ndarray = field(init=False)
    idx: tuple = field(init=False)
    _lu: tuple | None = field(init=False, default=None)
    rcond: float = field(init=False, default=float("nan"))

    def __post_init__(self):
        if self.v.grid != self.table.grid:
            raise ValueError("potential and Green's table live on different grids")
        self.mask = support_mask(self.v.values)
        self.idx = np.nonzero(self.mask)
        self.vs = self.v.values[self.mask]
        n = self.size
        if self.method == "auto":
            self.method = "dense" if n <= DENSE_LIMIT else "gmres"
        if self.method == "dense" and n:
            self._factor()

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def matrix(self) -> np.ndarray:
        """Dense ``G V`` on the support (without the identity)."""
        j, k = self.idx
        G = self.table.at_offsets(j[:, None] - j[None, :], k[:, None] - k[None, :])
        return G * (self.vs * self.table.grid.h**2)[None, :]

    def _factor(self):
        M = np.eye(self.size, dtype=complex) - self.matrix()
        anorm = np.linalg.norm(M, 1)
        lu, piv = sla.lu_factor(M, check_finite=False)
        rc, info = sla.lapack.zgecon(lu, anorm, norm="1")
        self._lu = (lu, piv)
        self.rcond = float(rc)

    @property
    def singular(self) -> bool:
        return bool(self.rcond < RCOND_SINGULAR)

    def apply_gv(self, u: np.ndarray) -> np.ndarray:
        """``(G V u)`` on the support via FFT convolution."""
        f = np.zeros(self.v.values.shape, dtype=complex)
        f[self.mask] = self.vs * u
        return self.table.convolve(f)[self.mask]

    def solve(self, rhs: np.ndarray) -> tuple[np.ndarray, float]:
        """Solve ``(I - G V) u = rhs`` on the support; returns ``(u, rel_residual)``."""
        if self.size == 0:
            return rhs.astype(complex), 0.0
        if self.method == "dense":
            u = sla.lu_solve(self._lu, rhs, check_finite=False)
        else:
            op = LinearOperator((self.size,) * 2, matvec=lambda x: x - self.apply_gv(x), dtype=complex)
            u, info = gmres(op, rhs, rtol=SOLVER_RTOL * 1e-2, atol=0.0, restart=60, maxiter=40)
            if info != 0:
                log.warning("GMRES did not converge (info=%s); falling back to dense", info)
                self.method = "dense"
                self._factor()
                u = sla.lu_solve(self._lu, rhs, check_finite=False)
        r = u - self.apply_gv(u) - rhs
        nrm = np.linalg.norm(rhs)
        return u, float(np.linalg.norm(r) / nrm) if nrm else float(np.linalg.norm(r))

    def extend(self, u: np.ndarray) -> np.ndarray:
        """``g * (v u)`` on the full grid for support samples ``u``."""
        f = np.zeros(self.v.values.shape, dtype=complex)
        f[self.mask] = self.vs * u
        return self.table.convolve(f)


def _operator(v, sample, table, op):
    if op is not None:
        return op
    if table is None:
        table = green_table(sample, v.grid)
    return NystromOperator(v, table)


def solve_mu(v: RealField, sample: SpectralSample, table: GreenTable | None = None,
             op: NystromOperator | None = None) -> EigenSolution:
    """Solve ``mu = 1 + g * (v mu)``.

    A numerically singular system (reciprocal condition below ``1e-12``)
    returns a solution flagged ``exceptional=True``.
    """
    op = _operator(v, sample, table, op)
    rhs = np.ones(op.size, dtype=complex)
    u, res = op.solve(rhs)
    mu = 1.0 + op.extend(u)
    sol = EigenSolution("mu", sample, ComplexField(v.grid, mu), res, exceptional=op.singular, rcond=op.rcond)
    return _with_residual(sol, v)


def solve_nu(v: RealField, sample: SpectralSample, table: GreenTable | None = None,
             op: NystromOperator | None = None) -> EigenSolution:
    """Solve for the bounded part ``nu - nu0`` of the growing eigenfunction.

    The correction ``c`` obeys ``c = g*(v nu0) + g*(v c)``; only ``c`` is stored.
    """
    op = _operator(v, sample, table, op)
    nu0 = nu_leading(v.grid, sample)
    f = np.where(op.mask, v.values * nu0, 0.0)
    forcing = op.table.convolve(f)
    u, res = op.solve(forcing[op.mask])
    corr = forcing + op.extend(u)
    sol = EigenSolution("nu", sample, ComplexField(v.grid, corr), res, exceptional=op.singular, rcond=op.rcond)
    return _with_residual(sol, v)


def _with_residual(sol, v):
    return EigenSolution(sol.kind, sol.sample, sol.field, sol.solver_residual,
                         schrodinger_residual(sol, v), sol.exceptional, sol.rcond)


def _interior_taper(grid: Grid) -> np.ndarray:
    t = np.abs(grid.axis) / grid.R
    s = np.clip((t - 0.55) / 0.4, 0.0, 1.0)
    w = np.ones_like(s)
    mid = (s > 0) & (s < 1)
    a, b = np.exp(-1.0 / s[mid]), np.exp(-1.0 / (1.0 - s[mid]))
    w[mid] = b / (a + b)
    w[s >= 1] = 0.0
    return w[:, None] * w[None, :]


def conjugated_operator(values: np.ndarray, grid: Grid, sample: SpectralSample) -> np.ndarray:
    """``-4 d_z d_zbar - 2i sqrt(E) lam d_z - (2i sqrt(E)/lam) d_zbar`` applied spectrally."""
    return np.fft.ifft2(np.fft.fft2(values) * conjugated_symbol(grid, sample))


def schrodinger_residual(sol: EigenSolution, v: RealField) -> float:
    """Relative residual of the conjugated Schrodinger equation on the interior.

    For ``psi = exp((i sqrt(E)/2)(lam conj z + z/lam)) m`` with ``m`` = mu or
    nu, ``(-Lap + v - E) psi = 0`` reads ``L m + v m = 0`` with ``L`` from
    :func:`conjugated_operator`.  The bounded part of ``m`` is tapered to zero
    between ``0.55R`` and ``0.95R`` so spectral derivatives stay clean; the
    max-norm ratio ``|L m + v m| / |m|`` is taken over ``|x1|, |x2| <= 0.5R``.
    """
    grid = v.grid
    taper = _interior_taper(grid)
    if sol.kind == "mu":
        bounded = sol.field.values - 1.0
        m = sol.field.values
    else:
        bounded = sol.field.values
        m = sol.full()
    # L annihilates the constant 1 and the linear nu0
    Lm = conjugated_operator(bounded * taper, grid, sol.sample)
    res = Lm + v.values * m
    zz = grid.z
    inner = (np.abs(zz.real) <= 0.5 * grid.R) & (np.abs(zz.imag) <= 0.5 * grid.R)
    denom = np.max(np.abs(m[inner]))
    return float(np.max(np.abs(res[inner])) / denom) if denom else 0.0


def mu_minus1(v: RealField, samples: list[SpectralSample], tables: list[GreenTable] | None = None,
              fit_tol: float = 1e-3) -> ComplexField:
    """Coefficient ``mu_{-1}`` of ``mu = 1 + mu_{-1}/lam + o(1/lam)``.

    Per node, least squares of ``mu - 1`` on ``{1/lam, 1/lam^2}`` over large
    ``|lam|`` samples (the second column absorbs the next order).

    Raises
    ------
    ValueError
        Fewer than three samples, ``|lam| < 8``, or the fit residual exceeds
        ``fit_tol`` relative to ``max|mu - 1|``.
    """
    if len(samples) < 3:
        raise ValueError("mu_minus1 needs at least three spectral samples")
    if any(abs(s.lam) < 8 for s in samples):
        raise ValueError("mu_minus1 samples must have |lam| >= 8")
    if tables is None:
        tables = [green_table(s, v.grid) for s in samples]
    Y = []
    for s, t in zip(samples, tables):
        sol = solve_mu(v, s, t)
        if sol.exceptional:
            raise ExceptionalPointError(f"lam={s.lam} is exceptional")
        Y.append((sol.field.values - 1.0).ravel())
    Y = np.array(Y)
    lam = np.array([s.lam for s in samples])
    X = np.stack([1 / lam, 1 / lam**2], axis=1)
    coef, *_ = np.linalg.lstsq(X, Y, rcond=None)
    scale = np.max(np.abs(Y))
    if scale > 0:
        resid = np.max(np.abs(X @ coef - Y)) / scale
        if resid > fit_tol:
            raise ValueError(f"1/lam fit residual {resid:.2e} exceeds {fit_tol:.0e}: lam not asymptotic yet")
    return ComplexField(v.grid, coef[0].reshape(v.grid.N, v.grid.N))
