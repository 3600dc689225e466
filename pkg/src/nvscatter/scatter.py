"""Scattering data (a, b, alpha, beta), the modified Fredholm determinant and
the checks that tie them together.

Every quantity is a rectangle-rule integral on the grid.  The determinant
uses ``det_2(I - A) = det(I - A) exp(tr A)``, which equals the eigenvalue
product ``prod (1 - m_i) exp(m_i)`` without forming the eigenvalues.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg as sla

from .eigen import EigenSolution, ExceptionalPointError, NystromOperator, solve_mu, solve_nu
from .green import GreenTable, SpectralSample, green_table
from .grid import RealField, integrate

WEIGHT_EPS = 1.0


@dataclass(frozen=True)
class ScatteringQuad:
    sample: SpectralSample
    a: complex
    b: complex
    alpha: complex
    beta: complex
    vhat0: complex

    def as_dict(self) -> dict:
        return {
            "lam": [self.sample.lam.real, self.sample.lam.imag],
            "esign": self.sample.esign,
            **{k: [getattr(self, k).real, getattr(self, k).imag] for k in ("a", "b", "alpha", "beta", "vhat0")},
        }


@dataclass(frozen=True)
class DeterminantRecord:
    sample: SpectralSample
    delta: complex
    realness_defect: float
    symmetry_defect: float = float("nan")

    def as_dict(self) -> dict:
        return {
            "lam": [self.sample.lam.real, self.sample.lam.imag],
            "esign": self.sample.esign,
            "delta": [self.delta.real, self.delta.imag],
            "realness_defect": self.realness_defect,
            "symmetry_defect": self.symmetry_defect,
        }


def data_phase(z, sample: SpectralSample) -> np.ndarray:
    """Exponent ``(i sqrt(E)/2)(1 + sgnE/|lam|^2)(sgnE z conj(lam) + lam conj(z))``; purely imaginary."""
    lam, sg = sample.lam, sample.esign
    return 0.5j * sample.sqrtE * (1 + sg / abs(lam) ** 2) * (sg * z * np.conj(lam) + lam * np.conj(z))


def scattering_data(v: RealField, mu: EigenSolution, nu: EigenSolution) -> ScatteringQuad:
    """Integrals of ``v mu`` and ``v nu`` against 1 and the oscillating factor.

    Raises
    ------
    ExceptionalPointError
        If either solve was flagged singular.
    ValueError
        If the two solves disagree on the spectral sample or grid.
    """
    if mu.kind != "mu" or nu.kind != "nu":
        raise ValueError("expected a mu solution and a nu solution")
    if mu.sample != nu.sample or mu.field.grid != v.grid or nu.field.grid != v.grid:
        raise ValueError("mu and nu must be solved at the same lam on the grid of v")
    if mu.exceptional or nu.exceptional:
        raise ExceptionalPointError(f"lam={mu.sample.lam} is flagged exceptional")
    grid = v.grid
    e = np.exp(data_phase(grid.z, mu.sample))
    vmu = v.values * mu.full()
    vnu = v.values * nu.full()
    h2 = grid.h**2
    return ScatteringQuad(
        mu.sample,
        complex(np.sum(vmu) * h2),
        complex(np.sum(e * vmu) * h2),
        complex(np.sum(vnu) * h2),
        complex(np.sum(e * vnu) * h2),
        integrate(v),
    )


def scatter_at(v: RealField, sample: SpectralSample, table: GreenTable | None = None) -> ScatteringQuad:
    """Convenience: build the table, factor once, solve mu and nu, integrate."""
    if table is None:
        table = green_table(sample, v.grid)
    op = NystromOperator(v, table)
    return scattering_data(v, solve_mu(v, sample, op=op), solve_nu(v, sample, op=op))


def fredholm_delta(v: RealField, sample: SpectralSample, table: GreenTable | None = None,
                   eps: float = WEIGHT_EPS, method: str = "lu") -> DeterminantRecord:
    """Modified Fredholm determinant of the weighted Nystrom operator.

    The kernel is ``(1+|z|)^-k g(z - zeta) v(zeta) (1+|zeta|)^k h^2`` with
    ``k = 2 + eps/2``, restricted to the support of ``v``.  The weights form
    a diagonal similarity, so they leave the spectrum unchanged.

    ``method="lu"`` uses ``det(I - A) exp(tr A)`` from an LU factorization;
    ``method="eig"`` multiplies ``(1 - m) exp(m)`` over the eigenvalues.
    """
    if sample.esign > 0 and abs(abs(sample.lam) - 1) < sample.margin:
        raise ValueError("lam too close to the unit circle for E > 0")
    if table is None:
        table = green_table(sample, v.grid)
    op = NystromOperator(v, table, method="gmres")  # no factorization needed here
    if op.size == 0:
        return DeterminantRecord(sample, 1.0 + 0j, 0.0)
    A = op.matrix()
    z = v.grid.z[op.mask]
    k = 2.0 + eps / 2.0
    wt = (1.0 + np.abs(z)) ** k
    A = A / wt[:, None] * wt[None, :]
    if method == "lu":
        sign, logdet = np.linalg.slogdet(np.eye(len(A)) - A)
        delta = sign * np.exp(logdet + np.trace(A))
    elif method == "eig":
        try:
            m = sla.eigvals(A, check_finite=False)
        except sla.LinAlgError as exc:
            raise RuntimeError(f"eigen-decomposition failed at lam={sample.lam}") from exc
        delta = np.exp(np.sum(np.log(1 - m + 0j) + m))
    else:
        raise ValueError(f"unknown determinant method {method!r}")
    delta = complex(delta)
    return DeterminantRecord(sample, delta, float(abs(delta.imag)))


def check_delta_symmetry(pairs) -> dict:
    """``max |Delta(lam) - Delta(-sgnE/conj lam)| / max(|Delta(lam)|, 1)`` over record pairs."""
    worst = 0.0
    out = []
    for r1, r2 in pairs:
        target = -r1.sample.esign / np.conj(r1.sample.lam)
        if abs(r2.sample.lam - target) > 1e-12 * max(1, abs(target)):
            raise ValueError(f"record at {r2.sample.lam} is not the partner of {r1.sample.lam}")
        d = abs(r1.delta - r2.delta) / max(abs(r1.delta), 1.0)
        out.append(d)
        worst = max(worst, d)
    return {"defects": out, "max_defect": worst}


def dbar_stencil(lam: complex, step: float) -> list[complex]:
    return [lam + step, lam - step, lam + 1j * step, lam - 1j * step]


def dbar_fd(values, step: float):
    """``d/d conj(lam)`` from samples on :func:`dbar_stencil`; second order."""
    fp, fm, gp, gm = values
    return (fp - fm) / (4 * step) + 1j * (gp - gm) / (4 * step)


def _check_stencil(lam, step, esign):
    pts = [lam] + dbar_stencil(lam, step)
    radii = [abs(p) for p in pts]
    if min(radii) <= 0:
        raise ValueError("stencil touches lam = 0")
    if min(radii) < 1 < max(radii) or any(abs(r - 1) < 1e-12 for r in radii):
        raise ValueError("stencil crosses the unit circle")


def delta_dbar_rhs(lam: complex, esign: int, a_mirror: complex, vhat0: complex, delta: complex) -> complex:
    """Right-hand side ``-sgn(|lam|^2-1)/(4 pi conj lam) (a(-sgnE/conj lam) - vhat0) Delta``."""
    sg = np.sign(abs(lam) ** 2 - 1)
    return -sg / (4 * np.pi * np.conj(lam)) * (a_mirror - vhat0) * delta


def check_det_dbar(v: RealField, lam: complex, esign: int, step: float, eps: float = WEIGHT_EPS) -> dict:
    """Compare the stencil derivative of Delta with the d-bar law.

    Computes Delta on the four stencil points and at ``lam``, and ``a`` at
    the mirrored point ``-sgnE/conj(lam)``.  ``mismatch`` is relative to
    ``max(|lhs|, |rhs|)``; both sides vanish for ``v = 0``.

    Raises
    ------
    ValueError
        Stencil crosses the unit circle.
    ExceptionalPointError
        Mirrored point is exceptional.
    """
    _check_stencil(lam, step, esign)
    grid = v.grid
    recs = [fredholm_delta(v, SpectralSample(p, esign), eps=eps) for p in dbar_stencil(lam, step)]
    lhs = dbar_fd([r.delta for r in recs], step)
    centre = fredholm_delta(v, SpectralSample(lam, esign), eps=eps)
    mirror = SpectralSample(-esign / np.conj(lam), esign)
    tab = green_table(mirror, grid)
    op = NystromOperator(v, tab)
    mu = solve_mu(v, mirror, op=op)
    if mu.exceptional:
        raise ExceptionalPointError(f"mirror point {mirror.lam} is exceptional")
    a_m = complex(np.sum(v.values * mu.field.values) * grid.h**2)
    rhs = delta_dbar_rhs(lam, esign, a_m, integrate(v), centre.delta)
    scale = max(abs(lhs), abs(rhs))
    mism = abs(lhs - rhs) / scale if scale > 1e-14 else 0.0
    return {"lhs": lhs, "rhs": rhs, "mismatch": float(mism), "delta": centre.delta, "a_mirror": a_m, "step": step}


def r_coefficient(z, sample: SpectralSample, b: complex) -> np.ndarray:
    """``r(z, lam) = sgn(|lam|^2-1) b /(4 pi conj lam) * exp(-phase(z))``."""
    lam = sample.lam
    sg = np.sign(abs(lam) ** 2 - 1)
    return sg / (4 * np.pi * np.conj(lam)) * b * np.exp(-data_phase(z, sample))


def check_mu_dbar(v: RealField, lam: complex, esign: int, step: float, radius_frac: float = 0.5) -> dict:
    """Stencil ``d mu / d conj(lam)`` against ``r(z, lam) conj(mu)``.

    The error is the max over ``|z| <= radius_frac * R`` of
    ``|lhs - rhs|``, relative to ``max |rhs|`` there.
    """
    _check_stencil(lam, step, esign)
    grid = v.grid
    mus = []
    for p in dbar_stencil(lam, step):
        s = SpectralSample(p, esign)
        mus.append(solve_mu(v, s, green_table(s, grid)).field.values)
    lhs = dbar_fd(mus, step)
    s0 = SpectralSample(lam, esign)
    quad = scatter_at(v, s0)
    mu0 = solve_mu(v, s0, green_table(s0, grid)).field.values
    rhs = r_coefficient(grid.z, s0, quad.b) * np.conj(mu0)
    disk = np.abs(grid.z) <= radius_frac * grid.R
    scale = float(np.max(np.abs(rhs[disk])))
    err = float(np.max(np.abs(lhs - rhs)[disk]))
    return {"error": err / scale if scale > 1e-14 else err, "abs_error": err, "scale": scale,
            "b": quad.b, "step": step}


def u_ray(lam, esign: int, a_mirror, vhat0):
    """``u(conj lam) = -sgn(|lam|^2-1)/(4 pi conj lam) (a(-sgnE/conj lam) - vhat0)``."""
    lam = np.asarray(lam, dtype=complex)
    sg = np.sign(np.abs(lam) ** 2 - 1)
    return -sg / (4 * np.pi * np.conj(lam)) * (np.asarray(a_mirror) - vhat0)


def ray_factorization(phi: float, radii, deltas, a_mirror, vhat0: complex, esign: int) -> dict:
    """Check ``Delta = exp(U + conj U)`` with ``U = int u d conj(zeta)`` along a ray.

    Parameters
    ----------
    phi : float
        Ray angle; ``lam = r exp(i phi)``.
    radii : array, increasing, all ``< 1``
        Sample radii; the first sample anchors ``ln Delta``.
    deltas : array
        ``Delta`` at the sample points.
    a_mirror : array
        ``a(-sgnE/conj lam)`` at the sample points.

    Returns
    -------
    dict with ``mismatch`` = ``max |Delta - exp(2 Re U)| / |Delta|``.
    """
    r = np.asarray(radii, dtype=float)
    if np.any(r >= 1) or np.any(np.diff(r) <= 0):
        raise ValueError("ray radii must increase and stay below 1")
    lam = r * np.exp(1j * phi)
    u = u_ray(lam, esign, a_mirror, vhat0)
    dzbar = np.diff(np.conj(lam))
    U = np.concatenate([[0j], np.cumsum(0.5 * (u[1:] + u[:-1]) * dzbar)])
    d = np.asarray(deltas, dtype=complex)
    model = d[0].real * np.exp(2 * U.real)
    mism = np.abs(d - model) / np.maximum(np.abs(d), 1e-300)
    return {"mismatch": float(np.max(mism)), "U": U, "model": model}


def write_jsonl(path, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.as_dict(), sort_keys=True) + "\n")


def write_csv(path, records) -> None:
    rows = [_flatten(r.as_dict()) for r in records]
    if not rows:
        open(path, "w").close()
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def _flatten(d: dict) -> dict:
    out = {}
    for k, val in d.items():
        if isinstance(val, list) and len(val) == 2:
            out[f"{k}_re"], out[f"{k}_im"] = val
        else:
            out[k] = val
    return out
