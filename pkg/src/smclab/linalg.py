"""Small dense linear algebra for the crane design problems.

Everything here works on n <= 4. Eigenvalues come from the characteristic
polynomial (Faddeev-LeVerrier) and closed-form roots with one Newton polish,
so no general eigensolver is involved.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import Degenerate, SingularDesign, SingularGain, Uncontrollable
from .plants import GAIN_TOL, CraneParams

RANK_TOL = 1e-10
COND_WARN = 1e8
IMAG_TOL = 1e-9


@dataclass(frozen=True)
class LinearPlant:
    A: np.ndarray
    B: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float).reshape(-1, 1)
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
            raise ValueError(f"inconsistent shapes A{A.shape}, B{B.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValueError("plant matrices must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]


class LinearizationConstants(NamedTuple):
    a1: float
    a2: float
    b10: float
    b20: float

    @classmethod
    def from_crane(cls, p: CraneParams) -> "LinearizationConstants":
        return cls(
            a1=p.m * p.g / p.M,
            a2=-(p.m + p.M) * p.g / (p.M * p.L),
            b10=1.0 / p.M,
            b20=-1.0 / (p.M * p.L),
        )


class SlidingCharCoeffs(NamedTuple):
    l1: float
    l2: float
    l3: float


class SurfaceDesign(NamedTuple):
    d1: float
    d2: float
    d3: float
    c1: float
    c2: float
    alpha1: float


def crane_linearization(p: CraneParams) -> LinearPlant:
    """Linearization of the crane about the rest state at the target position."""
    lc = LinearizationConstants.from_crane(p)
    A = np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, lc.a1, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, lc.a2, 0.0],
        ]
    )
    B = np.array([0.0, lc.b10, 0.0, lc.b20])
    return LinearPlant(A, B, labels=("x1", "x2", "x3", "x4"))


def matrix_rank(M: np.ndarray, rel_tol: float = RANK_TOL) -> int:
    """Rank by Gaussian elimination with complete pivoting.

    A pivot counts when it exceeds ``rel_tol`` times the first (largest) pivot.
    """
    W = np.array(M, dtype=float)
    rows, cols = W.shape
    rank = 0
    first = None
    for r in range(min(rows, cols)):
        sub = np.abs(W[r:, r:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        piv = sub[i, j]
        if first is None:
            first = piv
        if first == 0 or piv <= rel_tol * first:
            break
        W[[r, r + i]] = W[[r + i, r]]
        W[:, [r, r + j]] = W[:, [r + j, r]]
        W[r + 1 :] -= np.outer(W[r + 1 :, r] / W[r, r], W[r])
        rank += 1
    return rank


def controllability_matrix(plant: LinearPlant):
    """Return ``([B, AB, ..., A^(n-1) B], full_rank)``."""
    cols = [plant.B[:, 0]]
    for _ in range(plant.n - 1):
        cols.append(plant.A @ cols[-1])
    Cm = np.column_stack(cols)
    return Cm, matrix_rank(Cm) == plant.n


def poly_from_roots(roots: Sequence[complex]) -> np.ndarray:
    """Monic real coefficients ``[1, a1, ..., an]`` of ``prod (s - r)``.

    ``roots`` must be closed under conjugation.
    """
    coeffs = np.array([1.0 + 0j])
    for r in roots:
        coeffs = np.convolve(coeffs, [1.0, -complex(r)])
    scale = max(1.0, float(np.max(np.abs(coeffs))))
    if np.max(np.abs(coeffs.imag)) > 1e-9 * scale:
        raise ValueError("poles must be closed under complex conjugation")
    return coeffs.real


def ackermann_gain(plant: LinearPlant, poles: Sequence[complex]) -> np.ndarray:
    """State-feedback gain ``K`` placing the eigenvalues of ``A - B K`` at ``poles``."""
    n = plant.n
    if len(poles) != n:
        raise ValueError(f"need {n} poles, got {len(poles)}")
    Cm, full = controllability_matrix(plant)
    if not full:
        raise Uncontrollable("controllability matrix is rank deficient")
    cond = np.linalg.cond(Cm)
    if cond > COND_WARN:
        warnings.warn(f"controllability matrix ill-conditioned (cond = {cond:.2e})", RuntimeWarning)
    coeffs = poly_from_roots(poles)
    phi = np.zeros((n, n))
    for a in coeffs:
        phi = phi @ plant.A + a * np.eye(n)
    en = np.zeros(n)
    en[-1] = 1.0
    # K = e_n^T C^-1 phi(A)
    row = np.linalg.solve(Cm.T, en)
    return row @ phi


def _gain_ratio(lc: LinearizationConstants, alpha1: float) -> float:
    den = lc.b20 + alpha1 * lc.b10
    if abs(den) < GAIN_TOL:
        raise SingularGain("b20+alpha1*b10", den)
    return lc.b10 / den


def sliding_linearization(lc: LinearizationConstants, c1, c2, alpha1) -> np.ndarray:
    """Linearized dynamics of ``(x1, x2, x3)`` restricted to the aggregated surface ``S = 0``."""
    r = _gain_ratio(lc, alpha1)
    return np.array(
        [
            [0.0, 1.0, 0.0],
            [r * c1 * c2 * alpha1, -r * alpha1 * (c1 - c2), lc.a1 - r * (lc.a2 + alpha1 * lc.a1 - c2 * c2)],
            [-alpha1 * c1, -alpha1, -c2],
        ]
    )


def sliding_char_coeffs(lc: LinearizationConstants, c1, c2, alpha1) -> SlidingCharCoeffs:
    r = _gain_ratio(lc, alpha1)
    den = lc.b20 + alpha1 * lc.b10
    l1 = c2 + r * alpha1 * (c1 - c2)
    l2 = alpha1 / den * (lc.b20 * lc.a1 - lc.b10 * lc.a2)
    return SlidingCharCoeffs(l1, l2, c1 * l2)


def solve_surface_params(lc: LinearizationConstants, d1, d2, d3) -> SurfaceDesign:
    """Pick ``(c1, c2, alpha1)`` so the sliding dynamics have char. polynomial ``s^3 + d1 s^2 + d2 s + d3``.

    The ``alpha1`` denominator uses ``d2``; that is what solving the middle
    coefficient equation for it gives.
    """
    if d2 == 0:
        raise SingularDesign("d2 = 0 leaves c1 = d3/d2 undefined")
    den = lc.b20 * lc.a1 - lc.b10 * lc.a2 - d2 * lc.b10
    if abs(den) < GAIN_TOL:
        raise SingularDesign(f"alpha1 denominator vanishes ({den:.3e})")
    alpha1 = lc.b20 * d2 / den
    if abs(lc.b20 + alpha1 * lc.b10) < GAIN_TOL:
        raise SingularDesign("b20 + alpha1*b10 vanishes at the solution")
    c1 = d3 / d2
    c2 = d1 + alpha1 * lc.b10 * (d1 - c1) / lc.b20
    return SurfaceDesign(d1, d2, d3, c1, c2, alpha1)


def char_poly(A) -> np.ndarray:
    """Monic characteristic polynomial ``[1, c1, ..., cn]`` by Faddeev-LeVerrier."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    coeffs = [1.0]
    M = np.zeros_like(A)
    I = np.eye(n)
    for k in range(1, n + 1):
        M = A @ M + coeffs[-1] * I
        coeffs.append(-np.trace(A @ M) / k)
    return np.array(coeffs)


def _cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def _quadratic_roots(b, c):
    """Roots of ``z^2 + b z + c`` (complex coefficients allowed)."""
    disc = cmath.sqrt(b * b - 4 * c)
    q = -0.5 * (b + disc) if abs(b + disc) >= abs(b - disc) else -0.5 * (b - disc)
    if q == 0:
        return [0j, 0j]
    return [q, c / q]


def _cubic_roots(a, b, c):
    """Roots of ``z^3 + a z^2 + b z + c`` for real coefficients."""
    p = b - a * a / 3.0
    q = 2 * a**3 / 27.0 - a * b / 3.0 + c
    shift = -a / 3.0
    scale = max(1.0, abs(a), abs(b), abs(c))
    if abs(p) <= 1e-14 * scale and abs(q) <= 1e-14 * scale:
        return [complex(shift)] * 3
    disc = (q / 2) ** 2 + (p / 3) ** 3
    if disc < 0:
        # three distinct real roots
        rad = 2 * math.sqrt(-p / 3)
        phi = math.acos(max(-1.0, min(1.0, 3 * q / (p * rad))))
        return [complex(rad * math.cos((phi - 2 * math.pi * k) / 3) + shift) for k in range(3)]
    sq = math.sqrt(disc)
    u = _cbrt(-q / 2 + sq)
    v = _cbrt(-q / 2 - sq)
    t1 = u + v
    re = -t1 / 2
    im = math.sqrt(3) / 2 * (u - v)
    return [complex(t1 + shift), complex(re + shift, im), complex(re + shift, -im)]


def _quartic_roots(a, b, c, d):
    """Roots of ``z^4 + a z^3 + b z^2 + c z + d`` via the resolvent cubic."""
    shift = -a / 4.0
    p = b - 3 * a * a / 8.0
    q = c - a * b / 2.0 + a**3 / 8.0
    r = d - a * c / 4.0 + a * a * b / 16.0 - 3 * a**4 / 256.0
    scale = max(1.0, abs(a), abs(b), abs(c), abs(d))
    if abs(q) <= 1e-14 * scale:
        ys = []
        for w in _quadratic_roots(p, r):
            s = cmath.sqrt(w)
            ys += [s, -s]
    else:
        ms = _cubic_roots(p, p * p / 4.0 - r, -q * q / 8.0)
        # the resolvent is negative at 0 and increasing to +inf, so a positive real root exists
        m = max(z.real for z in ms if z.imag == 0)
        s = math.sqrt(2 * m)
        ys = _quadratic_roots(-s, p / 2 + m + q / (2 * s)) + _quadratic_roots(
            s, p / 2 + m - q / (2 * s)
        )
    return [complex(y) + shift for y in ys]


def _newton_polish(coeffs, z):
    val = 0j
    der = 0j
    for co in coeffs:
        der = der * z + val
        val = val * z + co
    if der != 0:
        z_new = z - val / der
        if abs(_horner(coeffs, z_new)) <= abs(val):
            return z_new
    return z


def _horner(coeffs, z):
    val = 0j
    for co in coeffs:
        val = val * z + co
    return val


def poly_roots(coeffs: Sequence[float]) -> list:
    """Roots of a real monic polynomial of degree <= 4, closed form plus one Newton step."""
    coeffs = [float(c) for c in coeffs]
    if coeffs[0] != 1.0:
        raise ValueError("polynomial must be monic")
    deg = len(coeffs) - 1
    if deg == 0:
        return []
    if deg == 1:
        roots = [complex(-coeffs[1])]
    elif deg == 2:
        roots = _quadratic_roots(complex(coeffs[1]), complex(coeffs[2]))
    elif deg == 3:
        roots = _cubic_roots(*coeffs[1:])
    elif deg == 4:
        roots = _quartic_roots(*coeffs[1:])
    else:
        raise ValueError("degree must be <= 4")
    out = []
    for z in roots:
        z = _newton_polish(coeffs, z)
        if abs(z.imag) <= IMAG_TOL * max(1.0, abs(z)):
            z = complex(z.real, 0.0)
        out.append(z)
    return sorted(out, key=lambda z: (z.real, z.imag))


def _refine_eigenvalue(A: np.ndarray, z: complex, iters: int = 8) -> complex:
    # Newton on log det(zI - A); the coefficient route loses digits when ||A|| is large
    I = np.eye(A.shape[0])
    for _ in range(iters):
        try:
            t = np.trace(np.linalg.inv(z * I - A))
        except np.linalg.LinAlgError:
            return z
        if not np.isfinite(t) or t == 0:
            return z
        dz = 1.0 / t
        z = z - dz
        if abs(dz) <= 1e-15 * max(1.0, abs(z)):
            break
    return complex(z)


def eigenvalues(A) -> list:
    """Eigenvalues of an ``n x n`` matrix, ``n <= 4``, sorted by real part.

    Roots of the characteristic polynomial, each refined by a few Newton steps
    on ``det(zI - A)``. A refinement that would merge two distinct roots is dropped.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] > 4:
        raise ValueError("eigenvalues() supports n <= 4")
    rough = poly_roots(char_poly(A))
    scale = max(1.0, float(np.abs(A).max()))
    out = []
    for z in rough:
        if z.imag < 0:
            continue
        r = _refine_eigenvalue(A, z) if z.imag > 0 else complex(_refine_eigenvalue(A, z.real + 0j).real, 0.0)
        if r.imag <= IMAG_TOL * max(1.0, abs(r)) and z.imag > 0:
            r = z
        out.append(r)
        if z.imag > 0:
            out.append(r.conjugate())
    rough_gap = _min_gap(rough)
    if len(out) != len(rough) or _min_gap(out) < 0.5 * rough_gap:
        out = rough
    return sorted(out, key=lambda z: (z.real, z.imag))


def _min_gap(zs) -> float:
    gaps = [abs(a - b) for i, a in enumerate(zs) for b in zs[i + 1 :]]
    return min(gaps) if gaps else math.inf


def routh_first_column(coeffs: Sequence[float]) -> list:
    """First column of the Routh array. Raises ``Degenerate`` on a zero pivot."""
    coeffs = [float(c) for c in coeffs]
    deg = len(coeffs) - 1
    scale = max(abs(c) for c in coeffs)
    width = deg // 2 + 1
    r0 = coeffs[0::2] + [0.0] * (width - len(coeffs[0::2]))
    r1 = coeffs[1::2] + [0.0] * (width - len(coeffs[1::2]))
    column = [r0[0]]
    if deg == 0:
        return column
    column.append(r1[0])
    for _ in range(deg - 1):
        if abs(r1[0]) <= 1e-12 * scale:
            raise Degenerate("zero pivot in the Routh array")
        nxt = [(r1[0] * r0[j + 1] - r0[0] * r1[j + 1]) / r1[0] for j in range(width - 1)] + [0.0]
        r0, r1 = r1, nxt
        column.append(r1[0])
    if abs(column[-1]) <= 1e-12 * scale:
        raise Degenerate("zero pivot in the Routh array")
    return column


def hurwitz_check(coeffs: Sequence[float]) -> bool:
    """True iff every root of the monic polynomial has negative real part.

    A nonpositive coefficient settles the answer (False) without a Routh table.
    """
    coeffs = [float(c) for c in coeffs]
    if coeffs[0] != 1.0:
        raise ValueError("polynomial must be monic")
    if len(coeffs) - 1 > 4:
        raise ValueError("degree must be <= 4")
    if any(c <= 0 for c in coeffs[1:]):
        return False
    return all(v > 0 for v in routh_first_column(coeffs))
