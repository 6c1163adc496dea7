"""Random-matrix reference values and spectral statistics.

Closed forms for the ergodic benchmarks (Page purity, Haar marginal IPR,
and their U(1)-sector analogues), the Porter-Thomas law, and Poisson/CUE
gap-ratio statistics, plus the Monte-Carlo Haar samplers used to validate
the closed forms independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.stats

from .basis import sector_dimension
from .errors import ParameterError

DEGENERATE_SPACING = 1e-12

POISSON_MEAN_R = 2 * math.log(2) - 1  # exact integral of r * 2/(1+r)^2 on [0,1]
CUE_MEAN_R_SURMISE = 0.603
CUE_MEAN_R_PRECISE = 0.5996


# ---------------------------------------------------------------------------
# closed-form ensemble averages


def page_purity(d_a: int, d_b: int) -> float:
    """Haar-average purity of a d_a-dimensional marginal: (d_a+d_b)/(d_a*d_b+1)."""
    if d_a < 1 or d_b < 1:
        raise ParameterError("dimensions must be >= 1")
    return (d_a + d_b) / (d_a * d_b + 1)


def haar_marginal_ipr(d_a: int, d_b: int) -> float:
    """Haar-average marginal collision probability: (1+d_b)/(d_a*d_b+1).

    At d_b = 1 this is 2/(d_a+1); the familiar 2/D is its large-D limit.
    """
    if d_a < 1 or d_b < 1:
        raise ParameterError("dimensions must be >= 1")
    return (1 + d_b) / (d_a * d_b + 1)


def _check_sector(n_a: int, n_b: int, k: int) -> None:
    if n_a < 0 or n_b < 0 or n_a + n_b < 1:
        raise ParameterError("need at least one qubit")
    if not 0 <= k <= n_a + n_b:
        raise ParameterError(f"weight {k} invalid for {n_a}+{n_b} qubits")


def u1_haar_purity(n_a: int, n_b: int, k: int) -> float:
    """Sector-Haar purity: sum_h [d_{A,h}^2 d_{B,k-h} + d_{A,h} d_{B,k-h}^2] / (d_k(d_k+1))."""
    _check_sector(n_a, n_b, k)
    num = 0
    for h in range(max(0, k - n_b), min(n_a, k) + 1):
        da, db = comb(n_a, h), comb(n_b, k - h)
        num += da * da * db + da * db * db
    d_k = comb(n_a + n_b, k)
    return num / (d_k * (d_k + 1))


def u1_haar_marginal_ipr(n_a: int, n_b: int, k: int) -> float:
    """Sector-Haar marginal IPR: sum_h d_{A,h} d_{B,k-h} (1 + d_{B,k-h}) / (d_k(d_k+1))."""
    _check_sector(n_a, n_b, k)
    num = 0
    for h in range(max(0, k - n_b), min(n_a, k) + 1):
        da, db = comb(n_a, h), comb(n_b, k - h)
        num += da * db * (1 + db)
    d_k = comb(n_a + n_b, k)
    return num / (d_k * (d_k + 1))


def mixed_sector_ipr(n_a: int, n_b: int, k: int) -> float:
    """Marginal IPR (= purity) of the maximally mixed state at fixed weight k."""
    _check_sector(n_a, n_b, k)
    num = 0
    for h in range(max(0, k - n_b), min(n_a, k) + 1):
        da, db = comb(n_a, h), comb(n_b, k - h)
        num += da * db * db
    d_k = comb(n_a + n_b, k)
    return num / (d_k * d_k)


@dataclass(frozen=True)
class HaarRefs:
    """All reference values for one (patch, bath, weight) context."""

    n_a: int
    n_b: int
    k: int
    page_purity: float
    haar_marginal_ipr: float
    u1_purity: float
    u1_marginal_ipr: float
    mixed_sector_ipr: float

    @classmethod
    def for_sector(cls, n_a: int, n_b: int, k: int) -> "HaarRefs":
        d_a, d_b = 2 ** n_a, 2 ** n_b
        return cls(
            n_a=n_a, n_b=n_b, k=k,
            page_purity=page_purity(d_a, d_b),
            haar_marginal_ipr=haar_marginal_ipr(d_a, d_b),
            u1_purity=u1_haar_purity(n_a, n_b, k),
            u1_marginal_ipr=u1_haar_marginal_ipr(n_a, n_b, k),
            mixed_sector_ipr=mixed_sector_ipr(n_a, n_b, k),
        )


def reference_table(contexts) -> str:
    """Delimited reference-value table for (n_a, n_b, k) rows."""
    lines = ["n_A\tn_B\tk\tpage\thaar_ipr\tu1_purity\tu1_ipr\tmixed"]
    for n_a, n_b, k in contexts:
        r = HaarRefs.for_sector(n_a, n_b, k)
        lines.append(
            f"{n_a}\t{n_b}\t{k}\t{r.page_purity!r}\t{r.haar_marginal_ipr!r}"
            f"\t{r.u1_purity!r}\t{r.u1_marginal_ipr!r}\t{r.mixed_sector_ipr!r}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Porter-Thomas


def porter_thomas_pdf(p, dim: int):
    """Density of a basis-state probability of a Haar state: (D-1)(1-p)^(D-2)."""
    if dim < 2:
        raise ParameterError("Porter-Thomas needs dimension >= 2")
    p = np.asarray(p, dtype=float)
    return (dim - 1) * (1 - p) ** (dim - 2)


def porter_thomas_test(probabilities, dim: int) -> float:
    """KS distance of the scaled probabilities D*p to the exponential law."""
    if dim < 2:
        raise ParameterError("Porter-Thomas needs dimension >= 2")
    probabilities = np.asarray(probabilities, dtype=float)
    if abs(probabilities.sum() - 1) > 1e-6:
        raise ParameterError("probabilities must sum to 1")
    return float(scipy.stats.kstest(dim * probabilities, "expon").statistic)


# ---------------------------------------------------------------------------
# gap-ratio statistics


@dataclass
class GapRatioStats:
    """Adjacent-spacing ratios of a set of eigenphases."""

    ratios: np.ndarray
    mean: float
    histogram: tuple[np.ndarray, np.ndarray]  # (density, bin edges)


def gap_ratios(phases, include_wrap: bool = True, bins: int = 50) -> GapRatioStats:
    """Ratios r = min(s_n, s_{n-1}) / max(s_n, s_{n-1}) of consecutive spacings.

    Eigenphases live on a circle, so by default the wrap-around spacing
    theta_1 + 2pi - theta_D is included and the number of ratios equals the
    number of phases. Degenerate spacings (< 1e-12) give r = 1 when both
    members of a pair vanish and r = 0 when exactly one does.
    """
    phases = np.sort(np.asarray(phases, dtype=float))
    if len(phases) < 3:
        raise ParameterError("need at least 3 phases for gap ratios")
    spacings = np.diff(phases)
    if include_wrap:
        wrap = phases[0] + 2 * math.pi - phases[-1]
        spacings = np.concatenate([spacings, [wrap]])
        pair_a, pair_b = spacings, np.roll(spacings, 1)
    else:
        pair_a, pair_b = spacings[1:], spacings[:-1]
    lo = np.minimum(pair_a, pair_b)
    hi = np.maximum(pair_a, pair_b)
    both_zero = hi < DEGENERATE_SPACING
    one_zero = (lo < DEGENERATE_SPACING) & ~both_zero
    safe = np.where(hi < DEGENERATE_SPACING, 1.0, hi)
    ratios = lo / safe
    ratios[both_zero] = 1.0
    ratios[one_zero] = 0.0
    hist = np.histogram(ratios, bins=bins, range=(0.0, 1.0), density=True)
    return GapRatioStats(ratios=ratios, mean=float(ratios.mean()), histogram=hist)


def poisson_r_pdf(r):
    """Gap-ratio density of an uncorrelated spectrum: 2/(1+r)^2."""
    r = np.asarray(r, dtype=float)
    return 2.0 / (1.0 + r) ** 2


def cue_r_pdf(r):
    """Wigner-surmise gap-ratio density of the CUE."""
    r = np.asarray(r, dtype=float)
    return (81 * math.sqrt(3) / (2 * math.pi)) * (r + r * r) ** 2 / (1 + r + r * r) ** 4


# ---------------------------------------------------------------------------
# Monte-Carlo Haar samplers (validation oracles)


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Normalized complex-Gaussian vector, uniform on the unit sphere."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """QR of a complex Gaussian matrix with the R-diagonal phase fix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def sector_haar_state(n: int, weight: int, rng: np.random.Generator):
    """Haar-random SectorState of fixed Hamming weight."""
    from .states import SectorState

    return SectorState(n=n, weight=weight,
                       amp=haar_state(sector_dimension(n, weight), rng))
