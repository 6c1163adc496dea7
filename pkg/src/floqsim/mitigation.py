"""Noise injection and mitigation for Z-diagonal observables.

Three pipelines: the Hamming-spread bit-flip model (weight-histogram fit,
Z-string inflation in Parseval form, and the rank-1 collision correction),
depolarizing inversion, and Low Entanglement Calibration (LEC). A synthetic
terminal bit-flip channel is included so all of them can be round-tripped
against exact states.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from math import comb

import numpy as np

from .errors import CalibrationError, ParameterError
from .estimators import (DEFAULT_BATCHES, DiagnosticCurve, MomentEstimate,
                         Patch, restrict, z_expectations)
from .samples import SampleSet

LEC_DEFAULT_ANCHOR = 0.005 * math.pi
PARSEVAL_PIPELINE_MAX_QUBITS = 4


class PhysicalBoundWarning(UserWarning):
    """An inflated value left its physical range; it is reported unclipped."""


# ---------------------------------------------------------------------------
# synthetic noise


def apply_bitflip_channel(samples: SampleSet, p: float, seed: int) -> SampleSet:
    """Flip every bit of every sample independently with probability p."""
    if not 0.0 <= p < 0.5:
        raise ParameterError("flip probability must lie in [0, 0.5)")
    if p == 0.0:
        return SampleSet(n=samples.n, codes=samples.codes.copy(),
                         qubit_order=samples.qubit_order)
    rng = np.random.default_rng(seed)
    mask = np.zeros(samples.n_samples, dtype=np.uint64)
    for pos in range(samples.n):
        flips = (rng.random(samples.n_samples) < p).astype(np.uint64)
        mask |= flips << np.uint64(pos)
    return SampleSet(n=samples.n, codes=samples.codes ^ mask,
                     qubit_order=samples.qubit_order)


# ---------------------------------------------------------------------------
# Hamming-spread model


def hamming_pmf(n: int, m: int, p: float) -> np.ndarray:
    """Output-weight distribution for weight-m input under per-qubit flips.

    Pr(h) = sum_d C(m,d) C(n-m, h-m+d) p^(h-m+2d) (1-p)^(n+m-h-2d), the
    convolution of down-flips (binomial over the m ones) with up-flips
    (binomial over the n-m zeros).
    """
    if not 0 <= m <= n:
        raise ParameterError(f"initial weight {m} invalid for n={n}")
    if not 0.0 <= p <= 1.0:
        raise ParameterError("flip probability must lie in [0, 1]")
    pmf = np.zeros(n + 1)
    for h in range(n + 1):
        total = 0.0
        for d in range(max(0, m - h), min(m, n - h) + 1):
            total += (comb(m, d) * comb(n - m, h - m + d)
                      * p ** (h - m + 2 * d) * (1 - p) ** (n + m - h - 2 * d))
        pmf[h] = total
    return pmf


@dataclass(frozen=True)
class FlipModel:
    """Single-parameter per-qubit bit-flip model fitted to a weight histogram."""

    p: float
    n: int
    m: int
    residual: float = 0.0
    at_boundary: bool = False

    @property
    def alpha(self) -> float:
        return (1 - self.p) ** 2 + self.p ** 2


def _golden_section_min(f, lo: float, hi: float, tol: float = 1e-6) -> float:
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


def fit_pflip(weight_histogram, n: int, m: int) -> FlipModel:
    """Least-squares fit of p to the empirical output-weight frequencies.

    Scalar search on [0, 0.5): a 64-point coarse grid guards against local
    minima, then golden-section refines to 1e-6.
    """
    hist = np.asarray(weight_histogram, dtype=float)
    if hist.shape != (n + 1,):
        raise ParameterError(f"histogram must have n+1={n + 1} entries")
    total = hist.sum()
    if total <= 0:
        raise ParameterError("histogram must have positive total")
    freq = hist / total

    def sse(p):
        return float(np.sum((freq - hamming_pmf(n, m, p)) ** 2))

    hi = 0.5 - 1e-9
    grid = np.linspace(0.0, hi, 64)
    losses = [sse(p) for p in grid]
    best = int(np.argmin(losses))
    p_hat = _golden_section_min(sse, grid[max(best - 1, 0)],
                                grid[min(best + 1, len(grid) - 1)])
    at_boundary = (p_hat >= hi - 1e-5) or (p_hat <= 1e-6 and int(np.argmax(freq)) != m)
    if at_boundary:
        warnings.warn("weight histogram is degenerate; flip fit pinned to the "
                      "boundary", PhysicalBoundWarning)
    return FlipModel(p=p_hat, n=n, m=m, residual=sse(p_hat), at_boundary=at_boundary)


def mitigate_z_string(raw_expectation: float, p: float, weight: int) -> float:
    """Invert the bit-flip attenuation of a Z string: raw * (1-2p)^(-weight).

    The result may leave [-1, 1]; it is flagged via PhysicalBoundWarning but
    never clipped (the inflation factor is the variance-amplification
    mechanism behind mitigated error bars).
    """
    if not 0.0 <= p < 0.5:
        raise ParameterError("flip probability must lie in [0, 0.5)")
    value = raw_expectation * (1 - 2 * p) ** (-weight)
    if abs(value) > 1.0 + 1e-12:
        warnings.warn(f"inflated <Z> = {value:.4g} outside [-1, 1]",
                      PhysicalBoundWarning)
    return value


def mitigate_collision_rank1(raw_ipr: float, p: float, n_a: int) -> float:
    """Rank-1 collision correction 2^-n_A + alpha^-n_A (raw - 2^-n_A).

    alpha = (1-p)^2 + p^2 is the per-qubit probability that a flip hits both
    or neither of the two colliding samples. Results below the uniform floor
    2^-n_A are clamped there (flagged).
    """
    if not 0.0 <= p < 0.5:
        raise ParameterError("flip probability must lie in [0, 0.5)")
    floor = 2.0 ** (-n_a)
    alpha = (1 - p) ** 2 + p ** 2
    value = floor + alpha ** (-n_a) * (raw_ipr - floor)
    if raw_ipr < floor:
        warnings.warn(f"raw IPR {raw_ipr:.4g} below the uniform floor {floor:.4g}; "
                      "clamping", PhysicalBoundWarning)
        return floor
    return value


def mitigate_parseval_pipeline(samples: SampleSet, patch, flip_model: FlipModel,
                               batches: int = DEFAULT_BATCHES) -> MomentEstimate:
    """Estimate the patch IPR with every <Z_s> inflated by (1-2p)^(-|s|).

    Statistical error grows with the inflation, so this route is reserved
    for small marginals; larger patches should use the rank-1 correction.
    """
    qubits = tuple(patch.qubits) if isinstance(patch, Patch) else tuple(patch)
    if len(qubits) > PARSEVAL_PIPELINE_MAX_QUBITS:
        raise ParameterError(
            f"per-string inflation is limited to {PARSEVAL_PIPELINE_MAX_QUBITS} "
            "qubits; use mitigate_collision_rank1 for larger patches")
    sub = restrict(samples, qubits)
    k = len(qubits)
    d = 2 ** k
    weights = np.array([bin(s).count("1") for s in range(d)])
    inflation = (1 - 2 * flip_model.p) ** (-weights.astype(float))

    def pipeline(codes):
        freq = np.bincount(codes.astype(np.int64), minlength=d) / len(codes)
        w = z_expectations(freq) * inflation
        return float(np.sum(w * w) / d)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PhysicalBoundWarning)
        value = pipeline(sub.codes)
        n_s = sub.n_samples
        batches = max(1, min(batches, n_s))
        if batches > 1:
            block = n_s // batches
            vals = np.array([pipeline(sub.codes[b * block:(b + 1) * block])
                             for b in range(batches)])
            stderr = float(vals.std(ddof=1) / math.sqrt(batches))
            mean = float(vals.mean())
        else:
            stderr, mean = 0.0, value
    return MomentEstimate(k=2, value=value, batch_mean=mean, stderr=stderr,
                          n_samples=n_s, n_batches=batches)


# ---------------------------------------------------------------------------
# Low Entanglement Calibration


@dataclass(frozen=True)
class LecCalibration:
    """Single multiplicative correction of Delta Q = IPR - 2^-n_A."""

    anchor_j: float
    ratio: float
    n_a: int


def lec_calibrate(raw_curve: DiagnosticCurve, exact_anchor_value: float, n_a: int,
                  anchor_j: float = LEC_DEFAULT_ANCHOR) -> LecCalibration:
    """Fix the ratio R0 = dQ_exact(J0) / dQ_exp(J0) at the anchor coupling."""
    hits = np.nonzero(np.isclose(raw_curve.j_grid, anchor_j, rtol=1e-9, atol=1e-12))[0]
    if len(hits) != 1:
        raise ParameterError(f"anchor J0 = {anchor_j!r} not on the curve grid")
    floor = 2.0 ** (-n_a)
    dq_exp = raw_curve.values[hits[0]] - floor
    dq_exact = exact_anchor_value - floor
    if dq_exp <= 0 or dq_exact <= 0:
        raise CalibrationError("anchor Delta Q must be positive on both sides")
    return LecCalibration(anchor_j=anchor_j, ratio=float(dq_exact / dq_exp), n_a=n_a)


def lec_mitigate(raw_curve: DiagnosticCurve, exact_anchor_value: float, n_a: int,
                 anchor_j: float = LEC_DEFAULT_ANCHOR) -> DiagnosticCurve:
    """Rescale Delta Q of an IPR curve by the anchored calibration factor.

    Exact whenever the noise acts as a J-independent depolarizing channel on
    the reduced state (then Delta Q_noisy = (1-p)^2 Delta Q_exact at all J).
    Error bars are inflated by the same factor.
    """
    cal = lec_calibrate(raw_curve, exact_anchor_value, n_a, anchor_j)
    floor = 2.0 ** (-n_a)
    values = floor + cal.ratio * (raw_curve.values - floor)
    return replace(raw_curve, values=values, stderr=cal.ratio * raw_curve.stderr,
                   label=f"lec:{raw_curve.label}", jstar=None)


def depolarize_ipr(ipr: float, p: float, n_a: int) -> float:
    """Forward action of a depolarizing channel on a marginal IPR:
    (1-p)^2 IPR + p(2-p)/2^n_A. Used to synthesize noisy curves in tests."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError("depolarizing rate must lie in [0, 1]")
    return (1 - p) ** 2 * ipr + p * (2 - p) / 2 ** n_a
