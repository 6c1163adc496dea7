import itertools
import math

import numpy as np
import pytest

import floqsim as fs
import floqsim.estimators as est
import floqsim.mitigation as mit
from floqsim.disorder import derive_seed
from floqsim.errors import CalibrationError, ParameterError
from floqsim.samples import SampleSet
from floqsim.states import marginal_probabilities
from conftest import evolved_state


# ---------------------------------------------------------------------------
# synthetic bit-flip channel


def test_bitflip_p_zero_identity(ergodic44):
    shots = fs.sample(ergodic44, 1000, 0)
    out = mit.apply_bitflip_channel(shots, 0.0, 1)
    assert np.array_equal(out.codes, shots.codes)


def test_bitflip_half_randomizes_bits():
    shots = SampleSet(n=4, codes=np.zeros(100_000, dtype=np.uint64))
    out = mit.apply_bitflip_channel(shots, 0.499999, 7)
    freq = out.weights().mean() / 4
    assert abs(freq - 0.5) < 3 * math.sqrt(0.25 / 400_000)


def test_bitflip_deterministic(ergodic44):
    shots = fs.sample(ergodic44, 500, 3)
    a = mit.apply_bitflip_channel(shots, 0.05, 11)
    b = mit.apply_bitflip_channel(shots, 0.05, 11)
    assert np.array_equal(a.codes, b.codes)


def test_bitflip_weight_histogram_matches_pmf():
    """Weight histogram of flipped Neel samples follows hamming_pmf."""
    n, m, p = 16, 8, 0.07
    neel = fs.neel_state(fs.build_lattice(4, 4))
    shots = fs.sample(neel, 1_000_000, 2)
    noisy = mit.apply_bitflip_channel(shots, p, 5)
    hist = noisy.weight_histogram() / noisy.n_samples
    pmf = mit.hamming_pmf(n, m, p)
    assert 0.5 * np.abs(hist - pmf).sum() < 0.01


# ---------------------------------------------------------------------------
# Hamming pmf


def test_hamming_pmf_point_mass_at_zero_noise():
    pmf = mit.hamming_pmf(9, 4, 0.0)
    assert pmf[4] == 1.0 and pmf.sum() == 1.0


def test_hamming_pmf_two_sites_half():
    assert np.allclose(mit.hamming_pmf(2, 1, 0.5), [0.25, 0.5, 0.25], atol=1e-15)
    # enumerate the four flip masks of the 1-weight string directly
    probs = np.zeros(3)
    for f0, f1 in itertools.product([0, 1], repeat=2):
        h = (1 ^ f0) + (0 ^ f1)
        probs[h] += 0.25
    assert np.allclose(mit.hamming_pmf(2, 1, 0.5), probs, atol=1e-15)


@pytest.mark.parametrize("n,m", [(5, 2), (12, 6), (30, 10), (30, 30)])
@pytest.mark.parametrize("p", [0.0, 0.01, 0.13, 0.25, 0.37, 0.49])
def test_hamming_pmf_identities(n, m, p):
    pmf = mit.hamming_pmf(n, m, p)
    h = np.arange(n + 1)
    assert abs(pmf.sum() - 1.0) < 1e-12
    mean = float(pmf @ h)
    assert mean == pytest.approx(m * (1 - p) + (n - m) * p, abs=1e-10)
    var = float(pmf @ h ** 2) - mean ** 2
    assert var == pytest.approx(n * p * (1 - p), abs=1e-10)


def test_hamming_pmf_matches_binomial_convolution_oracle():
    import scipy.stats

    n, m, p = 20, 9, 0.17
    down = scipy.stats.binom.pmf(np.arange(m + 1), m, 1 - p)  # kept ones
    up = scipy.stats.binom.pmf(np.arange(n - m + 1), n - m, p)
    assert np.allclose(mit.hamming_pmf(n, m, p), np.convolve(down, up), atol=1e-12)


def test_hamming_pmf_monte_carlo():
    rng = np.random.default_rng(3)
    n, m, p = 16, 8, 0.05
    h = m - rng.binomial(m, p, 300_000) + rng.binomial(n - m, p, 300_000)
    hist = np.bincount(h, minlength=n + 1) / 300_000
    assert 0.5 * np.abs(hist - mit.hamming_pmf(n, m, p)).sum() < 0.01


# ---------------------------------------------------------------------------
# flip-probability fit


@pytest.mark.parametrize("p", [0.01, 0.03, 0.05])
def test_fit_round_trip_analytic(p):
    model = mit.fit_pflip(mit.hamming_pmf(16, 8, p), 16, 8)
    assert abs(model.p - p) < 1e-4
    assert model.residual < 1e-10
    assert not model.at_boundary


@pytest.mark.parametrize("n,m", [(4, 2), (9, 4), (16, 8), (25, 12), (30, 15)])
@pytest.mark.parametrize("p", [0.0, 0.01, 0.05, 0.13, 0.25, 0.37, 0.45, 0.49])
def test_fit_round_trip_grid(n, m, p):
    model = mit.fit_pflip(mit.hamming_pmf(n, m, p), n, m)
    assert abs(model.p - p) < 1e-4


def test_fit_point_mass_at_m_gives_zero():
    hist = np.zeros(10)
    hist[4] = 123
    model = mit.fit_pflip(hist, 9, 4)
    assert model.p == pytest.approx(0.0, abs=1e-6)


def test_fit_degenerate_histogram_flagged():
    hist = np.zeros(10)
    hist[9] = 50  # all mass far from m with no spread
    with pytest.warns(mit.PhysicalBoundWarning):
        model = mit.fit_pflip(hist, 9, 4)
    assert model.at_boundary


def test_fit_monte_carlo_accuracy():
    rng = np.random.default_rng(4)
    n, m, p = 16, 8, 0.05
    h = m - rng.binomial(m, p, 100_000) + rng.binomial(n - m, p, 100_000)
    model = mit.fit_pflip(np.bincount(h, minlength=n + 1), n, m)
    assert abs(model.p - p) < 0.003


# ---------------------------------------------------------------------------
# Z-string inflation


def test_mitigate_z_string_values():
    assert mit.mitigate_z_string(0.37, 0.0, 5) == 0.37
    assert mit.mitigate_z_string(0.5, 0.1, 1) == pytest.approx(0.625, abs=1e-15)
    assert mit.mitigate_z_string(0.01, 0.1, 9) == pytest.approx(
        0.01 / 0.8 ** 9, abs=1e-15)
    assert 0.8 ** 9 == pytest.approx(0.134217728, abs=1e-12)


def test_mitigate_z_string_flags_unphysical():
    with pytest.warns(mit.PhysicalBoundWarning):
        value = mit.mitigate_z_string(0.9, 0.2, 4)
    assert value > 1.0  # flagged, never clipped


def z_expectation_of(samples, qubits):
    sub = est.restrict(samples, qubits)
    signs = 1.0 - 2.0 * (sub.weights() % 2)
    return float(signs.mean())


def test_terminal_channel_exact_inversion_exhaustive():
    """n <= 4: enumerate every flip mask; the noisy <Z_R> equals
    (1-2p)^|R| times the ideal one, so inflation inverts it exactly."""
    rng = np.random.default_rng(5)
    n, p = 4, 0.11
    probs = rng.dirichlet(np.ones(2 ** n))
    for r_mask in range(1, 2 ** n):
        ideal = sum(probs[x] * (-1) ** bin(x & r_mask).count("1")
                    for x in range(2 ** n))
        noisy = 0.0
        for e_mask in range(2 ** n):
            w = bin(e_mask).count("1")
            pe = p ** w * (1 - p) ** (n - w)
            for x in range(2 ** n):
                noisy += probs[x] * pe * (-1) ** bin((x ^ e_mask) & r_mask).count("1")
        weight = bin(r_mask).count("1")
        assert noisy == pytest.approx((1 - 2 * p) ** weight * ideal, abs=1e-12)
        assert mit.mitigate_z_string(noisy, p, weight) == pytest.approx(
            ideal, abs=1e-12)


def test_terminal_channel_unbiased_monte_carlo(ergodic44):
    n, p = 16, 0.04
    shots = fs.sample(ergodic44, 400_000, 6)
    noisy = mit.apply_bitflip_channel(shots, p, 7)
    qubits = (1, 5, 6, 10)
    ideal = float(np.sum(
        marginal_probabilities(ergodic44, qubits)
        * (1.0 - 2.0 * (np.array([bin(a).count("1") for a in range(16)]) % 2))))
    raw = z_expectation_of(noisy, qubits)
    mitigated = mit.mitigate_z_string(raw, p, len(qubits))
    se = (1 - 2 * p) ** (-len(qubits)) / math.sqrt(len(noisy.codes))
    assert abs(mitigated - ideal) < 5 * se


# ---------------------------------------------------------------------------
# rank-1 collision correction


def test_rank1_identity_at_zero_noise():
    assert mit.mitigate_collision_rank1(0.37, 0.0, 4) == pytest.approx(0.37)


def test_rank1_fixed_point_and_example():
    floor = 2.0 ** -4
    assert mit.mitigate_collision_rank1(floor, 0.13, 4) == pytest.approx(floor)
    expected = 0.0625 + 0.0375 / ((0.95 ** 2 + 0.05 ** 2) ** 4)
    assert mit.mitigate_collision_rank1(0.1, 0.05, 4) == pytest.approx(
        expected, abs=1e-12)
    assert expected == pytest.approx(0.1184, abs=5e-4)


def test_rank1_monotone_in_raw():
    vals = [mit.mitigate_collision_rank1(r, 0.05, 4)
            for r in np.linspace(2 ** -4, 1.0, 40)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_rank1_clamps_below_floor():
    with pytest.warns(mit.PhysicalBoundWarning):
        out = mit.mitigate_collision_rank1(0.01, 0.05, 4)
    assert out == 2.0 ** -4


def test_rank1_recovers_terminal_channel_approximately(ergodic44):
    """On samples through the terminal channel, the rank-1 correction lands
    close to the exact IPR (model is approximate, so tolerance is loose)."""
    p = 0.02
    patch = est.central_patch(fs.build_lattice(4, 4), 2, 2)
    exact = est.exact_marginal_moment(ergodic44, patch, 2)
    shots = fs.sample(ergodic44, 500_000, 8)
    noisy = mit.apply_bitflip_channel(shots, p, 9)
    raw = est.collision_estimate(est.restrict(noisy, patch), 2).value
    out = mit.mitigate_collision_rank1(raw, p, 4)
    assert abs(out - exact) < 0.1 * exact
    assert abs(raw - exact) > abs(out - exact)  # mitigation helps


# ---------------------------------------------------------------------------
# Parseval-Hamming pipeline


def test_pipeline_identity_at_zero_noise(ergodic44):
    patch = est.central_patch(fs.build_lattice(4, 4), 2, 2)
    shots = fs.sample(ergodic44, 50_000, 10)
    model = mit.FlipModel(p=0.0, n=16, m=8)
    out = mit.mitigate_parseval_pipeline(shots, patch, model, batches=1)
    direct = est.collision_estimate(est.restrict(shots, patch), 2, batches=1)
    # plugin (frequency) estimator at p = 0 equals the Parseval of empirical p
    sub = est.restrict(shots, patch)
    freq = np.bincount(sub.codes.astype(np.int64), minlength=16) / sub.n_samples
    assert out.value == pytest.approx(float(np.sum(freq ** 2)), abs=1e-12)
    assert out.value == pytest.approx(direct.value, rel=1e-3)


def test_pipeline_single_qubit_analytic(lattice33):
    """Single-qubit patch: inflation by (1-2p)^-1 recovers <Z> exactly in
    expectation, hence the IPR (1 + <Z>^2)/2."""
    state = evolved_state(lattice33, 0.05, 2, 12)
    p = 0.1
    shots = fs.sample(state, 2_000_000, 13)
    noisy = mit.apply_bitflip_channel(shots, p, 14)
    model = mit.FlipModel(p=p, n=9, m=4)
    out = mit.mitigate_parseval_pipeline(noisy, [4], model, batches=16)
    exact = est.exact_marginal_moment(state, [4], 2)
    assert abs(out.value - exact) < 4 * out.stderr


def test_pipeline_round_trip_2x2(ergodic44):
    """Criterion-7a setting: terminal flips at p = 0.02 on 4x4 exact samples;
    the pipeline recovers the exact 2x2 IPR within 3 SE at n_S = 10^6."""
    p = 0.02
    patch = est.central_patch(fs.build_lattice(4, 4), 2, 2)
    exact = est.exact_marginal_moment(ergodic44, patch, 2)
    shots = fs.sample(ergodic44, 1_000_000, 15)
    noisy = mit.apply_bitflip_channel(shots, p, 16)
    model = mit.fit_pflip(noisy.weight_histogram(), 16, 8)
    out = mit.mitigate_parseval_pipeline(noisy, patch, model, batches=16)
    assert abs(out.value - exact) < 3 * out.stderr


def test_pipeline_rejects_large_patch(ergodic44):
    shots = fs.sample(ergodic44, 100, 17)
    model = mit.FlipModel(p=0.01, n=16, m=8)
    with pytest.raises(ParameterError, match="rank"):
        mit.mitigate_parseval_pipeline(shots, list(range(5)), model)


# ---------------------------------------------------------------------------
# LEC


def make_ipr_curve(values, grid_over_pi, n_a, reference=0.1):
    grid = np.asarray(grid_over_pi) * math.pi
    values = np.asarray(values, dtype=float)
    return est.DiagnosticCurve(j_grid=grid, values=values,
                               stderr=np.full_like(values, 1e-3),
                               reference=reference, label=f"{n_a}q")


def test_lec_identity_on_noiseless_curve():
    grid = [0.005, 0.05, 0.1]
    values = [0.9, 0.4, 0.1]
    curve = make_ipr_curve(values, grid, 2)
    out = mit.lec_mitigate(curve, exact_anchor_value=0.9, n_a=2)
    assert np.allclose(out.values, values, atol=1e-15)
    cal = mit.lec_calibrate(curve, 0.9, 2)
    assert cal.ratio == pytest.approx(1.0, abs=1e-15)


def test_lec_exact_under_depolarizing_channel():
    """Criterion-7b setting: a J-independent depolarizing factor on Delta Q
    is inverted exactly at every J."""
    rng = np.random.default_rng(18)
    n_a, p_dep = 3, 0.23
    grid = np.linspace(0.005, 0.25, 26)
    exact = np.sort(rng.uniform(2 ** -n_a + 0.01, 1.0, len(grid)))[::-1].copy()
    noisy = np.array([mit.depolarize_ipr(v, p_dep, n_a) for v in exact])
    curve = make_ipr_curve(noisy, grid, n_a)
    out = mit.lec_mitigate(curve, exact_anchor_value=float(exact[0]), n_a=n_a)
    assert np.max(np.abs(out.values - exact)) < 1e-12
    cal = mit.lec_calibrate(curve, float(exact[0]), n_a)
    assert cal.ratio == pytest.approx((1 - p_dep) ** -2, rel=1e-12)


def test_lec_custom_anchor_and_errors():
    curve = make_ipr_curve([0.5, 0.3], [0.01, 0.02], 2)
    out = mit.lec_mitigate(curve, 0.6, 2, anchor_j=0.01 * math.pi)
    floor = 0.25
    ratio = (0.6 - floor) / (0.5 - floor)
    assert out.values[0] == pytest.approx(0.6, abs=1e-12)
    assert out.values[1] == pytest.approx(floor + ratio * (0.3 - floor), abs=1e-12)
    assert np.allclose(out.stderr, ratio * 1e-3)
    with pytest.raises(ParameterError):
        mit.lec_mitigate(curve, 0.6, 2, anchor_j=0.015 * math.pi)
    with pytest.raises(CalibrationError):
        mit.lec_mitigate(make_ipr_curve([0.25, 0.3], [0.01, 0.02], 2), 0.6, 2,
                         anchor_j=0.01 * math.pi)


def test_depolarize_ipr_fixed_point():
    # the uniform floor is invariant under depolarizing
    assert mit.depolarize_ipr(0.125, 0.3, 3) == pytest.approx(0.125, abs=1e-15)
