"""Experiment configuration, sweep orchestration, and text-first persistence.

Everything numeric is serialized with Python's shortest round-trip float
repr, so emitted files parse back to the in-memory values exactly and a
rerun with the same config produces a byte-identical record.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .disorder import derive_seed
from .errors import DataFormatError, ParameterError
from .estimators import (DiagnosticCurve, Patch, central_patch, collision_entropy,
                         collision_estimate, exact_marginal_moment, extract_jstar,
                         rectangle_patch, rectangle_translations, restrict,
                         spatial_average)
from .lattice import build_floquet_circuit, build_lattice
from .mitigation import (FlipModel, apply_bitflip_channel, fit_pflip,
                         lec_mitigate, mitigate_collision_rank1,
                         mitigate_parseval_pipeline)
from .rmt import cue_r_pdf, poisson_r_pdf, u1_haar_marginal_ipr
from .samples import QUBIT_ORDER_TAG, SampleSet
from .states import evolve, neel_state, sample

RECORD_TAG = "floqsim-sweep v1"
MITIGATION_MODES = ("none", "hamming", "lec", "parseval-hamming")

_PATCH_SPEC_RE = re.compile(
    r"^(?P<w>\d+)x(?P<h>\d+)(?:@(?P<where>all(?::\d+)?|center|\d+,\d+))?$")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """One reproducible sweep: geometry, grid, sampling, and mitigation."""

    lx: int
    ly: int
    j_start_over_pi: float
    j_stop_over_pi: float
    j_count: int
    n_cycles: int
    seed: int
    patches: tuple[str, ...] = ("1x1", "1x2", "2x2")
    realizations: int = 1
    mode: str = "exact"              # exact | sample
    n_samples: int = 10_000
    batches: int = 16
    renyi_orders: tuple[int, ...] = (2,)
    base: float = 2.0
    mitigation: str = "none"
    noise_p: float = 0.0             # synthetic terminal bit-flip rate
    epsilon: float = 0.1
    outdir: str | None = None

    def __post_init__(self):
        if self.j_count < 1:
            raise ParameterError("J grid needs at least one point")
        if self.mode not in ("exact", "sample"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.mitigation not in MITIGATION_MODES:
            raise ParameterError(f"unknown mitigation mode {self.mitigation!r}")
        if self.mitigation != "none" and self.mode != "sample":
            raise ParameterError("mitigation applies to sampled sweeps only")
        for spec in self.patches:
            if not _PATCH_SPEC_RE.match(spec):
                raise ParameterError(f"bad patch spec {spec!r}")

    def j_grid(self) -> np.ndarray:
        if self.j_count == 1:
            return np.array([self.j_start_over_pi]) * math.pi
        return np.linspace(self.j_start_over_pi, self.j_stop_over_pi,
                           self.j_count) * math.pi

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        for key in ("patches", "renyi_orders"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_json(asdict(config)).encode()).hexdigest()[:16]


def resolve_patches(config: ExperimentConfig):
    """Expand patch spec strings into (spec, [Patch, ...]) groups."""
    lattice = build_lattice(config.lx, config.ly)
    groups = []
    for spec in config.patches:
        m = _PATCH_SPEC_RE.match(spec)
        w, h = int(m.group("w")), int(m.group("h"))
        where = m.group("where") or "center"
        if where.startswith("all"):
            count = int(where.split(":")[1]) if ":" in where else None
            patches = rectangle_translations(lattice, w, h, count=count,
                                             seed=config.seed)
        elif where == "center":
            patches = (central_patch(lattice, w, h),)
        else:
            x, y = map(int, where.split(","))
            patches = (rectangle_patch(lattice, (x, y), w, h),)
        groups.append((spec, patches))
    return lattice, groups


# ---------------------------------------------------------------------------
# sweep record


@dataclass
class SweepEntry:
    """Results for one (J, patch, Renyi order) cell."""

    j_over_pi: float
    patch: str
    n_a: int
    k: int
    raw_moment: float
    raw_stderr: float
    mitigated_moment: float
    mitigated_stderr: float
    entropy: float
    reference_moment: float
    reference_entropy: float


@dataclass
class ResultRecord:
    """Full sweep output; serializable as a single structured-text document."""

    config: ExperimentConfig
    config_hash: str
    version: str
    entries: list[SweepEntry] = field(default_factory=list)
    jstar: dict[str, float | None] = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "record": RECORD_TAG,
            "version": self.version,
            "config": asdict(self.config),
            "config_hash": self.config_hash,
            "entries": [asdict(e) for e in self.entries],
            "jstar": self.jstar,
            "extras": self.extras,
        }
        return canonical_json(doc) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        doc = json.loads(text)
        if doc.get("record") != RECORD_TAG:
            raise DataFormatError("not a floqsim sweep record")
        return cls(
            config=ExperimentConfig.from_dict(doc["config"]),
            config_hash=doc["config_hash"],
            version=doc["version"],
            entries=[SweepEntry(**e) for e in doc["entries"]],
            jstar=doc["jstar"],
            extras=doc.get("extras", {}),
        )

    def curve(self, patch: str, k: int = 2, mitigated: bool = True) -> DiagnosticCurve:
        rows = [e for e in self.entries if e.patch == patch and e.k == k]
        rows.sort(key=lambda e: e.j_over_pi)
        if not rows:
            raise ParameterError(f"no entries for patch {patch!r}, k={k}")
        values = [e.entropy for e in rows]
        return DiagnosticCurve(
            j_grid=np.array([e.j_over_pi for e in rows]) * math.pi,
            values=np.array(values),
            stderr=np.array([e.mitigated_stderr if mitigated else e.raw_stderr
                             for e in rows]),
            reference=rows[0].reference_entropy,
            label=f"{patch}:k{k}", base=self.config.base,
            jstar=self.jstar.get(f"{patch}:k{k}"))


# ---------------------------------------------------------------------------
# orchestration


def _mitigate_sampleset(samples: SampleSet, patch: Patch, model: FlipModel,
                        mode: str, batches: int):
    if mode == "parseval-hamming" and patch.n_qubits <= 4:
        est = mitigate_parseval_pipeline(samples, patch, model, batches=batches)
        return est.value, est.stderr
    raw = collision_estimate(restrict(samples, patch), 2, batches=batches)
    value = mitigate_collision_rank1(raw.value, model.p, patch.n_qubits)
    scale = model.alpha ** (-patch.n_qubits)
    return value, raw.stderr * scale


def _sweep_cell(config: ExperimentConfig, lattice, groups, j: float):
    """All entries for one coupling value; deterministic per config."""
    m = neel_state(lattice).weight
    entries = []
    flat = [(spec, p) for spec, patches in groups for p in patches]
    orders = tuple(config.renyi_orders)
    moments_acc = {(idx, k): [] for idx in range(len(flat)) for k in orders}

    for r in range(config.realizations):
        circuit = build_floquet_circuit(lattice, j, config.n_cycles,
                                        derive_seed(config.seed, r))
        state = evolve(neel_state(lattice), circuit)
        if config.mode == "sample":
            shots = sample(state, config.n_samples, derive_seed(config.seed, 10_000 + r))
            if config.noise_p > 0:
                shots = apply_bitflip_channel(shots, config.noise_p,
                                              derive_seed(config.seed, 20_000 + r))
            model = None
            if config.mitigation in ("hamming", "parseval-hamming"):
                model = fit_pflip(shots.weight_histogram(), lattice.n, m)
        for idx, (spec, patch) in enumerate(flat):
            for k in orders:
                if config.mode == "exact":
                    value = exact_marginal_moment(state, patch, k)
                    moments_acc[(idx, k)].append((value, value, 0.0))
                else:
                    est = collision_estimate(restrict(shots, patch), k,
                                             batches=config.batches)
                    mit_value, mit_err = est.value, est.stderr
                    if k == 2 and config.mitigation in ("hamming", "parseval-hamming"):
                        mit_value, mit_err = _mitigate_sampleset(
                            shots, patch, model, config.mitigation, config.batches)
                    moments_acc[(idx, k)].append((est.value, mit_value,
                                                  max(est.stderr, mit_err)))

    for idx, (spec, patch) in enumerate(flat):
        n_a = patch.n_qubits
        for k in orders:
            rows = moments_acc[(idx, k)]
            raws = np.array([r[0] for r in rows])
            mits = np.array([r[1] for r in rows])
            if len(rows) > 1:
                raw_err = float(raws.std(ddof=1) / math.sqrt(len(rows)))
                mit_err = float(mits.std(ddof=1) / math.sqrt(len(rows)))
            else:
                raw_err = mit_err = rows[0][2]
            ref = (u1_haar_marginal_ipr(n_a, lattice.n - n_a, m) if k == 2
                   else float("nan"))
            mit_mean = float(mits.mean())
            entries.append(SweepEntry(
                j_over_pi=j / math.pi, patch=patch.label, n_a=n_a, k=k,
                raw_moment=float(raws.mean()), raw_stderr=raw_err,
                mitigated_moment=mit_mean, mitigated_stderr=mit_err,
                entropy=collision_entropy(max(mit_mean, 1e-300), k, config.base),
                reference_moment=ref,
                reference_entropy=(collision_entropy(ref, k, config.base)
                                   if k == 2 else float("nan"))))
    return entries


def run_sweep(config: ExperimentConfig) -> ResultRecord:
    """Build -> evolve -> estimate -> mitigate -> J* for the whole grid.

    Deterministic for a fixed config; with an output directory set, each J
    point is checkpointed and reruns resume from the stored cells.
    """
    lattice, groups = resolve_patches(config)
    chash = config_hash(config)
    record = ResultRecord(config=config, config_hash=chash, version=__version__)

    ckpt_dir = None
    if config.outdir:
        ckpt_dir = os.path.join(config.outdir, "checkpoints")
        os.makedirs(ckpt_dir, exist_ok=True)

    for j_idx, j in enumerate(config.j_grid()):
        entries = None
        ckpt_path = (os.path.join(ckpt_dir, f"J{j_idx:03d}.json")
                     if ckpt_dir else None)
        if ckpt_path and os.path.exists(ckpt_path):
            with open(ckpt_path) as fh:
                doc = json.load(fh)
            if doc.get("config_hash") == chash:
                entries = [SweepEntry(**e) for e in doc["entries"]]
        if entries is None:
            entries = _sweep_cell(config, lattice, groups, j)
            if ckpt_path:
                with open(ckpt_path, "w") as fh:
                    fh.write(canonical_json({
                        "config_hash": chash,
                        "entries": [asdict(e) for e in entries]}) + "\n")
        record.entries.extend(entries)

    # LEC is curve-level: calibrate each sampled curve against the exact
    # anchor value at the smallest grid coupling.
    if config.mitigation == "lec":
        record = _apply_lec(config, lattice, groups, record)

    for spec, patches in groups:
        for patch in patches:
            for k in config.renyi_orders:
                curve = record.curve(patch.label, k)
                record.jstar[f"{patch.label}:k{k}"] = extract_jstar(
                    curve, epsilon=config.epsilon)
    if config.outdir:
        os.makedirs(config.outdir, exist_ok=True)
        with open(os.path.join(config.outdir, "record.json"), "w") as fh:
            fh.write(record.to_json())
    return record


def _apply_lec(config: ExperimentConfig, lattice, groups,
               record: ResultRecord) -> ResultRecord:
    grid = record.config.j_grid()
    anchor_j = float(grid[0])
    for spec, patches in groups:
        for patch in patches:
            rows = sorted((e for e in record.entries
                           if e.patch == patch.label and e.k == 2),
                          key=lambda e: e.j_over_pi)
            raw = DiagnosticCurve(
                j_grid=np.array([e.j_over_pi for e in rows]) * math.pi,
                values=np.array([e.raw_moment for e in rows]),
                stderr=np.array([e.raw_stderr for e in rows]),
                reference=rows[0].reference_moment, label=patch.label)
            exact_anchor = _exact_anchor_moment(config, lattice, patch, anchor_j)
            mitigated = lec_mitigate(raw, exact_anchor, patch.n_qubits,
                                     anchor_j=anchor_j)
            for e, value, err in zip(rows, mitigated.values, mitigated.stderr):
                e.mitigated_moment = float(value)
                e.mitigated_stderr = float(err)
                e.entropy = collision_entropy(max(float(value), 1e-300), 2,
                                              config.base)
    return record


def _exact_anchor_moment(config: ExperimentConfig, lattice, patch: Patch,
                         anchor_j: float) -> float:
    values = []
    for r in range(config.realizations):
        circuit = build_floquet_circuit(lattice, anchor_j, config.n_cycles,
                                        derive_seed(config.seed, r))
        state = evolve(neel_state(lattice), circuit)
        values.append(exact_marginal_moment(state, patch, 2))
    return float(np.mean(values))


# ---------------------------------------------------------------------------
# counts files


def write_counts(samples: SampleSet, path) -> None:
    """Two-column text format: `bitstring<TAB>count`, `#` headers carry metadata."""
    uniq, mult = samples.packed_counts()
    with open(path, "w") as fh:
        fh.write(f"# n={samples.n}\n")
        fh.write(f"# qubit_order={samples.qubit_order}\n")
        for code, count in zip(uniq, mult):
            fh.write(f"{format(int(code), f'0{samples.n}b')}\t{int(count)}\n")


def ingest_counts(path) -> SampleSet:
    """Read a counts file; duplicate bitstrings are summed."""
    n = None
    qubit_order = QUBIT_ORDER_TAG
    counts: dict[str, int] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("n="):
                    n = int(body[2:])
                elif body.startswith("qubit_order="):
                    qubit_order = body.split("=", 1)[1]
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataFormatError(
                    f"{path}:{lineno}: expected `bitstring<TAB>count`")
            bits, count_text = parts
            if set(bits) - {"0", "1"}:
                raise DataFormatError(f"{path}:{lineno}: bad bitstring {bits!r}")
            if n is None:
                n = len(bits)
            if len(bits) != n:
                raise DataFormatError(
                    f"{path}:{lineno}: length {len(bits)} != declared n={n}")
            try:
                count = int(count_text)
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: bad count {count_text!r}")
            if count < 1:
                raise DataFormatError(f"{path}:{lineno}: count must be positive")
            counts[bits] = counts.get(bits, 0) + count
    if not counts:
        raise DataFormatError(f"{path}: no samples found")
    return SampleSet.from_counts(n, counts, qubit_order=qubit_order)


# ---------------------------------------------------------------------------
# plot-data emission


def write_curve_file(path, curve: DiagnosticCurve, epsilon: float = 0.1) -> None:
    """Columns: J_over_pi value stderr reference in_band."""
    with open(path, "w") as fh:
        fh.write(f"# label={curve.label} base={curve.base!r}\n")
        fh.write("J_over_pi\tvalue\tstderr\treference\tin_band\n")
        ref = float(curve.reference)
        for j, v, s in zip(curve.j_grid, curve.values, curve.stderr):
            in_band = int(abs(v - ref) <= epsilon)
            fh.write(f"{float(j) / math.pi!r}\t{float(v)!r}\t{float(s)!r}"
                     f"\t{ref!r}\t{in_band}\n")


def gap_ratio_table(ratios, bins: int = 50) -> str:
    """Histogram of gap ratios with the Poisson and CUE reference densities."""
    lines = ["r\tdensity\tpoisson\tcue"]
    counts, edges = np.histogram(np.asarray(ratios, dtype=float), bins=bins,
                                 range=(0.0, 1.0), density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    for c, d in zip(centers, counts):
        lines.append(f"{float(c)!r}\t{float(d)!r}\t{float(poisson_r_pdf(c))!r}"
                     f"\t{float(cue_r_pdf(c))!r}")
    return "\n".join(lines) + "\n"


def porter_thomas_table(probabilities, dim: int, bins: int = 50) -> str:
    """Histogram of D*p against the limiting exponential density."""
    dp = dim * np.asarray(probabilities, dtype=float)
    hi = float(dp.max()) or 1.0
    counts, edges = np.histogram(dp, bins=bins, range=(0.0, hi), density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    lines = ["D_p\tdensity\texponential"]
    for c, d in zip(centers, counts):
        lines.append(f"{float(c)!r}\t{float(d)!r}\t{math.exp(-float(c))!r}")
    return "\n".join(lines) + "\n"


def weight_histogram_table(histogram, model: FlipModel | None = None) -> str:
    """Output-weight histogram with the fitted pmf overlay."""
    hist = np.asarray(histogram, dtype=float)
    total = hist.sum() or 1.0
    from .mitigation import hamming_pmf

    pmf = (hamming_pmf(model.n, model.m, model.p) if model is not None
           else np.full(len(hist), float("nan")))
    lines = ["weight\tfrequency\tfitted_pmf"]
    for h, (c, q) in enumerate(zip(hist, pmf)):
        lines.append(f"{h}\t{float(c / total)!r}\t{float(q)!r}")
    return "\n".join(lines) + "\n"


def emit_plot_data(record: ResultRecord, outdir) -> list[str]:
    """One delimited file per figure family present in the record."""
    os.makedirs(outdir, exist_ok=True)
    written = []
    cells = sorted({(e.patch, e.k) for e in record.entries})
    for patch, k in cells:
        curve = record.curve(patch, k)
        path = os.path.join(outdir, f"entropy_{patch.replace(',', '_')}_k{k}.tsv")
        write_curve_file(path, curve, epsilon=record.config.epsilon)
        written.append(path)
    if not cells:
        path = os.path.join(outdir, "entropy_empty.tsv")
        with open(path, "w") as fh:
            fh.write("J_over_pi\tvalue\tstderr\treference\tin_band\n")
        written.append(path)
    if "gap_ratios" in record.extras:
        path = os.path.join(outdir, "gap_ratios.tsv")
        with open(path, "w") as fh:
            fh.write(gap_ratio_table(record.extras["gap_ratios"]))
        written.append(path)
    if "pt_probabilities" in record.extras:
        path = os.path.join(outdir, "porter_thomas.tsv")
        with open(path, "w") as fh:
            fh.write(porter_thomas_table(record.extras["pt_probabilities"],
                                         record.extras["pt_dimension"]))
        written.append(path)
    if "weight_histogram" in record.extras:
        path = os.path.join(outdir, "weight_histogram.tsv")
        model = None
        if "flip_model" in record.extras:
            fm = record.extras["flip_model"]
            model = FlipModel(p=fm["p"], n=fm["n"], m=fm["m"])
        with open(path, "w") as fh:
            fh.write(weight_histogram_table(record.extras["weight_histogram"], model))
        written.append(path)
    return written
