"""Command line surface: simulate, spectrum, estimate, mitigate, benchmark,
sweep, ingest.

Couplings are entered and reported as J/pi. Exit codes: 0 ok, 2 parameter
error, 3 resource cap, 4 data-format error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .errors import DataFormatError, ParameterError, ResourceError
from .estimators import (Patch, collision_entropy, collision_estimate,
                         rectangle_patch, restrict)
from .io import (ExperimentConfig, ResultRecord, emit_plot_data, gap_ratio_table,
                 ingest_counts, porter_thomas_table, run_sweep,
                 weight_histogram_table, write_counts, write_curve_file)
from .lattice import build_floquet_circuit, build_lattice, compile_stats
from .mitigation import (fit_pflip, mitigate_collision_rank1,
                         mitigate_parseval_pipeline)
from .rmt import HaarRefs, gap_ratios, porter_thomas_test, reference_table
from .samples import SampleSet
from .states import (evolve, floquet_eigenphases, neel_state, probabilities,
                     sample, write_state_checkpoint)


def _add_circuit_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lx", type=int, required=True)
    p.add_argument("--ly", type=int, required=True)
    p.add_argument("--j-over-pi", type=float, required=True)
    p.add_argument("--cycles", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)


def _resolve_patch(args, n: int) -> Patch:
    if args.qubits:
        return Patch(qubits=tuple(int(q) for q in args.qubits.split(",")))
    if not args.patch:
        raise ParameterError("give either --qubits or --patch (with --lx/--ly)")
    if args.lx is None or args.ly is None:
        raise ParameterError("--patch needs --lx and --ly to resolve anchors")
    lattice = build_lattice(args.lx, args.ly)
    if lattice.n != n:
        raise ParameterError(f"lattice {args.lx}x{args.ly} does not match n={n}")
    spec = args.patch
    if "@" in spec:
        shape, anchor = spec.split("@")
        x, y = map(int, anchor.split(","))
    else:
        shape, (x, y) = spec, (0, 0)
    w, h = map(int, shape.split("x"))
    return rectangle_patch(lattice, (x, y), w, h)


def _cmd_simulate(args) -> int:
    lattice = build_lattice(args.lx, args.ly)
    circuit = build_floquet_circuit(lattice, args.j_over_pi * math.pi,
                                    args.cycles, args.seed)
    state = evolve(neel_state(lattice), circuit)
    stats = compile_stats(circuit)
    print(f"lattice {lattice.lx}x{lattice.ly}  sector dim {state.dim}  "
          f"cz_count {stats.cz_count}  cz_depth {stats.cz_depth}")
    if args.circuit_out:
        with open(args.circuit_out, "w") as fh:
            fh.write(circuit.to_text())
        print(f"wrote circuit record to {args.circuit_out}")
    if args.state_out:
        write_state_checkpoint(state, args.state_out)
        print(f"wrote state checkpoint to {args.state_out}")
    if args.counts_out:
        shots = sample(state, args.samples, args.sample_seed)
        write_counts(shots, args.counts_out)
        print(f"wrote {shots.n_samples} samples to {args.counts_out}")
    if args.pt_out:
        p = probabilities(state)
        with open(args.pt_out, "w") as fh:
            fh.write(porter_thomas_table(p, state.dim))
        ks = porter_thomas_test(p, state.dim)
        print(f"Porter-Thomas KS distance: {ks:.4g} (D={state.dim}); "
              f"wrote histogram to {args.pt_out}")
    return 0


def _cmd_spectrum(args) -> int:
    lattice = build_lattice(args.lx, args.ly)
    circuit = build_floquet_circuit(lattice, args.j_over_pi * math.pi,
                                    args.cycles, args.seed)
    weight = args.weight if args.weight is not None else neel_state(lattice).weight
    phases = floquet_eigenphases(circuit, weight)
    stats = gap_ratios(phases.phases)
    print(f"sector weight {weight}  dim {phases.dim}  "
          f"unitarity residual {phases.unitarity_residual:.2e}")
    print(f"mean gap ratio <r> = {stats.mean:.4f} "
          f"(Poisson 0.386, CUE 0.600)")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(gap_ratio_table(stats.ratios))
        print(f"wrote gap-ratio histogram to {args.out}")
    return 0


def _cmd_estimate(args) -> int:
    samples = ingest_counts(args.counts)
    patch = _resolve_patch(args, samples.n)
    est = collision_estimate(restrict(samples, patch), args.k, batches=args.batches)
    entropy = collision_entropy(est.value, args.k) if est.value > 0 else float("inf")
    print(f"patch {patch.label}  n_S {est.n_samples}  batches {est.n_batches}")
    print(f"M_{args.k} = {est.value!r}  +- {est.stderr!r}")
    print(f"S_{args.k} = {entropy!r} bits")
    return 0


def _cmd_mitigate(args) -> int:
    samples = ingest_counts(args.counts)
    patch = _resolve_patch(args, samples.n)
    m = args.m if args.m is not None else samples.n // 2
    if args.p is not None:
        from .mitigation import FlipModel

        model = FlipModel(p=args.p, n=samples.n, m=m)
    else:
        model = fit_pflip(samples.weight_histogram(), samples.n, m)
        print(f"fitted p = {model.p:.6f}  residual {model.residual:.3e}")
    raw = collision_estimate(restrict(samples, patch), 2, batches=args.batches)
    if args.mode == "parseval-hamming":
        est = mitigate_parseval_pipeline(samples, patch, model, batches=args.batches)
        mitigated, err = est.value, est.stderr
    else:
        mitigated = mitigate_collision_rank1(raw.value, model.p, patch.n_qubits)
        err = raw.stderr * model.alpha ** (-patch.n_qubits)
    print(f"raw IPR = {raw.value!r} +- {raw.stderr!r}")
    print(f"mitigated IPR = {mitigated!r} +- {err!r}")
    print(f"mitigated S_2 = {collision_entropy(max(mitigated, 1e-300), 2)!r} bits")
    if args.weights_out:
        with open(args.weights_out, "w") as fh:
            fh.write(weight_histogram_table(samples.weight_histogram(), model))
        print(f"wrote weight histogram to {args.weights_out}")
    return 0


def _cmd_benchmark(args) -> int:
    refs = HaarRefs.for_sector(args.n_a, args.n_b, args.weight)
    print(f"n_A={refs.n_a} n_B={refs.n_b} k={refs.k}")
    print(f"page_purity        = {refs.page_purity!r}")
    print(f"haar_marginal_ipr  = {refs.haar_marginal_ipr!r}")
    print(f"u1_haar_purity     = {refs.u1_purity!r}")
    print(f"u1_haar_ipr        = {refs.u1_marginal_ipr!r}")
    print(f"mixed_sector_ipr   = {refs.mixed_sector_ipr!r}")
    if args.table:
        rows = [(args.n_a, args.n_b, k) for k in range(args.n_a + args.n_b + 1)]
        with open(args.table, "w") as fh:
            fh.write(reference_table(rows))
        print(f"wrote reference table to {args.table}")
    return 0


def _cmd_sweep(args) -> int:
    if args.config:
        with open(args.config) as fh:
            try:
                config = ExperimentConfig.from_dict(json.load(fh))
            except (json.JSONDecodeError, TypeError) as exc:
                raise DataFormatError(f"{args.config}: {exc}") from exc
    else:
        if args.lx is None or args.ly is None:
            raise ParameterError("sweep needs --config or --lx/--ly")
        config = ExperimentConfig(
            lx=args.lx, ly=args.ly, j_start_over_pi=args.j_start_over_pi,
            j_stop_over_pi=args.j_stop_over_pi, j_count=args.j_count,
            n_cycles=args.cycles, seed=args.seed,
            patches=tuple(args.patches.split(";")), realizations=args.realizations,
            mode=args.mode, n_samples=args.n_samples, batches=args.batches,
            base=args.base, mitigation=args.mitigation, noise_p=args.noise_p,
            epsilon=args.epsilon, outdir=args.outdir)
    record = run_sweep(config)
    for key, value in sorted(record.jstar.items()):
        shown = "none" if value is None else f"{value / math.pi:.4f} pi"
        print(f"J*[{key}] = {shown}")
    if config.outdir:
        written = emit_plot_data(record, config.outdir)
        print(f"record + {len(written)} plot-data files in {config.outdir}")
    else:
        sys.stdout.write(record.to_json())
    return 0


def _cmd_ingest(args) -> int:
    samples = ingest_counts(args.counts)
    print(f"n = {samples.n}  n_S = {samples.n_samples}  "
          f"distinct = {len(samples.packed_counts()[0])}  "
          f"qubit_order = {samples.qubit_order}")
    if args.out:
        write_counts(samples, args.out)
        print(f"wrote canonical counts to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floqsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="evolve the Neel state and emit samples")
    _add_circuit_args(p)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--sample-seed", type=int, default=0)
    p.add_argument("--counts-out")
    p.add_argument("--state-out")
    p.add_argument("--circuit-out")
    p.add_argument("--pt-out", help="write the Porter-Thomas histogram")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("spectrum", help="exact eigenphases and gap ratios of U_F")
    _add_circuit_args(p)
    p.add_argument("--weight", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("estimate", help="collision moment of a patch from counts")
    p.add_argument("--counts", required=True)
    p.add_argument("--patch")
    p.add_argument("--qubits")
    p.add_argument("--lx", type=int)
    p.add_argument("--ly", type=int)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--batches", type=int, default=16)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("mitigate", help="bit-flip-model mitigation of a patch IPR")
    p.add_argument("--counts", required=True)
    p.add_argument("--patch")
    p.add_argument("--qubits")
    p.add_argument("--lx", type=int)
    p.add_argument("--ly", type=int)
    p.add_argument("--mode", choices=("hamming", "parseval-hamming"),
                   default="hamming")
    p.add_argument("--m", type=int, default=None, help="initial Hamming weight")
    p.add_argument("--p", type=float, default=None, help="skip the fit, use this p")
    p.add_argument("--batches", type=int, default=16)
    p.add_argument("--weights-out")
    p.set_defaults(func=_cmd_mitigate)

    p = sub.add_parser("benchmark", help="random-matrix reference values")
    p.add_argument("--n-a", type=int, required=True)
    p.add_argument("--n-b", type=int, required=True)
    p.add_argument("--weight", type=int, required=True)
    p.add_argument("--table", help="also write the full reference table")
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("sweep", help="full build/evolve/estimate/mitigate sweep")
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--lx", type=int)
    p.add_argument("--ly", type=int)
    p.add_argument("--j-start-over-pi", type=float, default=0.005)
    p.add_argument("--j-stop-over-pi", type=float, default=0.25)
    p.add_argument("--j-count", type=int, default=26)
    p.add_argument("--cycles", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--patches", default="1x1;1x2;2x2",
                   help="semicolon-separated specs, e.g. 2x2@all:16")
    p.add_argument("--realizations", type=int, default=1)
    p.add_argument("--mode", choices=("exact", "sample"), default="exact")
    p.add_argument("--n-samples", type=int, default=10_000)
    p.add_argument("--batches", type=int, default=16)
    p.add_argument("--base", type=float, default=2.0)
    p.add_argument("--mitigation",
                   choices=("none", "hamming", "lec", "parseval-hamming"),
                   default="none")
    p.add_argument("--noise-p", type=float, default=0.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--outdir")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("ingest", help="validate and canonicalize a counts file")
    p.add_argument("--counts", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_ingest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except (DataFormatError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
