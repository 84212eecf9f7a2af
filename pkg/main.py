#!/usr/bin/env python3
"""MCM shadows - minimal Clifford measurement shadow estimation from the command line."""
import argparse
import json
import math
import sys
import time
from datetime import datetime
from pathlib import Path

from src.biased import (
    StabilizerObservable,
    optimal_distribution,
    pauli_sum_distribution,
    run_biased,
    run_biased_stabilizer,
)
from src.circuit import synthesize
from src.config import CSV_DIR, DEFAULT_SEED, DEFAULT_SHOTS, JSON_DIR, MARKDOWN_DIR, OUTPUT_DIR, PDF_DIR
from src.harness import fit_slopes, load_config, run_experiment, write_csv, write_json
from src.models import EstimateRecord
from src.mub import build_ensemble, ensemble_dump
from src.oracles import SUITES, run_oracles
from src.pauli import PauliSumObservable, pauli_label_list
from src.report import batch_generate_pdf_from_json, write_markdown_summary
from src.shadow import run_protocol
from src.statesim import observable_builders, prepare_named, trial_rng


def _emit(text: str, out: str = None):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
        print(f"📄 Written: {out}")
    else:
        print(text)


def cmd_ensemble(args):
    ens = build_ensemble(args.n)
    if args.format == "json":
        _emit(ensemble_dump(ens).model_dump_json(indent=2), args.out)
        return
    lines = [f"# n={ens.n} poly={ens.poly.bits:#b} elements={len(ens)}"]
    for element in ens.elements:
        label = "Z" if element.label is None else f"v={element.label}"
        generators = " ".join(pauli_label_list(element.tableau.paulis()))
        lines.append(f"{element.index:>4} {label:<8} {generators}")
    _emit("\n".join(lines), args.out)


def cmd_synth(args):
    ens = build_ensemble(args.n)
    if not 0 <= args.v < (1 << args.n):
        raise ValueError(f"v must lie in 0..{(1 << args.n) - 1}")
    circuit = synthesize(ens, args.v + 1)
    if args.format == "json":
        _emit(json.dumps(circuit.to_dict(label=args.v), indent=2), args.out)
    else:
        _emit(circuit.to_text(label=args.v), args.out)


def _build_state(args, rng):
    params = {"theta": args.theta * math.pi} if args.state == "ghz_theta" else None
    return prepare_named(args.state, args.n, params, rng=rng)


def cmd_estimate(args):
    rng = trial_rng(args.seed, 0)
    state = _build_state(args, rng)
    ens = build_ensemble(args.n)
    observable_name = args.obs
    start = time.perf_counter()

    if args.obs_stab_file:
        observable_name = args.obs_stab_file
        stabilizer = StabilizerObservable.from_text(Path(args.obs_stab_file).read_text(), args.n)
        if args.protocol == "biased":
            series = run_biased_stabilizer(state, stabilizer, args.shots, rng, ens)
        else:
            observable = observable_builders("projector", args.n, {"state": stabilizer.state()})
            series = run_protocol(state, observable, args.shots, args.protocol, rng, ens, args.seed)
    elif args.obs_pauli_file:
        observable_name = args.obs_pauli_file
        pauli_sum = PauliSumObservable.from_text(Path(args.obs_pauli_file).read_text())
        if args.protocol == "biased":
            series = run_biased(state, pauli_sum, args.shots, pauli_sum_distribution(pauli_sum, ens), rng, ens)
        else:
            series = run_protocol(state, pauli_sum, args.shots, args.protocol, rng, ens, args.seed)
    else:
        params = {"theta": args.theta * math.pi} if args.obs == "product_xz" else None
        observable = observable_builders(args.obs, args.n, params)
        if args.protocol == "biased":
            series = run_biased(state, observable, args.shots, optimal_distribution(observable, ens), rng, ens)
        else:
            series = run_protocol(state, observable, args.shots, args.protocol, rng, ens, args.seed)

    record = EstimateRecord(
        protocol=args.protocol,
        n=args.n,
        shots=args.shots,
        seed=args.seed,
        mean=series.mean,
        variance=series.variance,
        elapsed_ms=(time.perf_counter() - start) * 1000.0,
        state=args.state,
        observable=observable_name,
    )
    _emit(record.model_dump_json(indent=2), args.out)


def cmd_experiment(args):
    cfg = load_config(args.config)

    rows = run_experiment(cfg, workers=args.workers)
    fits = fit_slopes(rows)
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    stem = f"{timestamp}_{cfg.experiment}"

    csv_file = write_csv(rows, args.out or cfg.output or Path(CSV_DIR) / f"{stem}.csv")
    json_file = write_json(rows, Path(JSON_DIR) / f"{stem}.json", fits)
    md_file = write_markdown_summary(rows, Path(MARKDOWN_DIR) / f"{stem}.md", fits)

    for fit in fits:
        params = f" [{fit.params}]" if fit.params else ""
        print(f"📈 {fit.protocol}{params}: slope {fit.slope:.3f} ± {fit.stderr:.3f}")
    print(f"\n📊 CSV: {csv_file}")
    print(f"📊 JSON: {json_file}")
    print(f"📄 Markdown: {md_file}")
    print(f"\n💡 PDF: python main.py report --results {json_file}")


def cmd_oracle(args):
    print("🔍 Oracle suites")
    print("=" * 60)
    report = run_oracles(max_n=args.max_n, suites=[args.suite], seed=args.seed)
    print("=" * 60)
    if report.passed:
        print(f"✅ All {len(report.results)} checks passed")
        return
    print(f"❌ {len(report.failures)} of {len(report.results)} checks failed")
    for failure in report.failures:
        print(f"  ✗ {failure.name} n={failure.n}: {failure.detail}")
    sys.exit(1)


def cmd_report(args):
    output_dir = Path(args.out).parent if args.out else Path(PDF_DIR)
    pdf_path = batch_generate_pdf_from_json(args.results, str(output_dir))
    if args.out and Path(pdf_path) != Path(args.out):
        Path(pdf_path).replace(args.out)
        pdf_path = args.out
    print(f"📄 PDF: {pdf_path}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Minimal Clifford measurement shadow estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ensemble", help="Dump the 2^n + 1 element ensemble")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--format", choices=["json", "text"], default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("synth", help="Synthesize the -S-CZ-H- circuit of element v")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("estimate", help="Run one shadow estimation")
    p.add_argument("--protocol", choices=["mcm", "clifford", "pauli", "biased"], default="mcm")
    p.add_argument("--state", choices=["ghz", "zero", "haar", "ghz_theta"], default="ghz")
    p.add_argument("--obs", choices=["ghz", "ghz_offdiag", "product_xz", "identity"], default="ghz")
    p.add_argument("--obs-pauli-file", help="Lines of 'coeff pauli-string'")
    p.add_argument("--obs-stab-file", help="Circuit V in text format; O = V^dag|0><0|V")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--theta", type=float, default=0.5, help="Angle in units of pi")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("experiment", help="Run a config-driven experiment grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="CSV path")
    p.add_argument("--workers", type=int, help="Worker processes (default MCM_WORKERS)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("oracle", help="Run the self-check suites")
    p.add_argument("--suite", choices=["all", *SUITES], default="all")
    p.add_argument("--max-n", type=int, default=4)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="PDF summary of a JSON results file")
    p.add_argument("--results", required=True)
    p.add_argument("--out", help="PDF path")
    p.set_defaults(func=cmd_report)
    return parser


def main():
    Path(OUTPUT_DIR).mkdir(exist_ok=True)
    args = build_parser().parse_args()

    try:
        args.func(args)
    except KeyboardInterrupt:
        print("\n⚠️ Interrupted")
    except Exception as e:
        print(f"\n❌ {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
