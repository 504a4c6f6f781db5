"""Command-line front end.

Subcommands:

* ``gop score``          - GOP reports (JSON lines) for a set of utterances
* ``gop align``          - forced alignments as TSV
* ``gop evaluate``       - metrics from reports + labels
* ``gop bench``          - pass/cell accounting and regime comparison
* ``gop map validate``   - confusion-map sanity check
* ``gop inject-errors``  - simulate mispronunciations in canonical sequences

Exit codes: 0 success, 1 invalid input or configuration, 2 unexpected
runtime failure. Machine-readable diagnostics go to stderr as lines
prefixed with "ERROR" and a tab.

File formats are described in the ``formats`` module docstring; posterior
files use the ``posterior`` module's binary or JSON representation, and the
vocabulary sidecar is the inventory JSON document.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import formats
from .ctc import InfeasibleSequenceError, batched_perturbation_forward, ctc_viterbi_align
from .gop import (
    METHOD_FA,
    METHOD_PA_AF,
    METHOD_PP_AF,
    REGIME_RPS,
    REGIME_UPS,
    GopError,
    generate_perturbations,
    gop_fa,
    gop_pa_af,
    gop_pp_af,
    inject_artificial_errors,
)
from .inventory import (
    CanonicalSequence,
    ConfusionMapError,
    InventoryError,
    PhonemeInventory,
    default_error_rules,
    load_confusion_map,
    substitution_pass_count,
)
from .metrics import EvalError, LabeledScore, evaluate_scores
from .posterior import DegenerateFrameError, PosteriorFormatError, load_posteriors

_INPUT_ERRORS = (
    InventoryError,
    ConfusionMapError,
    PosteriorFormatError,
    DegenerateFrameError,
    InfeasibleSequenceError,
    GopError,
    EvalError,
    formats.FormatError,
    FileNotFoundError,
    IsADirectoryError,
    NotADirectoryError,
    json.JSONDecodeError,
    KeyError,
    ValueError,
)


class CliError(Exception):
    """Invalid configuration detected after argument parsing."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage problems; config problems are exit 1 here
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"ERROR\t{message}\n")
        raise SystemExit(1)


def _fail(message: str, code: int) -> int:
    sys.stderr.write(f"ERROR\t{message}\n")
    return code


def _discover_posterior_files(paths):
    files = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            # the vocabulary sidecar lives next to the .gopp files; it is
            # not a posterior matrix
            files.extend(sorted(
                q for q in path.iterdir()
                if q.suffix in (".gopp", ".json") and q.name != "vocab.json"
            ))
        elif path.exists():
            files.append(path)
        else:
            raise CliError(f"posterior path not found: {path}")
    if not files:
        raise CliError("no posterior files found")
    return files


def _load_matrices(paths, vocab, renormalize):
    matrices = {}
    for path in _discover_posterior_files(paths):
        matrix = load_posteriors(path, vocab=vocab, renormalize=renormalize)
        if matrix.utterance_id in matrices:
            raise CliError(f"duplicate posterior utterance id {matrix.utterance_id!r}")
        matrices[matrix.utterance_id] = matrix
    return matrices


def _require_map(args, inventory):
    if args.map is None:
        return None
    return load_confusion_map(args.map, inventory)


def _score_one(task):
    """Worker: score one utterance. Takes and returns picklable values."""
    (path, ids, utt, method, regime, inventory, cmap, renormalize, alignments) = task
    matrix = load_posteriors(path, vocab=inventory, renormalize=renormalize)
    seq = CanonicalSequence(ids, utt)
    if method == METHOD_FA:
        if alignments is not None:
            segments = alignments
        else:
            segments = ctc_viterbi_align(matrix, seq, inventory=inventory).segments
        report = gop_fa(matrix, segments, inventory, utterance_id=utt)
    elif method == METHOD_PA_AF:
        report = gop_pa_af(matrix, seq, inventory, cmap=cmap, regime=regime)
    else:
        report = gop_pp_af(matrix, seq, inventory, cmap=cmap, regime=regime)
    return utt, report


def cmd_score(args) -> int:
    started = time.perf_counter()
    inventory = PhonemeInventory.load(args.vocab)
    cmap = _require_map(args, inventory)
    if args.regime == REGIME_RPS and cmap is None and args.method != METHOD_FA:
        raise CliError("--regime rps requires --map")
    sequences = formats.read_canonical_sequences(args.canon, inventory)
    files = {}
    for path in _discover_posterior_files(args.posteriors):
        stem = path.stem
        files.setdefault(stem, path)
    alignments = None
    if args.alignments is not None:
        alignments = formats.read_alignments(args.alignments, inventory)

    tasks = []
    for utt, seq in sequences.items():
        if utt not in files:
            raise CliError(f"no posterior file for utterance {utt!r}")
        per_utt_alignment = None
        if alignments is not None:
            if utt not in alignments:
                raise CliError(f"no alignment rows for utterance {utt!r}")
            per_utt_alignment = alignments[utt]
        tasks.append(
            (
                files[utt],
                seq.phoneme_ids,
                utt,
                args.method,
                args.regime,
                inventory,
                cmap,
                args.renormalize,
                per_utt_alignment,
            )
        )

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = dict(pool.map(_score_one, tasks))
    else:
        results = dict(_score_one(t) for t in tasks)

    reports = [results[utt] for utt in sorted(results)]
    if not args.timings:
        reports = [r.with_wall_ms(0.0) for r in reports]
    formats.write_reports(args.out, reports, inventory)

    total_passes = sum(r.forward_passes for r in reports)
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    print(
        f"scored {len(reports)} utterances  method={args.method} regime={args.regime}  "
        f"forward_passes={total_passes}  wall={elapsed_ms:.1f}ms"
    )
    return 0


def cmd_align(args) -> int:
    inventory = PhonemeInventory.load(args.vocab)
    sequences = formats.read_canonical_sequences(args.canon, inventory)
    matrices = _load_matrices(args.posteriors, inventory, args.renormalize)
    alignments = {}
    for utt, seq in sequences.items():
        if utt not in matrices:
            raise CliError(f"no posterior file for utterance {utt!r}")
        try:
            alignments[utt] = ctc_viterbi_align(matrices[utt], seq, inventory=inventory).segments
        except InfeasibleSequenceError as exc:
            raise CliError(f"utterance {utt!r}: {exc}") from exc
    formats.write_alignments(args.out, alignments, inventory)
    total = sum(len(v) for v in alignments.values())
    print(f"aligned {len(alignments)} utterances, {total} segments")
    return 0


def cmd_evaluate(args) -> int:
    inventory = PhonemeInventory.load(args.vocab)
    reports = formats.read_reports(args.reports, inventory)
    label_rows = formats.read_labels(args.labels)

    by_key = {}
    for row in label_rows:
        key = (row["utterance_id"], row["pos"])
        if key in by_key:
            raise CliError(f"duplicate label row for {key}")
        by_key[key] = row

    joined = []
    unmatched_scores = 0
    for report in reports:
        for s in report.scores:
            row = by_key.pop((report.utterance_id, s.pos), None)
            if row is None:
                unmatched_scores += 1
                continue
            joined.append(
                LabeledScore(
                    utterance_id=report.utterance_id,
                    pos=s.pos,
                    gop=s.score,
                    label=row["label"],
                    human_score=row["human_score"],
                )
            )
    unmatched_labels = len(by_key)
    if not joined:
        raise CliError(
            f"no (utterance, position) pairs joined: {unmatched_scores} scores and "
            f"{unmatched_labels} labels unmatched"
        )

    summary = evaluate_scores(joined, confidence=args.confidence,
                              clamp_predictions=not args.no_clamp)
    doc = summary.to_document()
    doc["joined"] = len(joined)
    doc["unmatched_scores"] = unmatched_scores
    doc["unmatched_labels"] = unmatched_labels
    payload = json.dumps(doc, ensure_ascii=False, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(payload)
    else:
        Path(args.out).write_text(payload, encoding="utf-8")
        print(f"evaluated {len(joined)} scored phonemes -> {args.out}")
    return 0


def _bench_regime(matrix, seq, inventory, cmap, regime):
    """One utterance under one regime: passes, cells cached vs naive, and the
    largest cached-naive discrepancy."""
    ids = seq.phoneme_ids
    specs = [
        s
        for pos in range(len(ids))
        for s in generate_perturbations(ids, pos, inventory, cmap, regime)
    ]
    pairs = [(s.pos, s.apply(ids)) for s in specs]
    cached = batched_perturbation_forward(matrix, ids, pairs, inventory=inventory, use_cache=True)
    naive = batched_perturbation_forward(matrix, ids, pairs, inventory=inventory, use_cache=False)
    diff = 0.0
    if len(specs):
        a = cached.log_likelihoods
        b = naive.log_likelihoods
        with np.errstate(invalid="ignore"):
            gap = np.abs(a - b)
        gap[a == b] = 0.0  # covers matching -inf sentinels, where a - b is nan
        diff = float(gap.max())
    if regime == REGIME_UPS:
        perturbations = substitution_pass_count(ids, vocab_size=inventory.size)
    else:
        perturbations = substitution_pass_count(ids, cmap=cmap)
    return {
        "perturbation_passes": perturbations,
        "forward_passes": perturbations + 1,
        "dp_cells_cached": int(cached.cells_per_perturbation.sum()) + cached.original_cells,
        "dp_cells_naive": int(naive.cells_per_perturbation.sum()) + naive.original_cells,
        "max_abs_diff": diff,
    }


def cmd_bench(args) -> int:
    inventory = PhonemeInventory.load(args.vocab)
    cmap = load_confusion_map(args.map, inventory) if args.map else None
    if cmap is None:
        raise CliError("bench compares regimes and requires --map")
    sequences = formats.read_canonical_sequences(args.canon, inventory)
    matrices = _load_matrices(args.posteriors, inventory, args.renormalize)

    missing = [utt for utt in sequences if utt not in matrices]
    if missing:
        raise CliError(f"no posterior file for utterance {missing[0]!r}")

    totals = {
        regime: {
            "perturbation_passes": 0,
            "forward_passes": 0,
            "dp_cells_cached": 0,
            "dp_cells_naive": 0,
            "max_abs_diff": 0.0,
        }
        for regime in (REGIME_UPS, REGIME_RPS)
    }
    timings = {REGIME_UPS: [], REGIME_RPS: []}
    for rep in range(args.repetitions):
        for regime in (REGIME_UPS, REGIME_RPS):
            t0 = time.perf_counter()
            for utt, seq in sequences.items():
                stats = _bench_regime(matrices[utt], seq, inventory, cmap, regime)
                if rep == 0:  # counts repeat identically; fold in only once
                    bucket = totals[regime]
                    for key in ("perturbation_passes", "forward_passes",
                                "dp_cells_cached", "dp_cells_naive"):
                        bucket[key] += stats[key]
                    bucket["max_abs_diff"] = max(bucket["max_abs_diff"], stats["max_abs_diff"])
            timings[regime].append((time.perf_counter() - t0) * 1000.0)

    # cost unit for the ratio: perturbed-sequence evaluations, originals excluded
    ups_passes = totals[REGIME_UPS]["perturbation_passes"]
    rps_passes = totals[REGIME_RPS]["perturbation_passes"]
    doc = {
        "utterances": len(sequences),
        "repetitions": args.repetitions,
        "ups": {**totals[REGIME_UPS], "wall_ms_median": statistics.median(timings[REGIME_UPS])},
        "rps": {**totals[REGIME_RPS], "wall_ms_median": statistics.median(timings[REGIME_RPS])},
        "reduction_ratio": (rps_passes / ups_passes) if ups_passes else 0.0,
    }
    payload = json.dumps(doc, ensure_ascii=False, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(payload)
    else:
        Path(args.out).write_text(payload, encoding="utf-8")
        print(f"benchmarked {len(sequences)} utterances -> {args.out}")
    return 0


def cmd_map_validate(args) -> int:
    inventory = PhonemeInventory.load(args.vocab)
    cmap = load_confusion_map(args.map, inventory)
    sizes = {
        inventory.symbol(pid): len(subs) for pid, subs in sorted(cmap.entries.items())
    }
    print(
        f"map ok: {len(cmap.entries)} phonemes with substitutes, "
        f"deletion {'on' if cmap.allow_deletion else 'off'}"
    )
    for sym, count in sizes.items():
        print(f"  {sym}\t{count}")
    return 0


def cmd_inject_errors(args) -> int:
    inventory = PhonemeInventory.load(args.vocab)
    if args.rules is not None:
        rules = load_confusion_map(args.rules, inventory)
    else:
        rules = default_error_rules(inventory)
    sequences = formats.read_canonical_sequences(args.canon, inventory)

    modified = []
    label_rows = []
    flipped = 0
    for offset, (utt, seq) in enumerate(sequences.items()):
        # one derived seed per utterance keeps draws independent of corpus order
        new_seq, labels = inject_artificial_errors(
            seq, rules, seed=args.seed + offset, rate=args.rate
        )
        modified.append(new_seq)
        flipped += sum(labels)
        for pos, label in enumerate(labels):
            label_rows.append(
                {
                    "utterance_id": utt,
                    "pos": pos,
                    "phoneme": inventory.symbol(seq.phoneme_ids[pos]),
                    "label": label,
                    "human_score": None,
                }
            )
    formats.write_canonical_sequences(args.out_canon, modified, inventory)
    formats.write_labels(args.out_labels, label_rows)
    total = len(label_rows)
    print(f"injected errors at {flipped}/{total} positions across {len(modified)} utterances")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gop", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p, with_canon=True):
        p.add_argument("--posteriors", nargs="+", required=True,
                       help="posterior files or directories (.gopp binary or .json)")
        p.add_argument("--vocab", required=True, help="inventory JSON sidecar")
        if with_canon:
            p.add_argument("--canon", required=True,
                           help="canonical sequences TSV: utterance_id<TAB>symbols")
        p.add_argument("--renormalize", action="store_true",
                       help="renormalize posterior rows instead of validating them")

    p_score = sub.add_parser("score", help="compute GOP reports")
    add_io(p_score)
    p_score.add_argument("--method", choices=[METHOD_FA, METHOD_PA_AF, METHOD_PP_AF],
                         default=METHOD_PP_AF)
    p_score.add_argument("--regime", choices=[REGIME_RPS, REGIME_UPS], default=REGIME_UPS)
    p_score.add_argument("--map", help="confusion map JSON (required for --regime rps)")
    p_score.add_argument("--alignments",
                         help="precomputed alignment TSV for --method fa")
    p_score.add_argument("--out", required=True, help="output reports path (JSON lines)")
    p_score.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_score.add_argument("--timings", action="store_true",
                         help="keep measured wall_ms values (reports are then not byte-stable)")
    p_score.set_defaults(func=cmd_score)

    p_align = sub.add_parser("align", help="forced alignment to TSV")
    add_io(p_align)
    p_align.add_argument("--out", required=True, help="output alignment TSV")
    p_align.set_defaults(func=cmd_align)

    p_eval = sub.add_parser("evaluate", help="metrics from reports and labels")
    p_eval.add_argument("--reports", required=True, help="score reports (JSON lines)")
    p_eval.add_argument("--labels", required=True, help="labels TSV")
    p_eval.add_argument("--vocab", required=True, help="inventory JSON sidecar")
    p_eval.add_argument("--out", help="output JSON (default stdout)")
    p_eval.add_argument("--confidence", type=float, default=0.95,
                        help="confidence level for the correlation interval")
    p_eval.add_argument("--no-clamp", action="store_true",
                        help="skip clamping regression predictions to [0, 2]")
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser("bench", help="pass and cell accounting per regime")
    add_io(p_bench)
    p_bench.add_argument("--map", required=True, help="confusion map JSON for the restricted regime")
    p_bench.add_argument("--repetitions", type=int, default=3)
    p_bench.add_argument("--out", help="output JSON (default stdout)")
    p_bench.set_defaults(func=cmd_bench)

    p_map = sub.add_parser("map", help="confusion-map utilities")
    map_sub = p_map.add_subparsers(dest="map_command", required=True)
    p_validate = map_sub.add_parser("validate", help="validate a confusion map")
    p_validate.add_argument("--map", required=True)
    p_validate.add_argument("--vocab", required=True)
    p_validate.set_defaults(func=cmd_map_validate)

    p_inject = sub.add_parser("inject-errors", help="simulate mispronunciations")
    p_inject.add_argument("--canon", required=True)
    p_inject.add_argument("--vocab", required=True)
    p_inject.add_argument("--rules", help="rewrite rules JSON (default: built-in table)")
    p_inject.add_argument("--seed", type=int, default=0)
    p_inject.add_argument("--rate", type=float, required=True,
                          help="per-position rewrite probability in [0, 1]")
    p_inject.add_argument("--out-canon", required=True)
    p_inject.add_argument("--out-labels", required=True)
    p_inject.set_defaults(func=cmd_inject_errors)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        return _fail(str(exc), 1)
    except _INPUT_ERRORS as exc:
        return _fail(str(exc), 1)
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failure
        return _fail(f"{type(exc).__name__}: {exc}", 2)


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
