"""Command line: ``salience-audit analyze`` and ``salience-audit simulate``."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import InputError, SalienceAuditError, StatsError
from .ingestion import default_lexicon, default_surveys, load_benchmark, load_lexicon, load_results, load_surveys
from .leaning import DEFAULT_T1, DEFAULT_T2, issue_categories
from .model import BenchmarkKind, Scheme, load_config
from .pipeline import analyze, extract_mentions
from .report import STYLES, render_report, write_report
from .simharness import load_specs, run_audit

EXIT_OK, EXIT_INPUT, EXIT_STATS = 0, 2, 3


def _benchmark_arg(text: str):
    kind, _, path = text.partition("=")
    try:
        kind = BenchmarkKind.parse(kind)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None
    if kind is not BenchmarkKind.UNIFORM and not path:
        raise argparse.ArgumentTypeError(f"{kind.value} benchmark needs a file: {kind.value}=PATH")
    return kind, path or None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="salience-audit",
                                     description="Political-salience audits of search and LLM outputs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="test a capture file against benchmarks")
    a.add_argument("capture", help="JSON-lines capture file")
    a.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.EU5.value)
    a.add_argument("--lexicon", help="entity lexicon CSV (default: bundled lexicon for the scheme)")
    a.add_argument("--benchmark", action="append", type=_benchmark_arg, metavar="KIND[=PATH]",
                   help="benchmark to test against, repeatable (default: uniform)")
    a.add_argument("--surveys", action="append", metavar="PATH",
                   help="issue survey CSV for usissue5, repeatable (default: bundled surveys)")
    a.add_argument("--issue-t1", type=float, default=DEFAULT_T1)
    a.add_argument("--issue-t2", type=float, default=DEFAULT_T2)
    a.add_argument("--alpha", type=float, default=0.05)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--perms", type=int, default=9999, help="sign-flip permutations")
    a.add_argument("--bootstrap", type=int, default=1000, help="bootstrap resamples")
    a.add_argument("--context", help="Holm family name (default: <scheme>-<SE|LLM>)")
    a.add_argument("--top-k", type=int, help="keep only SERP results ranked <= K")
    a.add_argument("--style", choices=STYLES, default="plain")
    a.add_argument("--out", default="report", help="output directory")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="run a simulated audit and write a capture")
    s.add_argument("config", help="audit configuration (JSON)")
    s.add_argument("spec", help="engine specs (JSON)")
    s.add_argument("out", help="capture file to write")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_simulate)
    return parser


def cmd_analyze(args) -> int:
    scheme = Scheme(args.scheme)
    records = load_results(args.capture)
    benchmarks = [load_benchmark(path, kind, scheme)
                  for kind, path in (args.benchmark or [(BenchmarkKind.UNIFORM, None)])]
    lexicon = topic_cats = None
    if scheme is Scheme.US_ISSUE5:
        surveys = load_surveys(args.surveys) if args.surveys else default_surveys()
        topic_cats = issue_categories(surveys, (args.issue_t1, args.issue_t2))
    else:
        lexicon = load_lexicon(args.lexicon, scheme) if args.lexicon else default_lexicon(scheme)
    mentions = extract_mentions(records, scheme, lexicon=lexicon, issue_categories=topic_cats)
    result = analyze(records, mentions, scheme, benchmarks, alpha=args.alpha, seed=args.seed,
                     n_perms=args.perms, n_boot=args.bootstrap, context=args.context, top_k=args.top_k)
    paths = write_report(result, args.out, args.style)
    sys.stdout.write(render_report(result, args.style))
    sys.stderr.write("wrote " + ", ".join(str(p) for p in paths.values()) + "\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    specs = load_specs(args.spec)
    path = run_audit(config, specs, args.out, workers=args.workers)
    with open(path, encoding="utf-8") as fh:
        n = sum(1 for _ in fh)
    sys.stderr.write(f"wrote {n} records to {path}\n")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except StatsError as e:
        print(f"statistics error: {e}", file=sys.stderr)
        return EXIT_STATS
    except SalienceAuditError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
