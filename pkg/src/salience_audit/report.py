"""Table rendering and report files."""

from __future__ import annotations

import csv
import io
import math
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Optional, Sequence

from .errors import MixedSchemes
from .model import OmnibusOutcome, Scheme, TestKind, TestOutcome

STYLES = ("plain", "markdown", "latex")
DASH = "---"


def round_half_away(x: float, places: int = 1) -> Decimal:
    # Decimal(repr(x)) rounds the printed value, not its binary expansion
    return Decimal(repr(float(x))).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def format_pp(diff: float) -> str:
    d = round_half_away(diff)
    if d == 0:
        return "+0.0pp"
    return f"{'+' if d > 0 else '-'}{abs(d)}pp"


def markers(p_adjusted: Optional[float], thresholds=(0.05, 0.01)) -> str:
    if p_adjusted is None:
        return ""
    loose, strict = thresholds
    if p_adjusted < strict:
        return "**"
    if p_adjusted < loose:
        return "*"
    return ""


def format_cell(outcome: TestOutcome, style: str = "plain") -> str:
    """``+27.8pp**`` style cell. Bold (Holm-rejected) only shows in markdown/latex."""
    if outcome.test_kind is TestKind.DESCRIPTIVE:
        return DASH
    text = format_pp(outcome.diff_pp)
    mark = markers(outcome.p_adjusted)
    if style == "plain":
        return text + mark
    if style == "markdown":
        mark = mark.replace("*", r"\*")
        return (f"**{text}**" if outcome.reject else text) + mark
    if style == "latex":
        body = rf"\textbf{{{text}}}" if outcome.reject else text
        return body + (rf"\textsuperscript{{{mark}}}" if mark else "")
    raise ValueError(f"unknown style {style!r}; choose from {STYLES}")


def _check_scheme(rows) -> Optional[Scheme]:
    schemes = {r.scheme for r in rows}
    if len(schemes) > 1:
        raise MixedSchemes(f"outcomes mix schemes {sorted(s.value for s in schemes)}")
    return next(iter(schemes), None)


def _render(header, body, style, title=None) -> str:
    if style == "latex":
        lines = [r"\begin{tabular}{l" + "r" * (len(header) - 1) + "}", r"\hline",
                 " & ".join(header) + r" \\", r"\hline"]
        lines += [" & ".join(row) + r" \\" for row in body]
        lines += [r"\hline", r"\end{tabular}"]
        if title:
            lines.insert(0, f"% {title}")
        return "\n".join(lines)
    if style == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
        lines += ["| " + " | ".join(row) + " |" for row in body]
        if title:
            lines.insert(0, f"**{title}**\n")
        return "\n".join(lines)
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    fmt = lambda row: "  ".join(c.ljust(w) if i == 0 else c.rjust(w)  # noqa: E731
                                for i, (c, w) in enumerate(zip(row, widths)))
    lines = [fmt(header), "  ".join("-" * w for w in widths)] + [fmt(r) for r in body]
    if title:
        lines.insert(0, title)
    return "\n".join(lines)


def format_table(outcomes: Sequence[TestOutcome], style: str = "plain") -> str:
    """One block per (level, benchmark): engines as rows, categories as columns."""
    if style not in STYLES:
        raise ValueError(f"unknown style {style!r}; choose from {STYLES}")
    scheme = _check_scheme(outcomes)
    if scheme is None:
        return ""
    blocks = {}
    for o in outcomes:
        block = blocks.setdefault((o.level, o.benchmark_kind.value), {})
        block.setdefault((o.engine, o.stratum), {})[o.category] = o
    out = []
    for (level, kind), rows in blocks.items():
        header = ["Engine", *scheme.categories]
        body = []
        for (engine, stratum), cells in rows.items():
            label = engine if stratum == "ALL" else f"{engine} ({stratum})"
            body.append([label or "-"] + [format_cell(cells[c], style) if c in cells else ""
                                          for c in scheme.categories])
        out.append(_render(header, body, style, f"Deviation vs {kind} ({level}-level)"))
    return "\n\n".join(out)


def format_omnibus(rows: Sequence[OmnibusOutcome], style: str = "plain") -> str:
    _check_scheme(rows)
    header = ["Engine", "Benchmark", "chi2", "df", "p", "p_adj"]
    body = []
    for r in rows:
        if r.chi2 is None:
            body.append([r.engine, r.benchmark_kind.value, DASH, str(r.df), DASH, DASH])
            continue
        chi2 = f"{r.chi2:.2f}"
        mark = markers(r.p_adjusted)
        if style == "markdown":
            chi2, mark = (f"**{chi2}**" if r.reject else chi2), mark.replace("*", r"\*")
        elif style == "latex":
            chi2 = rf"\textbf{{{chi2}}}" if r.reject else chi2
            mark = rf"\textsuperscript{{{mark}}}" if mark else ""
        body.append([r.engine, r.benchmark_kind.value, chi2 + mark, str(r.df),
                     f"{r.p_raw:.3g}", f"{r.p_adjusted:.3g}"])
    return _render(header, body, style, "Omnibus test over all categories")


def format_shares(summaries, scheme, style: str = "plain") -> str:
    scheme = Scheme(scheme)
    header = ["Engine", "Stratum", "Mentions", *scheme.categories]
    body = []
    for s in summaries:
        cells = []
        for c in scheme.categories:
            if not s.n_mentions:
                cells.append(DASH)
                continue
            lo, hi = s.ci[c]
            cells.append(f"{round_half_away(s.shares[c])} [{round_half_away(lo)}, {round_half_away(hi)}]")
        body.append([s.engine, s.stratum, str(s.n_mentions), *cells])
    return _render(header, body, style, "Share of mentions, % [95% bootstrap CI]")


def _num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x)) if isinstance(x, float) else str(x)


def outcomes_csv(outcomes: Sequence[TestOutcome]) -> str:
    """Unrounded machine-readable export."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["context", "engine", "level", "benchmark", "scheme", "stratum", "category", "diff_pp",
                "statistic", "test_kind", "n_units", "p_raw", "p_adjusted", "reject"])
    for o in outcomes:
        w.writerow([o.context, o.engine, o.level, o.benchmark_kind.value, o.scheme.value, o.stratum,
                    o.category, _num(o.diff_pp), _num(o.statistic), o.test_kind.value, o.n_units,
                    _num(o.p_raw), _num(o.p_adjusted), int(o.reject)])
    return buf.getvalue()


def omnibus_csv(rows: Sequence[OmnibusOutcome]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["context", "engine", "benchmark", "scheme", "chi2", "df", "p_raw", "p_adjusted", "reject"])
    for r in rows:
        w.writerow([r.context, r.engine, r.benchmark_kind.value, r.scheme.value, _num(r.chi2), r.df,
                    _num(r.p_raw), _num(r.p_adjusted), int(r.reject)])
    return buf.getvalue()


def plot_data_csv(summaries, scheme) -> str:
    """Category/value/CI triples for external plotting."""
    scheme = Scheme(scheme)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["engine", "stratum", "category", "value", "ci_lo", "ci_hi"])
    for s in summaries:
        if not s.n_mentions:
            continue
        for c in scheme.categories:
            lo, hi = s.ci[c]
            w.writerow([s.engine, s.stratum, c, _num(s.shares[c]), _num(lo), _num(hi)])
    return buf.getvalue()


def render_report(result, style: str = "plain") -> str:
    lines = [
        f"Scheme: {result.scheme.value}",
        f"Records: {result.n_records}",
        f"Political mentions: {result.n_mentions}",
        f"Mention rate: {result.mention_rate:.1f}% of records",
    ]
    if result.n_mentions == 0:
        lines.append("No political mentions found; no tests were run.")
        return "\n".join(lines) + "\n"
    s = result.settings
    lines.append(f"alpha={s.get('alpha')} seed={s.get('seed')} permutations={s.get('n_perms')} "
                 f"bootstrap={s.get('n_boot')}")
    lines.append("Markers: * adjusted p<0.05, ** adjusted p<0.01 (Holm, per context); --- no test")
    parts = ["\n".join(lines), format_shares(result.summaries, result.scheme, style)]
    table = format_table(result.outcomes, style)
    if table:
        parts.append(table)
    if result.omnibus:
        parts.append(format_omnibus(result.omnibus, style))
    return "\n\n".join(parts) + "\n"


def write_report(result, out_dir, style: str = "plain") -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = {"plain": "txt", "markdown": "md", "latex": "tex"}[style]
    files = {
        f"report.{ext}": render_report(result, style),
        "outcomes.csv": outcomes_csv(result.outcomes),
        "omnibus.csv": omnibus_csv(result.omnibus),
        "shares.csv": plot_data_csv(result.summaries, result.scheme),
    }
    paths = {}
    for name, text in files.items():
        p = out_dir / name
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        paths[name] = p
    return paths
