"""Command-line entry point binding evaluation, statistics, synthesis,
table emission, and the rating service.

Exit codes: 0 success, 2 input error (unreadable or malformed inputs),
3 consistency error (inputs readable but mutually inconsistent).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from crb import kernels, metrics, scoring, stats, synth, tables
from crb.core import (
    Language,
    read_records,
    report_from_record,
    report_to_record,
    case_from_record,
    case_to_record,
)
from crb.embeddings import HashingProvider
from crb.errors import CrbError, EmptyCorpus
from crb.human_eval import (
    ErrorKind,
    Section,
    annotation_from_record,
    annotation_to_record,
    quality_means,
    rank_distribution,
)
from crb.lexicon import load_lexicon
from crb.parsing import extract_entities, tokenize


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _emit(out: str | None, text: str):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _emit_records(out: str | None, records: list[dict]):
    lines = "".join(
        json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records
    )
    _emit(out, lines)


def _load_report_list(path: str):
    try:
        return [report_from_record(d) for d in read_records(path)]
    except (OSError, ValueError, KeyError) as exc:
        _fail(2, f"{path}: {exc}")


def _load_reports(path: str, language: Language | None = None) -> dict[str, object]:
    """One report per case, optionally restricted to a language."""
    by_case = {}
    for r in _load_report_list(path):
        if language is not None and r.language is not language:
            continue
        if r.case_id in by_case:
            _fail(3, f"{path}: duplicate report for case {r.case_id}")
        by_case[r.case_id] = r
    return by_case


def _load_annotations(path: str):
    try:
        return [annotation_from_record(d) for d in read_records(path)]
    except (OSError, ValueError, KeyError) as exc:
        _fail(2, f"{path}: {exc}")


def _load_cases(path: str):
    try:
        return [case_from_record(d) for d in read_records(path)]
    except (OSError, ValueError, KeyError) as exc:
        _fail(2, f"{path}: {exc}")


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Global RNG seed.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file (default stdout).")
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["jsonl", "tsv", "markdown"]),
    default=None,
    help="Output format where applicable.",
)
@click.pass_context
def main(ctx, seed, out, fmt):
    """Bilingual CBCT report evaluation workbench."""
    ctx.obj = {"seed": seed, "out": out, "fmt": fmt}


# ---------------------------------------------------------------------------
# eval


@main.group("eval")
def eval_group():
    """Report evaluation commands."""


@eval_group.command("nlg")
@click.option("--hyp", required=True, type=click.Path(exists=False))
@click.option("--ref", required=True, type=click.Path(exists=False))
@click.option("--language", type=click.Choice(["zh", "en"]), required=True)
@click.option("--label", default="corpus", show_default=True)
@click.option("--smoothing", is_flag=True, default=False)
@click.option("--bert/--no-bert", default=True, show_default=True)
@click.pass_context
def eval_nlg(ctx, hyp, ref, language, label, smoothing, bert):
    """Surface metrics (n-gram, LCS, alignment, embedding) plus entity recall."""
    lang = Language(language)
    hyps = _load_reports(hyp, lang)
    refs = _load_reports(ref, lang)
    if set(hyps) != set(refs):
        only_h = sorted(set(hyps) - set(refs))
        only_r = sorted(set(refs) - set(hyps))
        _fail(3, f"case-id mismatch: hyp-only={only_h[:5]} ref-only={only_r[:5]}")
    lexicon = load_lexicon()
    provider = HashingProvider(seed=ctx.obj["seed"]) if bert else None
    case_ids = sorted(hyps)
    pairs = []
    entity_pairs = []
    for cid in case_ids:
        h, r = hyps[cid], refs[cid]
        pairs.append(
            (
                tokenize(f"{h.findings} {h.impression}", lang),
                tokenize(f"{r.findings} {r.impression}", lang),
            )
        )
        entity_pairs.append(
            (
                extract_entities(h.impression, lang, lexicon),
                extract_entities(r.impression, lang, lexicon),
            )
        )
    try:
        per_case, corpus = metrics.evaluate_pairs(pairs, provider=provider, smoothing=smoothing)
    except CrbError as exc:
        _fail(2, str(exc))
    records = []
    for cid, rep in zip(case_ids, per_case):
        records.append(_metric_record(rep, case_id=cid))
    corpus_rec = _metric_record(corpus, label=label)
    corpus_rec["recall"] = scoring.corpus_recall(entity_pairs)
    records.append(corpus_rec)
    _emit_records(ctx.obj["out"], records)


def _metric_record(rep: metrics.MetricReport, case_id: str | None = None, label: str | None = None) -> dict:
    rec = {
        "scope": rep.scope,
        "bleu_1": rep.bleu[0],
        "bleu_2": rep.bleu[1],
        "bleu_3": rep.bleu[2],
        "bleu_4": rep.bleu[3],
        "rouge_l": rep.rouge_l,
        "meteor": rep.meteor,
        "bertscore_f1": rep.bertscore_f1,
        "n_cases": rep.n_cases,
    }
    if case_id is not None:
        rec["case_id"] = case_id
    if label is not None:
        rec["label"] = label
    return rec


@eval_group.command("entities")
@click.option("--hyp", required=True, type=click.Path())
@click.option("--ref", required=True, type=click.Path())
@click.option("--language", type=click.Choice(["zh", "en"]), required=True)
@click.option("--mode", type=click.Choice(["jaccard", "precision"]), default="jaccard", show_default=True)
@click.pass_context
def eval_entities(ctx, hyp, ref, language, mode):
    """Entity-level accuracy/recall and per-entity detection fractions."""
    lang = Language(language)
    hyps = _load_reports(hyp, lang)
    refs = _load_reports(ref, lang)
    if set(hyps) != set(refs):
        _fail(3, "case-id mismatch between hypothesis and reference files")
    lexicon = load_lexicon()
    records = []
    entity_cases = []
    for cid in sorted(hyps):
        pred = extract_entities(hyps[cid].impression, lang, lexicon)
        gold = extract_entities(refs[cid].impression, lang, lexicon)
        entity_cases.append((pred, gold))
        s = scoring.score_case(pred, gold, mode=mode)
        records.append(
            {
                "scope": "per_case",
                "case_id": cid,
                "tp": s.tp,
                "fp": s.fp,
                "fn": s.fn,
                "accuracy": s.accuracy,
                "recall": s.recall,
            }
        )
    if not entity_cases:
        _fail(2, "no cases in input")
    records.append({"scope": "corpus", "recall": scoring.corpus_recall(entity_cases)})
    for entity in lexicon.ids():
        det = scoring.per_entity_detection(entity_cases, entity)
        if det is not None:
            records.append({"scope": "detection", "entity": entity, "language": lang.value, "detection": det})
    _emit_records(ctx.obj["out"], records)


@eval_group.command("human")
@click.option("--annotations", "annotations_path", required=True, type=click.Path())
@click.option("--cases", "cases_path", type=click.Path(), default=None)
@click.option("--scale", type=click.Choice(["4", "6"]), default="4", show_default=True)
@click.pass_context
def eval_human(ctx, annotations_path, cases_path, scale):
    """Aggregate rank distributions, quality means, and error burdens."""
    annotations = _load_annotations(annotations_path)
    if not annotations:
        _fail(2, "no annotations in input")
    try:
        dist = rank_distribution(annotations, int(scale))
    except CrbError as exc:
        _fail(3, str(exc))
    records = []
    for arm in sorted(dist.counts, key=lambda a: a.value):
        records.append(
            {
                "scope": "rank_distribution",
                "arm": arm.value,
                "counts": list(dist.counts[arm]),
                "proportions": list(dist.proportions(arm)),
            }
        )
    for (arm, role), dims in sorted(
        quality_means(annotations).items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
    ):
        records.append({"scope": "quality_means", "arm": arm.value, "role": role.value, **dims})
    if cases_path:
        cases = _load_cases(cases_path)
        from crb.human_eval import error_burden

        try:
            burdens = error_burden(annotations, cases)
        except CrbError as exc:
            _fail(3, str(exc))
        for key in sorted(burdens, key=lambda k: tuple(part.value for part in k)):
            b = burdens[key]
            records.append(
                {
                    "scope": "error_burden",
                    "arm": b.arm.value,
                    "subspecialty": b.subspecialty.value,
                    "section": b.section.value,
                    "kind": b.kind.value,
                    "mean_count": b.mean_count,
                    "cs_proportion": b.cs_proportion,
                    "n": b.n,
                }
            )
    _emit_records(ctx.obj["out"], records)


# ---------------------------------------------------------------------------
# stats


@main.command("stats")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--group-field", default="group", show_default=True)
@click.option("--outcome", required=True, help="Record field holding the outcome value.")
@click.option("--test", type=click.Choice(["kw", "mwu"]), default="kw", show_default=True)
@click.option("--reference", default=None, help="Reference group for pairwise markers (default: first seen).")
@click.pass_context
def cmd_stats(ctx, input_path, group_field, outcome, test, reference):
    """Group comparison with Holm-adjusted pairwise markers vs a reference."""
    try:
        rows = list(read_records(input_path))
    except (OSError, ValueError) as exc:
        _fail(2, str(exc))
    groups: dict[str, list[float]] = {}
    for i, row in enumerate(rows, start=1):
        if outcome not in row:
            _fail(2, f"record {i}: unknown outcome field {outcome!r}")
        if group_field not in row:
            _fail(2, f"record {i}: missing group field {group_field!r}")
        groups.setdefault(str(row[group_field]), []).append(float(row[outcome]))
    if len(groups) < 2:
        _fail(3, f"need at least two groups, got {len(groups)}")
    names = list(groups)
    if reference is None:
        reference = names[0]
    if reference not in groups:
        _fail(3, f"reference group {reference!r} not present")

    comparisons = [(g, stats.mann_whitney_u(groups[reference], groups[g])) for g in names if g != reference]
    adjusted = stats.holm_adjust([r.p_value for _, r in comparisons])
    letters = "abcdef"
    markers = {
        g: letters[i % len(letters)]
        for i, ((g, _), p_adj) in enumerate(zip(comparisons, adjusted))
        if p_adj < 0.05
    }

    lines = ["kind\tgroup\tn\tmean\tmarker"]
    for g in names:
        vals = groups[g]
        mean = sum(vals) / len(vals)
        lines.append(f"group\t{g}\t{len(vals)}\t{mean:.6g}\t{markers.get(g, '')}")
    if test == "kw":
        overall = stats.kruskal_wallis([groups[g] for g in names])
        lines.append(
            f"test\tkruskal_wallis\tH={overall.statistic:.6g}\tdf={overall.df}\tp={overall.p_value:.6g}"
        )
    else:
        if len(names) != 2:
            _fail(3, "mwu overall test requires exactly two groups")
        overall = stats.mann_whitney_u(groups[names[0]], groups[names[1]])
        lines.append(
            f"test\tmann_whitney_u\tU={overall.statistic:.6g}\tdf=\tp={overall.p_value:.6g}"
        )
    for (g, res), p_adj in zip(comparisons, adjusted):
        lines.append(
            f"pairwise\t{reference} vs {g}\tU={res.statistic:.6g}\tp={res.p_value:.6g}\tp_adj={p_adj:.6g}"
        )
    _emit(ctx.obj["out"], "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# synthesis


@main.command("synth")
@click.option("--n", "n_cases", type=int, required=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
def cmd_synth(ctx, n_cases, out_dir):
    """Generate a deterministic synthetic cohort (cases, bilingual reports,
    ground-truth entity sets)."""
    lexicon = load_lexicon()
    try:
        spec = synth.CohortSpec(n_cases=n_cases, seed=ctx.obj["seed"])
    except ValueError as exc:
        _fail(2, str(exc))
    cases, reports, entities = synth.synth_cohort(spec, lexicon)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_jsonl(out / "cases.jsonl", [case_to_record(c) for c in cases])
    _write_jsonl(out / "reports.jsonl", [report_to_record(r) for r in reports])
    _write_jsonl(
        out / "entities.jsonl",
        [{"case_id": cid, "entities": ents} for cid, ents in entities.items()],
    )
    click.echo(f"wrote {len(cases)} cases to {out}")


def _write_jsonl(path: Path, records: list[dict]):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


@main.command("degrade")
@click.option("--reports", "reports_path", required=True, type=click.Path())
@click.option("--entities", "entities_path", required=True, type=click.Path())
@click.option("--omission-rate", type=float, default=0.0, show_default=True)
@click.option("--incorrection-rate", type=float, default=0.0, show_default=True)
@click.option("--cs-probability", type=float, default=0.0, show_default=True)
@click.option("--out-reports", required=True, type=click.Path(dir_okay=False))
@click.option("--out-manifest", required=True, type=click.Path(dir_okay=False))
@click.pass_context
def cmd_degrade(ctx, reports_path, entities_path, omission_rate, incorrection_rate, cs_probability, out_reports, out_manifest):
    """Inject omission/incorrection faults into reports, with an exact manifest."""
    try:
        profile = synth.FaultProfile(
            omission_rate=omission_rate,
            incorrection_rate=incorrection_rate,
            cs_probability=cs_probability,
        )
    except ValueError as exc:
        _fail(2, str(exc))
    reports = _load_report_list(reports_path)
    try:
        entities = {d["case_id"]: list(d["entities"]) for d in read_records(entities_path)}
    except (OSError, ValueError, KeyError) as exc:
        _fail(2, f"{entities_path}: {exc}")
    lexicon = load_lexicon()
    degraded_records = []
    manifest_records = []
    for report in sorted(reports, key=lambda r: r.report_id):
        ents = entities.get(report.case_id)
        if ents is None:
            _fail(3, f"no entity record for case {report.case_id}")
        deg, manifest = synth.degrade(report, ents, profile, ctx.obj["seed"], lexicon)
        degraded_records.append(report_to_record(deg))
        manifest_records.append(
            {
                "report_id": report.report_id,
                "case_id": report.case_id,
                "arm": report.arm.value,
                "items": manifest,
            }
        )
    _write_jsonl(Path(out_reports), degraded_records)
    _write_jsonl(Path(out_manifest), manifest_records)
    click.echo(f"degraded {len(degraded_records)} reports")


# ---------------------------------------------------------------------------
# tables


@main.command("table")
@click.argument("table_id", type=click.Choice(list(tables.TABLE_IDS)))
@click.option("--metrics", "metrics_path", type=click.Path(), default=None)
@click.option("--annotations", "annotations_path", type=click.Path(), default=None)
@click.option("--cases", "cases_path", type=click.Path(), default=None)
@click.option("--detection", "detection_path", type=click.Path(), default=None)
@click.pass_context
def cmd_table(ctx, table_id, metrics_path, annotations_path, cases_path, detection_path):
    """Emit one publication-shaped table as TSV or markdown."""
    fmt = ctx.obj["fmt"] or "tsv"
    if fmt == "jsonl":
        _fail(2, "table output supports tsv or markdown")
    kwargs = {}
    if table_id == "S2":
        if not metrics_path:
            _fail(2, "table S2 requires --metrics")
        try:
            rows = [r for r in read_records(metrics_path) if r.get("scope") == "corpus"]
        except (OSError, ValueError) as exc:
            _fail(2, str(exc))
        kwargs["metric_rows"] = rows
    elif table_id == "S3_detect":
        if not detection_path:
            _fail(2, "table S3_detect requires --detection")
        detection: dict[str, dict[str, float | None]] = {}
        try:
            for r in read_records(detection_path):
                if r.get("scope", "detection") != "detection":
                    continue
                detection.setdefault(r["entity"], {})[r["language"]] = r["detection"]
        except (OSError, ValueError, KeyError) as exc:
            _fail(2, str(exc))
        kwargs["detection"] = detection
    else:
        if not annotations_path:
            _fail(2, f"table {table_id} requires --annotations")
        kwargs["annotations"] = _load_annotations(annotations_path)
        if table_id in ("S4", "S5", "S7", "S8"):
            if not cases_path:
                _fail(2, f"table {table_id} requires --cases")
            kwargs["cases"] = _load_cases(cases_path)
    try:
        table = tables.build_table(table_id, **kwargs)
    except EmptyCorpus as exc:
        _fail(2, str(exc))
    except CrbError as exc:
        _fail(3, str(exc))
    _emit(ctx.obj["out"], tables.render(table, fmt))


# ---------------------------------------------------------------------------
# kernels


@main.group("kernels")
def kernels_group():
    """Numerical kernel utilities."""


@kernels_group.command("selftest")
@click.pass_context
def kernels_selftest(ctx):
    """Run quick numerical identity checks on the kernels."""
    rng = np.random.default_rng(ctx.obj["seed"])
    failures = []

    cfg = kernels.RopeConfig(head_dim=64)
    v = rng.standard_normal(64)
    if not np.allclose(kernels.rope_rotate(v, 0, cfg), v, atol=0):
        failures.append("rotation at position 0 is not the identity")
    rotated = kernels.rope_rotate(v, 17, cfg)
    if abs(np.linalg.norm(rotated) - np.linalg.norm(v)) > 1e-12:
        failures.append("rotation does not preserve the norm")
    q = rng.standard_normal(64)
    k = rng.standard_normal(64)
    lhs = kernels.rope_rotate(q, 11, cfg) @ kernels.rope_rotate(k, 4, cfg)
    rhs = kernels.rope_rotate(q, 7, cfg) @ kernels.rope_rotate(k, 0, cfg)
    if abs(lhs - rhs) > 1e-9:
        failures.append("inner products do not depend on relative position only")
    if kernels.sample_slices(192, 96) != list(range(0, 192, 2)):
        failures.append("subsampling 192 to 96 is not the even indices")
    mix = kernels.mix_prompts(list(range(10)), (1, 4), seed=ctx.obj["seed"])
    if sum(1 for _, variant in mix if variant == kernels.WITH_DIAGNOSIS) != 2:
        failures.append("1:4 mixing of 10 samples did not assign 2 conditioned prompts")

    params = kernels.ProjectorParams(
        w1=rng.standard_normal((8, 6)) * 0.3,
        b1=rng.standard_normal(8) * 0.1,
        w2=rng.standard_normal((5, 8)) * 0.3,
        b2=rng.standard_normal(5) * 0.1,
    )
    x = rng.standard_normal((3, 6))
    g = rng.standard_normal((3, 5))
    grads = kernels.projector_backward(x, params, g)
    eps = 1e-6
    num = np.zeros_like(x)
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            xp, xm = x.copy(), x.copy()
            xp[i, j] += eps
            xm[i, j] -= eps
            num[i, j] = (
                float((g * kernels.projector_forward(xp, params)).sum())
                - float((g * kernels.projector_forward(xm, params)).sum())
            ) / (2 * eps)
    rel = np.abs(grads["x"] - num) / np.maximum(np.abs(num), 1e-8)
    if rel.max() > 1e-4:
        failures.append("projector input gradient disagrees with finite differences")

    if failures:
        for f in failures:
            click.echo(f"FAIL: {f}", err=True)
        sys.exit(3)
    click.echo("ok: rotation identity at position 0")
    click.echo("ok: rotation preserves norms")
    click.echo("ok: inner products depend on relative position only")
    click.echo("ok: slice subsampling and prompt mixing counts")
    click.echo("ok: projector gradients match finite differences")


# ---------------------------------------------------------------------------
# service


@main.command("serve")
@click.option("--addr", envvar="CRB_ADDR", default="127.0.0.1:8321", show_default=True)
@click.option("--data-dir", envvar="CRB_DATA_DIR", default="./crb-data", show_default=True, type=click.Path(file_okay=False))
def cmd_serve(addr, data_dir):
    """Run the rating-study HTTP service."""
    import uvicorn

    from crb.service import create_app

    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        _fail(2, f"addr must be host:port, got {addr!r}")
    app = create_app(data_dir)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")


if __name__ == "__main__":
    main()
