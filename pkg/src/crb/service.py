"""HTTP service hosting blinded rating studies.

Persistence is an append-only event log per study (one JSONL file in the
data directory); all state is an in-memory replay of that log, so a fresh
instance pointed at the same directory reconstructs identical results.

Raters never see arm identities: candidates are served under per-task
aliases whose order is a seeded permutation of (blinding_seed, case, rater).
"""

from __future__ import annotations

import hashlib
import json
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse

from crb import human_eval, stats
from crb.core import (
    Arm,
    CaseRecord,
    Language,
    Report,
    Role,
    StudyConfig,
    case_from_record,
    report_from_record,
)
from crb.human_eval import (
    Annotation,
    annotation_from_record,
    annotation_to_record,
)

ALIAS_NAMES = ["Report A", "Report B", "Report C", "Report D", "Report E", "Report F"]


@dataclass
class StudyState:
    config: StudyConfig
    config_record: dict
    cases: dict[str, CaseRecord] = field(default_factory=dict)
    case_order: list[str] = field(default_factory=list)
    reports: dict[tuple[str, Arm, Language], Report] = field(default_factory=dict)
    raters: dict[str, Role] = field(default_factory=dict)
    issued_tasks: set[str] = field(default_factory=set)
    submitted_tasks: set[str] = field(default_factory=set)
    rated_cases: dict[str, set[str]] = field(default_factory=dict)
    annotations: list[Annotation] = field(default_factory=list)
    seq: int = 0


class StudyStore:
    """Event log + replayed in-memory state; one writer lock per study."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.studies: dict[str, StudyState] = {}
        self.locks: dict[str, threading.Lock] = {}
        self._global_lock = threading.Lock()
        for path in sorted(self.data_dir.glob("*.jsonl")):
            study_id = path.stem
            self.locks[study_id] = threading.Lock()
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._apply(study_id, json.loads(line))

    def lock(self, study_id: str) -> threading.Lock:
        with self._global_lock:
            return self.locks.setdefault(study_id, threading.Lock())

    def _log_path(self, study_id: str) -> Path:
        return self.data_dir / f"{study_id}.jsonl"

    def append(self, study_id: str, kind: str, payload: dict) -> dict:
        state = self.studies.get(study_id)
        seq = (state.seq if state else 0) + 1
        event = {
            "seq": seq,
            "timestamp": time.time(),
            "kind": kind,
            "payload": payload,
        }
        with open(self._log_path(study_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")
        self._apply(study_id, event)
        return event

    def _apply(self, study_id: str, event: dict) -> None:
        kind = event["kind"]
        payload = event["payload"]
        if kind == "study_created":
            config = _config_from_record(payload)
            self.studies[study_id] = StudyState(config=config, config_record=payload)
        else:
            state = self.studies[study_id]
            if kind == "case_added":
                case = case_from_record(payload)
                if case.case_id not in state.cases:
                    state.case_order.append(case.case_id)
                state.cases[case.case_id] = case
            elif kind == "report_added":
                report = report_from_record(payload)
                state.reports[(report.case_id, report.arm, report.language)] = report
            elif kind == "rater_registered":
                state.raters[payload["rater_id"]] = Role(payload["role"])
            elif kind == "task_issued":
                state.issued_tasks.add(payload["task_id"])
            elif kind == "annotation_submitted":
                state.submitted_tasks.add(payload["task_id"])
                rater = payload["rater_id"]
                state.rated_cases.setdefault(rater, set()).add(payload["case_id"])
                for rec in payload["annotations"]:
                    state.annotations.append(annotation_from_record(rec))
        self.studies[study_id].seq = event["seq"]

    def events(self, study_id: str) -> list[dict]:
        path = self._log_path(study_id)
        if not path.exists():
            return []
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]


def _config_to_record(config: StudyConfig) -> dict:
    return {
        "study_id": config.study_id,
        "arms_in_scope": sorted(a.value for a in config.arms_in_scope),
        "rank_scale": config.rank_scale,
        "rater_roles": sorted(r.value for r in config.rater_roles),
        "blinding_seed": config.blinding_seed,
    }


def _config_from_record(d: dict) -> StudyConfig:
    return StudyConfig(
        study_id=d["study_id"],
        arms_in_scope=frozenset(Arm(a) for a in d["arms_in_scope"]),
        rank_scale=int(d["rank_scale"]),
        rater_roles=frozenset(Role(r) for r in d["rater_roles"]),
        blinding_seed=int(d["blinding_seed"]),
    )


def _blinding_permutation(state: StudyState, case_id: str, rater_id: str) -> list[Arm]:
    """Reproducible for audit, unpredictable to raters."""
    digest = hashlib.sha256(
        f"{state.config.blinding_seed}:{case_id}:{rater_id}".encode()
    ).digest()
    rng = random.Random(int.from_bytes(digest[:8], "little"))
    arms = sorted(state.config.arms_in_scope, key=lambda a: a.value)
    rng.shuffle(arms)
    return arms


def _task_id(study_id: str, rater_id: str, case_id: str) -> str:
    return f"{study_id}:{rater_id}:{case_id}"


def create_app(data_dir: str | Path) -> FastAPI:
    app = FastAPI(title="clinical report rating studies")
    store = StudyStore(data_dir)
    app.state.store = store

    def _get_state(study_id: str) -> StudyState:
        state = store.studies.get(study_id)
        if state is None:
            raise HTTPException(404, f"unknown study: {study_id}")
        return state

    @app.post("/studies")
    def create_study(body: dict):
        try:
            config = _config_from_record(body)
        except (KeyError, ValueError) as exc:
            raise HTTPException(422, str(exc))
        record = _config_to_record(config)
        with store.lock(config.study_id):
            existing = store.studies.get(config.study_id)
            if existing is not None:
                if existing.config_record != record:
                    raise HTTPException(409, f"study {config.study_id} exists with a different config")
                return {"study_id": config.study_id, "created": False}
            store.append(config.study_id, "study_created", record)
        return {"study_id": config.study_id, "created": True}

    @app.post("/studies/{study_id}/cases")
    def add_cases(study_id: str, body: list[dict]):
        state = _get_state(study_id)
        with store.lock(study_id):
            for rec in body:
                try:
                    case_from_record(rec)
                except (KeyError, ValueError) as exc:
                    raise HTTPException(422, str(exc))
                store.append(study_id, "case_added", rec)
        return {"count": len(state.cases)}

    @app.post("/studies/{study_id}/reports")
    def add_reports(study_id: str, body: list[dict]):
        state = _get_state(study_id)
        with store.lock(study_id):
            for rec in body:
                try:
                    report = report_from_record(rec)
                except (KeyError, ValueError) as exc:
                    raise HTTPException(422, str(exc))
                if report.case_id not in state.cases:
                    raise HTTPException(422, f"unknown case: {report.case_id}")
                store.append(study_id, "report_added", rec)
        return {"count": len(state.reports)}

    @app.post("/studies/{study_id}/raters")
    def register_rater(study_id: str, body: dict):
        state = _get_state(study_id)
        try:
            rater_id = body["rater_id"]
            role = Role(body["role"])
        except (KeyError, ValueError) as exc:
            raise HTTPException(422, str(exc))
        if role not in state.config.rater_roles:
            raise HTTPException(422, f"role {role.value} not in study scope")
        with store.lock(study_id):
            if state.raters.get(rater_id) != role:
                store.append(
                    study_id, "rater_registered", {"rater_id": rater_id, "role": role.value}
                )
        return {"rater_id": rater_id, "role": role.value}

    @app.get("/studies/{study_id}/tasks/next")
    def next_task(study_id: str, rater: str = Query(...), language: str | None = None):
        state = _get_state(study_id)
        if rater not in state.raters:
            raise HTTPException(404, f"unknown rater: {rater}")
        rated = state.rated_cases.get(rater, set())
        for case_id in state.case_order:
            if case_id in rated:
                continue
            arms = _blinding_permutation(state, case_id, rater)
            lang = _serving_language(state, case_id, language)
            if lang is None:
                continue
            presented = []
            complete = True
            for alias, arm in zip(ALIAS_NAMES, arms):
                report = state.reports.get((case_id, arm, lang))
                if report is None:
                    complete = False
                    break
                presented.append(
                    {
                        "alias": alias,
                        "findings": report.findings,
                        "impression": report.impression,
                    }
                )
            if not complete:
                continue
            task_id = _task_id(study_id, rater, case_id)
            with store.lock(study_id):
                if task_id not in state.issued_tasks:
                    store.append(study_id, "task_issued", {"task_id": task_id})
            return {
                "task_id": task_id,
                "rater_id": rater,
                "case_id": case_id,
                "scale": state.config.rank_scale,
                "language": lang.value,
                "presented": presented,
            }
        return JSONResponse({"task_id": None}, status_code=200)

    @app.post("/tasks/{task_id}/annotation")
    def submit_annotation(task_id: str, body: dict):
        study_id, rater_id, case_id = _split_task_id(task_id)
        state = _get_state(study_id)
        if rater_id not in state.raters:
            raise HTTPException(404, f"unknown rater: {rater_id}")
        if task_id not in state.issued_tasks:
            raise HTTPException(404, f"task not issued: {task_id}")
        with store.lock(study_id):
            if task_id in state.submitted_tasks:
                raise HTTPException(409, "annotation already recorded for this task")
            annotations = _validate_payload(state, case_id, rater_id, body)
            store.append(
                study_id,
                "annotation_submitted",
                {
                    "task_id": task_id,
                    "rater_id": rater_id,
                    "case_id": case_id,
                    "annotations": [annotation_to_record(a) for a in annotations],
                },
            )
        return {"recorded": len(annotations)}

    @app.get("/studies/{study_id}/results")
    def results(study_id: str):
        state = _get_state(study_id)
        if not state.annotations:
            raise HTTPException(422, "no annotations submitted yet")
        return JSONResponse(content=json.loads(compute_results(state)))

    @app.get("/studies/{study_id}/export")
    def export(study_id: str):
        _get_state(study_id)
        return {"events": store.events(study_id)}

    return app


def _serving_language(
    state: StudyState, case_id: str, requested: str | None
) -> Language | None:
    if requested is not None:
        return Language(requested)
    present = sorted(
        {lang.value for (cid, _, lang) in state.reports if cid == case_id}
    )
    return Language(present[0]) if present else None


def _split_task_id(task_id: str) -> tuple[str, str, str]:
    parts = task_id.split(":")
    if len(parts) != 3:
        raise HTTPException(404, f"malformed task id: {task_id}")
    return parts[0], parts[1], parts[2]


def _validate_payload(
    state: StudyState, case_id: str, rater_id: str, body: dict
) -> list[Annotation]:
    scale = state.config.rank_scale
    ranks = body.get("ranks") or {}
    quality = body.get("quality") or {}
    errors = body.get("errors") or {}
    aliases = ALIAS_NAMES[:scale]
    if sorted(ranks) != sorted(aliases):
        raise HTTPException(422, f"ranks must cover exactly aliases {aliases}")
    if sorted(ranks.values()) != list(range(1, scale + 1)):
        raise HTTPException(422, f"ranks must be a permutation of 1..{scale}")
    arms = _blinding_permutation(state, case_id, rater_id)
    role = state.raters[rater_id]
    annotations = []
    for alias, arm in zip(aliases, arms):
        q = quality.get(alias) or {}
        if set(q) != set(human_eval.QUALITY_DIMENSIONS):
            raise HTTPException(
                422, f"quality for {alias} must score exactly {list(human_eval.QUALITY_DIMENSIONS)}"
            )
        if any(not isinstance(v, int) or not 1 <= v <= 4 for v in q.values()):
            raise HTTPException(422, "quality scores must be integers in 1..4")
        items = []
        for e in errors.get(alias) or []:
            try:
                items.append(
                    human_eval.ErrorItem(
                        section=human_eval.Section(e["section"]),
                        kind=human_eval.ErrorKind(e["kind"]),
                        clinically_significant=bool(e["clinically_significant"]),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise HTTPException(422, f"bad error item: {exc}")
        annotations.append(
            Annotation(
                rater_id=rater_id,
                role=role,
                case_id=case_id,
                arm=arm,
                ranking=int(ranks[alias]),
                quality={k: int(v) for k, v in q.items()},
                errors=tuple(items),
            )
        )
    return annotations


def compute_results(state: StudyState) -> str:
    """Aggregates as a canonical JSON string (sorted keys, stable floats);
    a pure function of the study's annotation events."""
    annotations = state.annotations
    scale = state.config.rank_scale
    dist = human_eval.rank_distribution(annotations, scale)
    ranks_out = {
        arm.value: {
            "counts": list(dist.counts[arm]),
            "proportions": [round(p, 12) for p in dist.proportions(arm)],
        }
        for arm in sorted(dist.counts, key=lambda a: a.value)
    }
    qmeans = human_eval.quality_means(annotations)
    quality_out = {
        f"{arm.value}/{role.value}": {k: round(v, 12) for k, v in dims.items()}
        for (arm, role), dims in sorted(
            qmeans.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
        )
    }
    burdens_out = {}
    if state.cases:
        try:
            burdens = human_eval.error_burden(annotations, list(state.cases.values()))
        except human_eval.UnknownCase:
            burdens = {}
        for (arm, dept, section, kind), b in sorted(
            burdens.items(),
            key=lambda kv: (kv[0][0].value, kv[0][1].value, kv[0][2].value, kv[0][3].value),
        ):
            key = f"{arm.value}/{dept.value}/{section.value}/{kind.value}"
            burdens_out[key] = {
                "mean_count": round(b.mean_count, 12),
                "cs_proportion": round(b.cs_proportion, 12),
                "n": b.n,
            }
    rank_groups = {}
    for a in annotations:
        rank_groups.setdefault(a.arm, []).append(float(a.ranking))
    stats_out = {}
    if len(rank_groups) >= 2 and all(rank_groups.values()):
        kw = stats.kruskal_wallis(list(rank_groups.values()))
        stats_out["ranking_kruskal_wallis"] = {
            "statistic": round(kw.statistic, 12),
            "df": kw.df,
            "p_value": round(kw.p_value, 12),
        }
    payload = {
        "study_id": state.config.study_id,
        "n_annotations": len(annotations),
        "rank_distribution": ranks_out,
        "quality_means": quality_out,
        "error_burden": burdens_out,
        "stats": stats_out,
    }
    return json.dumps(payload, ensure_ascii=False, sort_keys=True)
