"""Graded relevance judgments, MAP@k and NDCG@k, TREC-style run IO, and
multi-system comparison reports.

Unjudged (query, doc) pairs count as grade 0. MAP binarizes at grade >= 1
by default; both the depth and the threshold are caller-controlled.
"""

import json
import math
from dataclasses import dataclass, field


class Qrels:
    """Graded judgments: (query_id, doc_id) -> grade in {0, 1, 2}."""

    def __init__(self) -> None:
        self._by_query: dict[str, dict[str, int]] = {}

    def add(self, query_id: str, doc_id: str, grade: int) -> None:
        if grade not in (0, 1, 2):
            raise ValueError(f"grade must be in {{0,1,2}}, got {grade}")
        docs = self._by_query.setdefault(query_id, {})
        if doc_id in docs:
            raise ValueError(f"duplicate qrels entry ({query_id}, {doc_id})")
        docs[doc_id] = grade

    def grade(self, query_id: str, doc_id: str) -> int:
        return self._by_query.get(query_id, {}).get(doc_id, 0)

    def has_query(self, query_id: str) -> bool:
        return query_id in self._by_query

    def judged(self, query_id: str) -> dict[str, int]:
        return dict(self._by_query.get(query_id, {}))

    def queries(self) -> list[str]:
        return list(self._by_query.keys())


class RankedRun:
    """Per-query ordered doc lists with scores."""

    def __init__(self, tag: str = "run") -> None:
        self.tag = tag
        self._queries: dict[str, list[tuple[str, float]]] = {}

    def add_query(self, query_id: str, ranked: list[tuple[str, float]]) -> None:
        if query_id in self._queries:
            raise ValueError(f"duplicate run query {query_id!r}")
        seen = set()
        prev = math.inf
        for doc_id, score in ranked:
            if doc_id in seen:
                raise ValueError(f"duplicate doc {doc_id!r} for query {query_id!r}")
            seen.add(doc_id)
            if score > prev:
                raise ValueError(f"scores not non-increasing for query {query_id!r}")
            prev = score
        self._queries[query_id] = list(ranked)

    def ranking(self, query_id: str) -> list[tuple[str, float]]:
        return list(self._queries[query_id])

    def queries(self) -> list[str]:
        return list(self._queries.keys())


def average_precision_at_k(ranked_doc_ids, query_grades: dict[str, int], k: int,
                           rel_threshold: int = 1) -> float:
    """AP@k with binary relevance grade >= rel_threshold and denominator
    min(R, k), R = judged-relevant count for the query. R = 0 gives 0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    relevant_total = sum(1 for g in query_grades.values() if g >= rel_threshold)
    if relevant_total == 0:
        return 0.0
    hits = 0
    precision_sum = 0.0
    for rank, doc_id in enumerate(ranked_doc_ids[:k], start=1):
        if query_grades.get(doc_id, 0) >= rel_threshold:
            hits += 1
            precision_sum += hits / rank
    return precision_sum / min(relevant_total, k)


def ndcg_at_k(ranked_doc_ids, query_grades: dict[str, int], k: int) -> float:
    """NDCG@k with gain 2^grade - 1 and discount 1/log2(1 + rank); the ideal
    ordering comes from the query's judged grades."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ideal = sorted(query_grades.values(), reverse=True)[:k]
    idcg = sum((2.0 ** g - 1.0) / math.log2(1.0 + r)
               for r, g in enumerate(ideal, start=1))
    if idcg == 0.0:
        return 0.0
    dcg = 0.0
    for rank, doc_id in enumerate(ranked_doc_ids[:k], start=1):
        g = query_grades.get(doc_id, 0)
        dcg += (2.0 ** g - 1.0) / math.log2(1.0 + rank)
    return dcg / idcg


@dataclass(frozen=True)
class QueryMetrics:
    ap: float
    ndcg: float
    flagged: bool  # no judged-relevant docs for this query


@dataclass
class SystemMetrics:
    map_at_k: float
    ndcg_at_k: float
    per_query: dict[str, QueryMetrics] = field(default_factory=dict)


@dataclass
class MetricReport:
    k: int
    systems: dict[str, SystemMetrics] = field(default_factory=dict)

    def merge(self, other: "MetricReport") -> "MetricReport":
        if other.k != self.k:
            raise ValueError("cannot merge reports at different depths")
        merged = MetricReport(k=self.k, systems=dict(self.systems))
        for name, metrics in other.systems.items():
            if name in merged.systems:
                raise ValueError(f"duplicate system {name!r}")
            merged.systems[name] = metrics
        return merged


def evaluate_run(run: RankedRun, qrels: Qrels, k: int = 10,
                 rel_threshold: int = 1, system: str | None = None) -> MetricReport:
    """MAP@k and NDCG@k averaged over the run's queries."""
    name = system if system is not None else run.tag
    per_query: dict[str, QueryMetrics] = {}
    for qid in sorted(run.queries()):
        if not qrels.has_query(qid):
            raise ValueError(f"run references unknown query id {qid!r}")
        grades = qrels.judged(qid)
        docs = [doc_id for doc_id, _ in run.ranking(qid)]
        flagged = not any(g >= rel_threshold for g in grades.values())
        per_query[qid] = QueryMetrics(
            ap=average_precision_at_k(docs, grades, k, rel_threshold),
            ndcg=ndcg_at_k(docs, grades, k),
            flagged=flagged,
        )
    if not per_query:
        raise ValueError("run has no queries")
    n = len(per_query)
    metrics = SystemMetrics(
        map_at_k=sum(q.ap for q in per_query.values()) / n,
        ndcg_at_k=sum(q.ndcg for q in per_query.values()) / n,
        per_query=per_query,
    )
    return MetricReport(k=k, systems={name: metrics})


def comparison_table(report: MetricReport) -> str:
    """Aligned text table: per-system MAP/NDCG plus the pairwise MAP delta
    matrix in percentage points (column system minus row system)."""
    names = list(report.systems.keys())
    width = max([len(n) for n in names] + [8])
    lines = [f"{'system':<{width}}  {'MAP@%d' % report.k:>8}  {'NDCG@%d' % report.k:>8}"]
    for name in names:
        m = report.systems[name]
        lines.append(f"{name:<{width}}  {m.map_at_k:8.4f}  {m.ndcg_at_k:8.4f}")
    if len(names) > 1:
        lines.append("")
        lines.append("pairwise MAP deltas (x100, column minus row)")
        header = " " * width + "  " + "  ".join(f"{n:>8}" for n in names)
        lines.append(header)
        for row in names:
            cells = []
            for col in names:
                ci = names.index(col)
                ri = names.index(row)
                if ci <= ri:
                    cells.append(f"{'N/A':>8}")
                else:
                    delta = (report.systems[col].map_at_k
                             - report.systems[row].map_at_k) * 100.0
                    cells.append(f"{delta:>+8.2f}")
            lines.append(f"{row:<{width}}  " + "  ".join(cells))
    return "\n".join(lines) + "\n"


def report_records(report: MetricReport) -> list[dict]:
    """Machine-readable JSON records: one summary per system, then one per
    (system, query)."""
    records = []
    for name, m in report.systems.items():
        records.append({"type": "system", "system": name, "k": report.k,
                        "map": m.map_at_k, "ndcg": m.ndcg_at_k})
    for name, m in report.systems.items():
        for qid, q in m.per_query.items():
            records.append({"type": "query", "system": name, "query": qid,
                            "ap": q.ap, "ndcg": q.ndcg, "flagged": q.flagged})
    return records


def write_report(report: MetricReport, text_path, jsonl_path) -> None:
    with open(text_path, "w", encoding="utf-8") as f:
        f.write(comparison_table(report))
    with open(jsonl_path, "w", encoding="utf-8") as f:
        for record in report_records(report):
            f.write(json.dumps(record, sort_keys=True) + "\n")


def read_qrels(path) -> Qrels:
    """TREC qrels: `<qid> 0 <docid> <grade>` per line."""
    qrels = Qrels()
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"line {line_no}: expected '<qid> 0 <docid> <grade>'")
            try:
                grade = int(parts[3])
            except ValueError as exc:
                raise ValueError(f"line {line_no}: bad grade {parts[3]!r}") from exc
            try:
                qrels.add(parts[0], parts[2], grade)
            except ValueError as exc:
                raise ValueError(f"line {line_no}: {exc}") from exc
    return qrels


def write_qrels(qrels: Qrels, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for qid in sorted(qrels.queries()):
            judged = qrels.judged(qid)
            for doc_id in sorted(judged):
                f.write(f"{qid} 0 {doc_id} {judged[doc_id]}\n")


def write_run(run: RankedRun, path) -> None:
    """TREC run format: `<qid> Q0 <docid> <rank> <score> <tag>`."""
    with open(path, "w", encoding="utf-8") as f:
        for qid in sorted(run.queries()):
            for rank, (doc_id, score) in enumerate(run.ranking(qid), start=1):
                f.write(f"{qid} Q0 {doc_id} {rank} {score!r} {run.tag}\n")


def read_run(path) -> RankedRun:
    rankings: dict[str, list[tuple[str, float]]] = {}
    tag = "run"
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 6 or parts[1] != "Q0":
                raise ValueError(
                    f"line {line_no}: expected '<qid> Q0 <docid> <rank> <score> <tag>'")
            qid, _, doc_id, rank_s, score_s, tag = parts
            try:
                rank = int(rank_s)
                score = float(score_s)
            except ValueError as exc:
                raise ValueError(f"line {line_no}: bad rank or score") from exc
            entries = rankings.setdefault(qid, [])
            if rank != len(entries) + 1:
                raise ValueError(f"line {line_no}: rank {rank} out of sequence")
            entries.append((doc_id, score))
    run = RankedRun(tag=tag)
    for qid in rankings:
        run.add_query(qid, rankings[qid])
    return run
