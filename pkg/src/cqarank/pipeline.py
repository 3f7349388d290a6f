"""End-to-end experiment pipeline: ingest -> translation/topic models ->
features -> ranker -> runs -> report.

Every artifact gets a sidecar manifest (input hashes, parameters, output
hash); re-running a stage whose manifest still matches is a no-op, and a
failing stage removes its partial outputs.
"""

import hashlib
import json
import random
import zlib
from dataclasses import dataclass
from pathlib import Path

from .corpus import (Corpus, QueryRecord, ingest_corpus, load_corpus,
                     load_queries, save_corpus)
from .evaluation import (MetricReport, Qrels, RankedRun, evaluate_run,
                         read_qrels, read_run, write_report, write_run)
from .index import InvertedIndex, build_index, retrieve_candidates, vsm_score
from .ltr import LambdaMARTModel, RankingInstance, TrainConfig, read_letor, train, write_letor
from .quality import quality_feature
from .relevance import (MixtureWeights, features_f1_f4, score_lm, score_t2lm,
                        score_t2lm_plus, score_tlm, term_weights)
from .topics import TopicModel, infer_query_topics, train_lda
from .translation import TranslationTable, make_parallel_pairs, train_ibm1

ALL_SYSTEMS = ("vsm", "bm25", "lm", "tlm", "t2lm", "t2lm+", "t2lm+5")


class PipelineError(RuntimeError):
    pass


@dataclass
class PipelineConfig:
    qa_path: str
    queries_path: str
    qrels_path: str | None = None
    users_path: str | None = None
    outdir: str = "out"
    ranker_path: str | None = None  # apply an existing model instead of training

    mode: str = "whitespace"
    stopwords_path: str | None = None
    field: str = "question_and_answer"
    k1: float = 1.2
    b: float = 0.75
    top_k: int = 500

    em_iters: int = 10
    direction: str = "pooled_both"
    prune: float = 0.0

    topics: int = 50
    alpha: float | None = None
    beta: float = 0.01
    gibbs_iters: int = 500
    burn_in: int = 50
    samples: int = 20

    mu1: float = 0.3
    mu2: float = 0.3
    mu3: float = 0.2
    mu4: float = 0.2
    rescale_weights: bool = False
    combine_quality: bool = False

    trees: int = 50
    leaves: int = 4
    learning_rate: float = 0.2
    min_leaf: int = 30
    ndcg_cutoff: int = 10

    depth: int = 10
    rel_threshold: int = 1

    seed: int = 0
    split_seed: int = 0
    pad_candidates: bool = False
    pad_to: int = 20
    systems: tuple[str, ...] = ALL_SYSTEMS

    def mixture(self) -> MixtureWeights:
        return MixtureWeights(self.mu1, self.mu2, self.mu3, self.mu4)

    def ltr_config(self) -> TrainConfig:
        return TrainConfig(trees=self.trees, leaves=self.leaves,
                           learning_rate=self.learning_rate,
                           min_leaf_instances=self.min_leaf,
                           ndcg_truncation=self.ndcg_cutoff)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _manifest_path(artifact: Path) -> Path:
    return artifact.with_name(artifact.name + ".manifest.json")


class StageRunner:
    """Runs pipeline stages with manifest-based idempotence."""

    def __init__(self) -> None:
        self.executed: list[str] = []
        self.skipped: list[str] = []

    def run(self, name: str, inputs: list[Path], outputs: list[Path],
            params: dict, fn) -> None:
        inputs = [Path(p) for p in inputs]
        outputs = [Path(p) for p in outputs]
        for path in inputs:
            if not path.exists():
                raise PipelineError(f"stage {name} failed: missing input {path}")
        body = {
            "stage": name,
            "inputs": {str(p): _sha256(p) for p in inputs},
            "params": params,
        }
        if self._up_to_date(outputs, body):
            self.skipped.append(name)
            return
        try:
            fn()
            for out in outputs:
                if not out.exists():
                    raise RuntimeError(f"stage did not produce {out}")
        except Exception as exc:
            for out in outputs:
                out.unlink(missing_ok=True)
                _manifest_path(out).unlink(missing_ok=True)
            raise PipelineError(f"stage {name} failed: {exc}") from exc
        for out in outputs:
            manifest = dict(body)
            manifest["output"] = {str(out): _sha256(out)}
            with open(_manifest_path(out), "w", encoding="utf-8") as f:
                json.dump(manifest, f, sort_keys=True, indent=1)
                f.write("\n")
        self.executed.append(name)

    @staticmethod
    def _up_to_date(outputs: list[Path], body: dict) -> bool:
        for out in outputs:
            mpath = _manifest_path(out)
            if not out.exists() or not mpath.exists():
                return False
            try:
                with open(mpath, encoding="utf-8") as f:
                    manifest = json.load(f)
            except (OSError, json.JSONDecodeError):
                return False
            recorded_output = manifest.pop("output", None)
            if manifest != body:
                return False
            if recorded_output != {str(out): _sha256(out)}:
                return False
        return True


def query_scoring_seed(base_seed: int, query_id: str) -> int:
    """Stable per-query seed for fold-in inference, independent of process
    hash randomization."""
    return (base_seed * 1000003 + zlib.crc32(query_id.encode("utf-8"))) % (2 ** 31)


@dataclass
class ScoringAssets:
    """Everything needed to score queries against the archive."""

    corpus: Corpus
    index: InvertedIndex
    table: TranslationTable
    model: TopicModel
    cfg: PipelineConfig
    ranker: LambdaMARTModel | None = None


@dataclass
class PreparedQuery:
    record: QueryRecord
    candidates: list
    theta: object
    weights: dict[int, float]


def prepare_query(assets: ScoringAssets, query: QueryRecord) -> PreparedQuery:
    cfg = assets.cfg
    candidates = retrieve_candidates(query.tokens, assets.index, cfg.top_k,
                                     cfg.k1, cfg.b)
    if cfg.pad_candidates and len(candidates) < cfg.pad_to:
        candidates = _pad(candidates, assets.corpus, cfg, query.id)
    theta = infer_query_topics(assets.model, query.tokens, cfg.burn_in,
                               cfg.samples,
                               seed=query_scoring_seed(cfg.seed, query.id))
    weights = term_weights(assets.model, theta, query.tokens, cfg.rescale_weights)
    return PreparedQuery(record=query, candidates=candidates, theta=theta,
                         weights=weights)


def _pad(candidates, corpus: Corpus, cfg: PipelineConfig, query_id: str):
    """Top candidate lists shorter than pad_to get random extra pairs, the
    protocol's labeling-workload padding."""
    from .index import ScoredCandidate

    have = {c.qa_id for c in candidates}
    pool = sorted(p.id for p in corpus.pairs if p.id not in have)
    need = min(cfg.pad_to - len(candidates), len(pool))
    if need <= 0:
        return candidates
    rng = random.Random(query_scoring_seed(cfg.seed + 1, query_id))
    extras = rng.sample(pool, need)
    padded = list(candidates)
    for i, qa_id in enumerate(extras):
        padded.append(ScoredCandidate(qa_id=qa_id, score=0.0,
                                      rank=len(candidates) + i + 1))
    return padded


def feature_rows(assets: ScoringAssets, prepared: PreparedQuery,
                 qrels: Qrels | None) -> list[RankingInstance]:
    """F1..F4 plus the quality columns for every candidate; labels from
    qrels (unjudged pairs default to 0)."""
    cfg = assets.cfg
    corpus = assets.corpus
    rows = []
    for cand in prepared.candidates:
        qa = corpus.pair(cand.qa_id)
        rel = features_f1_f4(prepared.record.tokens, qa, assets.table,
                             assets.model, prepared.theta, prepared.weights,
                             corpus.stats)
        qcols = quality_feature(qa, corpus).as_columns(cfg.combine_quality)
        label = qrels.grade(prepared.record.id, qa.id) if qrels is not None else 0
        rows.append(RankingInstance(query_id=prepared.record.id, doc_id=qa.id,
                                    features=rel.as_tuple() + qcols, label=label))
    return rows


def system_ranking(system: str, assets: ScoringAssets,
                   prepared: PreparedQuery) -> list[tuple[str, float]]:
    """Rank the prepared query's candidates under one scoring system."""
    cfg = assets.cfg
    corpus = assets.corpus
    query_tokens = prepared.record.tokens
    mu = cfg.mixture()
    scored: list[tuple[float, str]] = []
    if system == "t2lm+5":
        if assets.ranker is None:
            raise ValueError("fused system needs a trained ranker")
        for row in feature_rows(assets, prepared, None):
            scored.append((assets.ranker.predict(row.features), row.doc_id))
    else:
        for cand in prepared.candidates:
            qa = corpus.pair(cand.qa_id)
            if system == "vsm":
                s = vsm_score(query_tokens, qa.id, assets.index)
            elif system == "bm25":
                s = cand.score
            elif system == "lm":
                s = score_lm(query_tokens, qa.question_tokens, corpus.stats)
            elif system == "tlm":
                s = score_tlm(query_tokens, qa.question_tokens, assets.table,
                              corpus.stats)
            elif system == "t2lm":
                s = score_t2lm(query_tokens, qa, mu, assets.table, assets.model,
                               corpus.stats)
            elif system == "t2lm+":
                s = score_t2lm_plus(query_tokens, qa, mu, assets.table,
                                    assets.model, prepared.theta,
                                    prepared.weights, corpus.stats)
            else:
                raise ValueError(f"unknown system {system!r}")
            scored.append((s, qa.id))
    scored.sort(key=lambda item: (-item[0], item[1]))
    return [(qa_id, score) for score, qa_id in scored]


def split_queries(queries: list[QueryRecord], split_seed: int):
    """Seeded 1:1 shuffle split; odd counts put the extra query in train."""
    shuffled = list(queries)
    random.Random(split_seed).shuffle(shuffled)
    cut = (len(shuffled) + 1) // 2
    return shuffled[:cut], shuffled[cut:]


def _scoring_params(cfg: PipelineConfig) -> dict:
    return {
        "field": cfg.field, "k1": cfg.k1, "b": cfg.b, "top_k": cfg.top_k,
        "burn_in": cfg.burn_in, "samples": cfg.samples, "seed": cfg.seed,
        "rescale_weights": cfg.rescale_weights,
        "combine_quality": cfg.combine_quality,
        "pad_candidates": cfg.pad_candidates, "pad_to": cfg.pad_to,
    }


def run_pipeline(cfg: PipelineConfig) -> Path:
    """Execute every stage; returns the report path. Raises PipelineError
    naming the failing stage."""
    for label, path in (("qa", cfg.qa_path), ("queries", cfg.queries_path)):
        if path is None or not Path(path).exists():
            raise PipelineError(f"stage validate failed: missing {label} input {path}")
    if cfg.users_path is not None and not Path(cfg.users_path).exists():
        raise PipelineError(f"stage validate failed: missing users input {cfg.users_path}")
    if cfg.qrels_path is None:
        raise PipelineError("stage validate failed: no preference signal source "
                            "(qrels required to train or evaluate)")
    if not Path(cfg.qrels_path).exists():
        raise PipelineError(f"stage validate failed: missing qrels input {cfg.qrels_path}")
    cfg.mixture()  # validates the mu sum early

    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    runner = StageRunner()

    corpus_path = outdir / "corpus.json"
    ingest_inputs = [Path(cfg.qa_path)]
    if cfg.users_path is not None:
        ingest_inputs.append(Path(cfg.users_path))
    if cfg.stopwords_path is not None:
        ingest_inputs.append(Path(cfg.stopwords_path))

    def _ingest() -> None:
        stopwords = None
        if cfg.stopwords_path is not None:
            with open(cfg.stopwords_path, encoding="utf-8") as f:
                stopwords = frozenset(line.strip() for line in f if line.strip())
        save_corpus(ingest_corpus(cfg.qa_path, cfg.users_path, cfg.mode,
                                  stopwords), corpus_path)

    runner.run(
        "ingest", ingest_inputs, [corpus_path],
        {"mode": cfg.mode, "stopwords": cfg.stopwords_path},
        _ingest,
    )
    corpus = load_corpus(corpus_path)

    table_path = outdir / "translation.tsv"

    def _train_tm() -> None:
        pairs = make_parallel_pairs(corpus, cfg.direction)
        train_ibm1(pairs, cfg.em_iters, prune=cfg.prune).save(table_path)

    runner.run(
        "train-tm", [corpus_path], [table_path],
        {"em_iters": cfg.em_iters, "direction": cfg.direction, "prune": cfg.prune},
        _train_tm,
    )
    table = TranslationTable.load(table_path)

    lda_path = outdir / "topics.txt"

    def _train_lda() -> None:
        docs = [p.question_tokens + p.answer_tokens for p in corpus.pairs]
        model = train_lda(docs, cfg.topics, cfg.alpha, cfg.beta,
                          cfg.gibbs_iters, cfg.seed,
                          vocab_size=len(corpus.vocabulary))
        model.save(lda_path)

    runner.run(
        "train-lda", [corpus_path], [lda_path],
        {"topics": cfg.topics, "alpha": cfg.alpha, "beta": cfg.beta,
         "gibbs_iters": cfg.gibbs_iters, "seed": cfg.seed},
        _train_lda,
    )
    model = TopicModel.load(lda_path)

    queries = load_queries(cfg.queries_path, corpus.vocabulary, cfg.mode)
    if not queries:
        raise PipelineError("stage features failed: no queries")
    qrels = read_qrels(cfg.qrels_path)
    index = build_index(corpus, cfg.field)
    assets = ScoringAssets(corpus=corpus, index=index, table=table,
                           model=model, cfg=cfg)

    train_split, test_split = split_queries(queries, cfg.split_seed)
    split_path = outdir / "split.json"
    train_letor = outdir / "train.letor"
    test_letor = outdir / "test.letor"

    def _features() -> None:
        with open(split_path, "w", encoding="utf-8") as f:
            json.dump({"train": [q.id for q in train_split],
                       "test": [q.id for q in test_split]},
                      f, sort_keys=True)
            f.write("\n")
        for subset, path in ((train_split, train_letor), (test_split, test_letor)):
            rows: list[RankingInstance] = []
            for query in subset:
                rows.extend(feature_rows(assets, prepare_query(assets, query), qrels))
            write_letor(rows, path)

    runner.run(
        "features",
        [corpus_path, table_path, lda_path, Path(cfg.queries_path),
         Path(cfg.qrels_path)],
        [split_path, train_letor, test_letor],
        {**_scoring_params(cfg), "split_seed": cfg.split_seed, "mode": cfg.mode},
        _features,
    )

    if cfg.ranker_path is not None:
        ranker_path = Path(cfg.ranker_path)
        if not ranker_path.exists():
            raise PipelineError(f"stage train-ranker failed: missing model {ranker_path}")
    else:
        ranker_path = outdir / "ranker.txt"
        ltr_cfg = cfg.ltr_config()

        def _train_ranker() -> None:
            dataset = read_letor(train_letor)
            train(dataset, ltr_cfg, seed=cfg.seed).save(ranker_path)

        runner.run(
            "train-ranker", [train_letor], [ranker_path],
            {"trees": ltr_cfg.trees, "leaves": ltr_cfg.leaves,
             "learning_rate": ltr_cfg.learning_rate,
             "min_leaf": ltr_cfg.min_leaf_instances,
             "ndcg_cutoff": ltr_cfg.ndcg_truncation, "seed": cfg.seed},
            _train_ranker,
        )
    assets.ranker = LambdaMARTModel.load(ranker_path)

    run_paths = {system: outdir / f"run_{system.replace('+', 'p')}.txt"
                 for system in cfg.systems}

    def _rank() -> None:
        runs = {system: RankedRun(tag=system) for system in cfg.systems}
        for query in test_split:
            prepared = prepare_query(assets, query)
            if not prepared.candidates:
                continue
            for system in cfg.systems:
                runs[system].add_query(query.id,
                                       system_ranking(system, assets, prepared))
        for system in cfg.systems:
            write_run(runs[system], run_paths[system])

    runner.run(
        "rank",
        [corpus_path, table_path, lda_path, ranker_path, split_path,
         Path(cfg.queries_path)],
        list(run_paths.values()),
        {**_scoring_params(cfg), "systems": list(cfg.systems),
         "mu": [cfg.mu1, cfg.mu2, cfg.mu3, cfg.mu4], "mode": cfg.mode},
        _rank,
    )

    report_txt = outdir / "report.txt"
    report_jsonl = outdir / "report.jsonl"

    def _evaluate() -> None:
        report = MetricReport(k=cfg.depth)
        for system in cfg.systems:
            run = read_run(run_paths[system])
            report = report.merge(evaluate_run(run, qrels, cfg.depth,
                                               cfg.rel_threshold, system=system))
        write_report(report, report_txt, report_jsonl)

    runner.run(
        "evaluate",
        list(run_paths.values()) + [Path(cfg.qrels_path)],
        [report_txt, report_jsonl],
        {"depth": cfg.depth, "rel_threshold": cfg.rel_threshold,
         "systems": list(cfg.systems)},
        _evaluate,
    )
    return report_txt
