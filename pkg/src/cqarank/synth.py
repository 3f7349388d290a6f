"""Seeded synthetic Q&A archive with planted structure, a desk-scale stand-in
for a real community dump.

The generator plants exactly the signals the ranking pipeline should pick
up: per-topic vocabularies (topic model), synonym surface pairs where
questions use the a-form and answers also carry the b-form (translation
model bridge), queries phrased with b-forms so exact match underperforms,
a low-authority near-duplicate of every query target (quality contrast),
and graded qrels for the planted relevance.
"""

import json
import random
from dataclasses import dataclass
from pathlib import Path

CORE_WORDS_PER_TOPIC = 10
SYNONYM_PAIRS_PER_TOPIC = 4
COMMON_WORDS = 6


@dataclass(frozen=True)
class SynthSpec:
    size: int
    topics: int
    seed: int
    queries: int | None = None

    def __post_init__(self) -> None:
        if self.size < 10:
            raise ValueError("size must be >= 10")
        if self.topics < 2:
            raise ValueError("topics must be >= 2")

    @property
    def num_queries(self) -> int:
        if self.queries is not None:
            return self.queries
        return max(10, self.size // 5)


@dataclass
class _Pair:
    id: str
    topic: int
    q_core: list[str]
    syn_idx: list[int]
    q_tokens: list[str]
    a_tokens: list[str]
    asker: str
    answerer: str


def _topic_vocab(k: int):
    core = [f"t{k}w{j}" for j in range(CORE_WORDS_PER_TOPIC)]
    synonyms = [(f"t{k}s{j}a", f"t{k}s{j}b") for j in range(SYNONYM_PAIRS_PER_TOPIC)]
    return core, synonyms


def generate(spec: SynthSpec) -> dict[str, list[str]]:
    """Produce the four artifact files as line lists, deterministically."""
    rng = random.Random(spec.seed)
    common = [f"common{j}" for j in range(COMMON_WORDS)]
    vocab = [_topic_vocab(k) for k in range(spec.topics)]

    experts: list[str] = []
    regulars: list[str] = []
    novices: list[str] = []
    users: list[tuple[str, int]] = []
    for k in range(spec.topics):
        for i in range(2):
            name = f"expert{k}_{i}"
            users.append((name, rng.randint(150, 900)))
            experts.append(name)
        for i in range(3):
            name = f"regular{k}_{i}"
            users.append((name, rng.randint(9, 80)))
            regulars.append(name)
    for i in range(max(10, spec.size // 3)):
        name = f"novice{i}"
        users.append((name, rng.randint(0, 4)))
        novices.append(name)

    def pick_answerer() -> str:
        roll = rng.random()
        if roll < 0.45:
            return rng.choice(experts)
        if roll < 0.75:
            return rng.choice(regulars)
        return rng.choice(novices)

    pairs: list[_Pair] = []
    for i in range(spec.size):
        k = i % spec.topics
        core, synonyms = vocab[k]
        syn_idx = rng.sample(range(len(synonyms)), rng.randint(1, 2))
        q_core = rng.sample(core, rng.randint(2, 4))
        q_tokens = q_core + [synonyms[j][0] for j in syn_idx]
        if rng.random() < 0.4:
            q_tokens.append(rng.choice(common))
        rng.shuffle(q_tokens)

        a_core = rng.sample(core, rng.randint(2, 4))
        a_tokens = a_core + [synonyms[j][1] for j in syn_idx]
        if rng.random() < 0.5:
            a_tokens.extend(synonyms[j][0] for j in syn_idx)
        a_tokens.append(rng.choice(common))
        rng.shuffle(a_tokens)

        pairs.append(_Pair(id=f"qa{i:04d}", topic=k, q_core=q_core,
                           syn_idx=syn_idx, q_tokens=q_tokens, a_tokens=a_tokens,
                           asker=rng.choice(novices), answerer=pick_answerer()))

    n_queries = min(spec.num_queries, spec.size)
    target_indices = rng.sample(range(spec.size), n_queries)

    # low-authority near-duplicate of every query target
    shadows: dict[int, _Pair] = {}
    for i in target_indices:
        p = pairs[i]
        sq = list(p.q_tokens)
        rng.shuffle(sq)
        sa = [t for t in p.a_tokens if not t.startswith("common")]
        rng.shuffle(sa)
        shadows[i] = _Pair(id=f"{p.id}x", topic=p.topic, q_core=list(p.q_core),
                           syn_idx=list(p.syn_idx), q_tokens=sq, a_tokens=sa,
                           asker=rng.choice(novices), answerer=rng.choice(novices))

    queries: list[tuple[str, list[str]]] = []
    qrels: list[tuple[str, str, int]] = []
    for qn, i in enumerate(target_indices):
        p = pairs[i]
        _, synonyms = vocab[p.topic]
        core_part = rng.sample(p.q_core, min(len(p.q_core), rng.randint(1, 2)))
        tokens = core_part + [synonyms[j][1] for j in p.syn_idx]
        if rng.random() < 0.3:
            tokens.append(rng.choice(common))
        rng.shuffle(tokens)
        qid = f"q{qn:03d}"
        queries.append((qid, tokens))

        qrels.append((qid, p.id, 2))
        qrels.append((qid, shadows[i].id, 1))
        content = set(core_part)
        for j in p.syn_idx:
            content.add(synonyms[j][0])
            content.add(synonyms[j][1])
        neighbors = []
        for other in pairs:
            if other.topic != p.topic or other.id == p.id:
                continue
            if len(content.intersection(other.q_tokens + other.a_tokens)) >= 2:
                neighbors.append(other.id)
        for other_id in sorted(neighbors)[:3]:
            qrels.append((qid, other_id, 1))

    all_pairs = list(pairs) + [shadows[i] for i in sorted(shadows)]

    qa_lines = []
    for p in all_pairs:
        qa_lines.append(json.dumps({
            "id": p.id,
            "question": " ".join(p.q_tokens),
            "answer": " ".join(p.a_tokens),
            "asker": p.asker,
            "answerer": p.answerer,
        }, sort_keys=True))
    user_lines = [json.dumps({"user": u, "best_answers": c}, sort_keys=True)
                  for u, c in users]
    query_lines = [json.dumps({"id": qid, "text": " ".join(tokens)}, sort_keys=True)
                   for qid, tokens in queries]
    qrel_lines = [f"{qid} 0 {doc} {grade}" for qid, doc, grade in qrels]
    return {
        "qa": qa_lines,
        "users": user_lines,
        "queries": query_lines,
        "qrels": qrel_lines,
    }


def write_synth(spec: SynthSpec, outdir) -> dict[str, Path]:
    """Write qa.jsonl, users.jsonl, queries.jsonl, qrels.txt under outdir."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    data = generate(spec)
    paths = {
        "qa": outdir / "qa.jsonl",
        "users": outdir / "users.jsonl",
        "queries": outdir / "queries.jsonl",
        "qrels": outdir / "qrels.txt",
    }
    for key, path in paths.items():
        with open(path, "w", encoding="utf-8") as f:
            for line in data[key]:
                f.write(line + "\n")
    return paths
