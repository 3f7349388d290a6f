"""Q&A archive ingestion: tokenization, vocabulary interning, collection statistics.

Token sequences are stored as dense term-ids. The pooled question+answer
token counts form the single background model used by every smoothing
formula downstream.
"""

import json
from collections import Counter
from dataclasses import dataclass


@dataclass(frozen=True)
class QAPair:
    """One archived question/answer pair with asker and answerer identities."""

    id: str
    question_tokens: tuple[int, ...]
    answer_tokens: tuple[int, ...]
    asker_id: str
    answerer_id: str


@dataclass(frozen=True)
class QueryRecord:
    id: str
    tokens: tuple[int, ...]


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    best_answer_count: int


class Vocabulary:
    """Bijective token-string <-> term-id map with dense ids in [0, V).

    Interning grows the map; ids already handed out never change, so models
    trained against an earlier snapshot stay valid when later queries add
    out-of-collection words.
    """

    def __init__(self) -> None:
        self._id_of: dict[str, int] = {}
        self._tokens: list[str] = []

    def __len__(self) -> int:
        return len(self._tokens)

    def intern(self, token: str) -> int:
        tid = self._id_of.get(token)
        if tid is None:
            tid = len(self._tokens)
            self._id_of[token] = tid
            self._tokens.append(token)
        return tid

    def intern_all(self, tokens) -> tuple[int, ...]:
        return tuple(self.intern(t) for t in tokens)

    def id_of(self, token: str) -> int | None:
        return self._id_of.get(token)

    def token_of(self, term_id: int) -> str:
        return self._tokens[term_id]

    def tokens(self) -> list[str]:
        return list(self._tokens)


class CollectionStats:
    """Per-term corpus frequencies pooled over questions and answers.

    P_ml(w|C) is count/N for seen terms. Unseen terms get the floor
    1/(10*N) so smoothed per-term probabilities stay strictly positive for
    out-of-collection query words.
    """

    def __init__(self, frequencies: dict[int, int]) -> None:
        self.frequencies = dict(frequencies)
        self.total_tokens = sum(self.frequencies.values())

    def prob(self, term_id: int) -> float:
        count = self.frequencies.get(term_id, 0)
        if count == 0:
            return 1.0 / (10.0 * self.total_tokens)
        return count / self.total_tokens


def tokenize(text: str, mode: str = "whitespace") -> list[str]:
    """Split text into token strings.

    whitespace mode splits on runs of Unicode whitespace and lowercases;
    pretokenized mode splits on single spaces and keeps tokens verbatim
    (for text segmented by an external tool).
    """
    if mode == "whitespace":
        return text.lower().split()
    if mode == "pretokenized":
        return [t for t in text.split(" ") if t]
    raise ValueError(f"unknown tokenize mode: {mode!r}")


def ml_prob(w: int, doc) -> float:
    """Maximum-likelihood P_ml(w|doc) = count(w, doc) / |doc|."""
    if not doc:
        raise ValueError("empty document")
    return doc.count(w) / len(doc)


def collection_prob(w: int, stats: CollectionStats) -> float:
    """Background P_ml(w|C); unseen terms fall to the 1/(10*N) floor."""
    return stats.prob(w)


def doc_distribution(tokens) -> dict[int, float]:
    """P_ml(t|doc) for every distinct term, in first-occurrence order."""
    n = len(tokens)
    counts = Counter(tokens)
    return {t: c / n for t, c in counts.items()}


@dataclass
class Corpus:
    pairs: list[QAPair]
    vocabulary: Vocabulary
    stats: CollectionStats
    users: dict[str, UserRecord]

    def __post_init__(self) -> None:
        self._by_id = {p.id: p for p in self.pairs}

    def pair(self, qa_id: str) -> QAPair:
        return self._by_id[qa_id]

    def __len__(self) -> int:
        return len(self.pairs)

    def best_answer_count(self, user_id: str) -> int:
        rec = self.users.get(user_id)
        return rec.best_answer_count if rec is not None else 0


def _pair_from_record(rec: dict, line_no: int, vocab: Vocabulary, mode: str,
                      stopwords: frozenset[str] | None) -> QAPair:
    for key in ("id", "question", "answer", "asker", "answerer"):
        if key not in rec:
            raise ValueError(f"line {line_no}: missing field {key!r}")

    if "question_tokens" in rec:
        q_tokens = [str(t) for t in rec["question_tokens"]]
    else:
        q_tokens = tokenize(rec["question"], mode)
    if "answer_tokens" in rec:
        a_tokens = [str(t) for t in rec["answer_tokens"]]
    else:
        a_tokens = tokenize(rec["answer"], mode)

    if stopwords:
        q_tokens = [t for t in q_tokens if t not in stopwords]
        a_tokens = [t for t in a_tokens if t not in stopwords]

    if not q_tokens:
        raise ValueError(f"line {line_no}: pair {rec['id']!r} has an empty question")

    return QAPair(
        id=str(rec["id"]),
        question_tokens=vocab.intern_all(q_tokens),
        answer_tokens=vocab.intern_all(a_tokens),
        asker_id=str(rec["asker"]),
        answerer_id=str(rec["answerer"]),
    )


def _read_users(users_path) -> dict[str, int]:
    counts: dict[str, int] = {}
    with open(users_path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {line_no}: invalid JSON in users file: {exc}") from exc
            if "user" not in rec or "best_answers" not in rec:
                raise ValueError(f"line {line_no}: users record needs 'user' and 'best_answers'")
            user = str(rec["user"])
            best = rec["best_answers"]
            if not isinstance(best, int) or best < 0:
                raise ValueError(f"line {line_no}: best_answers must be a non-negative integer")
            if user in counts:
                raise ValueError(f"line {line_no}: duplicate user {user!r}")
            counts[user] = best
    return counts


def ingest_corpus(qa_path, users_path=None, mode: str = "whitespace",
                  stopwords=None) -> Corpus:
    """Read the Q&A JSONL (and optional users JSONL) into an immutable Corpus.

    Collection statistics pool question and answer tokens. Users referenced
    by pairs but absent from the users file get best_answer_count 0.
    """
    stopset = frozenset(stopwords) if stopwords else None
    vocab = Vocabulary()
    pairs: list[QAPair] = []
    seen_ids: set[str] = set()

    with open(qa_path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {line_no}: invalid JSON: {exc}") from exc
            pair = _pair_from_record(rec, line_no, vocab, mode, stopset)
            if pair.id in seen_ids:
                raise ValueError(f"line {line_no}: duplicate pair id {pair.id!r}")
            seen_ids.add(pair.id)
            pairs.append(pair)

    if not pairs:
        raise ValueError("empty corpus")

    freq: Counter[int] = Counter()
    for pair in pairs:
        freq.update(pair.question_tokens)
        freq.update(pair.answer_tokens)
    stats = CollectionStats(dict(freq))

    user_counts = _read_users(users_path) if users_path is not None else {}
    users = {u: UserRecord(u, c) for u, c in user_counts.items()}
    for pair in pairs:
        for uid in (pair.asker_id, pair.answerer_id):
            if uid not in users:
                users[uid] = UserRecord(uid, 0)

    return Corpus(pairs=pairs, vocabulary=vocab, stats=stats, users=users)


def load_queries(path, vocabulary: Vocabulary, mode: str = "whitespace") -> list[QueryRecord]:
    """Read a queries JSONL ({"id", "text"} or {"id", "tokens"}); interning
    may grow the vocabulary with out-of-collection words."""
    queries: list[QueryRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {line_no}: invalid JSON: {exc}") from exc
            if "id" not in rec:
                raise ValueError(f"line {line_no}: query record needs 'id'")
            if "tokens" in rec:
                tokens = [str(t) for t in rec["tokens"]]
            elif "text" in rec:
                tokens = tokenize(rec["text"], mode)
            else:
                raise ValueError(f"line {line_no}: query record needs 'text' or 'tokens'")
            if not tokens:
                raise ValueError(f"line {line_no}: query {rec['id']!r} is empty")
            qid = str(rec["id"])
            if qid in seen:
                raise ValueError(f"line {line_no}: duplicate query id {qid!r}")
            seen.add(qid)
            queries.append(QueryRecord(id=qid, tokens=vocabulary.intern_all(tokens)))
    return queries


def save_corpus(corpus: Corpus, path) -> None:
    """Serialize a corpus (pairs, vocabulary, stats, users) to one JSON file."""
    freq = [corpus.stats.frequencies.get(i, 0) for i in range(len(corpus.vocabulary))]
    payload = {
        "format": "cqarank-corpus-v1",
        "vocabulary": corpus.vocabulary.tokens(),
        "frequencies": freq,
        "pairs": [
            {
                "id": p.id,
                "q": list(p.question_tokens),
                "a": list(p.answer_tokens),
                "asker": p.asker_id,
                "answerer": p.answerer_id,
            }
            for p in corpus.pairs
        ],
        "users": [[u.user_id, u.best_answer_count] for u in corpus.users.values()],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, separators=(",", ":"), sort_keys=True)
        f.write("\n")


def load_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    if payload.get("format") != "cqarank-corpus-v1":
        raise ValueError(f"{path}: not a cqarank corpus file")
    vocab = Vocabulary()
    for token in payload["vocabulary"]:
        vocab.intern(token)
    stats = CollectionStats({i: c for i, c in enumerate(payload["frequencies"]) if c > 0})
    pairs = [
        QAPair(
            id=rec["id"],
            question_tokens=tuple(rec["q"]),
            answer_tokens=tuple(rec["a"]),
            asker_id=rec["asker"],
            answerer_id=rec["answerer"],
        )
        for rec in payload["pairs"]
    ]
    users = {uid: UserRecord(uid, count) for uid, count in payload["users"]}
    return Corpus(pairs=pairs, vocabulary=vocab, stats=stats, users=users)
