import json
import sys
from collections import Counter
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cqarank.corpus import (CollectionStats, Corpus, QAPair, UserRecord,
                            Vocabulary)


def build_corpus(pair_specs, users=None) -> Corpus:
    """Assemble a Corpus directly from (id, question, answer, asker, answerer)
    tuples with space-separated token strings; answer may be ''."""
    vocab = Vocabulary()
    pairs = []
    for pid, q, a, asker, answerer in pair_specs:
        q_tokens = vocab.intern_all(q.split())
        a_tokens = vocab.intern_all(a.split()) if a else ()
        pairs.append(QAPair(id=pid, question_tokens=q_tokens,
                            answer_tokens=a_tokens, asker_id=asker,
                            answerer_id=answerer))
    freq: Counter = Counter()
    for p in pairs:
        freq.update(p.question_tokens)
        freq.update(p.answer_tokens)
    user_map = {u: UserRecord(u, c) for u, c in (users or {}).items()}
    for p in pairs:
        for uid in (p.asker_id, p.answerer_id):
            user_map.setdefault(uid, UserRecord(uid, 0))
    return Corpus(pairs=pairs, vocabulary=vocab,
                  stats=CollectionStats(dict(freq)), users=user_map)


def write_jsonl(path, records) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec) + "\n")
    return path


@pytest.fixture
def qa_file(tmp_path):
    def _write(records, name="qa.jsonl"):
        return write_jsonl(tmp_path / name, records)

    return _write
