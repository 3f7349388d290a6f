"""User-authority scores and the Q&A-pair quality feature."""

import math
from dataclasses import dataclass

from .corpus import Corpus, QAPair

# sqrt(best answers) saturates at this value, i.e. at 400 best answers
AUTHORITY_CAP = 20.0


@dataclass(frozen=True)
class QualityFeature:
    s_asker: float
    s_answerer: float

    def as_columns(self, combine: bool = False) -> tuple[float, ...]:
        if combine:
            return ((self.s_asker + self.s_answerer) / 2.0,)
        return (self.s_asker, self.s_answerer)


def authority_score(best_answer_count: int) -> float:
    """min(sqrt(A_u), 20) / 20, clamping outlier users to 1.0."""
    if best_answer_count < 0:
        raise ValueError("best_answer_count must be >= 0")
    return min(math.sqrt(best_answer_count), AUTHORITY_CAP) / AUTHORITY_CAP


def quality_feature(qa: QAPair, corpus: Corpus) -> QualityFeature:
    """Authority scores of the pair's asker and answerer; unknown users
    count as having zero best answers."""
    return QualityFeature(
        s_asker=authority_score(corpus.best_answer_count(qa.asker_id)),
        s_answerer=authority_score(corpus.best_answer_count(qa.answerer_id)),
    )
