"""Query-likelihood scorers: LM and TLM baselines, the topic translation
scorer, its term-weighted upgrade, and the four relevance features.

All scores live in the log domain; per-term probabilities are blended with
the collection background P_ml(w|C) using lambda = 1/(len+1) for the side
(question or answer) the component reads from, which keeps every log
argument strictly positive. Each component of the mixed scorer is smoothed
the same way its corresponding standalone feature is, so setting one mixture
weight to 1 reproduces the matching baseline exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from .corpus import CollectionStats, QAPair, doc_distribution
from .index import ScoredCandidate
from .topics import QueryTopicPosterior, TopicModel
from .translation import TranslationTable

TermWeightVector = dict[int, float]


@dataclass(frozen=True)
class MixtureWeights:
    """Component weights of the mixed scorer; must form a convex combination."""

    mu1: float
    mu2: float
    mu3: float
    mu4: float

    def __post_init__(self) -> None:
        parts = (self.mu1, self.mu2, self.mu3, self.mu4)
        if any(not 0.0 <= m <= 1.0 for m in parts):
            raise ValueError("mixture weights must lie in [0, 1]")
        if abs(sum(parts) - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.mu1, self.mu2, self.mu3, self.mu4)


DEFAULT_MIXTURE = MixtureWeights(0.3, 0.3, 0.2, 0.2)


@dataclass(frozen=True)
class RelevanceFeatures:
    f1: float
    f2: float
    f3: float
    f4: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.f1, self.f2, self.f3, self.f4)


def smoothing_lambda(doc_len: int) -> float:
    """lambda = 1/(len + 1); an empty side degenerates to 1 (background only)."""
    return 1.0 / (doc_len + 1)


def _tau_vector(theta, num_topics: int) -> np.ndarray:
    """Topic weighting vector: a posterior for the weighted scorer, or all
    ones for the unweighted one (also the test-only injection hook)."""
    if isinstance(theta, QueryTopicPosterior):
        vec = np.asarray(theta.theta, dtype=np.float64)
    else:
        vec = np.asarray(theta, dtype=np.float64)
    if vec.shape != (num_topics,):
        raise ValueError("topic posterior length does not match the model")
    return vec


def term_weights(model: TopicModel, theta, query_tokens,
                 rescale: bool = False) -> TermWeightVector:
    """Entropy-based weight of each query word under the query's topic mixture.

    W(w) = [-sum_i tau_i p(w|z_i) ln p(w|z_i)] / [same summed over the query],
    where the denominator runs over query token occurrences. With `rescale`
    the weights are multiplied by |query| so they average 1 instead of
    summing to 1.
    """
    if len(query_tokens) == 0:
        raise ValueError("empty query")
    tau = _tau_vector(theta, model.num_topics)
    nums: dict[int, float] = {}
    for w in query_tokens:
        if w not in nums:
            col = model.phi_column(w)
            nums[w] = float(-(tau * col * np.log(col)).sum())
    denom = 0.0
    for w in query_tokens:
        denom += nums[w]
    if not denom > 0.0:
        raise ValueError("degenerate topic model")
    scale = float(len(query_tokens)) if rescale else 1.0
    return {w: scale * n / denom for w, n in nums.items()}


def score_lm(query_tokens, q_tokens, stats: CollectionStats) -> float:
    """Query-likelihood language model over the question side:
    sum_w ln[(1 - lam)*P_ml(w|q) + lam*P_ml(w|C)]."""
    if not q_tokens:
        raise ValueError("empty document")
    q_dist = doc_distribution(q_tokens)
    lam = smoothing_lambda(len(q_tokens))
    total = 0.0
    for w in query_tokens:
        p = (1.0 - lam) * q_dist.get(w, 0.0) + lam * stats.prob(w)
        total += math.log(p)
    return total


def score_tlm(query_tokens, q_tokens, table: TranslationTable,
              stats: CollectionStats) -> float:
    """Translation-based language model: the in-document probability becomes
    sum_t P_tr(w|t)*P_ml(t|q), smoothed and logged as in score_lm."""
    if not q_tokens:
        raise ValueError("empty document")
    q_dist = doc_distribution(q_tokens)
    lam = smoothing_lambda(len(q_tokens))
    total = 0.0
    for w in query_tokens:
        trans = 0.0
        for t, p_t in q_dist.items():
            trans += table.prob(w, t) * p_t
        p = (1.0 - lam) * trans + lam * stats.prob(w)
        total += math.log(p)
    return total


def _term_components(query_tokens, qa: QAPair, table: TranslationTable,
                     model: TopicModel, tau: np.ndarray, weight_of, stats):
    """Per query-token occurrence: the four unsmoothed component
    probabilities plus the background probability."""
    q_dist = doc_distribution(qa.question_tokens)
    a_dist = doc_distribution(qa.answer_tokens) if qa.answer_tokens else {}

    # phi_q[i] = sum_t phi_i(t) * P_ml(t|q); C(w) then reduces to a dot product
    phi_q = np.zeros(model.num_topics, dtype=np.float64)
    for t, p_t in q_dist.items():
        phi_q += model.phi_column(t) * p_t

    u_cache: dict[int, np.ndarray] = {}
    components = []
    for w in query_tokens:
        u_w = u_cache.get(w)
        if u_w is None:
            u_w = tau * model.phi_column(w)
            u_cache[w] = u_w
        exact = weight_of(w) * q_dist.get(w, 0.0)
        trans = 0.0
        for t, p_t in q_dist.items():
            trans += table.prob(w, t) * p_t
        topic = float(u_w @ phi_q)
        answer = weight_of(w) * a_dist.get(w, 0.0)
        components.append((exact, trans, topic, answer, stats.prob(w)))
    return components


def _mixed_log_score(query_tokens, qa, mu: MixtureWeights, table, model,
                     tau, weight_of, stats) -> float:
    if not qa.question_tokens:
        raise ValueError("empty question")
    lam_q = smoothing_lambda(len(qa.question_tokens))
    lam_a = smoothing_lambda(len(qa.answer_tokens))
    comps = _term_components(query_tokens, qa, table, model, tau, weight_of, stats)
    total = 0.0
    for exact, trans, topic, answer, pc in comps:
        p = (mu.mu1 * ((1.0 - lam_q) * exact + lam_q * pc)
             + mu.mu2 * ((1.0 - lam_q) * trans + lam_q * pc)
             + mu.mu3 * ((1.0 - lam_q) * topic + lam_q * pc)
             + mu.mu4 * ((1.0 - lam_a) * answer + lam_a * pc))
        total += math.log(p)
    return total


def score_t2lm(query_tokens, qa: QAPair, mu: MixtureWeights,
               table: TranslationTable, model: TopicModel,
               stats: CollectionStats) -> float:
    """Topic translation scorer: exact match, translation, unweighted topic
    correlation, and answer-side components mixed by mu, log-summed over
    query terms."""
    tau = np.ones(model.num_topics, dtype=np.float64)
    return _mixed_log_score(query_tokens, qa, mu, table, model, tau,
                            lambda w: 1.0, stats)


def score_t2lm_plus(query_tokens, qa: QAPair, mu: MixtureWeights,
                    table: TranslationTable, model: TopicModel,
                    theta, weights: TermWeightVector,
                    stats: CollectionStats) -> float:
    """Term-weighted topic translation scorer: exact-match and answer
    components are scaled by W(w), the topic correlation by the query's
    topic posterior."""
    tau = _tau_vector(theta, model.num_topics)
    return _mixed_log_score(query_tokens, qa, mu, table, model, tau,
                            weights.__getitem__, stats)


def features_f1_f4(query_tokens, qa: QAPair, table: TranslationTable,
                   model: TopicModel, theta, weights: TermWeightVector,
                   stats: CollectionStats) -> RelevanceFeatures:
    """The four per-component log scores used as learning-to-rank features:
    weighted exact match, translation, posterior-weighted topic correlation
    (all against the question), and weighted answer-side match."""
    if not qa.question_tokens:
        raise ValueError("empty question")
    tau = _tau_vector(theta, model.num_topics)
    lam_q = smoothing_lambda(len(qa.question_tokens))
    lam_a = smoothing_lambda(len(qa.answer_tokens))
    comps = _term_components(query_tokens, qa, table, model, tau,
                             weights.__getitem__, stats)
    f1 = f2 = f3 = f4 = 0.0
    for exact, trans, topic, answer, pc in comps:
        f1 += math.log((1.0 - lam_q) * exact + lam_q * pc)
        f2 += math.log((1.0 - lam_q) * trans + lam_q * pc)
        f3 += math.log((1.0 - lam_q) * topic + lam_q * pc)
        f4 += math.log((1.0 - lam_a) * answer + lam_a * pc)
    return RelevanceFeatures(f1=f1, f2=f2, f3=f3, f4=f4)


def rank_candidates(scorer, query_tokens, candidates) -> list[ScoredCandidate]:
    """Score every candidate pair, sort non-increasing, break ties by
    ascending qa_id."""
    if not candidates:
        raise ValueError("no candidates to rank")
    scored = [(scorer(query_tokens, qa), qa.id) for qa in candidates]
    scored.sort(key=lambda item: (-item[0], item[1]))
    return [ScoredCandidate(qa_id=qa_id, score=score, rank=i + 1)
            for i, (score, qa_id) in enumerate(scored)]
