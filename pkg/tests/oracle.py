"""Independent brute-force evaluators used as test oracles.

Direct transcriptions of the scoring definitions, written in the
probability domain with explicit loops. They deliberately share no code
with the package implementations they are used to check.
"""

import math
from collections import Counter, defaultdict


def ml(w, doc):
    return doc.count(w) / len(doc)


def collection_prob(w, corpus_tokens):
    n = len(corpus_tokens)
    c = corpus_tokens.count(w)
    if c == 0:
        return 1.0 / (10.0 * n)
    return c / n


def lam(doc):
    return 1.0 / (len(doc) + 1)


def lm_product(query, q, corpus_tokens):
    prod = 1.0
    lq = lam(q)
    for w in query:
        prod *= (1.0 - lq) * ml(w, q) + lq * collection_prob(w, corpus_tokens)
    return prod


def tlm_product(query, q, table, corpus_tokens):
    """table: dict (t, w) -> probability."""
    prod = 1.0
    lq = lam(q)
    for w in query:
        trans = 0.0
        for t in set(q):
            trans += table.get((t, w), 0.0) * ml(t, q)
        prod *= (1.0 - lq) * trans + lq * collection_prob(w, corpus_tokens)
    return prod


def phi_lookup(phi, totals, beta, vocab_size, z, w):
    """Topic-word probability including the out-of-vocabulary floor."""
    if 0 <= w < vocab_size:
        return float(phi[z][w])
    return beta / (float(totals[z]) + vocab_size * beta)


def term_weight_vector(phi, totals, beta, vocab_size, theta, query):
    """Entropy-ratio weights: numerator per distinct word, denominator over
    query token occurrences."""
    K = len(theta)

    def info(w):
        acc = 0.0
        for i in range(K):
            p = phi_lookup(phi, totals, beta, vocab_size, i, w)
            acc += theta[i] * p * math.log(p)
        return -acc

    denom = sum(info(t) for t in query)
    return {w: info(w) / denom for w in set(query)}


def topic_correlation(phi, totals, beta, vocab_size, tau, w, t):
    acc = 0.0
    for i in range(len(tau)):
        acc += (tau[i]
                * phi_lookup(phi, totals, beta, vocab_size, i, w)
                * phi_lookup(phi, totals, beta, vocab_size, i, t))
    return acc


def mixed_product(query, q, a, mu, table, phi, totals, beta, vocab_size,
                  tau, weights, corpus_tokens):
    """The full mixed scorer in the probability domain. mu is a 4-tuple;
    weights maps query words to W(w); tau is the topic weighting vector."""
    mu1, mu2, mu3, mu4 = mu
    lq = lam(q)
    la = lam(a)
    prod = 1.0
    for w in query:
        pc = collection_prob(w, corpus_tokens)
        exact = weights[w] * ml(w, q)
        trans = 0.0
        for t in set(q):
            trans += table.get((t, w), 0.0) * ml(t, q)
        topic = 0.0
        for t in set(q):
            topic += topic_correlation(phi, totals, beta, vocab_size, tau, w, t) * ml(t, q)
        answer = weights[w] * (ml(w, a) if a else 0.0)
        p = (mu1 * ((1.0 - lq) * exact + lq * pc)
             + mu2 * ((1.0 - lq) * trans + lq * pc)
             + mu3 * ((1.0 - lq) * topic + lq * pc)
             + mu4 * ((1.0 - la) * answer + la * pc))
        prod *= p
    return prod


def feature_products(query, q, a, table, phi, totals, beta, vocab_size,
                     theta, weights, corpus_tokens):
    """F1..F4 in the probability domain (products over query words)."""
    lq = lam(q)
    la = lam(a)
    f1 = f2 = f3 = f4 = 1.0
    for w in query:
        pc = collection_prob(w, corpus_tokens)
        f1 *= (1.0 - lq) * weights[w] * ml(w, q) + lq * pc
        trans = 0.0
        for t in set(q):
            trans += table.get((t, w), 0.0) * ml(t, q)
        f2 *= (1.0 - lq) * trans + lq * pc
        topic = 0.0
        for t in set(q):
            topic += topic_correlation(phi, totals, beta, vocab_size, theta, w, t) * ml(t, q)
        f3 *= (1.0 - lq) * topic + lq * pc
        answer = weights[w] * (ml(w, a) if a else 0.0)
        f4 *= (1.0 - la) * answer + la * pc
    return f1, f2, f3, f4


def bm25(query, docs, doc_id, k1=1.2, b=0.75):
    """docs: dict doc_id -> token list."""
    n_docs = len(docs)
    avgdl = sum(len(d) for d in docs.values()) / n_docs
    doc = docs[doc_id]
    score = 0.0
    for w in query:
        tf = doc.count(w)
        if tf == 0:
            continue
        df = sum(1 for d in docs.values() if w in d)
        idf = math.log((n_docs - df + 0.5) / (df + 0.5) + 1.0)
        score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len(doc) / avgdl))
    return score


def vsm(query, docs, doc_id):
    n_docs = len(docs)

    def idf(w):
        df = sum(1 for d in docs.values() if w in d)
        return math.log(n_docs / df) if df else 0.0

    doc = docs[doc_id]
    q_counts = Counter(query)
    d_counts = Counter(doc)
    dot = sum(q_counts[w] * idf(w) * d_counts[w] * idf(w) for w in q_counts)
    q_norm = math.sqrt(sum((c * idf(w)) ** 2 for w, c in q_counts.items()))
    d_norm = math.sqrt(sum((c * idf(w)) ** 2 for w, c in d_counts.items()))
    if q_norm == 0.0 or d_norm == 0.0:
        return 0.0
    return dot / (q_norm * d_norm)


def ibm1_em(pairs, iterations):
    """Hand-rolled IBM Model 1 EM; pairs are (source, target) token lists.
    Returns dict (s, w) -> probability."""
    t = {}
    cooc = defaultdict(set)
    for src, tgt in pairs:
        for s in src:
            for w in tgt:
                cooc[s].add(w)
    for s, ws in cooc.items():
        for w in ws:
            t[(s, w)] = 1.0 / len(ws)
    for _ in range(iterations):
        counts = defaultdict(float)
        totals = defaultdict(float)
        for src, tgt in pairs:
            for w in tgt:
                z = sum(t[(s, w)] for s in src)
                for s in src:
                    c = t[(s, w)] / z
                    counts[(s, w)] += c
                    totals[s] += c
        for (s, w) in t:
            t[(s, w)] = counts[(s, w)] / totals[s]
    return t


def ibm1_log_likelihood(t, pairs):
    total = 0.0
    for src, tgt in pairs:
        for w in tgt:
            inner = sum(t.get((s, w), 0.0) for s in src)
            if inner <= 0.0:
                return float("-inf")
            total += math.log(inner)
    return total


def average_precision(grades_in_rank_order, total_relevant, k):
    """grades_in_rank_order: grade of the doc at each rank (binary at >= 1)."""
    if total_relevant == 0:
        return 0.0
    hits = 0
    acc = 0.0
    for rank, g in enumerate(grades_in_rank_order[:k], start=1):
        if g >= 1:
            hits += 1
            acc += hits / rank
    return acc / min(total_relevant, k)


def dcg(grades_in_rank_order, k):
    return sum((2.0 ** g - 1.0) / math.log2(1.0 + r)
               for r, g in enumerate(grades_in_rank_order[:k], start=1))
