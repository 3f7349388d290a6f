import pytest

from cqarank.quality import authority_score, quality_feature
from conftest import build_corpus


class TestAuthorityScore:
    @pytest.mark.parametrize("count,expected", [
        (0, 0.0),
        (100, 0.5),
        (400, 1.0),
        (10000, 1.0),
    ])
    def test_exact_values(self, count, expected):
        assert authority_score(count) == expected

    def test_quarter_point(self):
        assert authority_score(25) == 0.25

    def test_monotone_and_bounded(self):
        prev = -1.0
        for count in range(0, 500, 7):
            score = authority_score(count)
            assert 0.0 <= score <= 1.0
            assert score >= prev
            prev = score

    def test_constant_above_cap(self):
        assert authority_score(400) == authority_score(401) == authority_score(10**6) == 1.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            authority_score(-1)


class TestQualityFeature:
    def test_componentwise(self):
        corpus = build_corpus([("p1", "a", "b", "asker", "answerer")],
                              users={"asker": 100, "answerer": 400})
        qf = quality_feature(corpus.pair("p1"), corpus)
        assert (qf.s_asker, qf.s_answerer) == (0.5, 1.0)

    def test_unknown_users_are_zero(self):
        corpus = build_corpus([("p1", "a", "b", "ghost1", "ghost2")])
        qf = quality_feature(corpus.pair("p1"), corpus)
        assert (qf.s_asker, qf.s_answerer) == (0.0, 0.0)

    def test_same_user_both_roles(self):
        corpus = build_corpus([("p1", "a", "b", "u", "u")], users={"u": 25})
        qf = quality_feature(corpus.pair("p1"), corpus)
        assert (qf.s_asker, qf.s_answerer) == (0.25, 0.25)

    def test_columns(self):
        corpus = build_corpus([("p1", "a", "b", "x", "y")],
                              users={"x": 100, "y": 400})
        qf = quality_feature(corpus.pair("p1"), corpus)
        assert qf.as_columns() == (0.5, 1.0)
        assert qf.as_columns(combine=True) == (0.75,)
