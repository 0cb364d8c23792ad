import networkx as nx
import numpy as np
import pytest

from bulletin.modules.clustering import Clustering, Community, PhraseGraph, detect_communities
from bulletin.modules.corpus import PromptKind, Response, tokenize
from bulletin.modules.extractor import CandidatePhrase
from bulletin.modules.ranking import (
    EmptyClustering,
    NegativeWeight,
    NonSymmetricInput,
    RankConfig,
    Summary,
    SummaryEntry,
    assemble_summary,
    disjointify,
    lexrank,
    lexrank_response_baseline,
    render_text,
    summary_to_json,
)


def response(student, text):
    return Response(student, "1", PromptKind.INTERESTING, text, tuple(tokenize(text)))


def clique_graph(sizes):
    graph = nx.Graph()
    phrases, communities = [], []
    start = 0
    for index, size in enumerate(sizes):
        nodes = list(range(start, start + size))
        graph.add_nodes_from(nodes)
        graph.add_edges_from(((i, j) for i in nodes for j in nodes if i < j), weight=1.0)
        phrases.extend(CandidatePhrase.from_text(f"topic{index} item{k}") for k in range(size))
        communities.append(Community(frozenset(nodes), significance=0.01 * (index + 1)))
        start += size
    return PhraseGraph(graph, tuple(phrases)), Clustering(communities)


class TestLexRank:
    def test_complete_graph_is_uniform(self):
        W = np.ones((4, 4)) - np.eye(4)
        np.testing.assert_allclose(lexrank(W), np.full(4, 0.25), atol=1e-9)

    def test_single_node(self):
        np.testing.assert_array_equal(lexrank(np.zeros((1, 1))), [1.0])

    def test_matches_principal_eigenvector(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(2, 11))
            A = rng.uniform(size=(n, n))
            W = np.triu(A, 1) + np.triu(A, 1).T
            P = 0.85 * W / W.sum(axis=1, keepdims=True) + 0.15 / n
            values, vectors = np.linalg.eig(P.T)
            principal = np.real(vectors[:, np.argmax(np.real(values))])
            principal /= principal.sum()
            np.testing.assert_allclose(lexrank(W, eps=1e-12), principal, atol=1e-9)

    @pytest.mark.parametrize("scale", [1e-3, 0.5, 7.0, 1e4])
    def test_scale_invariant(self, scale):
        rng = np.random.default_rng(9)
        A = rng.uniform(size=(8, 8)) * (rng.uniform(size=(8, 8)) < 0.5)
        W = np.triu(A, 1) + np.triu(A, 1).T
        np.testing.assert_allclose(lexrank(W * scale, eps=1e-12), lexrank(W, eps=1e-12), atol=1e-9)

    def test_sums_to_one(self):
        W = np.array([[0.0, 0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, 0.0]])
        scores = lexrank(W)
        assert scores.sum() == pytest.approx(1.0)
        assert np.all(scores > 0)

    def test_rejects_asymmetric(self):
        with pytest.raises(NonSymmetricInput):
            lexrank(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rejects_negative(self):
        with pytest.raises(NegativeWeight):
            lexrank(np.array([[0.0, -1.0], [-1.0, 0.0]]))


class TestDisjointify:
    def test_most_significant_community_wins(self):
        clustering = Clustering([
            Community(frozenset({0, 1, 2}), 0.1),
            Community(frozenset({2, 3}), 0.5),
            Community(frozenset({1}), 0.9),
        ])
        assert disjointify(clustering) == [(0, [0, 1, 2]), (1, [3])]


class TestAssembleSummary:
    def test_singletons(self):
        phrases = [CandidatePhrase.from_text(t) for t in ("clt", "q-q plot", "bayes rule")]
        graph = PhraseGraph(nx.empty_graph(3), tuple(phrases))
        summary = assemble_summary(detect_communities(graph), graph)
        assert len(summary) == 3
        assert summary.supporters == [1, 1, 1]
        assert sorted(summary.texts) == ["bayes rule", "clt", "q-q plot"]

    def test_largest_communities_first(self):
        graph, clustering = clique_graph([9, 6, 4, 3, 2, 2, 1])
        summary = assemble_summary(clustering, graph, max_phrases=5)
        assert summary.supporters == [9, 6, 4, 3, 2]
        assert summary.texts[0] == "topic0 item0"

    def test_count_students(self):
        graph = nx.complete_graph(3)
        nx.set_edge_attributes(graph, 1.0, "weight")
        phrases = tuple(
            CandidatePhrase.from_text(t, response_ref=response(s, t).ref)
            for s, t in (("a", "clt"), ("a", "central limit"), ("b", "clt again"))
        )
        phrase_graph = PhraseGraph(graph, phrases)
        clustering = Clustering([Community(frozenset({0, 1, 2}), 0.01)])
        assert assemble_summary(clustering, phrase_graph).supporters == [3]
        distinct = assemble_summary(clustering, phrase_graph, config=RankConfig(count_students=True))
        assert distinct.supporters == [2]

    def test_empty(self):
        with pytest.raises(EmptyClustering):
            assemble_summary(Clustering([]), PhraseGraph(nx.Graph()))


class TestResponseBaseline:
    def test_single_response(self):
        summary = lexrank_response_baseline([response("s1", "CLT")])
        assert summary.texts == ["CLT"]

    def test_central_response_first(self):
        responses = [response(f"s{i}", "central limit theorem") for i in range(5)]
        responses.append(response("s9", "bayes"))
        summary = lexrank_response_baseline(responses, max_units=2)
        assert summary.entries[0].phrase.response_ref == responses[0].ref
        assert "bayes" not in summary.texts

    def test_needs_responses(self):
        with pytest.raises(ValueError):
            lexrank_response_baseline([])


class TestRendering:
    def summary(self):
        phrase = CandidatePhrase.from_span(response("s2", "the CLT"), 1, 2)
        return Summary((SummaryEntry(phrase, 3, 0),), "1", "interesting", "phrasesum")

    def test_json(self):
        data = summary_to_json(self.summary())
        assert data["system"] == "phrasesum"
        assert data["bullets"] == [{"text": "CLT", "supporters": 3, "source_student": "s2", "span": [1, 2]}]

    def test_text(self):
        assert render_text(self.summary()) == "- CLT [3]"
