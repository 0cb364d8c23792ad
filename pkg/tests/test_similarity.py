import numpy as np
import pytest

from bulletin.modules.database.vectors import MalformedVectorFile, VectorTable, load_vectors, save_vectors
from bulletin.modules.extractor import CandidatePhrase
from bulletin.modules.similarity import (
    FEATURE_NAMES,
    METRICS,
    ColorOraclePredictor,
    InMemoryTaxonomy,
    LabeledPair,
    LsaConfig,
    LsaPredictor,
    RankDeficient,
    SimilarityConfig,
    SimilarityModel,
    SimilarityResources,
    SingleClassTrainingSet,
    bleu,
    build_lsa,
    build_pair_training_set,
    cosine_tf,
    evaluate_pairs,
    fit_svm,
    lexical_overlap,
    lin_phrase,
    load_similarity,
    lsa_baseline_similar,
    pair_features,
    predict_similar,
    save_similarity,
    simsum,
    train_similarity,
    term_document_matrix,
    truncated_svd,
)
from bulletin.modules.corpus import PromptKind


def phrase(text):
    return CandidatePhrase.from_text(text)


def resources_for(words):
    rng = np.random.default_rng(0)
    vectors = VectorTable.from_dict(4, {w: rng.normal(size=4) for w in words})
    lsa = VectorTable.from_dict(4, {w: rng.normal(size=4) for w in words})
    taxonomy = InMemoryTaxonomy(
        parents={f"{w}.n": ["entity.n"] for w in words},
        ic={**{f"{w}.n": 4.0 for w in words}, "entity.n": 0.5},
        lexicon={w: [f"{w}.n"] for w in words},
    )
    return SimilarityResources(vectors=vectors, lsa=lsa, taxonomy=taxonomy)


class TestPairFeatures:
    def test_identity_scores_one(self):
        a = phrase("central limit theorem")
        features = pair_features(a, a, resources_for(["central", "limit", "theorem"]))
        assert all(features.mask)
        for name in METRICS:
            assert features.metric(name) == pytest.approx(1.0), name

    def test_dice_over_stems(self):
        features = pair_features(phrase("central limit theorem"), phrase("central limit thm"))
        assert features.metric("lexical_overlap") == pytest.approx(0.667, abs=5e-4)

    def test_disjoint_without_resources(self):
        features = pair_features(phrase("q-q plot"), phrase("sampling distribution"))
        assert features.metric("lexical_overlap") == 0.0
        assert features.metric("cosine_tf") == 0.0
        for name in ("lin_taxonomy", "embedding_cosine", "lsa_cosine"):
            assert not features.available(name)
            assert features.metric(name) == 0.0

    def test_values_in_unit_interval(self):
        texts = ["the p value part", "p values", "hypothesis testing", "testing hypotheses", "the the the"]
        res = resources_for(["p", "value", "values", "testing", "hypothesis"])
        for x in texts:
            for y in texts:
                f = pair_features(phrase(x), phrase(y), res)
                assert all(0.0 <= v <= 1.0 for v in f.values)
                assert len(f.as_vector()) == len(FEATURE_NAMES)

    def test_metrics_are_symmetric(self):
        a, b = ["the", "central", "limit", "theorem"], ["central", "limit", "thm"]
        for metric in (lexical_overlap, cosine_tf, bleu, simsum):
            assert metric(a, b) == pytest.approx(metric(b, a))

    def test_bleu_add_one_bigrams(self):
        a, b = ["central", "limit", "theorem"], ["central", "limit", "thm"]
        # unigrams (2+1)/(3+1), bigrams (1+1)/(2+1), equal lengths
        assert bleu(a, b) == pytest.approx(np.sqrt(0.75 * 2 / 3))
        assert bleu(a, a) == pytest.approx(1.0)
        assert bleu(a, ["hypothesis"]) == 0.0
        assert bleu([], a) == 0.0

    def test_simsum_single_tokens_use_unigrams(self):
        assert simsum(["clt"], ["clt"]) == 1.0
        assert simsum(["clt"], ["theorem"]) == 0.0


class TestTaxonomy:
    def test_lin(self):
        taxonomy = InMemoryTaxonomy(
            parents={"dog": ["canine"], "canine": ["animal"], "cat": ["feline"], "feline": ["animal"]},
            ic={"dog": 5.0, "cat": 5.0, "canine": 3.0, "feline": 3.0, "animal": 1.0},
            lexicon={"dog": ["dog"], "cat": ["cat"]},
        )
        assert taxonomy.word_similarity("dog", "cat") == pytest.approx(0.2)
        assert taxonomy.word_similarity("cat", "dog") == pytest.approx(0.2)
        assert lin_phrase(taxonomy, ["the", "dog"], ["a", "cat"]) == pytest.approx(0.2)
        assert lin_phrase(taxonomy, ["the"], ["cat"]) is None


class TestPairTrainingSet:
    def test_same_color_pairs_are_positive(self, example_corpus):
        pairs = build_pair_training_set(example_corpus)
        assert len(pairs) == 10 + 6
        labels = {(frozenset((p.phrase_a.text, p.phrase_b.text)), p.annotator_id): p.similar for p in pairs}
        assert labels[(frozenset(("central limit theorem", "CLT")), "a1")] is True
        assert labels[(frozenset(("q-q plot", "Sampling distribution")), "a1")] is False

    def test_single_highlight_gives_no_pairs(self, example_corpus):
        one = example_corpus.restrict(["1"])
        annotation = one.annotations[("1", PromptKind.INTERESTING, "a1")]
        trimmed = type(annotation)(annotation.lecture_id, annotation.prompt_kind, annotation.annotator_id,
                                   annotation.summary, annotation.highlights[:1])
        corpus = type(one)(one.course_id, one.responses, {("1", PromptKind.INTERESTING, "a1"): trimmed}, ("a1",))
        assert build_pair_training_set(corpus) == []


class TestSvm:
    def separable(self):
        X = np.vstack([np.ones((10, len(FEATURE_NAMES))), np.zeros((10, len(FEATURE_NAMES)))])
        y = np.array([1.0] * 10 + [-1.0] * 10)
        return X, y

    def test_separable_training_accuracy(self):
        X, y = self.separable()
        model = fit_svm(X, y)
        scores = X @ model.weights + model.bias
        assert np.all(np.sign(scores) == y)

    def test_history_never_increases(self):
        X, y = self.separable()
        history = np.array(fit_svm(X, y).history)
        assert len(history) == SimilarityConfig().epochs
        assert np.all(np.diff(history) <= 0)

    def test_history_is_the_model_objective(self):
        X, y = self.separable()
        config = SimilarityConfig()
        model = fit_svm(X, y, config)
        # balanced classes: unit class weights, lambda = 1 / (c * n)
        lam = 1.0 / (config.c * len(y))
        hinge = np.maximum(0.0, 1.0 - y * (X @ model.weights + model.bias)).mean()
        assert model.history[-1] == pytest.approx(0.5 * lam * model.weights @ model.weights + hinge)
        # zero weights score 1.0
        assert model.history[-1] < 1.0

    def test_deterministic(self):
        X, y = self.separable()
        first = fit_svm(X, y, SimilarityConfig(seed=3))
        second = fit_svm(X, y, SimilarityConfig(seed=3))
        assert np.array_equal(first.weights, second.weights)
        assert first.bias == second.bias

    def test_single_class(self):
        X, y = self.separable()
        with pytest.raises(SingleClassTrainingSet):
            fit_svm(X[:10], y[:10])

    def test_train_on_example(self, example_corpus):
        pairs = build_pair_training_set(example_corpus)
        features = [pair_features(p.phrase_a, p.phrase_b) for p in pairs]
        model = train_similarity(pairs, features, SimilarityConfig(epochs=5))
        assert model.weights.shape == (len(FEATURE_NAMES),)
        assert np.isfinite(model.weights).all()


class TestPredict:
    def test_symmetric(self):
        rng = np.random.default_rng(7)
        model = SimilarityModel(rng.normal(size=len(FEATURE_NAMES)), 0.1)
        a, b = phrase("the central limit theorem"), phrase("central limit thm")
        assert predict_similar(model, a, b).score == pytest.approx(predict_similar(model, b, a).score)

    def test_zero_model_calls_everything_similar(self):
        model = SimilarityModel(np.zeros(len(FEATURE_NAMES)), 0.0)
        prediction = predict_similar(model, phrase("q-q plot"), phrase("Bayes rule"))
        assert prediction.score == 0.0
        assert prediction.similar

    def test_positive_model_on_identity(self):
        model = SimilarityModel(np.ones(len(FEATURE_NAMES)), -2.0)
        a = phrase("normal approximations")
        assert predict_similar(model, a, a).similar

    def test_model_file_round_trip(self, tmp_path):
        model = SimilarityModel(np.linspace(-1, 1, len(FEATURE_NAMES)), 0.25, SimilarityConfig(c=2.0))
        path = tmp_path / "sim.model"
        save_similarity(model, path)
        loaded = load_similarity(path)
        np.testing.assert_array_equal(loaded.weights, model.weights)
        assert loaded.bias == model.bias
        assert loaded.config == model.config


class TestLsaBaseline:
    def test_identical_phrases(self):
        lsa = VectorTable.from_dict(2, {"central": np.array([1.0, 0.0]), "limit": np.array([0.6, 0.8])})
        a = phrase("central limit")
        assert lsa_baseline_similar(lsa, a, a, 0.5)

    def test_out_of_vocabulary(self):
        lsa = VectorTable.from_dict(2, {"central": np.array([1.0, 0.0])})
        assert not lsa_baseline_similar(lsa, phrase("zzz"), phrase("central"), 0.5)
        assert LsaPredictor(lsa, 0.0)(phrase("zzz"), phrase("central")) == (False, 0.0)


class TestBuildLsa:
    def test_smoothed_tfidf(self):
        terms, A = term_document_matrix(["Alpha beta alpha", "beta ."])
        assert terms == ["alpha", "beta"]
        np.testing.assert_allclose(A, [[2 * (np.log(1.5) + 1), 0.0], [1.0, 1.0]])

    def test_identical_documents(self):
        table = build_lsa(["alpha beta", "alpha beta"], k=1)
        np.testing.assert_allclose(table.get("alpha"), table.get("beta"), atol=1e-12)

    def test_orthogonal_blocks(self):
        table = build_lsa(["alpha beta alpha", "gamma delta"], k=2)
        assert float(table.get("alpha") @ table.get("gamma")) == pytest.approx(0.0, abs=1e-8)
        assert float(table.get("alpha") @ table.get("beta")) == pytest.approx(1.0)

    def test_singular_values_match_dense_svd(self):
        rng = np.random.default_rng(11)
        config = LsaConfig(tolerance=1e-12, max_sweeps=500)
        for _ in range(5):
            A = rng.normal(size=(50, 30))
            _, s, _ = truncated_svd(A, 5, config, seed=0)
            np.testing.assert_allclose(s, np.linalg.svd(A, compute_uv=False)[:5], rtol=1e-6)

    def test_rank_reduction_warns(self):
        with pytest.warns(RankDeficient):
            table = build_lsa(["alpha beta"] * 3, k=5)
        assert table.dim == 1

    def test_vector_file_round_trip(self, tmp_path):
        table = build_lsa(["alpha beta", "beta gamma", "gamma delta"], k=2)
        save_vectors(table, tmp_path / "lsa.txt")
        loaded = load_vectors(tmp_path / "lsa.txt")
        assert loaded.dim == table.dim
        np.testing.assert_array_equal(loaded.get("beta"), table.get("beta"))

    def test_vector_file_keys_lowercased(self, tmp_path):
        path = tmp_path / "vectors.txt"
        path.write_text("2 2\nCLT 1.0 0.0\nclt 0.0 1.0\n")
        table = load_vectors(path)
        assert len(table) == 1
        assert "Clt" in table
        np.testing.assert_array_equal(table.get("clt"), [1.0, 0.0])

    def test_malformed_vector_file(self, tmp_path):
        path = tmp_path / "vectors.txt"
        path.write_text("2 3\nclt 1.0 0.0\n")
        with pytest.raises(MalformedVectorFile):
            load_vectors(path)


class TestEvaluatePairs:
    def pairs(self):
        a, b, c, d = (phrase(t) for t in ("clt", "central limit", "q-q plot", "bayes"))
        return [LabeledPair(a, b, True), LabeledPair(c, d, False)]

    def test_perfect(self):
        truth = {("clt", "central limit"): True}
        score = evaluate_pairs(lambda x, y: (truth.get((x.text, y.text), False), 1.0), self.pairs())
        assert (score.p, score.r, score.f) == (1.0, 1.0, 1.0)

    def test_all_positive(self):
        score = evaluate_pairs(lambda x, y: (True, 1.0), self.pairs())
        assert score.p == 0.5
        assert score.r == 1.0

    def test_color_oracle(self, example_corpus):
        annotation = example_corpus.annotations[("1", PromptKind.INTERESTING, "a1")]
        oracle = ColorOraclePredictor.from_annotation(annotation)
        score = evaluate_pairs(oracle, build_pair_training_set(example_corpus.restrict(["1"])))
        assert score.p == 1.0
