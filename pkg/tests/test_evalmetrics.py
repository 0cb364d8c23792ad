import math

import numpy as np
import pytest

from bulletin.modules.corpus import ColorId, PromptKind
from bulletin.modules.evalmetrics import (
    AMBIGUOUS_COLOR,
    EMPTY_CANDIDATE,
    ZERO_DENOMINATOR,
    ColoredEntry,
    ColoredSummary,
    NoResponses,
    PrfScore,
    assign_colors,
    color_match,
    color_of,
    human_summary,
    merge_same_colors,
    paired_ttest,
    pearson,
    rouge_n,
    rouge_su4,
    student_coverage,
)
from bulletin.modules.extractor import CandidatePhrase


def colored(**estimates):
    return ColoredSummary(tuple(ColoredEntry(ColorId("a1", c), n) for c, n in estimates.items()))


class TestRougeN:
    def test_identical(self):
        score = rouge_n("central limit theorem", ["central limit theorem"], 1)
        assert (score.p, score.r, score.f) == (1.0, 1.0, 1.0)

    def test_partial_unigram(self):
        score = rouge_n("central limit", ["central limit theorem"], 1)
        assert score.p == 1.0
        assert score.r == pytest.approx(2 / 3)

    def test_bigram_order(self):
        score = rouge_n("a b", ["b a"], 2)
        assert (score.p, score.r, score.f) == (0.0, 0.0, 0.0)

    def test_matches_over_stems_without_punctuation(self):
        score = rouge_n("Sampling distributions!", ["sampling distribution"], 1)
        assert (score.p, score.r) == (1.0, 1.0)

    def test_bullets_do_not_bridge(self):
        score = rouge_n("central\nlimit", ["central limit"], 2)
        assert score.p == 0.0

    def test_multiple_references_averaged(self):
        score = rouge_n("central limit", ["central limit", "q-q plot"], 1)
        assert score.p == pytest.approx(0.5)
        assert score.r == pytest.approx(0.5)

    def test_empty_candidate_flagged(self):
        score = rouge_n("", ["central limit"], 1)
        assert score.f == 0.0
        assert score.flag == EMPTY_CANDIDATE

    @pytest.mark.parametrize("n", [1, 2])
    def test_swapping_single_reference_swaps_p_and_r(self, n):
        a, b = "the central limit theorem and q-q plots", "limit theorem plots"
        forward, backward = rouge_n(a, [b], n), rouge_n(b, [a], n)
        assert forward.p == pytest.approx(backward.r)
        assert forward.r == pytest.approx(backward.p)

    def test_needs_references(self):
        with pytest.raises(ValueError):
            rouge_n("a", [], 1)


class TestRougeSu4:
    def test_hand_enumerated(self):
        score = rouge_su4("a b c", ["a c b"])
        assert score.p == pytest.approx(5 / 6)
        assert score.r == pytest.approx(5 / 6)

    def test_identical(self):
        score = rouge_su4("the central limit theorem", ["the central limit theorem"])
        assert (score.p, score.r, score.f) == (1.0, 1.0, 1.0)

    def test_disjoint(self):
        score = rouge_su4("q-q plot", ["central limit theorem"])
        assert (score.p, score.r, score.f) == (0.0, 0.0, 0.0)

    def test_swapping_single_reference_swaps_p_and_r(self):
        a, b = "a b c d", "c a b"
        forward, backward = rouge_su4(a, [b]), rouge_su4(b, [a])
        assert (forward.p, forward.r) == pytest.approx((backward.r, backward.p))

    def test_skip_window(self):
        # b six positions after a is beyond the skip distance
        far = "a x1 x2 x3 x4 x5 b"
        near = "a x1 x2 x3 x4 b"
        assert rouge_su4("a b", [far]).p < rouge_su4("a b", [near]).p


class TestColorMatch:
    """Colour-level agreement between system and human summaries."""

    def test_worked_example(self):
        human = colored(y=12, g=9, r=6, b=5, m=3)
        system = colored(y=14, g=17, r=7, b=7)
        score = color_match(system, human)
        assert round(score.p, 3) == 0.711
        assert round(score.r, 3) == 0.914
        assert round(score.f, 3) == 0.800

    def test_identical(self):
        summary = colored(y=3, g=2)
        score = color_match(summary, summary)
        assert (score.p, score.r, score.f) == (1.0, 1.0, 1.0)

    def test_no_shared_colors(self):
        score = color_match(colored(y=3), colored(g=2))
        assert (score.p, score.r, score.f) == (0.0, 0.0, 0.0)

    def test_empty_system_flagged(self):
        score = color_match(ColoredSummary(()), colored(g=2))
        assert score.flag == ZERO_DENOMINATOR

    def test_same_colors_merge(self):
        yellow = ColorId("a1", "y")
        merged = merge_same_colors(ColoredSummary((ColoredEntry(yellow, 11), ColoredEntry(yellow, 3))))
        assert merged.estimates() == {yellow: 14}
        assert len(merged.entries) == 1

    def test_colorless_entries_count_against_precision(self):
        system = ColoredSummary((ColoredEntry(ColorId("a1", "y"), 2), ColoredEntry(None, 2)))
        score = color_match(system, colored(y=2))
        assert score.p == 0.5
        assert score.r == 1.0

    def test_entry_order_and_premerging_do_not_matter(self):
        human = colored(y=12, g=9, r=6)
        y, g, b = (ColorId("a1", c) for c in "ygb")
        split = [ColoredEntry(y, 11), ColoredEntry(g, 4), ColoredEntry(None, 2),
                 ColoredEntry(y, 3), ColoredEntry(b, 1)]
        merged = colored(y=14, g=4, b=1).entries + (ColoredEntry(None, 2),)
        expected = color_match(ColoredSummary(merged), human)
        for entries in (split, split[::-1], split[2:] + split[:2]):
            score = color_match(ColoredSummary(tuple(entries)), human)
            assert (score.p, score.r) == pytest.approx((expected.p, expected.r))

    def test_covering_system_has_full_recall(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            human = {c: int(rng.integers(1, 10)) for c in "ygrbm" if rng.uniform() < 0.7} or {"y": 1}
            system = {c: n + int(rng.integers(0, 5)) for c, n in human.items()}
            system.update({c: int(rng.integers(1, 5)) for c in "xz" if rng.uniform() < 0.5})
            assert color_match(colored(**system), colored(**human)).r == 1.0

    def test_ambiguous_entries_flagged(self):
        entry = ColoredEntry(ColorId("a1", "y"), 2, "clt", ambiguous=True)
        score = color_match(ColoredSummary((entry,)), colored(y=2))
        assert score.flag == AMBIGUOUS_COLOR
        assert score.p == 1.0


class TestAssignColors:
    def test_exact_highlight_inherits_color(self, example_corpus):
        annotation = example_corpus.annotations[("1", PromptKind.INTERESTING, "a1")]
        s3 = example_corpus.responses_for("1", PromptKind.INTERESTING)[2]
        phrase = CandidatePhrase.from_span(s3, 0, 2)
        summary = assign_colors([(phrase, 4)], annotation)
        assert summary.estimates() == {ColorId("a1", "red"): 4}

    def test_same_color_phrases_merge(self, example_corpus):
        annotation = example_corpus.annotations[("1", PromptKind.INTERESTING, "a1")]
        s1, s2 = example_corpus.responses_for("1", PromptKind.INTERESTING)[:2]
        system = [(CandidatePhrase.from_span(s1, 1, 4), 11), (CandidatePhrase.from_span(s2, 0, 1), 3)]
        assert assign_colors(system, annotation).estimates() == {ColorId("a1", "yellow"): 14}

    def split_color(self, corpus, start, end):
        annotation = corpus.annotations[("1", PromptKind.INTERESTING, "a1")]
        s1 = corpus.responses_for("1", PromptKind.INTERESTING)[0]
        return color_of(CandidatePhrase.from_span(s1, start, end), annotation.highlights)

    def test_half_of_one_highlight_gets_no_color(self, example_corpus):
        # "The central": 1 yellow token of 2
        assert self.split_color(example_corpus, 0, 2) == (None, False)

    def test_split_phrase_takes_larger_overlap(self, example_corpus):
        # "theorem and normal approximations": 1 yellow token, 2 green tokens of 4
        assert self.split_color(example_corpus, 3, 7) == (ColorId("a1", "green"), True)

    def test_even_split_goes_to_earlier_highlight(self, example_corpus):
        # "limit theorem and normal approximations": 2 yellow, 2 green of 5
        assert self.split_color(example_corpus, 2, 7) == (ColorId("a1", "yellow"), True)

    def test_human_summary(self, example_corpus):
        annotation = example_corpus.annotations[("1", PromptKind.INTERESTING, "a1")]
        human = human_summary(annotation)
        assert human.total == 5
        assert human.estimates()[ColorId("a1", "yellow")] == 2


class TestStudentCoverage:
    def test_unhighlighted_student_not_covered(self, example_corpus):
        responses = example_corpus.responses_for("1", PromptKind.INTERESTING)
        annotation = example_corpus.annotations[("1", PromptKind.INTERESTING, "a1")]
        assert student_coverage(annotation, responses) == pytest.approx(0.8)

    def test_all_covered(self, example_corpus):
        responses = example_corpus.responses_for("1", PromptKind.INTERESTING)[:4]
        annotation = example_corpus.annotations[("1", PromptKind.INTERESTING, "a1")]
        assert student_coverage(annotation, responses) == 1.0

    def test_no_responses(self, example_corpus):
        annotation = example_corpus.annotations[("1", PromptKind.INTERESTING, "a1")]
        with pytest.raises(NoResponses):
            student_coverage(annotation, [])


class TestPairedTTest:
    def test_textbook(self):
        z = np.array([-1.0, 1.0] * 5)
        a = 1.0 + z * math.sqrt(0.9)
        result = paired_ttest(a, np.zeros(10))
        assert result.t == pytest.approx(3.162, abs=1e-3)
        assert result.p_two_tailed == pytest.approx(0.0115, abs=5e-4)
        assert result.significant

    def test_identical_is_degenerate(self):
        result = paired_ttest([0.5, 0.6, 0.7], [0.5, 0.6, 0.7])
        assert result.degenerate
        assert result.p_two_tailed == 1.0
        assert not result.significant

    def test_p_vanishes_with_jitter(self):
        previous = 1.0
        for eps in (1e-1, 1e-3, 1e-6):
            a = np.array([1.0, 1.0 + eps, 1.0 - eps, 1.0])
            p = paired_ttest(a, np.zeros(4)).p_two_tailed
            assert p < previous
            previous = p
        assert previous < 1e-6

    def test_swapping_samples_negates_t(self):
        rng = np.random.default_rng(2)
        a, b = rng.uniform(size=12), rng.uniform(size=12)
        forward, backward = paired_ttest(a, b), paired_ttest(b, a)
        assert forward.t == -backward.t
        assert forward.p_two_tailed == pytest.approx(backward.p_two_tailed)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            paired_ttest([1.0, 2.0], [1.0])


class TestPearson:
    def test_perfect(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_constant_is_nan(self):
        assert math.isnan(pearson([1, 1, 1], [1, 2, 3]))


class TestPrfScore:
    def test_mean_recomputes_f(self):
        score = PrfScore.mean([PrfScore.of(1.0, 0.0), PrfScore.of(0.0, 1.0)])
        assert (score.p, score.r) == (0.5, 0.5)
        assert score.f == pytest.approx(0.5)
