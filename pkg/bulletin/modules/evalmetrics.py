import json
import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import click
import numpy as np
from scipy import stats

from bulletin import cli
from bulletin.error_handling import BulletinError
from bulletin.modules.corpus import (
    ColorId,
    Highlight,
    LectureAnnotation,
    Response,
    corpus_options,
    is_word,
    load_corpus,
    stem,
    tokenize,
)

if TYPE_CHECKING:
    from bulletin.modules.extractor import CandidatePhrase

LOGGER = logging.getLogger(__name__)

EMPTY_CANDIDATE = "empty-candidate"
ZERO_DENOMINATOR = "zero-denominator"
AMBIGUOUS_COLOR = "ambiguous-color"
MAX_SKIP = 4


class NoResponses(BulletinError):
    pass


@dataclass(frozen=True)
class PrfScore:
    p: float
    r: float
    f: float
    flag: Optional[str] = None

    @classmethod
    def of(cls, p: float, r: float, flag: Optional[str] = None) -> "PrfScore":
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f, flag)

    @classmethod
    def mean(cls, scores: Sequence["PrfScore"]) -> "PrfScore":
        """Average P and R, then recompute F from the averages."""
        if not scores:
            return cls.of(0.0, 0.0, ZERO_DENOMINATOR)
        flags = sorted({s.flag for s in scores if s.flag})
        return cls.of(
            sum(s.p for s in scores) / len(scores),
            sum(s.r for s in scores) / len(scores),
            ",".join(flags) or None,
        )

    def as_dict(self) -> Dict[str, float]:
        return {"p": self.p, "r": self.r, "f": self.f}


RougeText = Union[str, Sequence[str]]


def _rouge_lines(text: RougeText) -> List[List[str]]:
    # strings are split into bullets on newlines; token lists are one bullet
    if isinstance(text, str):
        lines = [[t.stem for t in tokenize(line) if is_word(t.raw)] for line in text.splitlines()]
    else:
        lines = [[stem(w.lower()) for w in text if is_word(w)]]
    return [line for line in lines if line]


def _ngrams(lines: List[List[str]], n: int) -> Counter:
    grams: Counter = Counter()
    for line in lines:
        grams.update(tuple(line[i:i + n]) for i in range(len(line) - n + 1))
    return grams


def _su_units(lines: List[List[str]], max_skip: int = MAX_SKIP) -> Counter:
    units = _ngrams(lines, 1)
    for line in lines:
        for i in range(len(line)):
            for j in range(i + 1, min(len(line), i + max_skip + 2)):
                units[(line[i], line[j])] += 1
    return units


def _clipped_prf(candidate: Counter, references: Sequence[Counter]) -> PrfScore:
    total = sum(candidate.values())
    scores = []
    for reference in references:
        matches = sum(min(count, reference[unit]) for unit, count in candidate.items())
        ref_total = sum(reference.values())
        p = matches / total if total else 0.0
        r = matches / ref_total if ref_total else 0.0
        scores.append(PrfScore.of(p, r, None if total else EMPTY_CANDIDATE))
    return PrfScore.mean(scores)


def rouge_n(candidate: RougeText, references: Sequence[RougeText], n: int) -> PrfScore:
    if n < 1:
        raise ValueError("n must be at least 1")
    if not references:
        raise ValueError("at least one reference is required")
    return _clipped_prf(_ngrams(_rouge_lines(candidate), n),
                        [_ngrams(_rouge_lines(r), n) for r in references])


def rouge_su4(candidate: RougeText, references: Sequence[RougeText]) -> PrfScore:
    if not references:
        raise ValueError("at least one reference is required")
    return _clipped_prf(_su_units(_rouge_lines(candidate)), [_su_units(_rouge_lines(r)) for r in references])


@dataclass(frozen=True)
class ColoredEntry:
    color: Optional[ColorId]
    estimate: int
    text: str = ""
    ambiguous: bool = False


@dataclass(frozen=True)
class ColoredSummary:
    entries: Tuple[ColoredEntry, ...]

    @property
    def total(self) -> int:
        return sum(e.estimate for e in self.entries)

    @property
    def ambiguous(self) -> int:
        return sum(1 for e in self.entries if e.ambiguous)

    def estimates(self) -> Dict[ColorId, int]:
        out: Dict[ColorId, int] = {}
        for entry in self.entries:
            if entry.color is not None:
                out[entry.color] = out.get(entry.color, 0) + entry.estimate
        return out


def merge_same_colors(summary: ColoredSummary) -> ColoredSummary:
    merged: Dict[ColorId, ColoredEntry] = {}
    colorless = []
    for entry in summary.entries:
        if entry.color is None:
            colorless.append(entry)
        elif entry.color in merged:
            first = merged[entry.color]
            merged[entry.color] = ColoredEntry(
                entry.color,
                first.estimate + entry.estimate,
                first.text,
                first.ambiguous or entry.ambiguous,
            )
        else:
            merged[entry.color] = entry
    return ColoredSummary(tuple(merged.values()) + tuple(colorless))


def color_of(phrase: "CandidatePhrase", highlights: Sequence[Highlight]) -> Tuple[Optional[ColorId], bool]:
    if phrase.response_ref is None:
        return None, False
    best, best_overlap = None, 0
    touched = set()
    spanned = 0
    for h in sorted(highlights, key=lambda h: (h.start, h.end)):
        if h.response_ref != phrase.response_ref:
            continue
        overlap = min(phrase.end, h.end) - max(phrase.start, h.start)
        if overlap <= 0:
            continue
        touched.add(h.color)
        spanned += 1
        if overlap > best_overlap:
            best, best_overlap = h, overlap
    if best is None:
        return None, False
    # a minority share of one highlight stays colourless; split phrases take the largest share
    if 2 * best_overlap <= phrase.end - phrase.start and spanned < 2:
        return None, False
    return best.color, len(touched) > 1


def assign_colors(system: Iterable[Tuple["CandidatePhrase", int]],
                  highlights: Union[LectureAnnotation, Sequence[Highlight]]) -> ColoredSummary:
    """Give each (phrase, estimate) the colour of the highlight covering most of its tokens."""
    if isinstance(highlights, LectureAnnotation):
        highlights = highlights.highlights
    entries = []
    for phrase, estimate in system:
        color, ambiguous = color_of(phrase, highlights)
        if ambiguous:
            LOGGER.warning(f"{phrase.text!r} overlaps highlights of several colours, took {color}")
        entries.append(ColoredEntry(color, estimate, phrase.text, ambiguous))
    return merge_same_colors(ColoredSummary(tuple(entries)))


def human_summary(annotation: LectureAnnotation) -> ColoredSummary:
    return ColoredSummary(tuple(
        ColoredEntry(p.color, p.supporters, p.raw or " ".join(p.text))
        for p in annotation.summary if p.color is not None
    ))


def color_match(system: ColoredSummary, human: ColoredSummary) -> PrfScore:
    system_estimates = merge_same_colors(system).estimates()
    human_estimates = merge_same_colors(human).estimates()
    tp = sum(min(est, human_estimates[c]) for c, est in system_estimates.items() if c in human_estimates)
    system_total = system.total
    human_total = sum(human_estimates.values())
    flags = [] if system_total and human_total else [ZERO_DENOMINATOR]
    if system.ambiguous:
        flags.append(AMBIGUOUS_COLOR)
    return PrfScore.of(
        tp / system_total if system_total else 0.0,
        tp / human_total if human_total else 0.0,
        ",".join(flags) or None,
    )


def student_coverage(annotation: LectureAnnotation, responses: Sequence[Response]) -> float:
    students = {r.student_id for r in responses}
    if not students:
        raise NoResponses(f"no responses for {annotation.lecture_id}/{annotation.prompt_kind}")
    covered = {h.response_ref.student_id for h in annotation.highlights} & students
    return len(covered) / len(students)


@dataclass(frozen=True)
class TTestResult:
    t: float
    p_two_tailed: float
    degenerate: bool = False

    @property
    def significant(self) -> bool:
        return not self.degenerate and self.p_two_tailed < 0.05


def paired_ttest(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("paired samples must be equal-length sequences")
    if len(x) < 2:
        raise ValueError("paired t-test needs at least two pairs")
    d = x - y
    mean = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, 1.0, degenerate=True)
        return TTestResult(math.copysign(math.inf, mean), 0.0, degenerate=True)
    t = mean / (sd / math.sqrt(len(d)))
    p = 2.0 * float(stats.t.sf(abs(t), df=len(d) - 1))
    return TTestResult(t, min(p, 1.0))


def pearson(a: Sequence[float], b: Sequence[float]) -> float:
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("pearson needs two equal-length samples of size >= 2")
    x = x - x.mean()
    y = y - y.mean()
    denom = math.sqrt(float(x @ x) * float(y @ y))
    if denom == 0.0:
        return math.nan
    return float(x @ y) / denom


def read_summaries(path) -> List[dict]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


@cli.command("eval")
@corpus_options
@click.option("--summaries", "summaries_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="JSONL written by `summarize`")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def eval_cmd(corpus_path, annotations_path, summaries_path, out):
    """Score system summaries with ROUGE and colour matching against the annotations."""
    from bulletin.modules.extractor import CandidatePhrase
    from bulletin.modules.corpus import PromptKind, ResponseRef

    corpus = load_corpus(corpus_path, annotations_path)
    rows = ["course\tlecture\tprompt\tsystem\tmetric\tP\tR\tF"]
    for record in read_summaries(summaries_path):
        lecture, prompt = str(record["lecture_id"]), PromptKind.parse(record["prompt"])
        annotations = corpus.annotations_for(lecture, prompt)
        if not annotations:
            LOGGER.warning(f"no annotations for {lecture}/{prompt}, skipped")
            continue
        bullets = record.get("bullets", [])
        candidate = "\n".join(b["text"] for b in bullets)
        references = ["\n".join(p.raw or " ".join(p.text) for p in a.summary) for a in annotations]
        scores = {
            "rouge-1": rouge_n(candidate, references, 1),
            "rouge-2": rouge_n(candidate, references, 2),
            "rouge-su4": rouge_su4(candidate, references),
        }
        system = []
        for b in bullets:
            if b.get("source_student") is None or not b.get("span"):
                continue
            ref = ResponseRef(str(b["source_student"]), lecture, prompt)
            start, end = b["span"]
            phrase = CandidatePhrase.from_span(corpus.response(ref), start, end)
            system.append((phrase, int(b["supporters"])))
        scores["color-match"] = PrfScore.mean([
            color_match(assign_colors(system, a), human_summary(a)) for a in annotations
        ])
        for metric, score in scores.items():
            rows.append(f"{corpus.course_id}\t{lecture}\t{prompt}\t{record.get('system', '')}\t{metric}\t"
                        f"{score.p:.3f}\t{score.r:.3f}\t{score.f:.3f}")
    text = "\n".join(rows) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        click.echo(text, nl=False)
