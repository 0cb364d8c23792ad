import json
import logging
import re
import threading
from collections import Counter, defaultdict
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import click
from cachetools import LRUCache, cached
from nltk.stem.porter import PorterStemmer

from bulletin import Config, cli
from bulletin.error_handling import BulletinError, ValidationError

LOGGER = logging.getLogger(__name__)


class PromptKind(Enum):
    INTERESTING = ("interesting", "Describe what you found most interesting in today's class")
    CONFUSING = ("confusing", "Describe what was confusing or needed more detail")

    def __init__(self, key: str, text: str):
        self.key = key
        self.text = text

    @classmethod
    def parse(cls, value: str) -> "PromptKind":
        for kind in cls:
            if kind.key == value:
                return kind
        raise ValueError(f"unknown prompt kind {value!r}")

    def __str__(self) -> str:
        return self.key


class CorpusError(ValidationError):
    pass


class MalformedRecord(CorpusError):
    def __init__(self, path, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = str(path)
        self.line = line
        self.reason = reason


class SpanOutOfBounds(CorpusError):
    pass


class OrphanColor(CorpusError):
    pass


class DuplicateKey(CorpusError):
    pass


class UnknownResponse(CorpusError):
    pass


class EmptyCorpus(BulletinError):
    pass


_PORTER = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)
_STEM_LOCK = threading.Lock()


@cached(cache=LRUCache(maxsize=Config.STEM_CACHE_SIZE), lock=_STEM_LOCK)
def stem(word: str) -> str:
    """Porter (1980) stem of an already lowercased word."""
    if not word:
        return word
    return _PORTER.stem(word, to_lowercase=False)


def _load_stopwords(path: str) -> FrozenSet[str]:
    with open(path, encoding="utf-8") as f:
        return frozenset(
            line.strip().lower() for line in f if line.strip() and not line.startswith("#")
        )


STOPWORDS = _load_stopwords(Config.STOPWORDS_PATH)


def is_stopword(word: str) -> bool:
    return word.lower() in STOPWORDS


def is_word(text: str) -> bool:
    return any(ch.isalnum() for ch in text)


@dataclass(frozen=True)
class Token:
    raw: str
    lower: str
    stem: str
    char_start: int
    char_end: int
    pos: Optional[str] = None
    chunk: Optional[str] = None

    @classmethod
    def make(cls, raw: str, start: int, pos: Optional[str] = None, chunk: Optional[str] = None) -> "Token":
        lower = raw.lower()
        return cls(
            raw=raw,
            lower=lower,
            stem=stem(lower),
            char_start=start,
            char_end=start + len(raw),
            pos=pos,
            chunk=chunk,
        )


_CHUNK_RE = re.compile(r"\S+")


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    for match in _CHUNK_RE.finditer(text):
        chunk = match.group()
        base = match.start()
        lead = 0
        while lead < len(chunk) and not chunk[lead].isalnum():
            lead += 1
        if lead == len(chunk):
            tokens.extend(Token.make(ch, base + i) for i, ch in enumerate(chunk))
            continue
        trail = len(chunk)
        while not chunk[trail - 1].isalnum():
            trail -= 1
        tokens.extend(Token.make(chunk[i], base + i) for i in range(lead))
        tokens.append(Token.make(chunk[lead:trail], base + lead))
        tokens.extend(Token.make(chunk[i], base + i) for i in range(trail, len(chunk)))
    return tokens


@dataclass(frozen=True)
class ResponseRef:
    student_id: str
    lecture_id: str
    prompt: PromptKind

    @property
    def key(self) -> Tuple[str, str, str]:
        return (self.lecture_id, self.prompt.key, self.student_id)

    def __lt__(self, other: "ResponseRef") -> bool:
        return self.key < other.key


@dataclass(frozen=True)
class Response:
    student_id: str
    lecture_id: str
    prompt_kind: PromptKind
    text: str
    tokens: Tuple[Token, ...]

    @property
    def ref(self) -> ResponseRef:
        return ResponseRef(self.student_id, self.lecture_id, self.prompt_kind)

    @property
    def word_count(self) -> int:
        return sum(1 for t in self.tokens if is_word(t.raw))

    @property
    def has_chunk_tags(self) -> bool:
        return all(t.chunk is not None for t in self.tokens)

    def span_text(self, start: int, end: int) -> str:
        if start >= end:
            return ""
        return self.text[self.tokens[start].char_start:self.tokens[end - 1].char_end]


@dataclass(frozen=True)
class ColorId:
    annotator_id: str
    color_key: str

    def __str__(self) -> str:
        return f"{self.annotator_id}:{self.color_key}"


@dataclass(frozen=True)
class Highlight:
    response_ref: ResponseRef
    start: int
    end: int
    color: ColorId

    @property
    def span(self) -> Tuple[int, int]:
        return (self.start, self.end)

    @property
    def annotator_id(self) -> str:
        return self.color.annotator_id

    def overlaps(self, other: "Highlight") -> bool:
        return (self.response_ref == other.response_ref
                and self.start < other.end and other.start < self.end)


@dataclass(frozen=True)
class SummaryPhrase:
    text: Tuple[str, ...]
    supporters: int
    color: Optional[ColorId] = None
    raw: str = ""


@dataclass(frozen=True)
class LectureAnnotation:
    lecture_id: str
    prompt_kind: PromptKind
    annotator_id: str
    summary: Tuple[SummaryPhrase, ...]
    highlights: Tuple[Highlight, ...]

    @property
    def colors(self) -> FrozenSet[ColorId]:
        return frozenset(p.color for p in self.summary if p.color is not None)

    def highlights_for(self, ref: ResponseRef) -> List[Highlight]:
        return [h for h in self.highlights if h.response_ref == ref]


CellKey = Tuple[str, PromptKind]
AnnotationKey = Tuple[str, PromptKind, str]


@dataclass(frozen=True)
class ReflectionCorpus:
    course_id: str
    responses: Mapping[CellKey, Tuple[Response, ...]]
    annotations: Mapping[AnnotationKey, LectureAnnotation]
    annotator_ids: Tuple[str, ...]

    def __post_init__(self):
        if not isinstance(self.responses, MappingProxyType):
            object.__setattr__(self, "responses", MappingProxyType(dict(self.responses)))
        if not isinstance(self.annotations, MappingProxyType):
            object.__setattr__(self, "annotations", MappingProxyType(dict(self.annotations)))
        index = {r.ref: r for cell in self.responses.values() for r in cell}
        object.__setattr__(self, "_index", index)

    def __hash__(self) -> int:
        return hash((self.course_id, tuple(self.responses), tuple(self.annotations)))

    @property
    def lectures(self) -> List[str]:
        return sorted({lecture for lecture, _ in self.responses}, key=_natural_key)

    @property
    def cells(self) -> List[CellKey]:
        return sorted(self.responses, key=lambda c: (_natural_key(c[0]), c[1].key))

    @property
    def students(self) -> List[str]:
        return sorted({r.student_id for r in self.all_responses()}, key=_natural_key)

    def all_responses(self) -> Iterator[Response]:
        for cell in self.cells:
            yield from self.responses[cell]

    def responses_for(self, lecture_id: str, prompt: PromptKind) -> Tuple[Response, ...]:
        return self.responses.get((lecture_id, prompt), ())

    def annotations_for(self, lecture_id: str, prompt: PromptKind) -> List[LectureAnnotation]:
        return [self.annotations[(lecture_id, prompt, a)] for a in self.annotator_ids
                if (lecture_id, prompt, a) in self.annotations]

    def response(self, ref: ResponseRef) -> Response:
        try:
            return self._index[ref]
        except KeyError:
            raise UnknownResponse(f"no response for {ref.key}") from None

    def has_chunk_tags(self) -> bool:
        return all(r.has_chunk_tags for r in self.all_responses())

    def restrict(self, lectures: Iterable[str]) -> "ReflectionCorpus":
        keep = set(lectures)
        return ReflectionCorpus(
            course_id=self.course_id,
            responses={k: v for k, v in self.responses.items() if k[0] in keep},
            annotations={k: v for k, v in self.annotations.items() if k[0] in keep},
            annotator_ids=self.annotator_ids,
        )

    def without_lecture(self, lecture_id: str) -> "ReflectionCorpus":
        return self.restrict(lec for lec in self.lectures if lec != lecture_id)


def _natural_key(value: str):
    return [int(part) if part.isdigit() else part for part in re.split(r"(\d+)", value)]


_RESPONSE_FIELDS = {"course_id", "lecture_id", "prompt", "student_id", "text", "tokens"}
_ANNOTATION_FIELDS = {"lecture_id", "prompt", "annotator_id", "summary", "highlights"}


def _read_jsonl(path) -> Iterator[Tuple[int, dict]]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedRecord(path, lineno, f"bad JSON: {e.msg}") from None
            if not isinstance(record, dict):
                raise MalformedRecord(path, lineno, "record is not a JSON object")
            yield lineno, record


def _require(record: dict, key: str, kind, path, lineno: int):
    if key not in record:
        raise MalformedRecord(path, lineno, f"missing field {key!r}")
    value = record[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise MalformedRecord(path, lineno, f"field {key!r} has wrong type")
    return value


def _parse_prompt(value, path, lineno: int) -> PromptKind:
    try:
        return PromptKind.parse(value)
    except ValueError:
        raise MalformedRecord(path, lineno, f"prompt must be interesting|confusing, got {value!r}") from None


def _warn_unknown(record: dict, known: set, seen: set, path):
    for key in record:
        if key not in known and key not in seen:
            seen.add(key)
            LOGGER.warning(f"{path}: ignoring unknown field {key!r}")


def _tokens_from_record(text: str, items, path, lineno: int) -> List[Token]:
    if not isinstance(items, list):
        raise MalformedRecord(path, lineno, "tokens must be a list")
    tokens = []
    cursor = 0
    for item in items:
        if not isinstance(item, dict) or not isinstance(item.get("text"), str) or not item["text"]:
            raise MalformedRecord(path, lineno, "token entries need a non-empty 'text'")
        start = text.find(item["text"], cursor)
        if start < 0:
            raise MalformedRecord(path, lineno, f"token {item['text']!r} not found in text")
        tokens.append(Token.make(item["text"], start, pos=item.get("pos"), chunk=item.get("chunk")))
        cursor = start + len(item["text"])
    return tokens


def load_corpus(responses_path, annotations_path=None) -> ReflectionCorpus:
    cells: Dict[CellKey, List[Response]] = defaultdict(list)
    index: Dict[ResponseRef, Response] = {}
    course_id: Optional[str] = None
    unknown: set = set()

    for lineno, record in _read_jsonl(responses_path):
        _warn_unknown(record, _RESPONSE_FIELDS, unknown, responses_path)
        lecture = str(_require(record, "lecture_id", (str, int), responses_path, lineno))
        student = str(_require(record, "student_id", (str, int), responses_path, lineno))
        text = _require(record, "text", str, responses_path, lineno)
        prompt = _parse_prompt(record.get("prompt"), responses_path, lineno)
        record_course = str(record.get("course_id", "")) or "course"
        if course_id is None:
            course_id = record_course
        elif record_course != course_id:
            LOGGER.warning(f"{responses_path}:{lineno}: course {record_course!r} differs from {course_id!r}")

        if "tokens" in record and record["tokens"] is not None:
            tokens = _tokens_from_record(text, record["tokens"], responses_path, lineno)
        else:
            tokens = tokenize(text)
        if not tokens:
            LOGGER.warning(f"{responses_path}:{lineno}: empty response from {student} skipped")
            continue

        response = Response(student, lecture, prompt, text, tuple(tokens))
        if response.ref in index:
            raise DuplicateKey(f"{responses_path}:{lineno}: duplicate response {response.ref.key}")
        index[response.ref] = response
        cells[(lecture, prompt)].append(response)

    annotations: Dict[AnnotationKey, LectureAnnotation] = {}
    if annotations_path is not None:
        unknown = set()
        for lineno, record in _read_jsonl(annotations_path):
            _warn_unknown(record, _ANNOTATION_FIELDS, unknown, annotations_path)
            annotation = _parse_annotation(record, index, annotations_path, lineno)
            key = (annotation.lecture_id, annotation.prompt_kind, annotation.annotator_id)
            if key in annotations:
                raise DuplicateKey(f"{annotations_path}:{lineno}: duplicate annotation for "
                                   f"{annotation.lecture_id}/{annotation.prompt_kind}/{annotation.annotator_id}")
            annotations[key] = annotation

    annotator_ids = tuple(sorted({a for _, _, a in annotations}, key=_natural_key))
    if annotations and len(annotator_ids) != 2:
        LOGGER.warning(f"expected 2 annotators, found {len(annotator_ids)}")

    corpus = ReflectionCorpus(
        course_id=course_id or "course",
        responses={k: tuple(v) for k, v in cells.items()},
        annotations=annotations,
        annotator_ids=annotator_ids,
    )
    LOGGER.info(f"Loaded {len(index)} responses in {len(cells)} cells, {len(annotations)} annotations")
    return corpus


def _parse_annotation(record: dict, index: Dict[ResponseRef, Response], path, lineno: int) -> LectureAnnotation:
    lecture = str(_require(record, "lecture_id", (str, int), path, lineno))
    annotator = str(_require(record, "annotator_id", (str, int), path, lineno))
    prompt = _parse_prompt(record.get("prompt"), path, lineno)

    summary = []
    for item in record.get("summary", []):
        if not isinstance(item, dict) or not isinstance(item.get("text"), str):
            raise MalformedRecord(path, lineno, "summary entries need a 'text'")
        supporters = item.get("supporters", 0)
        if not isinstance(supporters, int) or isinstance(supporters, bool) or supporters < 0:
            raise MalformedRecord(path, lineno, "supporters must be a non-negative integer")
        color = ColorId(annotator, str(item["color"])) if item.get("color") is not None else None
        summary.append(SummaryPhrase(
            text=tuple(t.raw for t in tokenize(item["text"])),
            supporters=supporters,
            color=color,
            raw=item["text"],
        ))
    colors = {p.color for p in summary if p.color is not None}

    highlights = []
    for item in record.get("highlights", []):
        if not isinstance(item, dict):
            raise MalformedRecord(path, lineno, "highlight entries must be objects")
        for key in ("student_id", "start", "end", "color"):
            if key not in item:
                raise MalformedRecord(path, lineno, f"highlight missing {key!r}")
        start, end = item["start"], item["end"]
        if not isinstance(start, int) or not isinstance(end, int):
            raise MalformedRecord(path, lineno, "highlight start/end must be integers")
        ref = ResponseRef(str(item["student_id"]), lecture, prompt)
        response = index.get(ref)
        if response is None:
            raise UnknownResponse(f"{path}:{lineno}: highlight refers to missing response {ref.key}")
        if not 0 <= start < end <= len(response.tokens):
            raise SpanOutOfBounds(
                f"{path}:{lineno}: span [{start}, {end}) outside response {ref.key} "
                f"of {len(response.tokens)} tokens"
            )
        color = ColorId(annotator, str(item["color"]))
        if color not in colors:
            raise OrphanColor(f"{path}:{lineno}: highlight color {item['color']!r} "
                              f"is not in annotator {annotator}'s summary")
        highlights.append(Highlight(ref, start, end, color))

    counts = Counter(h.color for h in highlights)
    for phrase in summary:
        if phrase.color is None:
            continue
        if counts[phrase.color] and phrase.supporters < 1:
            raise MalformedRecord(path, lineno, f"phrase {phrase.raw!r} has highlights but 0 supporters")
        if counts[phrase.color] != phrase.supporters:
            LOGGER.warning(
                f"{path}:{lineno}: {phrase.raw!r} asserts {phrase.supporters} supporters "
                f"but {counts[phrase.color]} highlights carry its color"
            )

    return LectureAnnotation(lecture, prompt, annotator, tuple(summary), tuple(highlights))


def dump_corpus(corpus: ReflectionCorpus, responses_path, annotations_path):
    with open(responses_path, "w", encoding="utf-8") as f:
        for response in corpus.all_responses():
            tokens = []
            for t in response.tokens:
                item = {"text": t.raw}
                if t.pos is not None:
                    item["pos"] = t.pos
                if t.chunk is not None:
                    item["chunk"] = t.chunk
                tokens.append(item)
            f.write(json.dumps({
                "course_id": corpus.course_id,
                "lecture_id": response.lecture_id,
                "prompt": response.prompt_kind.key,
                "student_id": response.student_id,
                "text": response.text,
                "tokens": tokens,
            }, ensure_ascii=False) + "\n")

    with open(annotations_path, "w", encoding="utf-8") as f:
        for key in sorted(corpus.annotations, key=lambda k: (_natural_key(k[0]), k[1].key, k[2])):
            annotation = corpus.annotations[key]
            f.write(json.dumps({
                "lecture_id": annotation.lecture_id,
                "prompt": annotation.prompt_kind.key,
                "annotator_id": annotation.annotator_id,
                "summary": [
                    {"text": p.raw or " ".join(p.text), "supporters": p.supporters,
                     **({"color": p.color.color_key} if p.color else {})}
                    for p in annotation.summary
                ],
                "highlights": [
                    {"student_id": h.response_ref.student_id, "start": h.start, "end": h.end,
                     "color": h.color.color_key}
                    for h in annotation.highlights
                ],
            }, ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class CorpusStats:
    students: int
    lectures: int
    cells: int
    responses: float
    words: float
    words_per_response: float
    highlights: float
    coverage: Optional[float]

    def as_dict(self) -> Dict[str, float]:
        return {
            "students": self.students,
            "lectures": self.lectures,
            "cells": self.cells,
            "responses": self.responses,
            "words": self.words,
            "words_per_response": self.words_per_response,
            "highlights": self.highlights,
            "coverage": self.coverage,
        }


def corpus_stats(corpus: ReflectionCorpus) -> CorpusStats:
    from bulletin.modules.evalmetrics import student_coverage

    cells = corpus.cells
    if not cells:
        raise EmptyCorpus("corpus has no responses")

    responses, words, per_response, highlights, coverage = [], [], [], [], []
    for lecture, prompt in cells:
        cell = corpus.responses_for(lecture, prompt)
        n_words = sum(r.word_count for r in cell)
        responses.append(len(cell))
        words.append(n_words)
        per_response.append(n_words / len(cell))
        annotations = corpus.annotations_for(lecture, prompt)
        if annotations:
            highlights.append(sum(len(a.highlights) for a in annotations) / len(annotations))
            coverage.append(sum(student_coverage(a, cell) for a in annotations) / len(annotations))
        else:
            highlights.append(0.0)

    def mean(values: Sequence[float]) -> float:
        return sum(values) / len(values)

    return CorpusStats(
        students=len(corpus.students),
        lectures=len(corpus.lectures),
        cells=len(cells),
        responses=mean(responses),
        words=mean(words),
        words_per_response=mean(per_response),
        highlights=mean(highlights),
        coverage=mean(coverage) if coverage else None,
    )


def corpus_options(func):
    func = click.option("--annotations", "annotations_path", type=click.Path(dir_okay=False),
                        default=None, help="annotations.jsonl")(func)
    func = click.option("--corpus", "corpus_path", type=click.Path(dir_okay=False),
                        required=True, help="responses.jsonl")(func)
    return func


@cli.command("ingest")
@corpus_options
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="write stats as JSON")
def ingest_cmd(corpus_path, annotations_path, out):
    """Validate a corpus and print its statistics."""
    corpus = load_corpus(corpus_path, annotations_path)
    stats = corpus_stats(corpus)
    lines = [f"course {corpus.course_id}"]
    for key, value in stats.as_dict().items():
        if isinstance(value, float):
            lines.append(f"{key:>20}: {value:.3f}")
        else:
            lines.append(f"{key:>20}: {value}")
    click.echo("\n".join(lines))
    if out:
        Path(out).write_text(json.dumps(stats.as_dict(), indent=2) + "\n", encoding="utf-8")
