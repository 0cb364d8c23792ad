import json
import logging
import threading
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import click
import numpy as np
from cachetools import LRUCache, cached
from scipy import sparse
from scipy.optimize import minimize
from scipy.special import logsumexp

from bulletin import SEED, cli
from bulletin.error_handling import BulletinError, ValidationError
from bulletin.modules.corpus import (
    PromptKind,
    ReflectionCorpus,
    Response,
    ResponseRef,
    Token,
    corpus_options,
    is_stopword,
    is_word,
    load_corpus,
    tokenize,
)
from bulletin.modules.database.modelfile import (
    MalformedModelFile,
    format_weight,
    parse_weight,
    read_model_file,
    write_model_file,
)
from bulletin.modules.evalmetrics import PrfScore

LOGGER = logging.getLogger(__name__)


class BioLabel(Enum):
    O = "O"
    B = "B"
    I = "I"


# index order is the decoder's tie-break order
LABELS = (BioLabel.O, BioLabel.B, BioLabel.I)
LABEL_INDEX = {label: i for i, label in enumerate(LABELS)}
O, B, I = 0, 1, 2

TRANS_FREE = np.ones((3, 3), dtype=bool)
TRANS_FREE[O, I] = False
START_FREE = np.array([True, True, False])


class OverlappingHighlightsSameAnnotator(ValidationError):
    pass


class DegenerateTrainingSet(BulletinError):
    pass


class MalformedLabels(ValidationError):
    pass


class MissingChunkTags(ValidationError):
    pass


@dataclass(frozen=True)
class CrfConfig:
    l2_sigma: float = 1.0
    max_iterations: int = 200
    tolerance: float = 1e-5
    seed: int = SEED

    @classmethod
    def from_dict(cls, data: Dict) -> "CrfConfig":
        known = {k: data[k] for k in ("l2_sigma", "max_iterations", "tolerance", "seed") if k in data}
        return cls(**known)

    def as_dict(self) -> Dict:
        return asdict(self)


CONFIG = CrfConfig()


def is_well_formed(labels: Sequence[BioLabel]) -> bool:
    previous = BioLabel.O
    for label in labels:
        if label is BioLabel.I and previous is BioLabel.O:
            return False
        previous = label
    return True


@dataclass(frozen=True)
class CandidatePhrase:
    response_ref: Optional[ResponseRef]
    start: int
    end: int
    tokens: Tuple[Token, ...]

    def __post_init__(self):
        if self.start >= self.end or not self.tokens:
            raise ValueError("candidate phrases need a non-empty span")

    @classmethod
    def from_span(cls, response: Response, start: int, end: int) -> "CandidatePhrase":
        return cls(response.ref, start, end, tuple(response.tokens[start:end]))

    @classmethod
    def from_text(cls, text: str, response_ref: Optional[ResponseRef] = None, start: int = 0) -> "CandidatePhrase":
        tokens = tuple(tokenize(text))
        return cls(response_ref, start, start + len(tokens), tokens)

    @property
    def span(self) -> Tuple[int, int]:
        return (self.start, self.end)

    @property
    def student_id(self) -> Optional[str]:
        return self.response_ref.student_id if self.response_ref else None

    @property
    def key(self):
        return (self.response_ref, self.start, self.end)

    @property
    def words(self) -> Tuple[str, ...]:
        return tuple(t.raw for t in self.tokens)

    @property
    def lowers(self) -> Tuple[str, ...]:
        return tuple(t.lower for t in self.tokens)

    @property
    def stems(self) -> Tuple[str, ...]:
        return tuple(t.stem for t in self.tokens)

    @property
    def text(self) -> str:
        return " ".join(self.words)


@dataclass(frozen=True)
class LabeledSequence:
    response: Response
    labels: Tuple[BioLabel, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.response.tokens):
            raise MalformedLabels(
                f"{len(self.labels)} labels for {len(self.response.tokens)} tokens in {self.response.ref.key}"
            )
        if not is_well_formed(self.labels):
            raise MalformedLabels(f"I after O in {self.response.ref.key}")

    @property
    def response_ref(self) -> ResponseRef:
        return self.response.ref

    @property
    def tokens(self) -> Tuple[Token, ...]:
        return self.response.tokens

    def label_indices(self) -> np.ndarray:
        return np.array([LABEL_INDEX[label] for label in self.labels], dtype=int)


def encode_spans(response: Response, spans: Iterable[Tuple[int, int]]) -> LabeledSequence:
    labels = [BioLabel.O] * len(response.tokens)
    for start, end in spans:
        labels[start] = BioLabel.B
        for i in range(start + 1, end):
            labels[i] = BioLabel.I
    return LabeledSequence(response, tuple(labels))


def _highlight_spans(corpus: ReflectionCorpus) -> Dict[ResponseRef, Dict[str, List[Tuple[int, int]]]]:
    spans: Dict[ResponseRef, Dict[str, List[Tuple[int, int]]]] = defaultdict(lambda: defaultdict(list))
    for annotation in corpus.annotations.values():
        for h in annotation.highlights:
            spans[h.response_ref][annotation.annotator_id].append(h.span)
    return spans


def build_training_sequences(corpus: ReflectionCorpus) -> List[LabeledSequence]:
    spans_by_ref = _highlight_spans(corpus)
    sequences: List[LabeledSequence] = []
    for response in corpus.all_responses():
        by_annotator = spans_by_ref.get(response.ref, {})
        for annotator, spans in by_annotator.items():
            ordered = sorted(spans)
            for (s1, e1), (s2, e2) in zip(ordered, ordered[1:]):
                if s2 < e1:
                    raise OverlappingHighlightsSameAnnotator(
                        f"annotator {annotator} has overlapping highlights [{s1},{e1}) and "
                        f"[{s2},{e2}) in {response.ref.key}"
                    )
        # one instance per annotator configuration; identical configurations collapse
        instances = sorted({tuple(sorted(spans)) for spans in by_annotator.values() if spans})
        if not instances:
            sequences.append(encode_spans(response, ()))
        for instance in instances:
            sequences.append(encode_spans(response, instance))
    return sequences


def gold_phrases(corpus: ReflectionCorpus, lecture_id: Optional[str] = None,
                 prompt: Optional[PromptKind] = None) -> List[CandidatePhrase]:
    keys = set()
    for (lecture, kind, _), annotation in corpus.annotations.items():
        if lecture_id is not None and lecture != lecture_id:
            continue
        if prompt is not None and kind is not prompt:
            continue
        keys.update((h.response_ref, h.start, h.end) for h in annotation.highlights)
    return [CandidatePhrase.from_span(corpus.response(ref), s, e) for ref, s, e in sorted(keys)]


@dataclass(frozen=True)
class CellStatistics:
    counts: Dict[str, int]
    ranks: Dict[str, int]

    @classmethod
    def from_responses(cls, responses: Iterable[Response]) -> "CellStatistics":
        counts = Counter(t.stem for r in responses for t in r.tokens if is_word(t.raw))
        ranks = {}
        for stem_, count in counts.items():
            ranks[stem_] = 1 + sum(1 for other in counts.values() if other > count)
        return cls(dict(counts), ranks)


BOS, EOS, MISSING = "<s>", "</s>", "<none>"
TRIGRAM_OFFSETS = ((-2, -1, 0), (-1, 0, 1), (0, 1, 2))
_TEMPLATES = (("word", "lower"), ("pos", "pos"), ("chunk", "chunk"))


@cached(cache=LRUCache(maxsize=8), lock=threading.Lock())
def prompt_stems(prompt: PromptKind) -> FrozenSet[str]:
    return frozenset(t.stem for t in tokenize(prompt.text) if is_word(t.raw))


def _field(tokens: Sequence[Token], i: int, attr: str) -> str:
    if i < 0:
        return BOS
    if i >= len(tokens):
        return EOS
    value = getattr(tokens[i], attr)
    return MISSING if value is None else value


def featurize(tokens: Sequence[Token], position: int, stats: Optional[CellStatistics] = None,
              prompt: Optional[PromptKind] = None) -> Dict[str, float]:
    token = tokens[position]
    features = {"bias": 1.0}
    for name, attr in _TEMPLATES:
        features[f"{name}={_field(tokens, position, attr)}"] = 1.0
    for offsets in TRIGRAM_OFFSETS:
        window = f"{offsets[0]:+d}:{offsets[-1]:+d}"
        for name, attr in _TEMPLATES:
            values = "|".join(_field(tokens, position + o, attr) for o in offsets)
            features[f"{name}[{window}]={values}"] = 1.0
    if prompt is not None and token.stem in prompt_stems(prompt):
        features["in_prompt"] = 1.0
    if is_stopword(token.lower):
        features["stopword"] = 1.0
    if stats is not None and token.stem in stats.counts:
        features["stem_count"] = float(stats.counts[token.stem])
        features["tf_rank"] = float(stats.ranks[token.stem])
    return features


@dataclass
class FeatureAlphabet:
    names: List[str] = field(default_factory=list)
    index: Dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.names)

    def add(self, name: str) -> int:
        if name not in self.index:
            self.index[name] = len(self.names)
            self.names.append(name)
        return self.index[name]

    def get(self, name: str) -> Optional[int]:
        return self.index.get(name)

    def vector(self, features: Dict[str, float], grow: bool = False) -> List[Tuple[int, float]]:
        """Sparse (id, value) list; unseen names are added when growing, dropped otherwise."""
        out = []
        for name, value in features.items():
            fid = self.add(name) if grow else self.get(name)
            if fid is not None:
                out.append((fid, value))
        return out


def _feature_rows(response: Response, stats: Optional[CellStatistics], alphabet: FeatureAlphabet,
                  grow: bool) -> List[List[Tuple[int, float]]]:
    return [
        alphabet.vector(featurize(response.tokens, i, stats, response.prompt_kind), grow=grow)
        for i in range(len(response.tokens))
    ]


def _to_matrix(rows: List[List[Tuple[int, float]]], n_features: int) -> sparse.csr_matrix:
    data, cols, indptr = [], [], [0]
    for row in rows:
        for fid, value in sorted(row):
            cols.append(fid)
            data.append(value)
        indptr.append(len(cols))
    return sparse.csr_matrix((np.array(data, dtype=float), np.array(cols, dtype=int), np.array(indptr)),
                             shape=(len(rows), n_features))


@dataclass
class CrfModel:
    alphabet: FeatureAlphabet
    weights: np.ndarray
    transitions: np.ndarray
    start: np.ndarray
    end: np.ndarray
    config: CrfConfig = CONFIG
    history: List[float] = field(default_factory=list)

    @classmethod
    def zeros(cls, alphabet: FeatureAlphabet, config: CrfConfig = CONFIG) -> "CrfModel":
        transitions = np.zeros((3, 3))
        transitions[~TRANS_FREE] = -np.inf
        start = np.zeros(3)
        start[~START_FREE] = -np.inf
        return cls(alphabet, np.zeros((len(alphabet), 3)), transitions, start, np.zeros(3), config)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def emissions(self, X) -> np.ndarray:
        return np.asarray(X @ self.weights, dtype=float)

    def encode(self, response: Response, stats: Optional[CellStatistics] = None) -> sparse.csr_matrix:
        return _to_matrix(_feature_rows(response, stats, self.alphabet, grow=False), self.n_features)

    def feature_weight(self, name: str, label: BioLabel) -> float:
        fid = self.alphabet.get(name)
        return 0.0 if fid is None else float(self.weights[fid, LABEL_INDEX[label]])


def _forward(E: np.ndarray, T: np.ndarray, start: np.ndarray, end: np.ndarray):
    n = E.shape[0]
    alpha = np.empty((n, 3))
    alpha[0] = start + E[0]
    for t in range(1, n):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + T, axis=0) + E[t]
    return alpha, float(logsumexp(alpha[-1] + end))


def _backward(E: np.ndarray, T: np.ndarray, start: np.ndarray, end: np.ndarray):
    n = E.shape[0]
    beta = np.empty((n, 3))
    beta[-1] = end
    for t in range(n - 2, -1, -1):
        beta[t] = logsumexp(T + (E[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta, float(logsumexp(start + E[0] + beta[0]))


def forward(model: CrfModel, X):
    return _forward(model.emissions(X), model.transitions, model.start, model.end)


def backward(model: CrfModel, X):
    return _backward(model.emissions(X), model.transitions, model.start, model.end)


def log_partition(model: CrfModel, X) -> float:
    """Log of the summed exp-scores of every well-formed label sequence."""
    if X.shape[0] == 0:
        raise ValueError("log_partition needs a non-empty sequence")
    return forward(model, X)[1]


def path_score(model: CrfModel, X, labels: Sequence[int]) -> float:
    E = model.emissions(X)
    y = np.asarray(labels, dtype=int)
    score = model.start[y[0]] + E[np.arange(len(y)), y].sum() + model.end[y[-1]]
    if len(y) > 1:
        score += model.transitions[y[:-1], y[1:]].sum()
    return float(score)


def viterbi(model: CrfModel, X) -> Tuple[BioLabel, ...]:
    """Best well-formed labeling; ties go to O, then B, then I at the earliest position."""
    E = model.emissions(X)
    T = model.transitions
    n = E.shape[0]
    if n == 0:
        return ()
    suffix = np.empty((n, 3))
    suffix[-1] = model.end
    for t in range(n - 2, -1, -1):
        suffix[t] = np.max(T + (E[t + 1] + suffix[t + 1])[None, :], axis=1)
    y = int(np.argmax(model.start + (E[0] + suffix[0])))
    path = [y]
    for t in range(1, n):
        y = int(np.argmax(T[y] + (E[t] + suffix[t])))
        path.append(y)
    return tuple(LABELS[i] for i in path)


class CrfObjective:
    """L2-regularized conditional log-likelihood over encoded sequences, with its gradient."""

    def __init__(self, data: Sequence[Tuple[sparse.csr_matrix, np.ndarray]], n_features: int, sigma: float):
        self.data = list(data)
        self.n_features = n_features
        self.sigma = sigma
        self.size = n_features * 3 + int(TRANS_FREE.sum()) + int(START_FREE.sum()) + 3
        self._last: Optional[Tuple[bytes, float, np.ndarray]] = None

    def unpack(self, theta: np.ndarray):
        f3 = self.n_features * 3
        n_trans = int(TRANS_FREE.sum())
        n_start = int(START_FREE.sum())
        W = theta[:f3].reshape(self.n_features, 3)
        T = np.full((3, 3), -np.inf)
        T[TRANS_FREE] = theta[f3:f3 + n_trans]
        start = np.full(3, -np.inf)
        start[START_FREE] = theta[f3 + n_trans:f3 + n_trans + n_start]
        end = theta[f3 + n_trans + n_start:].copy()
        return W, T, start, end

    @staticmethod
    def pack(W: np.ndarray, T: np.ndarray, start: np.ndarray, end: np.ndarray) -> np.ndarray:
        return np.concatenate([W.ravel(), T[TRANS_FREE], start[START_FREE], end])

    def value_and_grad(self, theta: np.ndarray) -> Tuple[float, np.ndarray]:
        key = theta.tobytes()
        if self._last is not None and self._last[0] == key:
            return self._last[1], self._last[2].copy()
        W, T, start, end = self.unpack(theta)
        gW = np.zeros_like(W)
        gT = np.zeros((3, 3))
        g_start = np.zeros(3)
        g_end = np.zeros(3)
        ll = 0.0
        for X, y in self.data:
            n = len(y)
            E = np.asarray(X @ W, dtype=float)
            alpha, log_z = _forward(E, T, start, end)
            beta, _ = _backward(E, T, start, end)
            score = start[y[0]] + E[np.arange(n), y].sum() + end[y[-1]]
            if n > 1:
                score += T[y[:-1], y[1:]].sum()
            ll += score - log_z

            node = np.exp(alpha + beta - log_z)
            empirical = np.zeros((n, 3))
            empirical[np.arange(n), y] = 1.0
            gW += np.asarray(X.T @ (empirical - node))
            g_start += empirical[0] - node[0]
            g_end += empirical[-1] - node[-1]
            if n > 1:
                pair = np.exp(alpha[:-1, :, None] + T[None, :, :] + (E[1:] + beta[1:])[:, None, :] - log_z)
                gT -= pair.sum(axis=0)
                np.add.at(gT, (y[:-1], y[1:]), 1.0)

        grad = self.pack(gW, gT, g_start, g_end)
        var = self.sigma ** 2
        value = ll - float(theta @ theta) / (2.0 * var)
        grad = grad - theta / var
        self._last = (key, value, grad.copy())
        return value, grad

    def value(self, theta: np.ndarray) -> float:
        return self.value_and_grad(theta)[0]


def _encode_training(sequences: Sequence[LabeledSequence], stats: Optional[Dict] = None):
    if stats is None:
        by_cell: Dict[Tuple[str, PromptKind], Dict[ResponseRef, Response]] = defaultdict(dict)
        for seq in sequences:
            by_cell[(seq.response.lecture_id, seq.response.prompt_kind)][seq.response_ref] = seq.response
        stats = {cell: CellStatistics.from_responses(rs.values()) for cell, rs in by_cell.items()}
    alphabet = FeatureAlphabet()
    rows = [
        _feature_rows(seq.response, stats.get((seq.response.lecture_id, seq.response.prompt_kind)),
                      alphabet, grow=True)
        for seq in sequences
    ]
    data = [(_to_matrix(r, len(alphabet)), seq.label_indices()) for r, seq in zip(rows, sequences)]
    return alphabet, data


def fit_crf(data: Sequence[Tuple[sparse.csr_matrix, np.ndarray]], alphabet: FeatureAlphabet,
            config: CrfConfig = CONFIG) -> CrfModel:
    if not any((y != O).any() for _, y in data):
        raise DegenerateTrainingSet("every training label is O")
    objective = CrfObjective(data, len(alphabet), config.l2_sigma)
    history: List[float] = []

    def negated(theta):
        value, grad = objective.value_and_grad(theta)
        return -value, -grad

    result = minimize(
        negated,
        np.zeros(objective.size),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": config.max_iterations, "gtol": config.tolerance},
        callback=lambda xk: history.append(objective.value(xk)),
    )
    LOGGER.info(
        f"CRF trained on {len(data)} sequences, {len(alphabet)} features: "
        f"{result.nit} iterations, log-likelihood {-result.fun:.4f} ({result.message})"
    )
    W, T, start, end = objective.unpack(result.x)
    return CrfModel(alphabet, W.copy(), T, start, end, config, history)


def train_crf(sequences: Sequence[LabeledSequence], config: CrfConfig = CONFIG,
              stats: Optional[Dict] = None) -> CrfModel:
    if not sequences:
        raise DegenerateTrainingSet("no training sequences")
    alphabet, data = _encode_training(sequences, stats)
    return fit_crf(data, alphabet, config)


def decode_phrases(sequence: LabeledSequence) -> List[CandidatePhrase]:
    phrases = []
    start = None
    previous = BioLabel.O
    for i, label in enumerate(sequence.labels):
        if label is BioLabel.I and previous is BioLabel.O:
            raise MalformedLabels(f"I after O at position {i} in {sequence.response_ref.key}")
        if label is not BioLabel.I and start is not None:
            phrases.append(CandidatePhrase.from_span(sequence.response, start, i))
            start = None
        if label is BioLabel.B:
            start = i
        previous = label
    if start is not None:
        phrases.append(CandidatePhrase.from_span(sequence.response, start, len(sequence.labels)))
    return phrases


def tag_response(model: CrfModel, response: Response, stats: Optional[CellStatistics] = None) -> LabeledSequence:
    return LabeledSequence(response, viterbi(model, model.encode(response, stats)))


def extract_phrases(model: CrfModel, responses: Sequence[Response]) -> List[CandidatePhrase]:
    """Tag every response of one (lecture, prompt) cell and collect the decoded phrases."""
    stats = CellStatistics.from_responses(responses)
    phrases = []
    for response in responses:
        phrases.extend(decode_phrases(tag_response(model, response, stats)))
    return phrases


def np_chunk_baseline(response: Response) -> List[CandidatePhrase]:
    if not response.has_chunk_tags:
        raise MissingChunkTags(f"response {response.ref.key} has no chunk tags")
    phrases = []
    start = None
    for i, token in enumerate(response.tokens):
        tag = token.chunk.upper()
        if tag == "B-NP" or (tag == "I-NP" and start is None):
            if start is not None:
                phrases.append(CandidatePhrase.from_span(response, start, i))
            start = i
        elif tag != "I-NP" and start is not None:
            phrases.append(CandidatePhrase.from_span(response, start, i))
            start = None
    if start is not None:
        phrases.append(CandidatePhrase.from_span(response, start, len(response.tokens)))
    return phrases


def evaluate_extraction(predicted: Iterable[CandidatePhrase], gold: Iterable[CandidatePhrase]) -> PrfScore:
    predicted_keys = {p.key for p in predicted}
    gold_keys = {g.key for g in gold}
    tp = len(predicted_keys & gold_keys)
    p = tp / len(predicted_keys) if predicted_keys else 0.0
    r = tp / len(gold_keys) if gold_keys else 0.0
    return PrfScore.of(p, r)


CRF_HEADER = "crf-model v1"
_BOUNDARY_FROM = "<s>"
_BOUNDARY_TO = "</s>"


def save_crf(model: CrfModel, path):
    rows = []
    for fid, name in enumerate(model.alphabet.names):
        for li, label in enumerate(LABELS):
            weight = float(model.weights[fid, li])
            if weight != 0.0:
                rows.append((name, label.value, weight))
    trailer = ["transitions"]
    for li, src in enumerate(LABELS):
        for lj, dst in enumerate(LABELS):
            trailer.append(f"{src.value}\t{dst.value}\t{format_weight(model.transitions[li, lj])}")
    for li, label in enumerate(LABELS):
        trailer.append(f"{_BOUNDARY_FROM}\t{label.value}\t{format_weight(model.start[li])}")
        trailer.append(f"{label.value}\t{_BOUNDARY_TO}\t{format_weight(model.end[li])}")
    write_model_file(path, CRF_HEADER, model.config.as_dict(), rows, trailer)


def load_crf(path) -> CrfModel:
    config, rows = read_model_file(path, CRF_HEADER)
    alphabet = FeatureAlphabet()
    entries = []
    in_transitions = False
    transitions = np.zeros((3, 3))
    start = np.zeros(3)
    end = np.zeros(3)
    labels = {label.value: i for i, label in enumerate(LABELS)}
    for row in rows:
        if row == ["transitions"]:
            in_transitions = True
            continue
        if len(row) != 3:
            raise MalformedModelFile(f"{path}: bad row {row!r}")
        a, b, weight = row[0], row[1], parse_weight(row[2])
        if not in_transitions:
            entries.append((alphabet.add(a), labels[b], weight))
        elif a == _BOUNDARY_FROM:
            start[labels[b]] = weight
        elif b == _BOUNDARY_TO:
            end[labels[a]] = weight
        else:
            transitions[labels[a], labels[b]] = weight
    weights = np.zeros((len(alphabet), 3))
    for fid, li, weight in entries:
        weights[fid, li] = weight
    return CrfModel(alphabet, weights, transitions, start, end, CrfConfig.from_dict(config))


def _write_phrases(phrases: Sequence[CandidatePhrase], out):
    lines = [
        json.dumps({
            "lecture_id": p.response_ref.lecture_id,
            "prompt": p.response_ref.prompt.key,
            "student_id": p.student_id,
            "start": p.start,
            "end": p.end,
            "text": p.text,
        }, ensure_ascii=False)
        for p in phrases
    ]
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + ("\n" if lines else ""))
    else:
        for line in lines:
            click.echo(line)


def _cells(corpus: ReflectionCorpus, lecture: Optional[str], prompt: Optional[str]):
    for lec, kind in corpus.cells:
        if lecture is not None and lec != lecture:
            continue
        if prompt is not None and kind.key != prompt:
            continue
        yield lec, kind


@cli.command("train-extractor")
@corpus_options
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="model file to write")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", type=int, default=None)
def train_extractor_cmd(corpus_path, annotations_path, out, config_path, seed):
    """Train the BIO phrase labeler on highlight annotations."""
    data = {}
    if config_path:
        with open(config_path, encoding="utf-8") as f:
            data = json.load(f).get("extractor", {})
    config = CrfConfig.from_dict(data)
    if seed is not None:
        config = CrfConfig(**{**config.as_dict(), "seed": seed})
    corpus = load_corpus(corpus_path, annotations_path)
    model = train_crf(build_training_sequences(corpus), config)
    save_crf(model, out)


@cli.command("extract")
@corpus_options
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="CRF model; omit to use the NP-chunk baseline")
@click.option("--lecture", default=None)
@click.option("--prompt", type=click.Choice([k.key for k in PromptKind]), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def extract_cmd(corpus_path, annotations_path, model_path, lecture, prompt, out):
    """Extract candidate phrases from responses."""
    corpus = load_corpus(corpus_path, annotations_path)
    model = load_crf(model_path) if model_path else None
    phrases: List[CandidatePhrase] = []
    for lec, kind in _cells(corpus, lecture, prompt):
        responses = corpus.responses_for(lec, kind)
        if model is not None:
            phrases.extend(extract_phrases(model, responses))
        else:
            for response in responses:
                phrases.extend(np_chunk_baseline(response))
    _write_phrases(phrases, out)


@cli.command("eval-extraction")
@corpus_options
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="CRF model; omit to score the NP-chunk baseline")
@click.option("--lecture", default=None)
def eval_extraction_cmd(corpus_path, annotations_path, model_path, lecture):
    """Exact-match P/R/F of extracted phrases against merged highlights."""
    corpus = load_corpus(corpus_path, annotations_path)
    model = load_crf(model_path) if model_path else None
    predicted, gold = [], []
    for lec, kind in _cells(corpus, lecture, None):
        responses = corpus.responses_for(lec, kind)
        if model is not None:
            predicted.extend(extract_phrases(model, responses))
        else:
            for response in responses:
                predicted.extend(np_chunk_baseline(response))
        gold.extend(gold_phrases(corpus, lec, kind))
    score = evaluate_extraction(predicted, gold)
    click.echo(f"P\t{score.p:.3f}\nR\t{score.r:.3f}\nF\t{score.f:.3f}")
