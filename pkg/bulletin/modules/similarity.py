import json
import logging
import math
import threading
import warnings
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Set, Tuple

import click
import numpy as np
from cachetools import LRUCache
from nltk.translate.bleu_score import sentence_bleu
from scipy import linalg
from scipy.special import expit
from sklearn.feature_extraction.text import TfidfVectorizer

from bulletin import SEED, Config, cli
from bulletin.error_handling import BulletinError
from bulletin.modules.corpus import (
    ColorId,
    LectureAnnotation,
    ReflectionCorpus,
    corpus_options,
    is_stopword,
    is_word,
    load_corpus,
    tokenize,
)
from bulletin.modules.database.modelfile import (
    MalformedModelFile,
    parse_weight,
    read_model_file,
    write_model_file,
)
from bulletin.modules.database.vectors import VectorTable, load_vectors, save_vectors
from bulletin.modules.evalmetrics import PrfScore, color_of
from bulletin.modules.extractor import CandidatePhrase

LOGGER = logging.getLogger(__name__)

METRICS = ("lexical_overlap", "cosine_tf", "lin_taxonomy", "bleu", "simsum", "embedding_cosine", "lsa_cosine")
FEATURE_NAMES = METRICS + tuple(f"has_{m}" for m in METRICS)
SKIP_DISTANCE = 5


class SingleClassTrainingSet(BulletinError):
    pass


class RankDeficient(UserWarning):
    pass


@dataclass(frozen=True)
class SimilarityConfig:
    c: float = 1.0
    epochs: int = 50
    learning_rate: float = 0.1
    seed: int = SEED

    @classmethod
    def from_dict(cls, data: Dict) -> "SimilarityConfig":
        return cls(**{k: data[k] for k in ("c", "epochs", "learning_rate", "seed") if k in data})

    def as_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class LsaConfig:
    k: int = 100
    oversampling: int = 10
    power_iterations: int = 4
    tolerance: float = 1e-6
    max_sweeps: int = 200

    @classmethod
    def from_dict(cls, data: Dict) -> "LsaConfig":
        keys = ("k", "oversampling", "power_iterations", "tolerance", "max_sweeps")
        return cls(**{k: data[k] for k in keys if k in data})


CONFIG = SimilarityConfig()
LSA_CONFIG = LsaConfig()


class Taxonomy(ABC):
    """Word senses with hypernym ancestry and information content."""

    def __init__(self, cache_size: int = Config.LIN_CACHE_SIZE):
        self._cache = LRUCache(maxsize=cache_size)
        self._lock = threading.Lock()

    @abstractmethod
    def senses(self, word: str) -> Sequence[Hashable]:
        ...

    @abstractmethod
    def ancestors(self, sense: Hashable) -> Set[Hashable]:
        """All hypernyms of a sense, the sense itself included."""

    @abstractmethod
    def ic(self, sense: Hashable) -> Optional[float]:
        ...

    def comparable(self, a: Hashable, b: Hashable) -> bool:
        return True

    def covers(self, word: str) -> bool:
        return bool(self.senses(word))

    def lin(self, a: Hashable, b: Hashable) -> float:
        if a == b:
            return 1.0
        ic_a, ic_b = self.ic(a), self.ic(b)
        if ic_a is None or ic_b is None or ic_a + ic_b <= 0:
            return 0.0
        shared = [self.ic(s) for s in self.ancestors(a) & self.ancestors(b)]
        shared = [v for v in shared if v is not None]
        if not shared:
            return 0.0
        return min(1.0, max(0.0, 2.0 * max(shared) / (ic_a + ic_b)))

    def word_similarity(self, x: str, y: str) -> float:
        key = (x, y) if x <= y else (y, x)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        best = 0.0
        for a in self.senses(key[0]):
            for b in self.senses(key[1]):
                if self.comparable(a, b):
                    best = max(best, self.lin(a, b))
        with self._lock:
            self._cache[key] = best
        return best


class InMemoryTaxonomy(Taxonomy):
    def __init__(self, parents: Dict[str, Sequence[str]], ic: Dict[str, float],
                 lexicon: Dict[str, Sequence[str]], cache_size: int = Config.LIN_CACHE_SIZE):
        super().__init__(cache_size)
        self.parents = {k: tuple(v) for k, v in parents.items()}
        self.ic_table = dict(ic)
        self.lexicon = {k.lower(): tuple(v) for k, v in lexicon.items()}

    def senses(self, word: str) -> Sequence[str]:
        return self.lexicon.get(word.lower(), ())

    def ancestors(self, sense: str) -> Set[str]:
        seen = {sense}
        frontier = [sense]
        while frontier:
            for parent in self.parents.get(frontier.pop(), ()):
                if parent not in seen:
                    seen.add(parent)
                    frontier.append(parent)
        return seen

    def ic(self, sense: str) -> Optional[float]:
        return self.ic_table.get(sense)


class WordNetTaxonomy(Taxonomy):
    """WordNet data files read through nltk, with an offset-keyed information-content table."""

    POS = ("n", "v")

    def __init__(self, root: str, ic_path: str, cache_size: int = Config.LIN_CACHE_SIZE):
        from nltk.corpus.reader.wordnet import WordNetCorpusReader

        super().__init__(cache_size)
        self.reader = WordNetCorpusReader(root, None)
        self.ic_table = load_ic_file(ic_path)
        LOGGER.info(f"WordNet taxonomy from {root}, {len(self.ic_table)} IC entries")

    def senses(self, word: str):
        return [s for pos in self.POS for s in self.reader.synsets(word.lower(), pos=pos)]

    def ancestors(self, sense):
        return {sense} | set(sense.closure(lambda s: s.hypernyms() + s.instance_hypernyms()))

    def ic(self, sense) -> Optional[float]:
        return self.ic_table.get(sense.offset())

    def comparable(self, a, b) -> bool:
        return a.pos() == b.pos()


def load_ic_file(path) -> Dict[int, float]:
    table: Dict[int, float] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts or line.startswith("#"):
                continue
            try:
                table[int(parts[0].rstrip("nvar"))] = float(parts[1])
            except (ValueError, IndexError):
                LOGGER.warning(f"{path}:{lineno}: unreadable IC line skipped")
    return table


@dataclass
class SimilarityResources:
    vectors: Optional[VectorTable] = None
    lsa: Optional[VectorTable] = None
    taxonomy: Optional[Taxonomy] = None

    @classmethod
    def load(cls, vectors_path=None, lsa_path=None, taxonomy_dir=None, ic_path=None) -> "SimilarityResources":
        vectors_path = vectors_path or Config.VECTORS_PATH
        taxonomy_dir = taxonomy_dir or Config.TAXONOMY_DIR
        ic_path = ic_path or Config.IC_PATH
        taxonomy = WordNetTaxonomy(taxonomy_dir, ic_path) if taxonomy_dir and ic_path else None
        return cls(
            vectors=load_vectors(vectors_path) if vectors_path else None,
            lsa=load_vectors(lsa_path) if lsa_path else None,
            taxonomy=taxonomy,
        )


@dataclass(frozen=True)
class PairFeatures:
    values: Tuple[float, ...]
    mask: Tuple[bool, ...]

    def __post_init__(self):
        if len(self.values) != len(METRICS) or len(self.mask) != len(METRICS):
            raise ValueError(f"expected {len(METRICS)} metric values and mask bits")

    def metric(self, name: str) -> float:
        return self.values[METRICS.index(name)]

    def available(self, name: str) -> bool:
        return self.mask[METRICS.index(name)]

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(METRICS, self.values))

    def as_vector(self) -> np.ndarray:
        return np.array(self.values + tuple(float(m) for m in self.mask), dtype=float)


def lexical_overlap(a: Sequence[str], b: Sequence[str]) -> float:
    """Dice coefficient over stem sets."""
    x, y = set(a), set(b)
    if not x and not y:
        return 0.0
    return 2.0 * len(x & y) / (len(x) + len(y))


def cosine_tf(a: Sequence[str], b: Sequence[str]) -> float:
    x, y = Counter(a), Counter(b)
    dot = sum(count * y[term] for term, count in x.items())
    norm = math.sqrt(sum(v * v for v in x.values()) * sum(v * v for v in y.values()))
    return min(1.0, dot / norm) if norm else 0.0


def _add_one(p_n, *args, **kwargs):
    # add one to every order, unigrams included
    return [(p.numerator + 1) / (p.denominator + 1) for p in p_n]


def _bleu_one_way(candidate: Sequence[str], reference: Sequence[str]) -> float:
    if not candidate or not reference:
        return 0.0
    return sentence_bleu([list(reference)], list(candidate), weights=(0.5, 0.5), smoothing_function=_add_one)


def bleu(a: Sequence[str], b: Sequence[str]) -> float:
    """Add-one smoothed bigram BLEU averaged over both directions."""
    return (_bleu_one_way(a, b) + _bleu_one_way(b, a)) / 2.0


def _f1(x: Counter, y: Counter) -> float:
    matches = sum(min(count, y[unit]) for unit, count in x.items())
    total_x, total_y = sum(x.values()), sum(y.values())
    if not matches:
        return 0.0
    p, r = matches / total_x, matches / total_y
    return 2 * p * r / (p + r)


def _skip_bigrams(tokens: Sequence[str]) -> Counter:
    return Counter(
        (tokens[i], tokens[j])
        for i in range(len(tokens))
        for j in range(i + 1, min(len(tokens), i + SKIP_DISTANCE + 1))
    )


def simsum(a: Sequence[str], b: Sequence[str]) -> float:
    unigram = _f1(Counter(a), Counter(b))
    skip_a, skip_b = _skip_bigrams(a), _skip_bigrams(b)
    if not skip_a and not skip_b:
        return unigram
    return (unigram + _f1(skip_a, skip_b)) / 2.0


def vector_cosine(table: Optional[VectorTable], a: Sequence[str], b: Sequence[str]) -> Optional[float]:
    """Cosine of mean in-vocabulary vectors clipped to [0, 1]; None when either side has none."""
    if table is None:
        return None
    x, y = table.mean_vector(a), table.mean_vector(b)
    if x is None or y is None:
        return None
    norm = float(np.linalg.norm(x) * np.linalg.norm(y))
    if norm == 0.0:
        return None
    return min(1.0, max(0.0, float(x @ y) / norm))


def lin_phrase(taxonomy: Optional[Taxonomy], a: Sequence[str], b: Sequence[str]) -> Optional[float]:
    if taxonomy is None:
        return None
    x = sorted({w for w in a if is_word(w) and not is_stopword(w) and taxonomy.covers(w)})
    y = sorted({w for w in b if is_word(w) and not is_stopword(w) and taxonomy.covers(w)})
    if not x or not y:
        return None
    return max(taxonomy.word_similarity(u, v) for u in x for v in y)


def pair_features(a: CandidatePhrase, b: CandidatePhrase,
                  resources: Optional[SimilarityResources] = None) -> PairFeatures:
    resources = resources or SimilarityResources()
    lower_a, lower_b = a.lowers, b.lowers
    optional = {
        "lin_taxonomy": lin_phrase(resources.taxonomy, lower_a, lower_b),
        "embedding_cosine": vector_cosine(resources.vectors, lower_a, lower_b),
        "lsa_cosine": vector_cosine(resources.lsa, lower_a, lower_b),
    }
    computed = {
        "lexical_overlap": lexical_overlap(a.stems, b.stems),
        "cosine_tf": cosine_tf(a.stems, b.stems),
        "bleu": bleu(lower_a, lower_b),
        "simsum": simsum(lower_a, lower_b),
    }
    values, mask = [], []
    for name in METRICS:
        value = computed.get(name, optional.get(name))
        values.append(0.0 if value is None else float(value))
        mask.append(value is not None)
    return PairFeatures(tuple(values), tuple(mask))


@dataclass(frozen=True)
class LabeledPair:
    phrase_a: CandidatePhrase
    phrase_b: CandidatePhrase
    similar: bool
    annotator_id: Optional[str] = None


def annotation_phrases(corpus: ReflectionCorpus, annotation: LectureAnnotation) -> List[Tuple[CandidatePhrase, ColorId]]:
    return [
        (CandidatePhrase.from_span(corpus.response(h.response_ref), h.start, h.end), h.color)
        for h in annotation.highlights
    ]


def build_pair_training_set(corpus: ReflectionCorpus) -> List[LabeledPair]:
    pairs = []
    for key in sorted(corpus.annotations, key=lambda k: (k[0], k[1].key, k[2])):
        annotation = corpus.annotations[key]
        phrases = annotation_phrases(corpus, annotation)
        for (a, color_a), (b, color_b) in combinations(phrases, 2):
            if a.key == b.key:
                continue
            pairs.append(LabeledPair(a, b, color_a == color_b, annotation.annotator_id))
    LOGGER.debug(f"{len(pairs)} labeled pairs, {sum(p.similar for p in pairs)} positive")
    return pairs


@dataclass
class SimilarityModel:
    weights: np.ndarray
    bias: float
    config: SimilarityConfig = CONFIG
    history: List[float] = field(default_factory=list)

    def decision(self, features: PairFeatures) -> float:
        return float(self.weights @ features.as_vector() + self.bias)


def _hinge_objective(w, b, X, y, cw, lam) -> float:
    margins = np.maximum(0.0, 1.0 - y * (X @ w + b))
    return 0.5 * lam * float(w @ w) + float(np.mean(cw * margins))


def fit_svm(X: np.ndarray, y: np.ndarray, config: SimilarityConfig = CONFIG) -> SimilarityModel:
    """Class-weighted linear SVM by stochastic subgradient descent over a fixed shuffled order.

    An epoch that raises the objective is rolled back and the learning rate halved, so
    ``history`` holds the objective of the kept weights after every epoch.
    """
    n, d = X.shape
    n_pos = int((y > 0).sum())
    if n_pos == 0 or n_pos == n:
        raise SingleClassTrainingSet(f"{n_pos} positive and {n - n_pos} negative pairs")
    cw = np.where(y > 0, n / (2.0 * n_pos), n / (2.0 * (n - n_pos)))
    lam = 1.0 / (config.c * n)
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(n)

    w, b = np.zeros(d), 0.0
    current = _hinge_objective(w, b, X, y, cw, lam)
    rate = config.learning_rate
    history = []
    t = 0
    for epoch in range(config.epochs):
        w_next, b_next = w.copy(), b
        for i in order:
            eta = rate / (1.0 + lam * rate * t)
            margin = y[i] * (X[i] @ w_next + b_next)
            w_next *= 1.0 - eta * lam
            if margin < 1.0:
                w_next += eta * cw[i] * y[i] * X[i]
                b_next += eta * cw[i] * y[i]
            t += 1
        value = _hinge_objective(w_next, b_next, X, y, cw, lam)
        if value <= current:
            w, b, current = w_next, b_next, value
        else:
            rate /= 2.0
            LOGGER.debug(f"epoch {epoch}: objective {value:.4f} > {current:.4f}, rate now {rate:g}")
        history.append(current)
    LOGGER.info(f"similarity SVM: {n} pairs ({n_pos} positive), objective {current:.4f}")
    return SimilarityModel(w, float(b), config, history)


def train_similarity(pairs: Sequence[LabeledPair], features: Sequence[PairFeatures],
                     config: SimilarityConfig = CONFIG) -> SimilarityModel:
    if len(pairs) != len(features):
        raise ValueError("pairs and features must align")
    if not pairs:
        raise SingleClassTrainingSet("no training pairs")
    X = np.array([f.as_vector() for f in features])
    y = np.array([1.0 if p.similar else -1.0 for p in pairs])
    return fit_svm(X, y, config)


@dataclass(frozen=True)
class Prediction:
    score: float
    similar: bool


def predict_similar(model: SimilarityModel, a: CandidatePhrase, b: CandidatePhrase,
                    resources: Optional[SimilarityResources] = None) -> Prediction:
    score = model.decision(pair_features(a, b, resources))
    return Prediction(score, score >= 0.0)


def lsa_cosine(lsa: VectorTable, a: CandidatePhrase, b: CandidatePhrase) -> float:
    value = vector_cosine(lsa, a.lowers, b.lowers)
    return 0.0 if value is None else value


def lsa_baseline_similar(lsa: VectorTable, a: CandidatePhrase, b: CandidatePhrase, threshold: float) -> bool:
    return lsa_cosine(lsa, a, b) >= threshold


# predictor: (a, b) -> (similar, edge weight in (0, 1])
Predictor = Callable[[CandidatePhrase, CandidatePhrase], Tuple[bool, float]]


@dataclass
class EnsemblePredictor:
    model: SimilarityModel
    resources: Optional[SimilarityResources] = None

    def __call__(self, a: CandidatePhrase, b: CandidatePhrase) -> Tuple[bool, float]:
        prediction = predict_similar(self.model, a, b, self.resources)
        return prediction.similar, float(expit(prediction.score))

    def score(self, a: CandidatePhrase, b: CandidatePhrase) -> float:
        return predict_similar(self.model, a, b, self.resources).score


@dataclass
class LsaPredictor:
    lsa: VectorTable
    threshold: float = 0.5

    def __call__(self, a: CandidatePhrase, b: CandidatePhrase) -> Tuple[bool, float]:
        cosine = lsa_cosine(self.lsa, a, b)
        return cosine >= self.threshold and cosine > 0.0, cosine


@dataclass
class ColorOraclePredictor:
    """Calls two phrases similar when they inherit the same gold colour."""

    highlights: Sequence
    _colors: Dict = field(default_factory=dict, init=False, repr=False)

    @classmethod
    def from_annotation(cls, annotation: LectureAnnotation) -> "ColorOraclePredictor":
        return cls(annotation.highlights)

    def color(self, phrase: CandidatePhrase) -> Optional[ColorId]:
        if phrase.key not in self._colors:
            self._colors[phrase.key] = color_of(phrase, self.highlights)[0]
        return self._colors[phrase.key]

    def __call__(self, a: CandidatePhrase, b: CandidatePhrase) -> Tuple[bool, float]:
        x, y = self.color(a), self.color(b)
        return x is not None and x == y, 1.0


def evaluate_pairs(predictor: Predictor, pairs: Iterable[LabeledPair]) -> PrfScore:
    tp = fp = fn = 0
    for pair in pairs:
        predicted, _ = predictor(pair.phrase_a, pair.phrase_b)
        if predicted and pair.similar:
            tp += 1
        elif predicted:
            fp += 1
        elif pair.similar:
            fn += 1
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return PrfScore.of(p, r)


def _lsa_terms(text: str) -> List[str]:
    return [t.lower for t in tokenize(text) if is_word(t.raw)]


def term_document_matrix(texts: Sequence[str]) -> Tuple[List[str], np.ndarray]:
    """Smoothed TF-IDF over lowercased word tokens; rows are terms, columns documents."""
    vectorizer = TfidfVectorizer(tokenizer=_lsa_terms, token_pattern=None, lowercase=False,
                                 norm=None, smooth_idf=True)
    try:
        X = vectorizer.fit_transform(texts)
    except ValueError:
        # empty vocabulary
        return [], np.zeros((0, len(texts)))
    return list(vectorizer.get_feature_names_out()), X.T.toarray()


def truncated_svd(A: np.ndarray, k: int, config: LsaConfig = LSA_CONFIG, seed: int = SEED):
    """Rank-k SVD by randomized subspace iteration until singular values settle."""
    m, n = A.shape
    width = min(k + config.oversampling, m, n)
    rng = np.random.default_rng(seed)
    Q, _ = linalg.qr(A @ rng.standard_normal((n, width)), mode="economic")
    previous = None
    for sweep in range(1, config.max_sweeps + 1):
        Z, _ = linalg.qr(A.T @ Q, mode="economic")
        Q, _ = linalg.qr(A @ Z, mode="economic")
        s = linalg.svd(Q.T @ A, compute_uv=False)[:k]
        if sweep >= config.power_iterations and previous is not None:
            floor = max(float(s[0]) * 1e-8, np.finfo(float).tiny)
            change = np.max(np.abs(s - previous) / np.maximum(s, floor))
            if change < config.tolerance:
                break
        previous = s
    else:
        LOGGER.warning(f"subspace iteration stopped after {config.max_sweeps} sweeps")
    Ub, s, Vt = linalg.svd(Q.T @ A, full_matrices=False)
    return (Q @ Ub)[:, :k], s[:k], Vt[:k]


def build_lsa(background_texts: Sequence[str], k: int = LSA_CONFIG.k, seed: int = SEED,
              config: LsaConfig = LSA_CONFIG) -> VectorTable:
    if k < 1:
        raise ValueError("LSA dimension must be at least 1")
    terms, A = term_document_matrix(background_texts)
    if not terms:
        raise ValueError("LSA background has no terms")
    limit = min(A.shape)
    if k > limit:
        warnings.warn(f"k={k} exceeds the matrix rank bound {limit}, reduced", RankDeficient)
        k = limit
    U, s, _ = truncated_svd(A, k, config, seed)
    rank = int((s > s[0] * 1e-10).sum()) if s[0] > 0 else 0
    if rank < k:
        warnings.warn(f"only {rank} nonzero singular values, k reduced from {k}", RankDeficient)
        k = max(rank, 1)
        U, s = U[:, :k], s[:k]
    vectors = U * s
    norms = np.linalg.norm(vectors, axis=1)
    table = VectorTable.from_dict(k, {
        term: vector / norm for term, vector, norm in zip(terms, vectors, norms) if norm > 0
    })
    LOGGER.info(f"LSA space: {len(table)} terms, {len(background_texts)} documents, k={k}")
    return table


SIM_HEADER = "sim-model v1"


def save_similarity(model: SimilarityModel, path):
    rows = [(name, float(w)) for name, w in zip(FEATURE_NAMES, model.weights)]
    rows.append(("bias", float(model.bias)))
    write_model_file(path, SIM_HEADER, model.config.as_dict(), rows)


def load_similarity(path) -> SimilarityModel:
    config, rows = read_model_file(path, SIM_HEADER)
    weights = dict()
    for row in rows:
        if len(row) != 2:
            raise MalformedModelFile(f"{path}: bad row {row!r}")
        weights[row[0]] = parse_weight(row[1])
    missing = [n for n in FEATURE_NAMES + ("bias",) if n not in weights]
    if missing:
        raise MalformedModelFile(f"{path}: missing weights for {', '.join(missing)}")
    return SimilarityModel(
        np.array([weights[n] for n in FEATURE_NAMES]),
        weights["bias"],
        SimilarityConfig.from_dict(config),
    )


def resource_options(func):
    for name, help_text in reversed((
        ("--vectors", "word vector file"),
        ("--lsa", "LSA vector file"),
        ("--taxonomy", "WordNet data directory"),
        ("--ic", "information-content file"),
    )):
        func = click.option(name, type=click.Path(exists=True), default=None, help=help_text)(func)
    return func


@cli.command("train-similarity")
@corpus_options
@resource_options
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--seed", type=int, default=None)
def train_similarity_cmd(corpus_path, annotations_path, vectors, lsa, taxonomy, ic, out, config_path, seed):
    """Train the phrase-similarity classifier on same-colour highlight pairs."""
    data = {}
    if config_path:
        with open(config_path, encoding="utf-8") as f:
            data = json.load(f).get("similarity", {})
    config = SimilarityConfig.from_dict(data)
    if seed is not None:
        config = SimilarityConfig(**{**config.as_dict(), "seed": seed})
    corpus = load_corpus(corpus_path, annotations_path)
    resources = SimilarityResources.load(vectors, lsa, taxonomy, ic)
    if resources.lsa is None:
        resources.lsa = build_lsa([r.text for r in corpus.all_responses()], seed=config.seed)
    pairs = build_pair_training_set(corpus)
    features = [pair_features(p.phrase_a, p.phrase_b, resources) for p in pairs]
    save_similarity(train_similarity(pairs, features, config), out)


@cli.command("build-lsa")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="responses.jsonl used as background")
@click.option("--background", type=click.Path(exists=True, dir_okay=False), default=None,
              help="plain-text background, one document per line")
@click.option("--k", type=int, default=LSA_CONFIG.k, show_default=True)
@click.option("--seed", type=int, default=SEED, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def build_lsa_cmd(corpus_path, background, k, seed, out):
    """Build an LSA term space and write it as a vector file."""
    background = background or Config.LSA_BACKGROUND
    if background:
        with open(background, encoding="utf-8") as f:
            texts = [line.strip() for line in f if line.strip()]
    elif corpus_path:
        texts = [r.text for r in load_corpus(corpus_path).all_responses()]
    else:
        raise click.UsageError("pass --corpus or --background")
    with warnings.catch_warnings():
        warnings.simplefilter("always", RankDeficient)
        table = build_lsa(texts, k=k, seed=seed)
    save_vectors(table, out)
