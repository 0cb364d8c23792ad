import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from bulletin.error_handling import BulletinError, ValidationError
from bulletin.modules.clustering import Clustering, PhraseGraph
from bulletin.modules.corpus import Response
from bulletin.modules.extractor import CandidatePhrase
from bulletin.modules.similarity import cosine_tf

LOGGER = logging.getLogger(__name__)


class NonSymmetricInput(ValidationError):
    pass


class NegativeWeight(ValidationError):
    pass


class EmptyClustering(BulletinError):
    pass


@dataclass(frozen=True)
class RankConfig:
    damping: float = 0.85
    eps: float = 1e-6
    max_iter: int = 1000
    max_phrases: int = 5
    count_students: bool = False

    @classmethod
    def from_dict(cls, data: Dict) -> "RankConfig":
        keys = ("damping", "eps", "max_iter", "max_phrases", "count_students")
        return cls(**{k: data[k] for k in keys if k in data})

    def as_dict(self) -> Dict:
        return asdict(self)


CONFIG = RankConfig()


def lexrank(weights, damping: float = CONFIG.damping, eps: float = CONFIG.eps,
            max_iter: int = CONFIG.max_iter) -> np.ndarray:
    """Stationary distribution of the damped, row-normalized similarity walk."""
    W = np.asarray(weights, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] < 1:
        raise ValueError("lexrank needs a non-empty square matrix")
    if (W < 0).any():
        raise NegativeWeight("similarity weights must be non-negative")
    if not np.allclose(W, W.T, rtol=0.0, atol=1e-12):
        raise NonSymmetricInput("similarity matrix is not symmetric")
    n = W.shape[0]
    rows = W.sum(axis=1)
    P = np.full((n, n), 1.0 / n)
    linked = rows > 0
    P[linked] = W[linked] / rows[linked, None]
    P = damping * P + (1.0 - damping) / n

    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = x @ P
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - x)) < eps:
            return nxt
        x = nxt
    LOGGER.warning(f"lexrank did not converge in {max_iter} iterations")
    return x


def _order(scores: np.ndarray) -> List[int]:
    # rounding keeps float noise from breaking index-order ties
    return sorted(range(len(scores)), key=lambda i: (-round(float(scores[i]), 12), i))


@dataclass(frozen=True)
class SummaryEntry:
    phrase: CandidatePhrase
    supporters: int
    community_ref: int
    centrality: float = 0.0

    @property
    def text(self) -> str:
        return self.phrase.text


@dataclass(frozen=True)
class Summary:
    entries: Tuple[SummaryEntry, ...]
    lecture_id: Optional[str] = None
    prompt: Optional[str] = None
    system: Optional[str] = None

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def texts(self) -> List[str]:
        return [e.text for e in self.entries]

    @property
    def supporters(self) -> List[int]:
        return [e.supporters for e in self.entries]

    def estimates(self) -> List[Tuple[CandidatePhrase, int]]:
        return [(e.phrase, e.supporters) for e in self.entries]

    def as_text(self) -> str:
        return "\n".join(self.texts)

    def labelled(self, lecture_id: str, prompt: str, system: str) -> "Summary":
        return Summary(self.entries, lecture_id, prompt, system)


def disjointify(clustering: Clustering) -> List[Tuple[int, List[int]]]:
    """Give every node to its most significant community; drop communities left empty."""
    order = sorted(range(len(clustering.communities)),
                   key=lambda i: (clustering.communities[i].significance, i))
    owner: Dict[int, int] = {}
    for index in order:
        for node in sorted(clustering.communities[index].members):
            owner.setdefault(node, index)
    groups: Dict[int, List[int]] = {}
    for node, index in sorted(owner.items()):
        groups.setdefault(index, []).append(node)
    return sorted(groups.items())


def assemble_summary(clustering: Clustering, graph: PhraseGraph, max_phrases: int = CONFIG.max_phrases,
                     config: RankConfig = CONFIG) -> Summary:
    if not clustering.communities:
        raise EmptyClustering("no communities to summarize")
    W = graph.matrix()
    candidates = []
    for index, members in disjointify(clustering):
        centrality = lexrank(W[np.ix_(members, members)], config.damping, config.eps, config.max_iter)
        best = _order(centrality)[0]
        phrase = graph.phrase(members[best])
        if config.count_students:
            supporters = len({graph.phrase(m).student_id for m in members})
        else:
            supporters = len(members)
        candidates.append(SummaryEntry(phrase, supporters, index, float(centrality[best])))
    candidates.sort(key=lambda e: (-e.supporters, -round(e.centrality, 12), e.text, e.community_ref))
    return Summary(tuple(candidates[:max_phrases]))


def response_phrase(response: Response) -> CandidatePhrase:
    return CandidatePhrase.from_span(response, 0, len(response.tokens))


def lexrank_response_baseline(responses: Sequence[Response], max_units: int = CONFIG.max_phrases,
                              threshold: float = 0.1, config: RankConfig = CONFIG) -> Summary:
    """Whole responses ranked by centrality on their stem-cosine graph."""
    if not responses:
        raise ValueError("lexrank baseline needs at least one response")
    stems = [[t.stem for t in r.tokens] for r in responses]
    n = len(responses)
    W = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            value = cosine_tf(stems[i], stems[j])
            if value >= threshold:
                W[i, j] = W[j, i] = value
    scores = lexrank(W, config.damping, config.eps, config.max_iter)
    entries = tuple(
        SummaryEntry(response_phrase(responses[i]), 1, i, float(scores[i]))
        for i in _order(scores)[:max_units]
    )
    return Summary(entries)


def summary_to_json(summary: Summary) -> Dict:
    return {
        "lecture_id": summary.lecture_id,
        "prompt": summary.prompt,
        "system": summary.system,
        "bullets": [
            {
                "text": e.text,
                "supporters": e.supporters,
                "source_student": e.phrase.student_id,
                "span": [e.phrase.start, e.phrase.end],
            }
            for e in summary.entries
        ],
    }


def render_text(summary: Summary) -> str:
    return "\n".join(f"- {e.text} [{e.supporters}]" for e in summary.entries)
