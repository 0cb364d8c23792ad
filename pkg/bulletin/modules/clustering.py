import logging
import math
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Hashable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from scipy.stats import binom

from bulletin import SEED
from bulletin.error_handling import BulletinError
from bulletin.modules.extractor import CandidatePhrase

LOGGER = logging.getLogger(__name__)


class NoColoredPhrases(BulletinError):
    pass


@dataclass(frozen=True)
class CommunityConfig:
    pvalue: float = 1.0
    seed: int = SEED
    trials: int = 10
    dedup_jaccard: float = 0.8
    # grow only from nodes no earlier community of the same trial covers
    skip_covered_seeds: bool = False

    @classmethod
    def from_dict(cls, data: Dict) -> "CommunityConfig":
        keys = ("pvalue", "seed", "trials", "dedup_jaccard", "skip_covered_seeds")
        return cls(**{k: data[k] for k in keys if k in data})

    def as_dict(self) -> Dict:
        return asdict(self)


CONFIG = CommunityConfig()


@dataclass
class PhraseGraph:
    graph: nx.Graph
    phrases: Tuple[Optional[CandidatePhrase], ...] = ()

    @property
    def n(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def edges(self) -> List[Tuple[int, int, float]]:
        return sorted((min(i, j), max(i, j), float(d["weight"])) for i, j, d in self.graph.edges(data=True))

    def weight(self, i: int, j: int) -> float:
        data = self.graph.get_edge_data(i, j)
        return 0.0 if data is None else float(data["weight"])

    def matrix(self) -> np.ndarray:
        return nx.to_numpy_array(self.graph, nodelist=range(self.n), weight="weight")

    def phrase(self, node: int) -> Optional[CandidatePhrase]:
        return self.phrases[node] if self.phrases else None


def build_phrase_graph(phrases: Sequence[CandidatePhrase], predictor) -> PhraseGraph:
    """Nodes are phrases; an edge joins every pair the predictor calls similar."""
    graph = nx.Graph()
    graph.add_nodes_from(range(len(phrases)))
    for i, j in combinations(range(len(phrases)), 2):
        similar, weight = predictor(phrases[i], phrases[j])
        if similar and weight > 0:
            graph.add_edge(i, j, weight=min(float(weight), 1.0))
    LOGGER.debug(f"phrase graph: {graph.number_of_nodes()} nodes, {graph.number_of_edges()} edges")
    return PhraseGraph(graph, tuple(phrases))


@dataclass(frozen=True)
class Community:
    members: FrozenSet[int]
    significance: float = 1.0

    def __post_init__(self):
        if not self.members:
            raise ValueError("communities are non-empty")

    def __len__(self) -> int:
        return len(self.members)

    @property
    def key(self) -> Tuple[int, ...]:
        return tuple(sorted(self.members))


@dataclass
class Clustering:
    communities: List[Community]
    method: str = "communities"
    objective_trace: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.communities)

    def __iter__(self):
        return iter(self.communities)

    @property
    def nodes(self) -> FrozenSet[int]:
        return frozenset(n for c in self.communities for n in c.members)

    def sizes(self) -> List[int]:
        return [len(c) for c in self.communities]


def jaccard(a: FrozenSet[int], b: FrozenSet[int]) -> float:
    return len(a & b) / len(a | b) if a or b else 1.0


class _SignificanceModel:
    """Binomial null model over weighted degrees; scores are kept as log(1 - c)."""

    def __init__(self, graph: nx.Graph):
        self.graph = graph
        self.n = graph.number_of_nodes()
        self.degree = dict(graph.degree(weight="weight"))
        self.total = sum(self.degree.values())

    def k_in(self, v: int, members) -> float:
        adj = self.graph.adj[v]
        return sum(adj[u]["weight"] for u in members if u in adj)

    def log_cdf(self, v: int, members, community_degree: float) -> float:
        """log P[X < k_in] for X ~ Binomial(deg(v), K_C / 2M)."""
        if self.total <= 0:
            return 0.0
        k_in = self.k_in(v, members)
        if k_in <= 0:
            return -math.inf
        p = min(max(community_degree / self.total, 0.0), 1.0)
        # any edge counts as at least one success
        k = max(int(round(k_in)), 1)
        trials = max(int(round(self.degree[v])), k)
        return float(binom.logcdf(k - 1, trials, p))

    def pvalue(self, v: int, members, community_degree: float) -> float:
        return -math.expm1(self.log_cdf(v, members, community_degree))

    def corrected(self, v: int, members, community_degree: float, n_external: int) -> float:
        return n_external * self.log_cdf(v, members, community_degree)

    def worst(self, members: FrozenSet[int]) -> float:
        if len(members) < 2:
            return -math.inf
        community_degree = sum(self.degree[u] for u in members)
        n_external = self.n - len(members) + 1
        return min(
            self.corrected(u, members - {u}, community_degree - self.degree[u], n_external)
            for u in members
        )

    def significance(self, members: FrozenSet[int]) -> float:
        return 1.0 if len(members) < 2 else -math.expm1(self.worst(members))


def _grow(model: _SignificanceModel, seed_node: int, rank: np.ndarray, pvalue: float) -> FrozenSet[int]:
    members = frozenset([seed_node])
    worst = -math.inf
    log_threshold = math.log1p(-pvalue) if pvalue < 1.0 else -math.inf
    while True:
        candidates = {u for v in members for u in model.graph.adj[v]} - members
        if not candidates:
            return members
        community_degree = sum(model.degree[u] for u in members)
        n_external = model.n - len(members)
        best = max(
            candidates,
            key=lambda u: (model.corrected(u, members, community_degree, n_external), -rank[u]),
        )
        score = model.corrected(best, members, community_degree, n_external)
        # c <= pvalue  <=>  log(1 - c) >= log(1 - pvalue)
        if score < log_threshold:
            return members
        grown = members | {best}
        new_worst = model.worst(grown)
        if not new_worst > worst:
            return members
        members, worst = grown, new_worst


def _cleanup(model: _SignificanceModel, members: FrozenSet[int], pvalue: float) -> FrozenSet[int]:
    while len(members) > 1:
        community_degree = sum(model.degree[u] for u in members)
        scored = sorted(
            ((model.pvalue(u, members - {u}, community_degree - model.degree[u]), -u) for u in members),
            reverse=True,
        )
        p, neg_u = scored[0]
        if p <= pvalue / len(members):
            break
        members = members - {-neg_u}
    return members


def _dedup(communities: List[Community], threshold: float) -> List[Community]:
    kept: List[Community] = []
    for community in sorted(communities, key=lambda c: (c.significance, -len(c), c.key)):
        if all(jaccard(community.members, k.members) <= threshold for k in kept):
            kept.append(community)
    return kept


def _trial(model: _SignificanceModel, rng: np.random.Generator, config: CommunityConfig) -> List[Community]:
    order = rng.permutation(model.n)
    rank = rng.permutation(model.n)
    covered: set = set()
    found = []
    for seed_node in order:
        seed_node = int(seed_node)
        if config.skip_covered_seeds and seed_node in covered:
            continue
        members = _cleanup(model, _grow(model, seed_node, rank, config.pvalue), config.pvalue)
        if len(members) < 2:
            continue
        covered |= members
        found.append(Community(members, model.significance(members)))
    return _dedup(found, config.dedup_jaccard)


def detect_communities(graph: PhraseGraph, config: CommunityConfig = CONFIG) -> Clustering:
    """Overlapping communities by local significance optimization; leftovers become singletons."""
    if graph.n < 1:
        raise ValueError("graph has no nodes")
    model = _SignificanceModel(graph.graph)
    survivors: List[Community] = []
    if model.total > 0:
        children = np.random.SeedSequence(config.seed).spawn(config.trials)
        trials = [_trial(model, np.random.default_rng(child), config) for child in children]
        needed = math.ceil(config.trials / 2)
        for found in trials:
            for community in found:
                support = sum(
                    1 for other in trials
                    if any(jaccard(community.members, c.members) > config.dedup_jaccard for c in other)
                )
                if support >= needed:
                    survivors.append(community)
        survivors = _dedup(survivors, config.dedup_jaccard)

    covered = {n for c in survivors for n in c.members}
    singletons = [Community(frozenset([v]), 1.0) for v in range(graph.n) if v not in covered]
    communities = sorted(survivors + singletons, key=lambda c: (c.significance, min(c.members)))
    LOGGER.debug(f"{len(survivors)} communities and {len(singletons)} singletons over {graph.n} nodes")
    return Clustering(communities, method="communities")


def distance_matrix(graph: PhraseGraph) -> np.ndarray:
    W = graph.matrix()
    D = np.where(W > 0, 1.0 - W, 1.0)
    np.fill_diagonal(D, 0.0)
    return D


def kmedoids(graph: PhraseGraph, k: Optional[int] = None, seed: int = SEED, max_iter: int = 100) -> Clustering:
    n = graph.n
    if n < 1:
        raise ValueError("graph has no nodes")
    k = min(math.ceil(math.sqrt(n)) if k is None else k, n)
    D = distance_matrix(graph)
    rng = np.random.default_rng(seed)
    medoids = np.sort(rng.choice(n, size=k, replace=False))
    trace: List[float] = []

    def assign(medoids):
        labels = np.argmin(D[:, medoids], axis=1)
        labels[medoids] = np.arange(len(medoids))
        return labels

    labels = assign(medoids)
    trace.append(float(D[np.arange(n), medoids[labels]].sum()))
    for _ in range(max_iter):
        changed = False
        for j in range(k):
            members = np.flatnonzero(labels == j)
            costs = D[np.ix_(members, members)].sum(axis=0)
            best = members[int(np.argmin(costs))]
            current = D[members, medoids[j]].sum()
            if costs.min() < current:
                medoids[j] = best
                changed = True
        labels = assign(medoids)
        trace.append(float(D[np.arange(n), medoids[labels]].sum()))
        if not changed:
            break

    communities = [Community(frozenset(int(i) for i in np.flatnonzero(labels == j))) for j in range(k)]
    communities.sort(key=lambda c: min(c.members))
    return Clustering(communities, method="kmedoids", objective_trace=trace)


def purity(clustering: Clustering, color_of_node: Mapping[int, Hashable]) -> float:
    """Share of coloured (node, community) incidences that carry their community's majority colour."""
    agreeing = total = 0
    for community in clustering:
        colors: Dict[Hashable, int] = {}
        for node in community.members:
            color = color_of_node.get(node)
            if color is not None:
                colors[color] = colors.get(color, 0) + 1
        if colors:
            agreeing += max(colors.values())
            total += sum(colors.values())
    if total == 0:
        raise NoColoredPhrases("no clustered phrase carries a colour")
    return agreeing / total


def planted_partition(n_blocks: int, block_size: int, p_in: float, p_out: float,
                      seed: int = SEED) -> Tuple[PhraseGraph, List[int]]:
    if not (0.0 <= p_in <= 1.0 and 0.0 <= p_out <= 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    generated = nx.planted_partition_graph(n_blocks, block_size, p_in, p_out, seed=seed)
    graph = nx.Graph()
    graph.add_nodes_from(range(n_blocks * block_size))
    graph.add_edges_from(generated.edges(), weight=1.0)
    return PhraseGraph(graph), [v // block_size for v in range(n_blocks * block_size)]


def dump_graph(graph: PhraseGraph, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"#nodes {graph.n}\n")
        for i, j, w in graph.edges:
            f.write(f"{i}\t{j}\t{w!r}\n")
