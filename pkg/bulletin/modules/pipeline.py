import json
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import click

from bulletin import JOBS, SEED, cli
from bulletin.error_handling import BulletinError, ContextError, ValidationError
from bulletin.modules.clustering import (
    CommunityConfig,
    NoColoredPhrases,
    build_phrase_graph,
    detect_communities,
    kmedoids,
    purity,
)
from bulletin.modules.corpus import PromptKind, ReflectionCorpus, load_corpus
from bulletin.modules.evalmetrics import (
    PrfScore,
    TTestResult,
    assign_colors,
    color_match,
    color_of,
    human_summary,
    paired_ttest,
    pearson,
    rouge_n,
    rouge_su4,
)
from bulletin.modules.extractor import (
    CandidatePhrase,
    CrfConfig,
    CrfModel,
    build_training_sequences,
    evaluate_extraction,
    extract_phrases,
    gold_phrases,
    load_crf,
    np_chunk_baseline,
    train_crf,
)
from bulletin.modules.ranking import (
    RankConfig,
    Summary,
    assemble_summary,
    lexrank_response_baseline,
    render_text,
    summary_to_json,
)
from bulletin.modules.similarity import (
    EnsemblePredictor,
    LsaConfig,
    LsaPredictor,
    RankDeficient,
    SimilarityConfig,
    SimilarityModel,
    SimilarityResources,
    build_lsa,
    build_pair_training_set,
    evaluate_pairs,
    lsa_cosine,
    load_similarity,
    pair_features,
    train_similarity,
)

LOGGER = logging.getLogger(__name__)

STAGES = ("extractor", "similarity", "lsa", "clustering", "ranking")


class NoCandidatePhrases(BulletinError):
    pass


class FoldError(ContextError):
    pass


class ConfigError(ValidationError):
    pass


class SystemVariant(Enum):
    LEXRANK_BASELINE = ("lexrank_baseline", None, None, None)
    PHRASESUM_NP = ("phrasesum_np", "np", "lsa", "kmedoids")
    SEQUENCESUM = ("sequencesum", "crf", "lsa", "kmedoids")
    SIMSUM = ("simsum", "crf", "learned", "kmedoids")
    CDSUM = ("cdsum", "crf", "learned", "communities")

    def __init__(self, key: str, extractor: Optional[str], similarity: Optional[str], clusterer: Optional[str]):
        self.key = key
        self.extractor = extractor
        self.similarity = similarity
        self.clusterer = clusterer

    @classmethod
    def parse(cls, value: str) -> "SystemVariant":
        for variant in cls:
            if variant.key == value:
                return variant
        raise ConfigError(f"unknown system {value!r}; choose from {', '.join(v.key for v in cls)}")

    def __str__(self) -> str:
        return self.key


ALL_SYSTEMS = tuple(SystemVariant)
_PATH_KEYS = ("corpus", "annotations", "vectors", "lsa", "taxonomy", "ic")
_TOP_KEYS = {"systems", "paths", "extractor", "similarity", "lsa", "clustering", "ranking",
             "lsa_threshold", "seed", "jobs", "baseline"}


@dataclass(frozen=True)
class PipelineConfig:
    systems: Tuple[SystemVariant, ...] = ALL_SYSTEMS
    paths: Dict[str, Optional[str]] = field(default_factory=dict)
    extractor: CrfConfig = CrfConfig()
    similarity: SimilarityConfig = SimilarityConfig()
    lsa: LsaConfig = LsaConfig()
    clustering: CommunityConfig = CommunityConfig()
    ranking: RankConfig = RankConfig()
    lsa_threshold: float = 0.5
    seed: int = SEED
    jobs: int = JOBS
    # system the report's sig column tests against; None means the first system
    baseline: Optional[SystemVariant] = None

    @classmethod
    def from_dict(cls, data: Dict) -> "PipelineConfig":
        for key in data:
            if key not in _TOP_KEYS:
                LOGGER.warning(f"ignoring unknown config key {key!r}")
        paths = dict(data.get("paths", {}))
        for key in paths:
            if key not in _PATH_KEYS:
                LOGGER.warning(f"ignoring unknown path key {key!r}")
        systems = data.get("systems")
        systems = tuple(SystemVariant.parse(s) for s in systems) if systems else ALL_SYSTEMS
        baseline = SystemVariant.parse(data["baseline"]) if data.get("baseline") else None
        if baseline is not None and baseline not in systems:
            raise ConfigError(f"baseline {baseline.key!r} is not one of the configured systems")
        config = cls(
            systems=systems,
            paths={k: paths.get(k) for k in _PATH_KEYS},
            extractor=CrfConfig.from_dict(data.get("extractor", {})),
            similarity=SimilarityConfig.from_dict(data.get("similarity", {})),
            lsa=LsaConfig.from_dict(data.get("lsa", {})),
            clustering=CommunityConfig.from_dict(data.get("clustering", {})),
            ranking=RankConfig.from_dict(data.get("ranking", {})),
            lsa_threshold=float(data.get("lsa_threshold", 0.5)),
            seed=int(data.get("seed", SEED)),
            jobs=int(data.get("jobs", JOBS)),
            baseline=baseline,
        )
        return config.with_seed(config.seed)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: bad JSON: {e.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def stage_seed(self, stage: str) -> int:
        return self.seed + STAGES.index(stage)

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Fan the master seed out to every stage."""
        config = replace(self, seed=seed)
        return replace(
            config,
            extractor=replace(self.extractor, seed=config.stage_seed("extractor")),
            similarity=replace(self.similarity, seed=config.stage_seed("similarity")),
            clustering=replace(self.clustering, seed=config.stage_seed("clustering")),
        )

    def path(self, key: str) -> Optional[str]:
        return self.paths.get(key)

    @property
    def needs_crf(self) -> bool:
        return any(s.extractor == "crf" for s in self.systems)

    @property
    def needs_learned(self) -> bool:
        return any(s.similarity == "learned" for s in self.systems)


@dataclass
class TrainedModels:
    crf: Optional[CrfModel] = None
    similarity: Optional[SimilarityModel] = None
    resources: SimilarityResources = field(default_factory=SimilarityResources)

    def predictor(self, variant: SystemVariant, config: PipelineConfig):
        if variant.similarity == "learned":
            return EnsemblePredictor(self.similarity, self.resources)
        return LsaPredictor(self.resources.lsa, config.lsa_threshold)


def _build_lsa_logged(texts: Sequence[str], config: PipelineConfig):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RankDeficient)
        table = build_lsa(texts, k=config.lsa.k, seed=config.stage_seed("lsa"), config=config.lsa)
    for warning in caught:
        LOGGER.warning(str(warning.message))
    return table


def train_models(corpus: ReflectionCorpus, config: PipelineConfig,
                 background: Optional[Sequence[str]] = None,
                 resources: Optional[SimilarityResources] = None,
                 need_crf: Optional[bool] = None, need_learned: Optional[bool] = None) -> TrainedModels:
    """Train whatever the configured systems need on an annotated training corpus."""
    need_crf = config.needs_crf if need_crf is None else need_crf
    need_learned = config.needs_learned if need_learned is None else need_learned
    resources = replace(resources) if resources else SimilarityResources.load(
        config.path("vectors"), config.path("lsa"), config.path("taxonomy"), config.path("ic"))
    if resources.lsa is None:
        texts = background if background is not None else [r.text for r in corpus.all_responses()]
        resources.lsa = _build_lsa_logged(texts, config)
    models = TrainedModels(resources=resources)
    if need_crf:
        models.crf = train_crf(build_training_sequences(corpus), config.extractor)
    if need_learned:
        pairs = build_pair_training_set(corpus)
        features = [pair_features(p.phrase_a, p.phrase_b, resources) for p in pairs]
        models.similarity = train_similarity(pairs, features, config.similarity)
    return models


def candidate_phrases(corpus: ReflectionCorpus, lecture_id: str, prompt: PromptKind,
                      variant: SystemVariant, models: TrainedModels) -> List[CandidatePhrase]:
    responses = corpus.responses_for(lecture_id, prompt)
    if variant.extractor == "np":
        return [p for r in responses for p in np_chunk_baseline(r)]
    return extract_phrases(models.crf, responses)


def summarize(corpus: ReflectionCorpus, lecture_id: str, prompt: PromptKind, models: TrainedModels,
              config: PipelineConfig, variant: SystemVariant = SystemVariant.CDSUM,
              predictor=None) -> Summary:
    responses = corpus.responses_for(lecture_id, prompt)
    label = dict(lecture_id=lecture_id, prompt=prompt.key, system=variant.key)
    if not responses:
        return Summary((), **label)
    if variant is SystemVariant.LEXRANK_BASELINE:
        summary = lexrank_response_baseline(responses, config.ranking.max_phrases, config=config.ranking)
        return summary.labelled(**label)

    phrases = candidate_phrases(corpus, lecture_id, prompt, variant, models)
    if not phrases:
        LOGGER.warning(f"{NoCandidatePhrases.__name__}: {variant} found no phrases in {lecture_id}/{prompt}")
        return Summary((), **label)
    graph = build_phrase_graph(phrases, predictor or models.predictor(variant, config))
    if variant.clusterer == "communities":
        clustering = detect_communities(graph, config.clustering)
    else:
        clustering = kmedoids(graph, seed=config.clustering.seed)
    summary = assemble_summary(clustering, graph, config.ranking.max_phrases, config.ranking)
    return summary.labelled(**label)


def score_summary(summary: Summary, corpus: ReflectionCorpus, lecture_id: str,
                  prompt: PromptKind) -> Dict[str, PrfScore]:
    annotations = corpus.annotations_for(lecture_id, prompt)
    if not annotations:
        return {}
    references = ["\n".join(p.raw or " ".join(p.text) for p in a.summary) for a in annotations]
    candidate = summary.as_text()
    return {
        "rouge-1": rouge_n(candidate, references, 1),
        "rouge-2": rouge_n(candidate, references, 2),
        "rouge-su4": rouge_su4(candidate, references),
        "color-match": PrfScore.mean([
            color_match(assign_colors(summary.estimates(), a), human_summary(a)) for a in annotations
        ]),
    }


@dataclass
class FoldResult:
    lecture_id: str
    summaries: Dict[Tuple[str, str], Summary] = field(default_factory=dict)
    scores: Dict[Tuple[str, str, str], PrfScore] = field(default_factory=dict)
    extraction: Dict[str, PrfScore] = field(default_factory=dict)
    pairs: Dict[str, PrfScore] = field(default_factory=dict)
    purity: Dict[str, float] = field(default_factory=dict)
    correlation: Optional[float] = None


@dataclass
class CrossvalResult:
    course_id: str
    systems: Tuple[SystemVariant, ...]
    folds: List[FoldResult]
    skipped: List[str] = field(default_factory=list)
    baseline: Optional[str] = None

    @property
    def baseline_key(self) -> Optional[str]:
        if self.baseline is not None:
            return self.baseline
        return self.systems[0].key if self.systems else None


def _purity_scores(corpus: ReflectionCorpus, lecture_id: str, prompt: PromptKind,
                   phrases: List[CandidatePhrase], models: TrainedModels,
                   config: PipelineConfig) -> Dict[str, float]:
    annotations = corpus.annotations_for(lecture_id, prompt)
    if not phrases or not annotations or models.similarity is None:
        return {}
    graph = build_phrase_graph(phrases, EnsemblePredictor(models.similarity, models.resources))
    clusterings = {
        "communities": detect_communities(graph, config.clustering),
        "kmedoids": kmedoids(graph, seed=config.clustering.seed),
    }
    scores = {}
    for method, clustering in clusterings.items():
        values = []
        for annotation in annotations:
            colors = {i: color_of(p, annotation.highlights)[0] for i, p in enumerate(phrases)}
            try:
                values.append(purity(clustering, colors))
            except NoColoredPhrases:
                continue
        if values:
            scores[method] = sum(values) / len(values)
    return scores


def run_fold(corpus: ReflectionCorpus, lecture_id: str, config: PipelineConfig,
             background: Sequence[str], resources: Optional[SimilarityResources] = None) -> FoldResult:
    train = corpus.without_lecture(lecture_id)
    LOGGER.info(f"fold {lecture_id}: training on {len(train.lectures)} lectures")
    models = train_models(train, config, background, resources)
    result = FoldResult(lecture_id)
    held_out = corpus.restrict([lecture_id])

    predicted: Dict[str, List[CandidatePhrase]] = {"crf": [], "np_chunk": []}
    gold: List[CandidatePhrase] = []
    purities: Dict[str, List[float]] = {}
    for prompt in PromptKind:
        if not corpus.responses_for(lecture_id, prompt):
            continue
        for variant in config.systems:
            summary = summarize(corpus, lecture_id, prompt, models, config, variant)
            result.summaries[(variant.key, prompt.key)] = summary
            for metric, score in score_summary(summary, corpus, lecture_id, prompt).items():
                result.scores[(variant.key, prompt.key, metric)] = score

        gold.extend(gold_phrases(held_out, lecture_id, prompt))
        crf_phrases: List[CandidatePhrase] = []
        if models.crf is not None:
            crf_phrases = extract_phrases(models.crf, corpus.responses_for(lecture_id, prompt))
            predicted["crf"].extend(crf_phrases)
        if SystemVariant.PHRASESUM_NP in config.systems:
            predicted["np_chunk"].extend(
                candidate_phrases(corpus, lecture_id, prompt, SystemVariant.PHRASESUM_NP, models))
        for method, value in _purity_scores(corpus, lecture_id, prompt, crf_phrases, models, config).items():
            purities.setdefault(method, []).append(value)

    if gold:
        if models.crf is not None:
            result.extraction["crf"] = evaluate_extraction(predicted["crf"], gold)
        if SystemVariant.PHRASESUM_NP in config.systems:
            result.extraction["np_chunk"] = evaluate_extraction(predicted["np_chunk"], gold)
    result.purity = {m: sum(v) / len(v) for m, v in purities.items()}

    test_pairs = build_pair_training_set(held_out)
    if test_pairs:
        lsa = LsaPredictor(models.resources.lsa, config.lsa_threshold)
        result.pairs["lsa"] = evaluate_pairs(lsa, test_pairs)
        if models.similarity is not None:
            ensemble = EnsemblePredictor(models.similarity, models.resources)
            result.pairs["learned"] = evaluate_pairs(ensemble, test_pairs)
            if len(test_pairs) >= 2:
                result.correlation = pearson(
                    [ensemble.score(p.phrase_a, p.phrase_b) for p in test_pairs],
                    [lsa_cosine(models.resources.lsa, p.phrase_a, p.phrase_b) for p in test_pairs],
                )
    return result


def run_crossval(corpus: ReflectionCorpus, config: PipelineConfig) -> CrossvalResult:
    lectures = corpus.lectures
    if len(lectures) < 2:
        raise ValidationError(f"leave-one-lecture-out needs at least 2 lectures, got {len(lectures)}")
    skipped = []
    systems = config.systems
    if SystemVariant.PHRASESUM_NP in systems and not corpus.has_chunk_tags():
        LOGGER.warning("phrasesum_np skipped: corpus has no chunk tags")
        skipped.append(SystemVariant.PHRASESUM_NP.key)
        systems = tuple(s for s in systems if s is not SystemVariant.PHRASESUM_NP)
    config = replace(config, systems=systems)
    background = [r.text for r in corpus.all_responses()]
    resources = SimilarityResources.load(
        config.path("vectors"), config.path("lsa"), config.path("taxonomy"), config.path("ic"))
    if resources.lsa is None:
        # responses only, no annotations: shared by every fold
        resources.lsa = _build_lsa_logged(background, config)

    def fold(lecture_id: str) -> FoldResult:
        try:
            return run_fold(corpus, lecture_id, config, background, resources)
        except Exception as e:
            raise FoldError(f"fold {lecture_id}", e) from e

    with ThreadPoolExecutor(max_workers=max(1, config.jobs)) as executor:
        folds = list(executor.map(fold, lectures))
    baseline = None
    if config.baseline is not None:
        if config.baseline in systems:
            baseline = config.baseline.key
        else:
            LOGGER.warning(f"baseline {config.baseline.key} was skipped, testing against {systems[0].key}")
    return CrossvalResult(corpus.course_id, systems, folds, skipped, baseline)


METRIC_ORDER = ("rouge-1", "rouge-2", "rouge-su4", "color-match")


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def _cells(result: CrossvalResult, metric: str) -> List[Tuple[str, str]]:
    return sorted({(f.lecture_id, p) for f in result.folds for (_, p, m) in f.scores if m == metric})


def compare_systems(result: CrossvalResult, metric: str, system: str, other: str) -> Optional[TTestResult]:
    """Paired t-test on F over the (fold, prompt) cells both systems scored."""
    by_fold = {f.lecture_id: f for f in result.folds}
    pairs = []
    for lecture, prompt in _cells(result, metric):
        a = by_fold[lecture].scores.get((system, prompt, metric))
        b = by_fold[lecture].scores.get((other, prompt, metric))
        if a is not None and b is not None:
            pairs.append((a.f, b.f))
    if len(pairs) < 2:
        return None
    return paired_ttest([a for a, _ in pairs], [b for _, b in pairs])


def _sig(test: Optional[TTestResult]) -> str:
    if test is None:
        return ""
    sig = "degenerate" if test.degenerate else f"{test.p_two_tailed:.3f}"
    return sig + "*" if test.significant else sig


def pairwise_ttests(result: CrossvalResult) -> List[Dict]:
    rows = []
    keys = [s.key for s in result.systems]
    for metric in METRIC_ORDER:
        for i, system in enumerate(keys):
            for other in keys[i + 1:]:
                test = compare_systems(result, metric, system, other)
                if test is None:
                    continue
                # infinite t (constant nonzero difference) has no JSON form
                t = test.t if math.isfinite(test.t) else None
                rows.append(dict(metric=metric, system=system, other=other, t=t,
                                 p=test.p_two_tailed, degenerate=test.degenerate, sig=_sig(test)))
    return rows


def report_rows(result: CrossvalResult) -> List[Dict[str, str]]:
    course = result.course_id
    rows = []
    for fold in result.folds:
        for (system, prompt, metric), score in sorted(fold.scores.items()):
            rows.append(dict(course=course, lecture=fold.lecture_id, prompt=prompt, system=system, metric=metric,
                             P=f"{score.p:.3f}", R=f"{score.r:.3f}", F=f"{score.f:.3f}", sig=""))

    baseline = result.baseline_key
    for metric in METRIC_ORDER:
        cells = _cells(result, metric)
        if not cells:
            continue
        for variant in result.systems:
            system = variant.key
            by_fold = {f.lecture_id: f for f in result.folds}
            scores = [by_fold[lec].scores.get((system, p, metric)) for lec, p in cells]
            present = [s for s in scores if s is not None]
            if not present:
                continue
            sig = "" if system == baseline else _sig(compare_systems(result, metric, system, baseline))
            rows.append(dict(
                course=course, lecture="mean", prompt="all", system=system, metric=metric,
                P=f"{_mean([s.p for s in present]):.3f}",
                R=f"{_mean([s.r for s in present]):.3f}",
                F=f"{_mean([s.f for s in present]):.3f}",
                sig=sig,
            ))

    for name, getter in (("extraction", lambda f: f.extraction), ("pairs", lambda f: f.pairs)):
        systems = sorted({k for f in result.folds for k in getter(f)})
        for system in systems:
            present = [getter(f)[system] for f in result.folds if system in getter(f)]
            rows.append(dict(course=course, lecture="mean", prompt="all", system=system, metric=name,
                             P=f"{_mean([s.p for s in present]):.3f}",
                             R=f"{_mean([s.r for s in present]):.3f}",
                             F=f"{_mean([s.f for s in present]):.3f}", sig=""))
    for method in sorted({m for f in result.folds for m in f.purity}):
        value = f"{_mean([f.purity[method] for f in result.folds if method in f.purity]):.3f}"
        rows.append(dict(course=course, lecture="mean", prompt="all", system=method, metric="purity",
                         P=value, R=value, F=value, sig=""))
    return rows


COLUMNS = ("course", "lecture", "prompt", "system", "metric", "P", "R", "F", "sig")


def report(result: CrossvalResult, fmt: str = "tsv") -> str:
    if not result.folds:
        raise ValidationError("no fold results to report")
    rows = report_rows(result)
    if fmt == "tsv":
        lines = ["\t".join(COLUMNS)] + ["\t".join(row[c] for c in COLUMNS) for row in rows]
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        lines = ["| " + " | ".join(COLUMNS) + " |", "|" + "---|" * len(COLUMNS)]
        lines += ["| " + " | ".join(row[c] for c in COLUMNS) + " |" for row in rows]
        if result.skipped:
            lines.append("")
            lines.append(f"skipped: {', '.join(result.skipped)}")
        return "\n".join(lines) + "\n"
    if fmt == "json":
        correlations = {f.lecture_id: f.correlation for f in result.folds if f.correlation is not None}
        flags = {
            f"{system}/{fold.lecture_id}/{prompt}/{metric}": score.flag
            for fold in result.folds
            for (system, prompt, metric), score in sorted(fold.scores.items())
            if score.flag
        }
        return json.dumps({
            "course": result.course_id,
            "systems": [s.key for s in result.systems],
            "skipped": result.skipped,
            "baseline": result.baseline_key,
            "ttests": pairwise_ttests(result),
            "rows": rows,
            "flags": flags,
            "correlation": {k: round(v, 3) for k, v in correlations.items() if v == v},
        }, indent=2, sort_keys=True) + "\n"
    raise ValidationError(f"unknown report format {fmt!r}")


def _load_config(config_path, seed, jobs) -> PipelineConfig:
    config = PipelineConfig.load(config_path) if config_path else PipelineConfig().with_seed(SEED)
    if seed is not None:
        config = config.with_seed(seed)
    if jobs is not None:
        config = replace(config, jobs=jobs)
    return config


def _corpus_from(config: PipelineConfig, corpus_path, annotations_path) -> ReflectionCorpus:
    corpus_path = corpus_path or config.path("corpus")
    if not corpus_path:
        raise click.UsageError("pass --corpus or set paths.corpus in the config")
    return load_corpus(corpus_path, annotations_path or config.path("annotations"))


def _write(text: str, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


pipeline_options = [
    click.option("--corpus", "corpus_path", type=click.Path(dir_okay=False), default=None, help="responses.jsonl"),
    click.option("--annotations", "annotations_path", type=click.Path(dir_okay=False), default=None),
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None),
    click.option("--seed", type=int, default=None),
    click.option("--jobs", type=int, default=None),
    click.option("--out", type=click.Path(dir_okay=False), default=None),
]


def with_pipeline_options(func):
    for option in reversed(pipeline_options):
        func = option(func)
    return func


@cli.command("summarize")
@with_pipeline_options
@click.option("--lecture", required=True)
@click.option("--prompt", type=click.Choice([k.key for k in PromptKind]), default=None)
@click.option("--system", type=click.Choice([s.key for s in SystemVariant]), default=SystemVariant.CDSUM.key,
              show_default=True)
@click.option("--crf-model", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--sim-model", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json", show_default=True)
def summarize_cmd(corpus_path, annotations_path, config_path, seed, jobs, out, lecture, prompt, system,
                  crf_model, sim_model, fmt):
    """Summarize one lecture; models train on the other lectures unless given."""
    config = _load_config(config_path, seed, jobs)
    variant = SystemVariant.parse(system)
    config = replace(config, systems=(variant,))
    corpus = _corpus_from(config, corpus_path, annotations_path)
    if lecture not in corpus.lectures:
        raise ValidationError(f"lecture {lecture!r} not in corpus")
    background = [r.text for r in corpus.all_responses()]
    # only the models not given on the command line are trained
    models = train_models(corpus.without_lecture(lecture), config, background,
                          need_crf=config.needs_crf and not crf_model,
                          need_learned=config.needs_learned and not sim_model)
    if crf_model:
        models.crf = load_crf(crf_model)
    if sim_model:
        models.similarity = load_similarity(sim_model)

    prompts = [PromptKind.parse(prompt)] if prompt else list(PromptKind)
    chunks = []
    for kind in prompts:
        summary = summarize(corpus, lecture, kind, models, config, variant)
        if fmt == "json":
            chunks.append(json.dumps(summary_to_json(summary), ensure_ascii=False) + "\n")
        else:
            chunks.append(f"# {lecture} {kind}\n{render_text(summary)}\n")
    _write("".join(chunks), out)


@cli.command("crossval")
@with_pipeline_options
@click.option("--format", "fmt", type=click.Choice(["tsv", "json", "markdown"]), default="tsv", show_default=True)
def crossval_cmd(corpus_path, annotations_path, config_path, seed, jobs, out, fmt):
    """Leave-one-lecture-out evaluation of every configured system."""
    config = _load_config(config_path, seed, jobs)
    corpus = _corpus_from(config, corpus_path, annotations_path)
    _write(report(run_crossval(corpus, config), fmt), out)
