import logging
from pathlib import Path

LOGGER = logging.getLogger(__name__)

# pipeline stages in dependency order; each registers its commands on import
LOAD = ["corpus", "extractor", "similarity", "clustering", "ranking", "evalmetrics", "pipeline"]
NO_LOAD = []


def __discover_stages():
    found = sorted(p.stem for p in Path(__file__).parent.glob("*.py") if p.stem != "__init__")
    missing = [name for name in LOAD if name not in found]
    if missing:
        raise ImportError(f"stages named in LOAD do not exist: {', '.join(missing)}")
    # stray modules load before the ordered stages
    ordered = [name for name in found if name not in LOAD] + LOAD
    if NO_LOAD:
        LOGGER.info(f"Not loading: {NO_LOAD}")
    return [name for name in ordered if name not in NO_LOAD]


ALL_MODULES = __discover_stages()
LOGGER.debug("Stages to load: %s", str(ALL_MODULES))
__all__ = ALL_MODULES + ["ALL_MODULES"]
