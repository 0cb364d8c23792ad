import json
import logging
from typing import Any, Dict, Iterable, List, Sequence, Tuple

from bulletin.error_handling import ValidationError

LOGGER = logging.getLogger(__name__)


class MalformedModelFile(ValidationError):
    pass


def format_weight(value: float) -> str:
    # repr round-trips floats exactly; infinities stay readable
    return repr(float(value))


def parse_weight(text: str) -> float:
    return float(text)


def write_model_file(path, header: str, config: Dict[str, Any], rows: Iterable[Sequence[Any]],
                     trailer: Iterable[str] = ()):
    with open(path, "w", encoding="utf-8") as f:
        f.write(header + "\n")
        f.write(json.dumps(config, sort_keys=True) + "\n")
        for row in rows:
            f.write("\t".join(format_weight(v) if isinstance(v, float) else str(v) for v in row) + "\n")
        for line in trailer:
            f.write(line + "\n")
    LOGGER.info(f"Model written to {path}")


def read_model_file(path, header: str) -> Tuple[Dict[str, Any], List[List[str]]]:
    with open(path, encoding="utf-8") as f:
        first = f.readline().rstrip("\n")
        if first != header:
            raise MalformedModelFile(f"{path}:1: expected header {header!r}, got {first!r}")
        try:
            config = json.loads(f.readline())
        except json.JSONDecodeError as e:
            raise MalformedModelFile(f"{path}:2: bad config line: {e.msg}") from None
        rows = [line.rstrip("\n").split("\t") for line in f if line.strip()]
    return config, rows
