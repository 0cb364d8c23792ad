import json
import os
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent
sys.path.insert(0, str(ROOT))
os.environ["BULLETIN_LOG_FILE"] = ""

import pytest  # noqa: E402

from bulletin.modules.corpus import load_corpus  # noqa: E402

TOY_DIR = ROOT / "bulletin" / "data" / "toy"

EXAMPLE_RESPONSES = [
    {"course_id": "stats", "lecture_id": "1", "prompt": "interesting", "student_id": "S1",
     "text": "The central limit theorem and normal approximations"},
    {"course_id": "stats", "lecture_id": "1", "prompt": "interesting", "student_id": "S2", "text": "CLT"},
    {"course_id": "stats", "lecture_id": "1", "prompt": "interesting", "student_id": "S3", "text": "q-q plot"},
    {"course_id": "stats", "lecture_id": "1", "prompt": "interesting", "student_id": "S4",
     "text": "Sampling distribution"},
    {"course_id": "stats", "lecture_id": "1", "prompt": "interesting", "student_id": "S9", "text": "nothing"},
]

EXAMPLE_ANNOTATIONS = [
    {"lecture_id": "1", "prompt": "interesting", "annotator_id": "a1",
     "summary": [
         {"text": "central limit theorem", "supporters": 2, "color": "yellow"},
         {"text": "normal approximation", "supporters": 1, "color": "green"},
         {"text": "q-q plot", "supporters": 1, "color": "red"},
         {"text": "sampling distribution", "supporters": 1, "color": "blue"},
     ],
     "highlights": [
         {"student_id": "S1", "start": 1, "end": 4, "color": "yellow"},
         {"student_id": "S1", "start": 5, "end": 7, "color": "green"},
         {"student_id": "S2", "start": 0, "end": 1, "color": "yellow"},
         {"student_id": "S3", "start": 0, "end": 2, "color": "red"},
         {"student_id": "S4", "start": 0, "end": 2, "color": "blue"},
     ]},
    {"lecture_id": "1", "prompt": "interesting", "annotator_id": "a2",
     "summary": [
         {"text": "CLT", "supporters": 2, "color": "orange"},
         {"text": "normal approximations", "supporters": 1, "color": "teal"},
         {"text": "q-q plots", "supporters": 1, "color": "purple"},
     ],
     "highlights": [
         {"student_id": "S1", "start": 0, "end": 4, "color": "orange"},
         {"student_id": "S1", "start": 5, "end": 7, "color": "teal"},
         {"student_id": "S2", "start": 0, "end": 1, "color": "orange"},
         {"student_id": "S3", "start": 0, "end": 2, "color": "purple"},
     ]},
]


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record) + "\n")
    return path


@pytest.fixture
def write_corpus(tmp_path):
    """Write (responses, annotations) record lists to tmp files and return their paths."""

    def _write(responses, annotations=None, name="corpus"):
        responses_path = write_jsonl(tmp_path / f"{name}.responses.jsonl", responses)
        if annotations is None:
            return responses_path, None
        return responses_path, write_jsonl(tmp_path / f"{name}.annotations.jsonl", annotations)

    return _write


@pytest.fixture
def example_corpus(write_corpus):
    return load_corpus(*write_corpus(EXAMPLE_RESPONSES, EXAMPLE_ANNOTATIONS, name="example"))


@pytest.fixture
def toy_paths():
    return TOY_DIR / "responses.jsonl", TOY_DIR / "annotations.jsonl"


@pytest.fixture(scope="session")
def toy_corpus():
    return load_corpus(TOY_DIR / "responses.jsonl", TOY_DIR / "annotations.jsonl")
