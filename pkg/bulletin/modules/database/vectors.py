import logging
from typing import Iterable, Mapping, Optional

import numpy as np
from gensim.models.keyedvectors import KeyedVectors

from bulletin.error_handling import ValidationError

LOGGER = logging.getLogger(__name__)


class MalformedVectorFile(ValidationError):
    pass


class VectorTable:
    """Lower-cased lookup over gensim KeyedVectors."""

    def __init__(self, keyed: KeyedVectors):
        self.keyed = keyed

    @classmethod
    def from_dict(cls, dim: int, vectors: Mapping[str, np.ndarray]) -> "VectorTable":
        keyed = KeyedVectors(vector_size=dim, dtype=np.float64)
        keys = sorted({token.lower() for token in vectors})
        if keys:
            lowered = {token.lower(): v for token, v in vectors.items()}
            keyed.add_vectors(keys, np.vstack([np.asarray(lowered[k], dtype=float) for k in keys]))
        return cls(keyed)

    @property
    def dim(self) -> int:
        return self.keyed.vector_size

    def __contains__(self, token: str) -> bool:
        return token.lower() in self.keyed.key_to_index

    def __len__(self) -> int:
        return len(self.keyed.index_to_key)

    def get(self, token: str) -> Optional[np.ndarray]:
        key = token.lower()
        return self.keyed[key] if key in self.keyed.key_to_index else None

    def mean_vector(self, tokens: Iterable[str]) -> Optional[np.ndarray]:
        found = [t.lower() for t in tokens if t in self]
        if not found:
            return None
        return np.mean(self.keyed[found], axis=0)


def load_vectors(path) -> VectorTable:
    try:
        keyed = KeyedVectors.load_word2vec_format(str(path), binary=False, datatype=np.float64)
    except (ValueError, EOFError, UnicodeDecodeError) as e:
        raise MalformedVectorFile(f"{path}: not a word2vec text file ({e})") from e
    if any(key != key.lower() for key in keyed.index_to_key):
        # first spelling of a word wins
        lowered = {}
        for key in keyed.index_to_key:
            lowered.setdefault(key.lower(), keyed[key])
        return VectorTable.from_dict(keyed.vector_size, lowered)
    LOGGER.info(f"{path}: {len(keyed.index_to_key)} vectors of dimension {keyed.vector_size}")
    return VectorTable(keyed)


def save_vectors(table: VectorTable, path):
    table.keyed.save_word2vec_format(str(path), binary=False)
