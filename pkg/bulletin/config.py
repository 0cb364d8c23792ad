import os

from dotenv import load_dotenv

load_dotenv()


class Config(object):
    LOGGER = True
    LOG_LEVEL = os.getenv("BULLETIN_LOG_LEVEL", "INFO")
    # empty string disables the file handler
    LOG_FILE = os.getenv("BULLETIN_LOG_FILE", "bulletin.log")

    DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
    STOPWORDS_PATH = os.getenv("BULLETIN_STOPWORDS", os.path.join(DATA_DIR, "stopwords.txt"))
    TOY_CORPUS_DIR = os.path.join(DATA_DIR, "toy")

    # optional resources for the similarity ensemble
    VECTORS_PATH = os.getenv("BULLETIN_VECTORS") or None
    TAXONOMY_DIR = os.getenv("BULLETIN_WORDNET_DIR") or None
    IC_PATH = os.getenv("BULLETIN_IC_FILE") or None
    LSA_BACKGROUND = os.getenv("BULLETIN_LSA_BACKGROUND") or None

    SEED = int(os.getenv("BULLETIN_SEED", "0"))
    JOBS = int(os.getenv("BULLETIN_JOBS", "1"))
    STEM_CACHE_SIZE = 50_000
    LIN_CACHE_SIZE = 20_000


class Production(Config):
    LOGGER = True


class Development(Config):
    LOGGER = True
    LOG_LEVEL = os.getenv("BULLETIN_LOG_LEVEL", "DEBUG")


def active_config():
    env = os.getenv("BULLETIN_ENV", "production").lower()
    return Development if env.startswith("dev") else Production
