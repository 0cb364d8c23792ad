import logging
import sys

import click

from bulletin.config import active_config

Config = active_config()

_handlers = [logging.StreamHandler()]
if Config.LOG_FILE:
    _handlers.insert(0, logging.FileHandler(Config.LOG_FILE))

logging.basicConfig(
    format="%(asctime)s - %(levelname)s - %(name)s - %(message)s",
    handlers=_handlers,
    level=getattr(logging, str(Config.LOG_LEVEL).upper(), logging.INFO),
)

LOGGER = logging.getLogger(__name__)

if sys.version_info < (3, 10):
    LOGGER.error("bulletin needs Python 3.10 or newer.")
    quit(1)

from bulletin.error_handling import BulletinGroup  # noqa: E402

SEED = Config.SEED
JOBS = Config.JOBS


@click.group(cls=BulletinGroup, help="Phrase summaries of student reflection responses.")
def cli():
    pass
