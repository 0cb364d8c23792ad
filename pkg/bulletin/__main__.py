import importlib

from bulletin import LOGGER, cli
from bulletin.modules import ALL_MODULES


def load_modules():
    for module_name in ALL_MODULES:
        try:
            importlib.import_module("bulletin.modules." + module_name)
            LOGGER.debug(f"Module loaded: {module_name}")
        except Exception as e:
            LOGGER.error(f"Module failed: {module_name} - {e}")
            raise


def main():
    load_modules()
    cli(prog_name="bulletin")


if __name__ == "__main__":
    main()
