import logging
import traceback
from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, List, Optional, Tuple, Type

import click

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class BulletinError(Exception):
    pass


class ValidationError(BulletinError):
    """Input data or configuration failed validation."""


class ContextError(BulletinError):
    """Wraps another error with where it happened; exit codes follow the wrapped error."""

    def __init__(self, context: str, cause: BaseException):
        super().__init__(f"{context}: {type(cause).__name__}: {cause}")
        self.context = context
        self.__cause__ = cause

    @property
    def root(self) -> BaseException:
        error: BaseException = self
        while isinstance(error, ContextError) and error.__cause__ is not None:
            error = error.__cause__
        return error


@dataclass
class ErrorContext:
    error: Exception
    error_type: str
    traceback_str: str
    timestamp: datetime
    command: Optional[str] = None
    exit_code: int = EXIT_RUNTIME
    strategy: Optional[str] = None


@dataclass
class ExitStrategy:
    name: str
    error_types: Tuple[Type[BaseException], ...]
    exit_code: int
    priority: int = 0


@dataclass
class ErrorHandler:
    max_history: int = 100
    strategies: List[ExitStrategy] = field(default_factory=list)
    history: List[ErrorContext] = field(default_factory=list)

    def __post_init__(self):
        if not self.strategies:
            self._register_default_strategies()

    def _register_default_strategies(self):
        self.register_strategy(ExitStrategy(
            name="validation",
            error_types=(ValidationError,),
            exit_code=EXIT_VALIDATION,
            priority=1,
        ))
        self.register_strategy(ExitStrategy(
            name="bad_input_file",
            error_types=(FileNotFoundError, IsADirectoryError, UnicodeDecodeError),
            exit_code=EXIT_VALIDATION,
            priority=2,
        ))
        self.register_strategy(ExitStrategy(
            name="runtime",
            error_types=(Exception,),
            exit_code=EXIT_RUNTIME,
            priority=9,
        ))

    def register_strategy(self, strategy: ExitStrategy):
        self.strategies.append(strategy)
        self.strategies.sort(key=lambda s: s.priority)

    def handle(self, error: Exception, command: Optional[str] = None) -> int:
        error_ctx = ErrorContext(
            error=error,
            error_type=type(error).__name__,
            traceback_str=traceback.format_exc(),
            timestamp=datetime.now(),
            command=command,
        )
        target = error.root if isinstance(error, ContextError) else error
        for strategy in self.strategies:
            if isinstance(target, strategy.error_types):
                error_ctx.exit_code = strategy.exit_code
                error_ctx.strategy = strategy.name
                break

        self._add_to_history(error_ctx)
        if error_ctx.exit_code == EXIT_VALIDATION:
            LOGGER.error(f"{command or 'bulletin'}: {error_ctx.error_type}: {error}")
        else:
            LOGGER.error(f"{command or 'bulletin'} failed with {error_ctx.error_type}: {error}")
            LOGGER.debug(error_ctx.traceback_str)
        return error_ctx.exit_code

    def _add_to_history(self, error_ctx: ErrorContext):
        self.history.append(error_ctx)
        if len(self.history) > self.max_history:
            self.history.pop(0)

    def summary(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for ctx in self.history:
            counts[ctx.error_type] = counts.get(ctx.error_type, 0) + 1
        return counts


HANDLER = ErrorHandler()


class BulletinGroup(click.Group):
    """Click group that turns uncaught exceptions into the documented exit codes."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except (click.exceptions.Exit, click.exceptions.Abort, click.ClickException):
            raise
        except Exception as e:
            code = HANDLER.handle(e, command=ctx.invoked_subcommand)
            click.echo(f"error: {type(e).__name__}: {e}", err=True)
            ctx.exit(code)
