"""Exception hierarchy for aggmarket.

Input problems derive from :class:`InputError` (CLI exit code 2); markets that
are well-formed but cannot be evaluated derive from :class:`DegenerateMarket`
(CLI exit code 3).
"""


class AggMarketError(Exception):
    """Base class for every error raised by this package."""


class InputError(AggMarketError, ValueError):
    """Malformed arguments or data."""


class DegenerateMarket(AggMarketError, ValueError):
    """A market that is valid but cannot be scored."""


class InvalidValue(InputError):
    """A task value is negative, infinite or NaN where a number is required."""


class InvalidSpec(InputError):
    """A choice model parameter is out of range."""


class AllAbstain(DegenerateMarket):
    """Every model abstains on a task, so no response can be selected."""

    def __init__(self, task=None):
        self.task = task
        msg = "every entry abstains" if task is None else f"every model abstains on task {task!r}"
        super().__init__(msg)


class LengthMismatch(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class CapViolation(InputError):
    pass


class BudgetViolation(InputError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


class AbstainAgent(InputError):
    """The agent whose value is being differentiated abstains."""


class TooManyTasks(InputError):
    pass


class TooManyModels(InputError):
    pass


class InfeasibleBudget(DegenerateMarket):
    """Per-task caps cannot absorb the budget."""


class ParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class DuplicateModel(InputError):
    pass


class ScoreOutOfRange(InputError):
    pass
