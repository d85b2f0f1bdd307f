"""Exception and warning types shared across the package."""


class ScenarioError(ValueError):
    """A simulation scenario is inconsistent (DoA off the grid, bin collision, ...)."""


class MemoryBudgetError(RuntimeError):
    """Materializing a dense operator would exceed the configured memory budget."""


class ConfigError(ValueError):
    """An experiment configuration file failed validation."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


class UnstableRatioWarning(UserWarning):
    """A support row of the recovered signal was too small for a stable off-grid ratio."""
