"""Error types

Narrow exception classes used where callers (mainly the CLI) need to tell
failure kinds apart. Plain argument and shape problems raise ValueError.
"""

from typing import Optional


class DocumentError(ValueError):
    """A MatrixDocument is malformed or inconsistent with its dims/kind."""


class WitnessHypothesisError(ValueError):
    """A hypothesis of the lambda-scaling witness construction is violated.

    Attributes:
        condition: Which hypothesis failed ("i", "ii" or "iii")
        counterexample: Optional vector exhibiting the failure
    """

    def __init__(self, condition: str, message: str, counterexample: Optional[object] = None):
        super().__init__(f"condition ({condition}) violated: {message}")
        self.condition = condition
        self.counterexample = counterexample


class OptimizerInconclusiveError(RuntimeError):
    """Numerical certification never succeeded within the search limits."""
