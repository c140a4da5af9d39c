"""Exception taxonomy shared across the library and mapped to CLI exit codes."""

from __future__ import annotations


class GraphforgetError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(GraphforgetError, ValueError):
    """An argument violates an operation's precondition."""


class NotFoundError(GraphforgetError, KeyError):
    """A referenced edge, node, or slot does not exist."""

    def __str__(self) -> str:  # KeyError quotes its payload; keep plain text
        return Exception.__str__(self)


class DatasetParseError(GraphforgetError):
    """A dataset/generations/ranks file is malformed."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


class MissingGenerationsError(GraphforgetError):
    """Evaluation input lacks generations for some questions."""

    def __init__(self, question_ids):
        self.question_ids = list(question_ids)
        shown = ", ".join(f"{e}/{s}" for e, s in self.question_ids[:10])
        more = "" if len(self.question_ids) <= 10 else f" (+{len(self.question_ids) - 10} more)"
        super().__init__(f"missing generations for {len(self.question_ids)} question(s): {shown}{more}")


class ConvergenceError(GraphforgetError):
    """Training failed to reach its target within the epoch cap."""

    def __init__(self, message: str, residual_questions=()):
        self.residual_questions = list(residual_questions)
        super().__init__(message)


class DivergenceError(GraphforgetError):
    """Parameters became non-finite during unlearning."""

    def __init__(self, method: str, epoch: int):
        self.method = method
        self.epoch = epoch
        super().__init__(f"non-finite parameters during {method} unlearning at epoch {epoch}")
