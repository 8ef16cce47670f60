"""Exception hierarchy shared across the engine.

Three broad families matter to callers: configuration problems (reject the
run before any work), backend problems (transport or protocol failures that
may abort a stage), and stage problems (a pipeline stage could not produce
its contracted output). The CLI maps these families to distinct exit codes.
"""

from __future__ import annotations


class FrameragError(Exception):
    """Base class for every error raised by this package."""


# --- configuration ---------------------------------------------------------


class ConfigError(FrameragError):
    """Invalid pipeline configuration."""


class BudgetOrderViolation(ConfigError):
    """Stage budgets out of order (retrieve > prefilter or prefilter > candidates)."""


class GroupCountTooLarge(ConfigError):
    """A group count exceeds the frame budget of its stage."""


class MissingProfile(ConfigError):
    """A configured model profile name is not in the profile registry."""


# --- backends --------------------------------------------------------------


class BackendError(FrameragError):
    """Failure while talking to a model backend."""


class BackendUnavailable(BackendError):
    """Transport failure or persistent server error after retries."""


class DimensionMismatch(BackendError):
    """Embedding vectors with inconsistent dimensions."""


class FrameUnreadable(BackendError):
    """A frame's content reference could not be resolved."""


class ContextTooLong(BackendError):
    """Server-reported prompt-too-long; never silently truncated."""


class TokensAbsent(BackendError):
    """Neither a yes- nor a no-token appeared in the scorer's top-K payload."""


# --- stages and data -------------------------------------------------------


class StageError(FrameragError):
    """A pipeline stage could not produce its contracted output."""


class Unparseable(StageError):
    """Generator response held no recognizable caption structure."""


class AnswerMissing(StageError):
    """A QA round's response contained no answer field."""


class QAFailed(StageError):
    """Every QA round was discarded; no answer available to vote on."""


class ScoringDegraded(StageError):
    """More than half of the frames failed relevance scoring."""


class BudgetExceedsGroup(StageError):
    """Sample budget larger than the group it must be drawn from."""


class DataError(FrameragError):
    """Malformed manifest, dataset, or report input."""


class EmptyDataset(DataError):
    """Evaluation dataset contains no items."""


class IncompleteReport(DataError):
    """Run report lacks a stage required by the requested output."""
