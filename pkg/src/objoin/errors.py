"""Failure conditions surfaced by the operators.

Every error here is observable to the caller (the test harness counts
them), never to the simulated network adversary: operators raise after
fixed-shape passes, they never truncate data silently.
"""


class ObJoinError(Exception):
    """Base class for all operator failures."""


class PaddingOverflow(ObJoinError):
    """A target class exceeded its padded bucket bound U."""


class DuplicateTarget(ObJoinError):
    """Two real items were routed to the same distribution slot."""


class TargetOutOfRange(ObJoinError):
    """A distribution target fell outside [1, m]."""


class DuplicateLocalKey(ObJoinError):
    """A server held two real records with the same shuffle key."""


class DuplicatePrimaryKey(ObJoinError):
    """The primary-key side of a PK join contained a repeated join key."""


class BoundExceeded(ObJoinError):
    """The true output size exceeded the public output-size bound M."""


class UnknownOperator(ObJoinError):
    """No transcript law or runner is registered under that name."""


class ParseError(ObJoinError):
    """Malformed input file; carries a line number when known."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
