"""Exception hierarchy. The CLI maps each class onto an exit code."""


class F0VoteError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class TrackFormatError(F0VoteError, ValueError):
    """Malformed or inconsistent input data (track files, manifests)."""

    exit_code = 3


class DegenerateInputError(F0VoteError, ValueError):
    """Input is well formed but a quantity is undefined on it
    (no voiced frames, zero denominators, constant sign rows...)."""

    exit_code = 4
