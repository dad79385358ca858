"""Exception types shared across the package.

Class names double as the machine-readable error tokens printed by the
command-line interface, so they follow the token spelling rather than the
usual ``...Error`` suffix convention.
"""


class ToolTissueError(Exception):
    """Base class for every error raised by this package."""


class InputError(ToolTissueError):
    """Bad input: malformed files, invalid configuration, impossible requests."""


class NumericalError(ToolTissueError):
    """Numerical failure while processing otherwise valid input."""


# --- input / usage errors (CLI exit code 2) ---------------------------------

class FormatError(InputError):
    """A file does not conform to its documented format."""


class ValidationError(InputError):
    """Structurally parseable input violates a semantic invariant."""


class EmptyInput(InputError):
    """An input file contains no data rows."""


class VersionMismatch(InputError):
    """A model file declares an unsupported format version."""


class NotFound(InputError):
    """A referenced file does not exist."""


class ConfigError(InputError):
    """Invalid configuration key or value."""


class LengthMismatch(InputError):
    """A train/test split is inconsistent with the dataset length."""


class DomainError(InputError):
    """An argument lies outside the documented domain."""


class UsageError(InputError):
    """Malformed command-line invocation."""


class InsufficientPoints(InputError):
    """Too few points for a principal-axis fit."""


class InsufficientClusters(InputError):
    """Too few cluster statistics to build a reference frame."""


class TooFewPoints(InputError):
    """Fewer datapoints than requested clusters or mixture components."""


class MissingLabels(InputError):
    """Labeled clustering requested but a tissue sample carries no label."""


class MissingToolLandmarks(InputError):
    """A frame lacks the visible tool landmarks needed for a pose."""


class EmptyCluster(InputError):
    """A Gaussian was requested for an empty cluster."""


# --- numerical errors (CLI exit code 3) --------------------------------------

class DegenerateConfiguration(NumericalError):
    """Point configuration has no defined principal axis (zero covariance)."""


class EmptyClusterError(NumericalError):
    """k-means still produced an empty cluster after one re-seed."""


class UnwrapError(NumericalError):
    """Consecutive relative angles jump by >= pi; unwrapping is ambiguous."""


class NumericalCollapse(NumericalError):
    """A mixture component died during EM and re-seeding did not revive it."""
