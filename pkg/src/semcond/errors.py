"""Exception types shared across the package.

The CLI maps these onto exit codes, so the split matters: anything that is
the caller's fault (bad file, bad graph, label that violates the constraint)
derives from :class:`InputError`, while runtime numerical trouble derives
from :class:`NumericError`.
"""


class SemcondError(Exception):
    """Base class for all package-specific errors."""


class InputError(SemcondError):
    """Invalid user-supplied data: files, graphs, labels, dimensions."""


class NumericError(SemcondError):
    """A computation produced non-finite values or diverged."""


class FormulaParseError(InputError):
    """Syntax or variable-range error while parsing a formula string."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class EnumerationCapError(InputError):
    """Raised when an exhaustive 2^k enumeration would be too large.

    Callers hitting this should compile the knowledge and use the
    junction-tree path instead of the brute-force one.
    """


class UnsatisfiableKnowledgeError(InputError):
    """The constraint admits no label vector at all."""


class NullDistributionError(SemcondError):
    """An operation needed a normalizable distribution but total mass is zero."""


class GraphCycleError(InputError):
    """The hierarchy edges of a HEX graph contain a directed cycle."""


class HexFormatError(InputError):
    """Structurally invalid HEX graph input (duplicate nodes, bad edges)."""


class TreewidthCapError(InputError):
    """Compilation produced a clique too large for exact inference."""


class InconsistentLabelError(InputError):
    """A label vector violates the constraint it is paired with."""


class UnattainableAccuracyError(InputError):
    """Requested accuracy is at or above the curve's asymptote."""


class FitInputError(InputError):
    """Scaling-curve fit input is degenerate (too few or collinear points)."""


class DivergenceError(NumericError):
    """Training or optimization produced non-finite loss values."""
