"""Exception hierarchy shared by every module.

Library code raises; only the CLI turns errors into exit statuses:

    2  the weight spec or an argument is invalid
    3  the request falls outside its regime or a numeric step failed
    4  a resource guard (tree size, enumeration size) refused the work
"""


class CascadeError(Exception):
    """Base class. ``exit_code`` is what the CLI exits with."""
    exit_code = 1


# -- Spec and argument errors (exit 2) ------------------------------------


class SpecError(CascadeError):
    exit_code = 2


class MeanNotOne(SpecError):
    """E(sum of W_i) differs from 1 beyond tolerance."""


class BadProbabilities(SpecError):
    """Atom probabilities outside (0, 1] or not summing to 1."""


class BranchingTooSmall(SpecError):
    """b < 2."""


class BadSpecFile(SpecError):
    """The spec document is not in the published JSON format."""


class InvalidArgument(CascadeError):
    exit_code = 2


class WordTooDeep(InvalidArgument):
    """A word is longer than the requested level."""


class NotMonotone(InvalidArgument):
    """A path that must be real and nondecreasing is not."""


class AllCellsZero(InvalidArgument):
    """Every oscillation at some level vanished."""


class DegenerateCells(InvalidArgument):
    """No usable (nonzero) cells were left for a regression."""


class DegenerateTail(InvalidArgument):
    """A residual ensemble with tail 0 is identically zero."""


# -- Numerical and regime errors (exit 3) ---------------------------------


class NumericalError(CascadeError):
    exit_code = 3


class NonFinitePhi(NumericalError):
    """phi_W is infinite where a finite value is required."""


class NonFiniteMoment(NumericalError):
    """A moment needed by the computation diverges."""


class RegimeError(CascadeError):
    exit_code = 3


class WrongRegime(RegimeError):
    """The quantity is only defined under another regime."""


class ComplexSpec(RegimeError):
    """The computation needs real-valued weights."""


class DenominatorNotPositive(RegimeError):
    """A fixed-point moment recursion has a vanishing or negative pivot."""


# -- Resource guards (exit 4) ---------------------------------------------


class ResourceError(CascadeError):
    exit_code = 4


class DepthTooLarge(ResourceError):
    """b**depth exceeds the node limit without an override."""


class TooManyCombinations(ResourceError):
    """Exhaustive enumeration would exceed its combination limit."""
