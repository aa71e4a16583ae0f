"""Error taxonomy shared by all modules.

Four kinds: bad arguments, violated lemma hypotheses, numerical trouble, and
"this should be impossible" internal checks. The CLI maps the first two to
exit code 1 and the last two to exit code 2.
"""


class ConstlabError(Exception):
    pass


class InvalidInputError(ConstlabError, ValueError):
    """Arguments outside a documented domain."""


class PreconditionError(ConstlabError, ValueError):
    """A stated hypothesis (of a lemma or of a routine) does not hold."""


class NumericalFailureError(ConstlabError, ArithmeticError):
    """Floating-point result outside its provable range by more than slack."""


class InternalInconsistencyError(ConstlabError, RuntimeError):
    """A cross-check that must hold by construction failed."""
