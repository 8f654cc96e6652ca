# core/exceptions.py


class FitzlabError(Exception):
    """Base class for every numerical or precondition failure in fitzlab"""


class DimensionMismatchError(FitzlabError, ValueError):
    """Operands live in spaces of different dimension"""


class IndeterminateFormError(FitzlabError, ArithmeticError):
    """(+inf) + (-inf) was requested from extended-real arithmetic"""


class PreconditionError(FitzlabError, ValueError):
    """An operation was called outside its stated precondition"""


class NonConvergenceError(FitzlabError):
    """An iterative solver hit its iteration cap without meeting its tolerance"""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SearchFailureError(FitzlabError):
    """A constructive search did not produce the promised witness"""


class R1ViolationError(FitzlabError):
    """sigma_{T-z}(p) < 0 while c(p) >= 0 on an operator claimed to be NI"""


class NIViolationError(FitzlabError):
    """A negative gap was met on an operator claimed to be NI"""


class DomainExitError(FitzlabError):
    """A segment walked by bisection left dom phi_T"""


class OperatorSpecError(FitzlabError, ValueError):
    """An operator spec file failed to parse or validate.

    `errors` maps field paths such as 'pieces[1].dir' to messages.
    """

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or {}
