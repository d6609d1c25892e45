"""Error types. Each carries the CLI exit code it maps to."""


class ThinFilmError(Exception):
    exit_code = 2


class ValidationError(ThinFilmError):
    exit_code = 2


class NumericalGuard(ThinFilmError):
    exit_code = 3


class DomainError(ValidationError, ValueError):
    pass


class BranchError(ValidationError, ValueError):
    pass


class OrderError(ValidationError, ValueError):
    pass


class EvalError(ValidationError, ValueError):
    pass


class GridMismatch(ValidationError, ValueError):
    pass


class IntegrabilityError(ValidationError, ValueError):
    pass


class MonotonicityError(ValidationError, ValueError):
    pass


class CoverageError(ValidationError, ValueError):
    pass


class IncompleteTrajectory(ValidationError, ValueError):
    pass


class NoAdmissibleP(ValidationError, ValueError):
    pass


class TailError(NumericalGuard, ArithmeticError):
    pass


class DegenerateState(NumericalGuard, ArithmeticError):
    pass


class NoContraction(NumericalGuard, ArithmeticError):
    pass


class StepError(NumericalGuard, ArithmeticError):
    pass


class LinAlgError(NumericalGuard, ArithmeticError):
    pass


class EigFailure(NumericalGuard, ArithmeticError):
    pass


class IllConditioned(NumericalGuard, ArithmeticError):
    pass
