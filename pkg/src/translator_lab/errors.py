"""Exception hierarchy shared by all modules."""


class LabError(Exception):
    """Base class for every error raised by translator_lab."""


class InvalidJetError(LabError, ValueError):
    pass


class InvalidParameterError(LabError, ValueError):
    pass


class UnsupportedCodimensionError(LabError, ValueError):
    pass


class FrameError(LabError, ArithmeticError):
    pass


class InvalidTangentError(LabError, ValueError):
    pass


class InsufficientSamplesError(LabError, ValueError):
    pass


class DomainError(LabError, ValueError):
    pass


class AccuracyError(LabError, ValueError):
    pass


class InvalidWindowError(LabError, ValueError):
    pass


class VerificationFailure(LabError):
    """A model failed one of its identity checks.

    ``report`` carries the full check summary and ``worst`` the name and
    location of the largest violation.
    """

    def __init__(self, message, report=None, worst=None):
        super().__init__(message)
        self.report = report
        self.worst = worst


class ResolutionError(LabError, ValueError):
    pass


class BlowUpError(LabError, ArithmeticError):
    def __init__(self, message, state=None, step=None):
        super().__init__(message)
        self.state = state
        self.step = step


class MonitorViolation(LabError):
    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class InvalidPointError(LabError, ValueError):
    pass


class SolverError(LabError, ArithmeticError):
    pass


class ConditionError(LabError, ValueError):
    pass


class UndefinedPowerError(LabError, ValueError):
    pass


class ConfigError(LabError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
