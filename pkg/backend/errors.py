"""Exception hierarchy shared by the backend and the command line.

Every error carries a ``status_code`` (the process exit code used by
``main.py``) and a human readable ``detail``.
"""


class EigencurveError(Exception):
    status_code = 3

    def __init__(self, detail: str, status_code: int | None = None):
        super().__init__(detail)
        self.detail = detail
        if status_code is not None:
            self.status_code = status_code


# Configuration family (exit code 2)
class ConfigError(EigencurveError):
    status_code = 2


class InvalidGeometry(ConfigError):
    pass


class AllZero(ConfigError):
    pass


class InvalidCoupling(ConfigError):
    pass


# Numerical family (exit code 3)
class NoConvergence(EigencurveError):
    pass


class NoPositivityCertificate(EigencurveError):
    pass


class DimensionTooLarge(EigencurveError):
    pass


class EmptyZeroSet(EigencurveError):
    pass


class BranchSplitFailed(EigencurveError):
    pass


class InconsistentCase(EigencurveError):
    pass


class NotSubcritical(EigencurveError):
    pass


class Indeterminate(EigencurveError):
    pass


class NonConvergence(EigencurveError):
    pass


class UniquenessGap(EigencurveError):
    pass


# Verification (exit code 1)
class VerificationFailed(EigencurveError):
    status_code = 1
