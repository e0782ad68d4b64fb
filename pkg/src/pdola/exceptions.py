"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """An argument is out of range, non-finite or has the wrong shape."""


class NoReferenceError(LookupError):
    """No PUSCH or SRS transmission is available before the grant slot."""


class CalibrationError(RuntimeError):
    """MI2MCS calibration did not converge.

    ``diagnostics`` holds per-MCS details of the failing search.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
