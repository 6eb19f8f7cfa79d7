"""Exception types shared across the toolkit."""


class CKDError(Exception):
    """Base class for every error raised by ckdnet."""


class ShapeError(CKDError, ValueError):
    pass


class LabelError(CKDError, ValueError):
    pass


class NumericError(CKDError, ArithmeticError):
    pass


class DataError(CKDError):
    pass


class ConfigError(CKDError, ValueError):
    pass


class InputError(CKDError, ValueError):
    pass


class DegenerateError(InputError):
    """Curve requested for a class with no positives or no negatives."""


class BalanceError(CKDError):
    pass


class DecodeError(DataError):
    def __init__(self, message, filename=None):
        self.filename = filename
        if filename is not None:
            message = f"{filename}: {message}"
        super().__init__(message)


class FileError(CKDError, OSError):
    pass
