from typing import Optional

from vano.constants import EXIT_DATA_FORMAT, EXIT_NUMERICAL, EXIT_USAGE


class VanoError(Exception):
    exit_code: int = 1


class ConfigError(VanoError, ValueError):
    exit_code = EXIT_USAGE


class DimensionError(ConfigError):
    pass


class ContractError(VanoError):
    exit_code = EXIT_USAGE


class InputError(VanoError, ValueError):
    exit_code = EXIT_USAGE


class UnsupportedError(VanoError):
    exit_code = EXIT_USAGE


class DatasetFormatError(VanoError):
    exit_code = EXIT_DATA_FORMAT

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class NumericalError(VanoError, ArithmeticError):
    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, tensor: Optional[str] = None):
        self.tensor = tensor
        super().__init__(message)
