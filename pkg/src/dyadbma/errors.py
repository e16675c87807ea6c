"""Exception hierarchy shared by the pipeline, engines and CLI."""


class DyadBMAError(Exception):
    """Base class for every error raised by this package."""


class InputError(DyadBMAError):
    """Bad input data or configuration (CLI exit code 2)."""


class ParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(InputError):
    pass


class IntegrityError(InputError):
    pass


class SpecError(InputError):
    pass


class EmptyResultError(InputError):
    pass


class InsufficientDataError(InputError):
    pass


class ConfigurationError(InputError):
    pass


class NumericalError(DyadBMAError):
    """Numerical failure inside an engine (CLI exit code 3)."""
