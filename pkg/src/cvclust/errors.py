"""Exception hierarchy shared by every stage of the pipeline."""


class CVCError(Exception):
    """Base class for all library errors."""


class InputError(CVCError):
    """Malformed input data or configuration (CLI exit code 2)."""


class ParseError(InputError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class ParameterError(InputError, ValueError):
    pass


class DimensionError(CVCError, ValueError):
    pass


class SymmetryError(CVCError, ValueError):
    pass


class NumericalError(CVCError):
    """Pipeline or numerical failure (CLI exit code 1)."""


class SingularSystemError(NumericalError):
    pass


class ShiftCollisionError(NumericalError):
    pass


class DegenerateGraphError(NumericalError):
    pass


class PartitionError(NumericalError, ValueError):
    pass


class DegenerateDictionaryError(NumericalError):
    pass


class NoOverlapError(NumericalError):
    pass
