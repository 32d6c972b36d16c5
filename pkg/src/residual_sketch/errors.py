"""Exception hierarchy shared by every module in the package."""


class SketchError(Exception):
    """Base class for all errors raised by residual_sketch."""


class InvalidInput(SketchError, ValueError):
    """Non-finite data, out-of-range index or mismatched dimensions."""


class InvalidSpec(SketchError, ValueError):
    """A sketch or instance description that cannot be realized."""


class IncompatibleStates(SketchError, ValueError):
    """Attempt to merge sketches built from different specs or seeds."""


class UnsupportedP(SketchError, ValueError):
    """The vector residual machinery only handles p > 2."""


class NumericalFailure(SketchError, ArithmeticError):
    """A dense decomposition failed to converge."""


class ParseError(SketchError, ValueError):
    """Malformed dataset or stream file.

    ``lineno`` is 1-based and may be None when the problem is global
    (e.g. a count mismatch detected at end of file).
    """

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)
