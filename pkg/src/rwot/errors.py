"""Exception types raised across the package."""


class RWOTError(Exception):
    """Base class for all package errors."""


class DimensionError(RWOTError, ValueError):
    """Point sets, shifts or mass vectors have incompatible shapes."""


class InvalidExponent(RWOTError, ValueError):
    """Cost exponent p is below 1."""


class InfeasibleMarginals(RWOTError, ValueError):
    """Source and target masses do not carry the same total."""


class KernelUnderflow(RWOTError, ArithmeticError):
    """A row or column of the Gibbs kernel product vanished during scaling.

    Raised instead of dividing by zero. Translating the inputs (see
    :func:`rwot.relative.rw2_sinkhorn`) or raising ``lam`` usually helps.
    """


class NumericalError(RWOTError, ArithmeticError):
    """A non-finite value appeared in a solver intermediate."""


class InvalidSamplerSpec(RWOTError, ValueError):
    pass


class EmptyImage(RWOTError, ValueError):
    pass


class PlacementError(RWOTError, ValueError):
    pass


class EmptyCorpus(RWOTError, ValueError):
    pass


class ParseError(RWOTError, ValueError):
    """Malformed input file. ``lineno`` is 1-based."""

    def __init__(self, message, path=None, lineno=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if lineno is not None:
                where += f":{lineno}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.lineno = lineno
