"""Exception hierarchy shared by all modules."""


class EcdlpQuboError(Exception):
    """Base class for every error raised by this package."""


class ZeroInverse(EcdlpQuboError, ZeroDivisionError):
    pass


class InvalidCurve(EcdlpQuboError, ValueError):
    pass


class PointNotOnCurve(EcdlpQuboError, ValueError):
    pass


class CapExceeded(EcdlpQuboError):
    pass


class DegeneratePower(EcdlpQuboError):
    pass


class NotInSubgroup(EcdlpQuboError):
    pass


class ShiftedTargetAtInfinity(EcdlpQuboError):
    """Q + [shift]P is the point at infinity; the answer is known classically."""

    def __init__(self, shift: int, answer: int):
        super().__init__(
            f"Q + [{shift}]P is the point at infinity; y = {answer} classically"
        )
        self.shift = shift
        self.answer = answer


class UnencodableChain(EcdlpQuboError):
    pass


class UnassignedVariable(EcdlpQuboError, KeyError):
    def __init__(self, index: int):
        super().__init__(index)
        self.index = index

    def __str__(self) -> str:
        return f"variable u{self.index} has no value in the assignment"


class LengthMismatch(EcdlpQuboError, ValueError):
    pass


class ParseError(EcdlpQuboError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class HeaderMismatch(ParseError):
    pass
