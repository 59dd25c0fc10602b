"""Exception types shared across the package."""


class DegenerateGeometryError(ValueError):
    """A transmitter/receiver pair is (numerically) co-located, so the path
    gain would diverge. Carries the offending pair indices."""

    def __init__(self, pairs):
        self.pairs = list(pairs)
        super().__init__(f"zero tx-rx distance for pairs {self.pairs}")


class NumericalDegeneracyError(ArithmeticError):
    """An update denominator collapsed below its guard threshold."""


class UnsupportedSizeError(ValueError):
    """Problem size exceeds what this operation is meant for."""


class ParamFileError(ValueError):
    """A parameter/checkpoint file is malformed or version-incompatible."""
