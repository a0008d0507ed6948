"""Exception hierarchy shared by all modules."""


class CiconiaError(Exception):
    """Base class for every error raised by this package."""


class ExprSyntaxError(CiconiaError):
    """Malformed expression source; carries the offending position."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownIdentifier(CiconiaError):
    def __init__(self, name, position=None):
        at = f" (at position {position})" if position is not None else ""
        super().__init__(f"unknown identifier '{name}'{at}")
        self.name = name


class PoleError(CiconiaError):
    """Division by an exactly-zero value during evaluation."""


class DomainError(CiconiaError):
    """Point outside a chart domain, or log/sqrt of an invalid argument."""


class RealityError(CiconiaError):
    """A quantity required to be real carries a non-negligible imaginary part."""


class NotHolomorphic(CiconiaError):
    """Weight declared holomorphic has a nonzero antiholomorphic derivative."""


class NotAnIsometry(CiconiaError):
    """Candidate base map fails the conformal-factor isometry test."""


class CurvatureMismatch(CiconiaError):
    """Chart curvature incompatible with the requested solution case."""


class PositivityViolation(CiconiaError):
    """Parameters fail the positivity gates (f > 0, delta > 0) of a Kahler case."""


class ParameterGate(CiconiaError):
    """Family parameters outside their admissible range."""


class NonPositiveDelta(CiconiaError):
    """delta = f*h - |a|^2 is not positive where a positive-definite metric is required."""


class DegenerateMetric(CiconiaError):
    """|det G| below the trust threshold for curvature computations."""


class ExponentFitUnstable(CiconiaError):
    """Log-log endpoint fit residual too large to classify the integral."""


class RankDeficientGenerators(CiconiaError):
    """Commutant dimension changed when generators were added; resample."""


class ConfigError(CiconiaError):
    """Invalid run configuration (CLI or config file)."""

    def __init__(self, message, field=None):
        where = f" [field: {field}]" if field else ""
        super().__init__(f"{message}{where}")
        self.field = field
