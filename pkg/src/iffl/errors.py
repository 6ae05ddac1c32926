"""Exception hierarchy shared by every module of the package."""


class IFFLError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(IFFLError, ValueError):
    """A parameter set or configuration value violates its invariants."""


class DomainError(IFFLError, ValueError):
    """A state or argument lies outside the domain of the model."""


class UnsupportedVariantError(IFFLError):
    """The requested operation is not defined for this model variant."""


class NumericalError(IFFLError):
    """A numerical procedure failed to produce a trustworthy result."""


class StiffnessError(NumericalError):
    """Adaptive step size fell below the underflow threshold."""

    def __init__(self, t: float, h: float):
        super().__init__(f"step size {h:.3e} underflow at t={t:.17g}; system too stiff for explicit RK")
        self.t = t
        self.h = h


class StepBudgetError(NumericalError):
    """The integrator used up its step budget before reaching t_end."""

    def __init__(self, t: float, n_steps: int):
        super().__init__(f"step budget of {n_steps} exhausted at t={t:.17g}; system likely stiff")
        self.t = t
        self.n_steps = n_steps


class InsufficientDataError(NumericalError):
    pass


class WrongExperimentError(IFFLError):
    """The trajectory does not carry the data the analysis needs."""


class ConfigError(IFFLError, ValueError):
    """Invalid experiment configuration text."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key
