"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised for malformed system descriptions or experiment configs."""


class BlowUp(RuntimeError):
    """The state norm exceeded the blow-up threshold during integration."""

    def __init__(self, t_blow, threshold=None):
        self.t_blow = float(t_blow)
        self.threshold = threshold
        super().__init__(f"solution left the threshold ball near t={self.t_blow:.6g}")


class BudgetExhausted(RuntimeError):
    """Synthesis reached ``n_osc_max`` without meeting the error budget.

    The best report seen so far is attached as ``report``.
    """

    def __init__(self, report, message=None):
        self.report = report
        super().__init__(message or "error budget not met within n_osc_max")


class OrthantViolation(ValueError):
    """A smoothed motion-planning reference changes sign in some component."""
