"""Exception types shared across the package."""


class KoopwendError(Exception):
    """Base class for all package-specific errors."""


class KernelConfigError(KoopwendError, ValueError):
    """Invalid kernel parameters (unsupported dimension/smoothness pair)."""


class FactorizationError(KoopwendError, RuntimeError):
    """Cholesky factorization failed even with maximum jitter."""


class ResourceLimitError(KoopwendError, RuntimeError):
    """A requested computation exceeds a configured size or memory budget."""


class IntegrationError(KoopwendError, RuntimeError):
    """Numerical flow produced a non-finite state."""


class ConfigError(KoopwendError, ValueError):
    """Experiment configuration is invalid; collects every violation found."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
