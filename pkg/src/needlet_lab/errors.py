"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid parameter or configuration key. CLI maps this to exit code 2."""


class DegenerateRegimeError(ValueError):
    """Scale/weight regime that cannot carry a needlet system (empty band,
    non-increasing centers, no admissible level). CLI maps this to exit code 3."""
