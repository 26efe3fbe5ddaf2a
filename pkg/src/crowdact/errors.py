"""Error types that the CLI maps onto exit codes."""


class InputError(ValueError):
    """Malformed or inconsistent input data (CLI exit code 1)."""


class ConfigError(ValueError):
    """Bad configuration, rules, or label-set file (CLI exit code 2)."""
