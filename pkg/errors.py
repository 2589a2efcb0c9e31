"""Exception hierarchy for the link engine.

Every class carries the process exit code the CLI maps it to. Config and
domain errors subclass ValueError so callers catching ValueError keep working.
"""


class FSQKDError(Exception):
    """Base class for all link-engine errors."""
    exit_code = 3


class ConfigError(FSQKDError, ValueError):
    """Invalid scenario, missing file, or unknown unit tag."""
    exit_code = 2


class ProfileFormatError(ConfigError):
    """A tabulated profile failed to parse or validate."""

    def __init__(self, message: str, line: int = None, source: str = None):
        self.line = line
        self.source = source
        where = []
        if source:
            where.append(source)
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{':'.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class DomainError(FSQKDError, ValueError):
    """Nonphysical or out-of-domain operating point."""
    exit_code = 3


class OutOfRangeError(DomainError):
    """A wavelength or notch lies outside the tabulated range."""


class SaturationError(DomainError):
    """Background click probability exceeds one."""


class UndefinedQBERError(DomainError):
    """No clicks at all, so the error rate is undefined."""


class DegenerateDecoyError(DomainError):
    """The decoy estimate left no positive single-photon yield."""


class BracketDomainError(DomainError):
    """Tracking residual alone exceeds the open-loop turbulence."""
