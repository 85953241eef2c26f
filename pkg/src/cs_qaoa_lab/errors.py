"""Exception hierarchy shared by the library and the CLI."""


class CsQaoaError(Exception):
    """Base class for all errors raised by cs_qaoa_lab."""


class ConfigError(CsQaoaError, ValueError):
    """Invalid or inconsistent experiment configuration."""


class TrainingThresholdError(CsQaoaError):
    """Compressor training stayed below its survival-rate threshold."""

    def __init__(self, message: str, *, stage: int | None = None, p_sur: float | None = None):
        super().__init__(message)
        self.stage = stage
        self.p_sur = p_sur


class SizeCapError(CsQaoaError, ValueError):
    """Exhaustive enumeration requested above the supported width."""


class FullyDiscardedError(CsQaoaError):
    """Every optimizer start ended in a zero-probability projection."""


class DegenerateSpectrumError(CsQaoaError):
    """Compressed-space Hamiltonian kept a degenerate spectrum after redraws."""


class InstanceFormatError(CsQaoaError, ValueError):
    """Malformed instance file."""

    def __init__(self, message: str, *, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
