"""Exception types shared across the package."""


class SraisError(Exception):
    """Base class for failures raised by this package."""


class CapabilityError(SraisError):
    """An operation was requested that the object does not support.

    Raised e.g. when drawing samples from a density that has no sampler,
    or when an unnormalized density is used where normalization matters.
    """


class DegenerateWeightsError(SraisError):
    """Importance weights collapsed, signalling total proposal/target mismatch."""


class ConfigError(SraisError):
    """Invalid run configuration.

    Collects every violated constraint so a bad config is reported once,
    with all problems listed.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


class VerificationError(SraisError):
    """A bound that holds exactly was violated numerically: implementation bug."""
