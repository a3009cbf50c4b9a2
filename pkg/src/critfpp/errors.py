"""Exception types shared across the package."""


class CritFppError(Exception):
    """Base class for all package-specific errors."""


class OutOfBoxError(CritFppError):
    """An edge or vertex lies outside the sampled box."""


class NoPathError(CritFppError):
    """No admissible path connects the source set to the target set."""


class BoxTooSmallError(CritFppError):
    """The requested computation needs a larger box than the field provides."""


class MemoryGuardError(CritFppError):
    """Refusing to allocate a field beyond the hard radius guard."""


class InsufficientGrowthError(CritFppError):
    """The invasion cluster has not grown past the requested scale."""


class NotReachedError(CritFppError):
    """Internal consistency failure: an expected connection is missing."""


class ScanCapExceededError(CritFppError):
    """No open circuit was found before hitting the annulus scan cap.

    ``box_limited`` distinguishes "the sampled box ended before the cap"
    (retry on a box of at least ``suggested_radius``) from "scanned the
    full cap and found nothing".
    """

    def __init__(self, message: str, *, box_limited: bool = False,
                 suggested_radius: int | None = None):
        super().__init__(message)
        self.box_limited = box_limited
        self.suggested_radius = suggested_radius


class AbortedAtCapError(CritFppError):
    """A search exceeded its size cap before meeting its stopping rule.

    Carries the cap and whatever crossing estimates were collected, so a
    caller can treat "aborted at cap n" as the verdict "longer than n".
    """

    def __init__(self, message: str, *, cap: int | None = None, probes=()):
        super().__init__(message)
        self.cap = cap
        self.probes = tuple(probes)


class DegenerateSampleError(CritFppError):
    """A sample has zero variance; standardization is undefined."""
