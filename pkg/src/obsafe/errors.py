"""Exception types shared across the toolkit."""


class ObsafeError(Exception):
    """Base class for all toolkit errors."""


class ObserverDesignError(ObsafeError):
    """Observer design infeasible (e.g. observability test failed)."""


class ControlDesignError(ObsafeError):
    """Riccati/LQR design failed (non-stabilizable pair or divergence)."""


class ChannelSignError(ObsafeError):
    """A certified input-channel interval strictly contains zero."""

    def __init__(self, channel: int, lo: float, hi: float):
        self.channel = channel
        self.lo = lo
        self.hi = hi
        super().__init__(
            f"channel {channel} certified bound interval [{lo:.6g}, {hi:.6g}] "
            f"strictly contains 0: input direction is sign-indefinite"
        )


class BarrierSingularError(ObsafeError):
    """Barrier evaluated where it is undefined (obstacle center)."""


class ObserverBoundError(ObsafeError):
    """Observer error bound lost validity (P not positive definite)."""


class UnsafeStartError(ObsafeError):
    """Initial conditions outside the controller's safe-start set."""


class ScenarioError(ObsafeError):
    """Scenario file failed to parse or validate."""
