"""Exception types raised across the package."""


class HyperCtrlError(Exception):
    """Base class for all errors raised by :mod:`hyperctrl`."""


class InvalidSpeed(HyperCtrlError, ValueError):
    """A speed profile vanishes or has the wrong sign for its family."""


class DomainMismatch(HyperCtrlError, ValueError):
    """A function is defined on the wrong interval for the operation."""


class TooLarge(HyperCtrlError, ValueError):
    """Dimension exceeds the configured enumeration bound."""


class IneligibleIndex(HyperCtrlError, ValueError):
    """Multi-index/row pair outside the range where the recurrence holds."""


class OutOfHorizon(HyperCtrlError, ValueError):
    """Query time lies outside the interval on which a trajectory is known."""


class HorizonMismatch(HyperCtrlError, ValueError):
    """Control horizon is shorter than the requested final time."""


class OutOfReductionWindow(HyperCtrlError, ValueError):
    """Final time outside ``[T*, T* + tau_min]`` for the control splitting."""


class FrequencyOutOfRange(HyperCtrlError, ValueError):
    """``|Re p| * tau_max`` is large enough to overflow ``exp``."""


class NotCommensurable(HyperCtrlError, ValueError):
    """Delays admit no common base within the requested tolerance."""


class NotSpectral(HyperCtrlError, ValueError):
    """Frequency is not (numerically) a point of the cycle lattice."""


class SpecFormatError(HyperCtrlError, ValueError):
    """Malformed system or graph description file."""
