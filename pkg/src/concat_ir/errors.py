"""Exception hierarchy shared by every module."""


class ConcatIRError(Exception):
    pass


class ParameterError(ConcatIRError, ValueError):
    """Invalid argument: out-of-range parameter, wrong length, bad shape."""


class ConsistencyError(ConcatIRError):
    """An internal exactness check failed. Indicates a bug, not bad input."""


class PlanningError(ConcatIRError):
    """The error-rate recursion does not contract or exceeded its round cap."""

    def __init__(self, message, round_index=None, rates=()):
        super().__init__(message)
        self.round_index = round_index
        self.rates = list(rates)


class KeyReuseError(ConcatIRError):
    """A one-time MAC key was used to tag a second message."""


class PacketError(ConcatIRError):
    pass


class BadMagicError(PacketError):
    pass


class BadVersionError(PacketError):
    pass


class TruncatedPacketError(PacketError):
    pass


class MalformedPacketError(PacketError):
    pass


class MacMismatchError(PacketError):
    pass


class ReconciliationAbort(ConcatIRError):
    """Bob gives up on the packet; the only signal that travels back to Alice."""


class AuthenticationAbort(ReconciliationAbort):
    pass


class QualityAbort(ReconciliationAbort):
    """The round-1 zero-syndrome fraction is below the gate threshold."""

    def __init__(self, message, zero_fraction=None, threshold=None):
        super().__init__(message)
        self.zero_fraction = zero_fraction
        self.threshold = threshold
