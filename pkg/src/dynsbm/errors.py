"""Exception types raised by dynsbm."""


class DynSBMError(ValueError):
    pass


class InvalidMembershipError(DynSBMError):
    pass


class DimensionMismatchError(DynSBMError):
    pass


class InvalidBasisError(DynSBMError):
    pass


class SingularDesignError(DynSBMError):
    pass


class InfeasibleFamilyError(DynSBMError):
    pass


class OracleLimitError(DynSBMError):
    """Raised when brute-force enumeration would exceed the configured limits."""

    def __init__(self, message, estimated_states=None):
        super().__init__(message)
        self.estimated_states = estimated_states


class InvalidSpecError(DynSBMError):
    pass
