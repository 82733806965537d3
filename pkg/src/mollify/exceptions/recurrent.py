from mollify.exceptions.base import MollifyValueError


class GateTargetError(MollifyValueError):
    """
    A gate target lies outside the range of the gate activation.
    """
