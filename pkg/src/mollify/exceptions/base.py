class MollifyException(Exception):
    """
    Base exception for the mollify library. Any exception raised from the modules of
    this library inherits from this class.
    """


class MollifyValueError(MollifyException):
    """
    Wrong argument value of correct type.
    """


class MollifyTypeError(MollifyException):
    """
    Wrong argument type.
    """


class MollifyValidationError(MollifyException):
    """
    An object is created with invalid values.
    """
