"""Double vs extended precision.

Extended mode runs the moment / recurrence / eigen pipeline in mpmath at
``EXTENDED_DPS`` significant digits, which covers double-double (~31 digits)
with a few guard digits.
"""

from enum import Enum

import mpmath

EXTENDED_DPS = 34


class Precision(str, Enum):
    DOUBLE = "double"
    EXTENDED = "extended"


def as_precision(value):
    if isinstance(value, Precision):
        return value
    try:
        return Precision(str(value).lower())
    except ValueError:
        from .errors import ValidationError

        raise ValidationError(
            f"precision must be 'double' or 'extended', got {value!r}"
        ) from None


def extended():
    """Context manager giving an mpmath context at extended precision."""
    return mpmath.workdps(EXTENDED_DPS)
