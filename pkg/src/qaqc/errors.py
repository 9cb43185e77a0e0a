"""Exception types shared across the package."""


class CapacityError(Exception):
    """Requested register or matrix exceeds the simulator's memory bounds."""


class UnsupportedGateError(Exception):
    """A sequence transform has no rule for this gate kind (or alphabet)."""


class CircuitParseError(ValueError):
    """Malformed circuit or config document.

    ``line``/``column`` locate JSON syntax errors; ``field`` names the
    offending entry for schema violations. Either may be None.
    """

    def __init__(self, message, line=None, column=None, field=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}, column {column})"
        elif field is not None:
            loc = f" (field {field!r})"
        super().__init__(message + loc)
        self.line = line
        self.column = column
        self.field = field
