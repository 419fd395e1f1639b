"""Exception types shared across skylite components."""


class SkyliteError(Exception):
    """Base class for all skylite errors."""


# --- simulator ---

class QuotaExceeded(SkyliteError):
    """Admission control rejected an invocation."""


class PayloadTooLarge(SkyliteError):
    """Request payload exceeds the platform limit."""


class NoSuchKey(SkyliteError):
    """Object key does not exist."""


class RangeUnsatisfiable(SkyliteError):
    """Requested byte range falls outside the object."""


class RequestFailed(SkyliteError):
    """Injected transient failure of a single storage request."""


# --- storage / format ---

class CorruptFile(SkyliteError):
    """Columnar file failed structural validation or decoding."""


class SchemaMismatch(SkyliteError):
    """Batch does not match the declared schema."""


class UnknownColumn(SkyliteError):
    """Referenced column does not exist."""


class UnknownTable(SkyliteError):
    """Referenced table is not in the catalog."""


class FetchFailed(SkyliteError):
    """A planned range read exhausted its retry budget."""


# --- frontend ---

class SqlSyntaxError(SkyliteError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class TypeMismatch(SkyliteError):
    """Expression operands have incompatible types."""


class UngroupedColumn(SkyliteError):
    """Select references a column absent from GROUP BY."""


class NotSupported(SkyliteError):
    """SQL construct outside the supported grammar."""


# --- execution ---

class OutOfBudget(SkyliteError):
    """Worker exceeded its memory budget (signals data skew)."""


class QueryAborted(SkyliteError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason
