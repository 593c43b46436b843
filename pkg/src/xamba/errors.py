"""Exception types shared across the package."""


class XambaError(Exception):
    """Base class for all library errors."""


class ShapeError(XambaError, ValueError):
    """Tensor ranks or dimensions do not satisfy an operation's contract."""


class ParameterError(XambaError, ValueError):
    """An argument value is outside its documented domain."""


class GraphError(XambaError, ValueError):
    """Graph construction violated arity, acyclicity, or kind constraints."""


class RewriteError(XambaError, ValueError):
    """A rewrite pass met a node configuration it does not support."""


class NumericError(XambaError, ArithmeticError):
    """A computation produced a non-finite or otherwise invalid value."""


class CostError(XambaError, ValueError):
    """The cost model has no law for the requested node."""


class FormatError(XambaError, ValueError):
    """A serialized payload has a bad magic, version, or layout."""


class CorruptionError(FormatError):
    """A serialized payload is structurally inconsistent with its header."""
