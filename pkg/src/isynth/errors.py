"""Exception hierarchy shared by the whole kernel.

Every error that can be traced to a source location carries a SourceSpan so
the CLI and the session protocol can render ``file:line:col: message``.
"""


class IsynthError(Exception):
    def __init__(self, message, span=None):
        super().__init__(message)
        self.message = message
        self.span = span

    def render(self):
        if self.span is not None:
            s = self.span
            return f"{s.file}:{s.line}:{s.col}: {self.message}"
        return self.message


# reader
class LexError(IsynthError):
    pass


class ParseError(IsynthError):
    pass


# editor-form
class UnresolvedBinding(IsynthError):
    pass


class StateTypeError(IsynthError):
    pass


class UnknownField(IsynthError):
    pass


class UnserializableValue(IsynthError):
    pass


# expander
class UnboundMacro(IsynthError):
    pass


class ExpansionCycle(IsynthError):
    pass


class PhaseViolation(IsynthError):
    pass


class MalformedPattern(IsynthError):
    pass


class NotTopLevel(IsynthError):
    pass


class MissingElaborator(IsynthError):
    pass


class DuplicateState(IsynthError):
    pass


class BadProperty(IsynthError):
    pass


class ElaboratorError(IsynthError):
    pass


# evaluation / runtime
class EvaluationError(IsynthError):
    pass


class SandboxViolation(IsynthError):
    pass


class SyntaxDiagnostic(IsynthError):
    """Raised by user code via (syntax-error ...); a diagnostic, not a crash."""
