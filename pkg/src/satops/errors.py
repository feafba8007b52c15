"""Error taxonomy shared by the library, CLI, and HTTP service.

Every error carries a stable ``code`` string (the class name) so the CLI
can print machine-readable errors and the API can embed them in response
bodies without string matching on messages.
"""


class SatopsError(Exception):
    """Base class for all domain errors raised by this package."""

    @property
    def code(self) -> str:
        return type(self).__name__


class NotFound(SatopsError):
    pass


# --- TLE / propagation ---------------------------------------------------

class LineCountError(SatopsError):
    pass


class ChecksumMismatch(SatopsError):
    pass


class MalformedField(SatopsError):
    def __init__(self, message: str, line_no: int, columns: tuple[int, int]):
        super().__init__(f"{message} (line {line_no}, columns {columns[0]}-{columns[1]})")
        self.line_no = line_no
        self.columns = columns


class DecayedOrbit(SatopsError):
    pass


class StaleElements(SatopsError):
    pass


class UnsupportedOrbit(SatopsError):
    """Element set outside the propagator's regime (deep-space period)."""


class OutOfEphemerisRange(SatopsError):
    pass


class OriginPoint(SatopsError):
    pass


# --- pass search ----------------------------------------------------------

class EmptyWindow(SatopsError):
    pass


class WindowTooLong(SatopsError):
    pass


class NeverAboveFive(SatopsError):
    pass


class TargetNotVisible(SatopsError):
    pass


# --- session store --------------------------------------------------------

class WindowOutOfRange(SatopsError):
    pass


class UnknownTemplate(SatopsError):
    pass


class NoCandidates(SatopsError):
    def __init__(self, message: str, request_id: int):
        super().__init__(message)
        self.request_id = request_id


class CandidateExpired(SatopsError):
    pass


class InvalidRequestState(SatopsError):
    pass


class AlreadyConfirmed(SatopsError):
    pass


class NoFreeAddressSlots(SatopsError):
    pass


class SessionInPast(SatopsError):
    pass


class SessionLocked(SatopsError):
    pass


class SlotNotAllocated(SatopsError):
    pass


class StoreUnavailable(SatopsError):
    pass


class StoreLockHeld(SatopsError):
    pass


# --- command template DSL ---------------------------------------------------

class TemplateError(SatopsError):
    """Base for template parse and render failures."""


class TemplateSyntaxError(TemplateError):
    def __init__(self, message: str, line: int, col: int = 1):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class UnclosedBlock(TemplateError):
    pass


class UnknownDirective(TemplateError):
    pass


class UnboundVariable(TemplateError):
    def __init__(self, name: str, line: int | None = None):
        at = f" (line {line})" if line is not None else ""
        super().__init__(f"unbound variable '{name}'{at}")
        self.name = name
        self.line = line


class TypeMismatch(TemplateError):
    pass


class TimeCursorRegression(TemplateError):
    pass


class MissingAbsoluteWait(TemplateError):
    """A command was emitted before any absolute wait set the time cursor."""


class EmptyQueuePop(TemplateError):
    pass


class LoopCapExceeded(TemplateError):
    pass


class OverlappingSessions(TemplateError):
    def __init__(self, message: str, session_id: int | str):
        super().__init__(message)
        self.session_id = session_id


class CmdGenerationError(TemplateError):
    def __init__(self, message: str, session_id: int | str, cause: TemplateError | None = None):
        super().__init__(message)
        self.session_id = session_id
        self.cause = cause


# --- station agent ----------------------------------------------------------

class SyncBeforeTrackEnd(SatopsError):
    pass
