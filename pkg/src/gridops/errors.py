"""Stable error codes and exception types shared by all service modules."""

from enum import Enum


class ErrorClass(Enum):
    """Failure categories a cache-update fallback rule can match on."""

    SOURCE_UNREACHABLE = "SOURCE_UNREACHABLE"
    SOURCE_MALFORMED = "SOURCE_MALFORMED"
    VALIDATION_FAILED = "VALIDATION_FAILED"
    TIMEOUT = "TIMEOUT"
    ANY = "ANY"


class GridOpsError(Exception):
    """Base error carrying a machine-readable code plus free-form details."""

    code = "INTERNAL"

    def __init__(self, message: str = "", **details):
        self.message = message or self.code
        self.details = details
        super().__init__(self.message)

    def __str__(self):
        if self.details:
            extras = ", ".join(f"{k}={v}" for k, v in sorted(self.details.items()))
            return f"{self.code}: {self.message} [{extras}]"
        return f"{self.code}: {self.message}"


class AdapterFailure(GridOpsError):
    """A failed view generation, classified for fallback-rule matching."""

    error_class = ErrorClass.ANY


class SourceUnreachable(AdapterFailure):
    code = "SOURCE_UNREACHABLE"
    error_class = ErrorClass.SOURCE_UNREACHABLE


class SourceMalformed(AdapterFailure):
    code = "SOURCE_MALFORMED"
    error_class = ErrorClass.SOURCE_MALFORMED


class ValidationFailed(AdapterFailure):
    code = "VALIDATION_FAILED"
    error_class = ErrorClass.VALIDATION_FAILED


class RefreshTimeout(AdapterFailure):
    code = "TIMEOUT"
    error_class = ErrorClass.TIMEOUT


class ConfigInvalid(GridOpsError):
    code = "CONFIG_INVALID"


class CycleDetected(ConfigInvalid):
    code = "CYCLE_DETECTED"


class ViewNotFound(GridOpsError):
    code = "VIEW_NOT_FOUND"


class ViewSuspended(GridOpsError):
    code = "VIEW_SUSPENDED"


class ContentOutdated(GridOpsError):
    code = "CONTENT_OUTDATED"


class ViewEmpty(GridOpsError):
    code = "VIEW_EMPTY"


class QueryParseError(GridOpsError):
    code = "QUERY_PARSE_ERROR"

    def __init__(self, message: str, position: int):
        super().__init__(message, position=position)
        self.position = position


class TopologyMalformed(GridOpsError):
    code = "TOPOLOGY_MALFORMED"


class SiteNotFound(GridOpsError):
    code = "SITE_NOT_FOUND"


class ContactMissing(GridOpsError):
    code = "CONTACT_MISSING"


class AlarmNotFound(GridOpsError):
    code = "ALARM_NOT_FOUND"


class IllegalTransition(GridOpsError):
    code = "ILLEGAL_TRANSITION"


class MaskCycle(GridOpsError):
    code = "MASK_CYCLE"


class MasterNotFound(GridOpsError):
    code = "MASTER_NOT_FOUND"


class CrossSiteMask(GridOpsError):
    code = "CROSS_SITE_MASK"


class AlarmNotLinkable(GridOpsError):
    code = "ALARM_NOT_LINKABLE"


class TicketNotFound(GridOpsError):
    code = "TICKET_NOT_FOUND"


class ImmutableField(GridOpsError):
    code = "IMMUTABLE_FIELD"


class MaxEscalationReached(GridOpsError):
    code = "MAX_ESCALATION_REACHED"


class TicketClosed(GridOpsError):
    code = "TICKET_CLOSED"


class TwinNotFound(GridOpsError):
    code = "TWIN_NOT_FOUND"


class ScriptInvalid(GridOpsError):
    code = "SCRIPT_INVALID"


class Unauthorized(GridOpsError):
    code = "UNAUTHORIZED"


class Forbidden(GridOpsError):
    code = "FORBIDDEN"
