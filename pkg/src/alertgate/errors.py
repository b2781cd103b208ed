"""Exception hierarchy shared by every alertgate module."""


class AlertGateError(Exception):
    """Base class for all errors raised by alertgate."""


class ParseError(AlertGateError):
    """Malformed graph file or alert record."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class GraphValidationError(AlertGateError):
    """An attack graph violates one of its structural invariants."""


class InvalidParameterError(AlertGateError, ValueError):
    """A filter or generator parameter is out of range."""


class TimeRegressionError(AlertGateError):
    """An alert timestamp went backwards by more than the tolerated slack."""

    def __init__(self, message, alert_id=None):
        if alert_id is not None:
            message = f"alert {alert_id}: {message}"
        super().__init__(message)
        self.alert_id = alert_id


class ScenarioError(AlertGateError):
    """A scenario cannot be rendered against the given flood or graph."""
