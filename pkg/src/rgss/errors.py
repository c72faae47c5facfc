"""Exception hierarchy. Each error carries a stable machine-readable ``code``."""


class RgssError(Exception):
    code = "rgss_error"
    status = 500

    def to_record(self):
        return {"code": self.code, "message": str(self)}


class ValidationError(RgssError, ValueError):
    """Input failed validation; ``path`` names the offending field."""

    code = "invalid_input"
    status = 422

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path

    def to_record(self):
        rec = super().to_record()
        if self.path:
            rec["path"] = self.path
        return rec


class TleFormatError(ValidationError):
    code = "invalid_tle"

    def __init__(self, message, line_number):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class NotFoundError(RgssError, KeyError):
    code = "not_found"
    status = 404

    def __str__(self):
        return str(self.args[0]) if self.args else "not found"


class NoTraversalError(NotFoundError):
    code = "no_traversal"


class PropagationError(RgssError):
    code = "propagation_failed"

    def __init__(self, message, satellite=None):
        super().__init__(message)
        self.satellite = satellite

    def to_record(self):
        rec = super().to_record()
        if self.satellite is not None:
            rec["satellite"] = self.satellite
        return rec


class StaleElementsError(PropagationError):
    code = "stale_elements"
    status = 503


class DecayedOrbitError(PropagationError):
    code = "decayed_orbit"


class OrbitUnavailableError(PropagationError):
    """Orbital data is excluded by a manual override for the requested time."""

    code = "orbit_excluded"
    status = 503


class FetchError(RgssError):
    code = "fetch_failed"
    status = 502
