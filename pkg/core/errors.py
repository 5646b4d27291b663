from typing import Any, Dict, Optional


class VidSchedError(Exception):
    code = "vidsched-error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.code, "message": self.message, **self.details}


class InvalidDagError(VidSchedError):
    code = "invalid-dag"


class PatternError(VidSchedError):
    code = "invalid-pattern"


class TraceFormatError(VidSchedError):
    code = "trace-format"


class UnsupportedStructure(VidSchedError):
    code = "unsupported-structure"

    def __init__(self, message: str, witness: Optional[str] = None, node: Optional[int] = None):
        super().__init__(message, witness=witness, node=node)
        self.witness = witness
        self.node = node


class ScheduleError(VidSchedError):
    code = "schedule-error"


class OracleLimitError(VidSchedError):
    code = "oracle-limit"


class ConfigError(VidSchedError):
    code = "config-error"
