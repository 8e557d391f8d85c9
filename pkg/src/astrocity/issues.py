"""Issue records shared by the registry checks, the solid checks and the validator."""

from __future__ import annotations

from dataclasses import asdict, dataclass

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Issue:
    code: str
    severity: str = ERROR
    object_id: str | None = None
    path: str = ""
    message: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def __str__(self) -> str:
        where = f" [{self.object_id}]" if self.object_id else ""
        path = f" at {self.path}" if self.path else ""
        return f"{self.severity.upper()} {self.code}{where}{path}: {self.message}"


def errors(issues) -> list[Issue]:
    return [i for i in issues if i.severity == ERROR]


def codes(issues, severity: str | None = ERROR) -> set[str]:
    return {i.code for i in issues if severity is None or i.severity == severity}
