import json
from typing import Any, Optional

from pydantic import BaseModel, Field, field_validator

TOOLKIT_VERSION = "1.0.0"
REPORT_SCHEMA_VERSION = 1


class RunConfig(BaseModel):
    """Parameters of one CLI invocation; recorded in every report"""

    command: str
    n_values: list[int] = Field(default_factory=lambda: [1, 2, 3, 4])
    precision: int = Field(default=4, gt=0)
    max_order: int = Field(default=3**20, gt=0)
    threads: int = Field(default=1, gt=0)
    json_path: Optional[str] = None
    csv_path: Optional[str] = None
    seed: int = 20060216
    profile: str = "default"
    extra: dict[str, Any] = Field(default_factory=dict)

    @field_validator("n_values")
    @classmethod
    def _nonempty(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("n range must not be empty")
        if any(n < 1 for n in value):
            raise ValueError("n values must be positive")
        return value


class AssertionRecord(BaseModel):
    name: str
    anchor: str
    expected: str
    actual: str
    passed: bool

    @classmethod
    def check(cls, name: str, anchor: str, expected: Any, actual: Any) -> "AssertionRecord":
        """Record comparing expected and actual by equality"""
        return cls(name=name, anchor=anchor, expected=str(expected), actual=str(actual), passed=expected == actual)

    @classmethod
    def verdict(cls, name: str, anchor: str, passed: bool, detail: str = "") -> "AssertionRecord":
        """Record for a boolean check"""
        return cls(name=name, anchor=anchor, expected="true", actual=detail or str(passed).lower(), passed=passed)

    @classmethod
    def failure(cls, name: str, anchor: str, error: Exception) -> "AssertionRecord":
        return cls(name=name, anchor=anchor, expected="completed", actual=f"{type(error).__name__}: {error}", passed=False)


class Report(BaseModel):
    toolkit_version: str = TOOLKIT_VERSION
    schema_version: int = REPORT_SCHEMA_VERSION
    command: str
    config: RunConfig
    records: list[AssertionRecord] = Field(default_factory=list)
    timings: dict[str, float] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def add(self, record: AssertionRecord):
        self.records.append(record)

    def extend(self, records):
        self.records.extend(records)

    def to_json(self, include_timings: bool = True) -> str:
        data = self.model_dump(exclude=None if include_timings else {"timings"})
        data["passed"] = self.passed
        return json.dumps(data, indent=2, sort_keys=True)

    def summary_lines(self) -> list[str]:
        lines = []
        for r in self.records:
            mark = "PASS" if r.passed else "FAIL"
            lines.append(f"[{mark}] {r.name} ({r.anchor}): expected {r.expected}, got {r.actual}")
        total = len(self.records)
        failed = sum(1 for r in self.records if not r.passed)
        lines.append(f"{self.command}: {total - failed}/{total} passed")
        return lines
