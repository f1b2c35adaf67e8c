from pydantic import BaseModel, ConfigDict, model_validator

from services.abelian import AbelianInvariants
from services.errors import PresentationError


class AQIConstraint(BaseModel):
    """Target abelian quotient invariants for a group and its maximal subgroups"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    whole: AbelianInvariants
    maximal: tuple[AbelianInvariants, ...]

    @model_validator(mode="after")
    def _maximal_count(self):
        d = self.whole.rank(3)
        expected = (3**d - 1) // 2
        if len(self.maximal) != expected:
            raise ValueError(f"{self.whole} has {expected} maximal subgroups, got {len(self.maximal)} targets")
        return self

    @classmethod
    def from_text(cls, text: str) -> "AQIConstraint":
        """Parse 'whole: 3,3' and 'max: 3,9 | 3,9 | 3,9 | 3,3,3' lines"""
        whole = None
        maximal = None
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition(":")
            key = key.strip().lower()
            if key == "whole":
                whole = AbelianInvariants.parse(value)
            elif key == "max":
                maximal = tuple(AbelianInvariants.parse(part) for part in value.split("|"))
            else:
                raise PresentationError(f"unknown constraint line {line!r}")
        if whole is None or maximal is None:
            raise PresentationError("constraint needs both 'whole:' and 'max:' lines")
        return cls(whole=whole, maximal=maximal)

    def to_text(self) -> str:
        def fmt(a: AbelianInvariants) -> str:
            return ",".join(str(v) for v in a.orders)

        return f"whole: {fmt(self.whole)}\nmax: " + " | ".join(fmt(m) for m in self.maximal) + "\n"
