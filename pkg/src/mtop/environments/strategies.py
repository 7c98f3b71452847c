"""Vaccine-allocation strategies: one vaccine type (or none) per age group."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

AGE_GROUPS = ("children", "youngsters", "young_adults", "adults", "elderly")
AGE_LABELS = ("Children 0-4", "Youngsters 5-18", "Young adults 19-25", "Adults 26-64", "Elderly 65+")
N_GROUPS = len(AGE_GROUPS)


class Vaccine(enum.IntEnum):
    NONE = 0
    MRNA = 1
    VECTOR = 2

    @property
    def short(self) -> str:
        return {Vaccine.NONE: "-", Vaccine.MRNA: "mRNA", Vaccine.VECTOR: "vector"}[self]


@dataclass(frozen=True)
class VaccineStrategy:
    """Vaccine type per age group, ordered children -> elderly.

    ``code`` is the base-3 number whose least-significant digit is the
    children entry (none=0, mRNA=1, vector=2).
    """

    assignment: tuple[Vaccine, ...]

    def __post_init__(self):
        if len(self.assignment) != N_GROUPS:
            raise ValueError(f"a strategy assigns exactly {N_GROUPS} groups")
        object.__setattr__(self, "assignment", tuple(Vaccine(v) for v in self.assignment))

    @property
    def code(self) -> int:
        return sum(int(v) * 3**i for i, v in enumerate(self.assignment))

    @classmethod
    def from_code(cls, code: int) -> "VaccineStrategy":
        if not 0 <= code < 3**N_GROUPS:
            raise ValueError(f"strategy code {code} outside [0, {3**N_GROUPS})")
        digits = []
        for _ in range(N_GROUPS):
            code, d = divmod(code, 3)
            digits.append(Vaccine(d))
        return cls(tuple(digits))

    @property
    def uses_both_types(self) -> bool:
        return Vaccine.MRNA in self.assignment and Vaccine.VECTOR in self.assignment

    def groups_with(self, vaccine: Vaccine) -> list[int]:
        return [g for g, v in enumerate(self.assignment) if v == vaccine]

    def label(self) -> str:
        return "/".join(v.short for v in self.assignment)


@lru_cache(maxsize=None)
def _all_valid() -> tuple[VaccineStrategy, ...]:
    return tuple(
        s for s in (VaccineStrategy.from_code(c) for c in range(3**N_GROUPS)) if s.uses_both_types
    )


def enumerate_strategies() -> list[VaccineStrategy]:
    """All strategies that use both vaccine types, in increasing code order (180 of them)."""
    return list(_all_valid())
