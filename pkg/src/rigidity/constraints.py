"""Admissible index sets for rigidity sequences (rigidity along a set)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SequenceConstraint:
    """Membership rule for witness indices or times.

    ``form`` is ``"all"``, ``"arithmetic"`` (``n = r mod m``) or ``"explicit"``.
    The same rule applies to real times: arithmetic membership then means
    ``(t - r) / m`` is an integer up to ``time_tol``.
    """

    form: str = "all"
    modulus: float = 1
    residue: float = 0
    values: tuple = ()
    description: str = ""
    time_tol: float = 1e-9

    def __post_init__(self):
        if self.form not in ("all", "arithmetic", "explicit"):
            raise ValueError(f"unknown constraint form {self.form!r}")
        if self.form == "arithmetic" and self.modulus <= 0:
            raise ValueError("modulus must be positive")
        if not self.description:
            object.__setattr__(self, "description", self._describe())

    @classmethod
    def all(cls):
        return cls("all")

    @classmethod
    def arithmetic(cls, modulus, residue=0):
        if float(modulus).is_integer() and float(residue).is_integer():
            modulus, residue = int(modulus), int(residue) % int(modulus)
        return cls("arithmetic", modulus=modulus, residue=residue)

    @classmethod
    def explicit(cls, values):
        return cls("explicit", values=tuple(sorted(set(values))))

    @classmethod
    def parse_lane(cls, text: str):
        """Parse ``"m:r"`` (or bare ``"m"``) into an arithmetic lane."""
        m, _, r = text.partition(":")
        return cls.arithmetic(int(m), int(r or 0))

    def _describe(self):
        if self.form == "all":
            return "all n"
        if self.form == "arithmetic":
            return f"n = {self.residue} mod {self.modulus}"
        return f"explicit set of {len(self.values)} values"

    def contains(self, n) -> bool:
        return bool(self.mask(np.asarray([n]))[0])

    def mask(self, values) -> np.ndarray:
        v = np.asarray(values)
        if self.form == "all":
            return np.ones(v.shape, dtype=bool)
        if self.form == "arithmetic":
            if np.issubdtype(v.dtype, np.integer) and isinstance(self.modulus, int):
                return (v - self.residue) % self.modulus == 0
            q = (v - self.residue) / self.modulus
            return np.abs(q - np.round(q)) <= self.time_tol
        if np.issubdtype(v.dtype, np.integer):
            return np.isin(v, np.asarray(self.values, dtype=np.int64))
        vals = np.asarray(self.values, dtype=float)
        if vals.size == 0:
            return np.zeros(v.shape, dtype=bool)
        return np.min(np.abs(v[..., None] - vals), axis=-1) <= self.time_tol

    def members(self, lo: int, hi: int) -> np.ndarray:
        """Increasing admissible integers in ``[lo, hi]``."""
        if hi < lo:
            return np.zeros(0, dtype=np.int64)
        if self.form == "all":
            return np.arange(lo, hi + 1, dtype=np.int64)
        if self.form == "arithmetic" and isinstance(self.modulus, int):
            first = lo + (self.residue - lo) % self.modulus
            return np.arange(first, hi + 1, self.modulus, dtype=np.int64)
        if self.form == "explicit":
            vals = np.asarray([v for v in self.values if float(v).is_integer()], dtype=np.int64)
            return vals[(vals >= lo) & (vals <= hi)]
        n = np.arange(lo, hi + 1, dtype=np.int64)
        return n[self.mask(n.astype(float))]

    def to_dict(self) -> dict:
        out = {"form": self.form, "description": self.description}
        if self.form == "arithmetic":
            out.update(modulus=self.modulus, residue=self.residue)
        elif self.form == "explicit":
            out["values"] = list(self.values)
        return out

    @classmethod
    def from_dict(cls, data: dict):
        form = data.get("form", "all")
        if form == "arithmetic":
            return cls.arithmetic(data["modulus"], data.get("residue", 0))
        if form == "explicit":
            return cls.explicit(data["values"])
        return cls.all()
