"""Outcome labels and the fixed setting-pair list used across the package."""

from __future__ import annotations

from enum import IntEnum


class Outcome(IntEnum):
    """Result of one photon reaching a two-channel analyzer."""

    PLUS = 0
    MINUS = 1
    NONE = 2

    @property
    def label(self) -> str:
        return ("plus", "minus", "none")[self]

    @property
    def symbol(self) -> str:
        return ("+", "-", "0")[self]

    @classmethod
    def from_label(cls, label: str) -> "Outcome":
        try:
            return {"plus": cls.PLUS, "minus": cls.MINUS, "none": cls.NONE}[label]
        except KeyError:
            raise ValueError(f"unknown outcome label {label!r}") from None


DETECTED = (Outcome.PLUS, Outcome.MINUS)

# Row-major order of the nine joint cells; the sampler's inverse CDF walks this.
CELL_ORDER = tuple((x, y) for x in Outcome for y in Outcome)

SIDE1_SETTINGS = ("a", "a_prime", "r")
SIDE2_SETTINGS = ("b", "b_prime", "s")

# (name, side-1 setting, side-2 setting). The first slot is always polarizer 1.
SETTING_PAIRS = (
    ("a_b", "a", "b"),
    ("a_bp", "a", "b_prime"),
    ("ap_b", "a_prime", "b"),
    ("ap_bp", "a_prime", "b_prime"),
    ("ap_s", "a_prime", "s"),
    ("r_bp", "r", "b_prime"),
    ("r_s", "r", "s"),
)
PAIR_NAMES = tuple(name for name, _, _ in SETTING_PAIRS)
PAIR_INDEX = {name: i for i, name in enumerate(PAIR_NAMES)}
