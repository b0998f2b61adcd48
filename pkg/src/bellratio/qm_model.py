"""Quantum predictions for the two-channel cascade experiment.

Singles and coincidence probabilities per emitted pair, and their completion
to a normalized nine-cell outcome distribution that includes non-detection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import DomainError, InconsistentConfigError
from .geometry import DetectionGeometry, canonicalize_angle
from .outcomes import CELL_ORDER, DETECTED, Outcome

# Marginal/normalization tolerance for the completed distribution.
NORM_TOL = 1e-12
# Cells this close below zero are cancellation residue (e.g. eta = 1 with a
# full-sphere aperture, where every one-sided cell is exactly zero).
ROUNDOFF_TOL = 1e-15


@dataclass(frozen=True)
class Settings:
    """The six analyzer orientations, in degrees.

    ``a``, ``a_prime`` and ``r`` belong to polarizer 1; ``b``, ``b_prime``
    and ``s`` to polarizer 2.
    """

    a: float = 0.0
    a_prime: float = 60.0
    b: float = 120.0
    b_prime: float = 60.0
    r: float = 0.0
    s: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise DomainError(f"setting {f.name} must be finite, got {value!r}")

    def __getitem__(self, name: str) -> float:
        return getattr(self, name)

    def to_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def rotated(self, delta: float) -> "Settings":
        return Settings(**{k: v + delta for k, v in self.to_dict().items()})

    def canonical(self) -> "Settings":
        return Settings(**{k: canonicalize_angle(v) for k, v in self.to_dict().items()})


@dataclass(frozen=True)
class ExperimentConfig:
    """Physical parameters of one experiment plus its analyzer settings."""

    eta: float = 0.2
    geometry: DetectionGeometry = field(default_factory=DetectionGeometry)
    visibility: float = 1.0
    settings: Settings = field(default_factory=Settings)
    pairs_per_setting: int = 1_000_000
    seed: int = 42

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise DomainError(f"eta must lie in (0, 1], got {self.eta!r}")
        if not (0.0 <= self.visibility <= 1.0):
            raise DomainError(f"visibility must lie in [0, 1], got {self.visibility!r}")
        if isinstance(self.pairs_per_setting, bool) or not isinstance(self.pairs_per_setting, int):
            raise DomainError("pairs_per_setting must be an integer")
        if self.pairs_per_setting < 1:
            raise DomainError(f"pairs_per_setting must be >= 1, got {self.pairs_per_setting}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    def replace(self, **changes) -> "ExperimentConfig":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return ExperimentConfig(**data)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """Build from the flat JSON document used by the CLI.

        Keys: eta, phi_deg, theta_deg, visibility, pairs_per_setting, seed and
        angles_deg {a, a_prime, b, b_prime, r, s}. Missing keys take defaults.
        """
        known = {"eta", "phi_deg", "theta_deg", "visibility", "pairs_per_setting", "seed", "angles_deg"}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        default = cls()
        angles = dict(data.get("angles_deg", {}))
        bad = set(angles) - set(Settings().to_dict())
        if bad:
            raise DomainError(f"unknown angle(s) in angles_deg: {', '.join(sorted(bad))}")
        geometry = DetectionGeometry.from_degrees(
            theta_deg=float(data.get("theta_deg", 180.0)),
            phi_deg=float(data.get("phi_deg", 30.0)),
        )
        return cls(
            eta=float(data.get("eta", default.eta)),
            geometry=geometry,
            visibility=float(data.get("visibility", default.visibility)),
            settings=Settings(**{k: float(v) for k, v in angles.items()}),
            pairs_per_setting=data.get("pairs_per_setting", default.pairs_per_setting),
            seed=data.get("seed", default.seed),
        )

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "phi_deg": math.degrees(self.geometry.phi),
            "theta_deg": math.degrees(self.geometry.theta),
            "visibility": self.visibility,
            "pairs_per_setting": self.pairs_per_setting,
            "seed": self.seed,
            "angles_deg": self.settings.to_dict(),
        }


@dataclass(frozen=True)
class CoincidenceProbs:
    """Per-pair probabilities of the four coincidence channels."""

    pp: float
    mm: float
    pm: float
    mp: float

    @property
    def total(self) -> float:
        return self.pp + self.mm + self.pm + self.mp

    @property
    def correlation(self) -> float:
        return self.pp + self.mm - self.pm - self.mp

    def get(self, x: Outcome, y: Outcome) -> float:
        return {
            (Outcome.PLUS, Outcome.PLUS): self.pp,
            (Outcome.MINUS, Outcome.MINUS): self.mm,
            (Outcome.PLUS, Outcome.MINUS): self.pm,
            (Outcome.MINUS, Outcome.PLUS): self.mp,
        }[(x, y)]

    def scaled(self, factor: float) -> "CoincidenceProbs":
        return CoincidenceProbs(self.pp * factor, self.mm * factor, self.pm * factor, self.mp * factor)

    def to_dict(self) -> dict[str, float]:
        return {"pp": self.pp, "mm": self.mm, "pm": self.pm, "mp": self.mp}


@dataclass(frozen=True)
class OutcomeDistribution:
    """Nine-cell joint distribution; ``cells[x, y]`` with x, y indexed by :class:`Outcome`."""

    cells: np.ndarray

    def __getitem__(self, key: tuple[Outcome, Outcome]) -> float:
        x, y = key
        return float(self.cells[x, y])

    def ordered(self) -> np.ndarray:
        """Cells flattened in the sampler order (++, +-, +0, -+, --, -0, 0+, 0-, 00)."""
        return np.array([self.cells[x, y] for x, y in CELL_ORDER])

    def marginal(self, side: int, outcome: Outcome) -> float:
        return float(self.cells[outcome, :].sum() if side == 1 else self.cells[:, outcome].sum())


@dataclass
class ValidationReport:
    ok: bool
    checked: int
    failing_delta_deg: float | None = None
    failing_cell: str | None = None
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checked": self.checked,
            "failing_delta_deg": self.failing_delta_deg,
            "failing_cell": self.failing_cell,
            "message": self.message,
        }


def singles_probability(config: ExperimentConfig) -> float:
    """Probability that a given channel (+ or -) on either side fires for one pair."""
    return config.eta * config.geometry.omega / (8.0 * math.pi)


def coincidence_scale(config: ExperimentConfig) -> float:
    """The setting-independent prefactor eta^2 (Omega/8pi)^2 g(theta, phi)."""
    q = config.geometry.omega / (8.0 * math.pi)
    return config.eta**2 * q * q * config.geometry.correlation()


def coincidence_arrays(config: ExperimentConfig, first, second):
    """Vectorized (same-channel, opposite-channel) coincidence probabilities.

    ``first`` and ``second`` are degrees and broadcast against each other.
    Returns ``(pp, pm)``; by symmetry ``mm == pp`` and ``mp == pm``.
    """
    k = coincidence_scale(config)
    c = np.cos(2.0 * np.radians(np.subtract(first, second)))
    fc = config.visibility * c
    return k * (1.0 + fc), k * (1.0 - fc)


def joint_probabilities(config: ExperimentConfig, first: float, second: float) -> CoincidenceProbs:
    """Coincidence probabilities for polarizer 1 at ``first`` and polarizer 2 at ``second`` (degrees)."""
    k = coincidence_scale(config)
    c = math.cos(2.0 * math.radians(first - second))
    same = k * (1.0 + config.visibility * c)
    opposite = k * (1.0 - config.visibility * c)
    return CoincidenceProbs(pp=same, mm=same, pm=opposite, mp=opposite)


def correlation(config: ExperimentConfig, first: float, second: float) -> float:
    """Unnormalized correlation pp + mm - pm - mp."""
    return joint_probabilities(config, first, second).correlation


def full_outcome_distribution(config: ExperimentConfig, first: float, second: float) -> OutcomeDistribution:
    """Complete the coincidences and singles to a normalized nine-cell distribution.

    One-sided cells are singles minus the coincidences already claimed; the
    double non-detection cell takes what is left. A negative cell is reported,
    never clamped.
    """
    joint = joint_probabilities(config, first, second)
    single = singles_probability(config)
    cells = np.zeros((3, 3))
    for x in DETECTED:
        for y in DETECTED:
            cells[x, y] = joint.get(x, y)
    for x in DETECTED:
        cells[x, Outcome.NONE] = single - cells[x, Outcome.PLUS] - cells[x, Outcome.MINUS]
        cells[Outcome.NONE, x] = single - cells[Outcome.PLUS, x] - cells[Outcome.MINUS, x]
    cells[Outcome.NONE, Outcome.NONE] = 0.0
    cells[Outcome.NONE, Outcome.NONE] = 1.0 - cells.sum()
    cells[(cells < 0.0) & (cells >= -ROUNDOFF_TOL)] = 0.0
    negative = [(x, y) for x, y in CELL_ORDER if cells[x, y] < 0.0]
    if negative:
        x, y = negative[0]
        raise InconsistentConfigError(
            f"cell p({x.symbol},{y.symbol}) = {cells[x, y]:.6g} is negative at "
            f"delta = {first - second:g} deg: the configured singles and coincidences "
            "are not jointly realizable (aperture too large for the small-solid-angle regime)"
        )
    return OutcomeDistribution(cells)


def validate_distribution(config: ExperimentConfig, step_deg: float = 1.0) -> ValidationReport:
    """Sweep the setting difference over [0, 180) and try to complete the distribution at each step."""
    n = int(round(180.0 / step_deg))
    for i in range(n):
        delta = i * step_deg
        try:
            full_outcome_distribution(config, delta, 0.0)
        except InconsistentConfigError as exc:
            cell = str(exc).split(" = ")[0].removeprefix("cell ")
            return ValidationReport(False, i + 1, delta, cell, str(exc))
        except Exception as exc:
            return ValidationReport(False, i + 1, delta, None, str(exc))
    return ValidationReport(True, n, message="distribution realizable at every checked delta")


def require_valid(config: ExperimentConfig) -> None:
    """Raise :class:`InconsistentConfigError` unless the config validates."""
    report = validate_distribution(config)
    if not report.ok:
        raise InconsistentConfigError(report.message)
