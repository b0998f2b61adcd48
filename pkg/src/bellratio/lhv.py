"""Local realism side of the argument.

Contains the ten-variable algebraic inequality Z >= 0 with its case-split
minimizer and a brute-force oracle, deterministic local strategies obeying
the no-enhancement constraint, and the exhaustive vertex sweep that certifies
the -1 bound of both inequality forms.

Deterministic strategies suffice: numerator and denominator of each form are
affine in every per-lambda response probability, so their extremes over the
response box, and the extremes of their ratio over mixtures, sit at vertices.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Literal, Sequence

import numpy as np

from .bell_expressions import (
    LOCAL_BOUND,
    ProbabilityBundle,
    ardehali_denominator,
    ardehali_lhs,
    ardehali_numerator,
    expression22_lhs,
)
from .errors import DegenerateDenominatorError, DomainError, InvalidInstanceError
from .outcomes import DETECTED, SETTING_PAIRS, SIDE1_SETTINGS, SIDE2_SETTINGS, Outcome
from .qm_model import CoincidenceProbs

Expression = Literal["22", "28"]

# Samples per independent substream of verify_theorem. Fixed so the report
# does not depend on the worker count.
THEOREM_SHARD = 1 << 17


@dataclass(frozen=True)
class TheoremInstance:
    x1p: float
    x1m: float
    x2p: float
    x2m: float
    y1p: float
    y1m: float
    y2p: float
    y2m: float
    U: float
    V: float

    def __post_init__(self):
        check_instance(self)

    @property
    def A(self) -> float:
        return self.y1p - self.y1m

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


def check_instance(inst: TheoremInstance) -> None:
    xs = (inst.x1p, inst.x1m, inst.x2p, inst.x2m)
    ys = (inst.y1p, inst.y1m, inst.y2p, inst.y2m)
    if inst.U < 0 or inst.V < 0:
        raise InvalidInstanceError(f"U and V must be non-negative, got U={inst.U}, V={inst.V}")
    if any(not (0 <= x <= inst.U) for x in xs):
        raise InvalidInstanceError(f"x values {xs} must lie in [0, U={inst.U}]")
    if any(not (0 <= y <= inst.V) for y in ys):
        raise InvalidInstanceError(f"y values {ys} must lie in [0, V={inst.V}]")


def _z(x1p, x1m, x2p, x2m, y1p, y1m, y2p, y2m, U, V):
    # The nineteen terms, kept in their original order. Broadcasts over arrays.
    return (
        x1p * y1p + x1m * y1m - x1p * y1m - x1m * y1p
        + x1p * y2p + x1m * y2m - x1p * y2m - x1m * y2p
        + x2p * y1p + x2m * y1m - x2p * y1m - x2m * y1p
        - 2 * x2p * y2p - 2 * x2m * y2m
        + V * x2p + V * x2m + U * y2p + U * y2m + U * V
    )


def z_value(inst: TheoremInstance) -> float:
    check_instance(inst)
    return _z(*(getattr(inst, f.name) for f in fields(inst)))


def _check_ys(y1p, y1m, y2p, y2m, U, V):
    if U < 0 or V < 0:
        raise InvalidInstanceError(f"U and V must be non-negative, got U={U}, V={V}")
    if any(not (0 <= y <= V) for y in (y1p, y1m, y2p, y2m)):
        raise InvalidInstanceError(f"y values must lie in [0, V={V}]")


# Case id -> (x2p at U?, x2m at U?, x1p - x1m = +U?). Ordered as the sign
# pattern of (x2p coefficient, x2m coefficient, x1 coefficient) with True
# meaning "negative".
_CASES = {
    1: (False, False, False),
    2: (True, False, False),
    3: (False, True, False),
    4: (False, False, True),
    5: (True, True, False),
    6: (True, False, True),
    7: (False, True, True),
    8: (True, True, True),
}


def _case_minimum(case: int, A, y2p, y2m, U, V) -> float:
    if case == 1:
        return U * (-A + 2 * y2m + V)
    if case == 2:
        return 2 * U * (V + y2m - y2p)
    if case == 3:
        return 2 * U * (V - A)
    if case == 4:
        return U * (A + 2 * y2p + V)
    if case == 5:
        return U * (-2 * y2p - A + 3 * V)
    if case == 6:
        return 2 * U * (A + V)
    if case == 7:
        return 2 * U * (y2p - y2m + V)
    return U * (-2 * y2m + A + 3 * V)


def z_min_analytic(y1p, y1m, y2p, y2m, U, V):
    """Minimize Z over the x box by the eight-way sign split.

    Z is affine in x2p, x2m and in (x1p - x1m) with coefficients
    ``-2 y2p + A + V``, ``-2 y2m - A + V`` and ``A + y2p - y2m``. Each
    coefficient's sign picks one end of its interval. A coefficient that is
    exactly zero admits both ends; all matching cases are evaluated and the
    smallest closed form wins (lowest case id on ties).

    Returns ``(minimum, x_assignment, case_id)`` where the assignment is a
    dict with keys x1p, x1m, x2p, x2m.
    """
    _check_ys(y1p, y1m, y2p, y2m, U, V)
    A = y1p - y1m
    coeffs = (-2 * y2p + A + V, -2 * y2m - A + V, A + y2p - y2m)
    # each coefficient may be read as ">= 0" (False) and/or "< 0" (True)
    options = [(False, True) if c == 0 else ((True,) if c < 0 else (False,)) for c in coeffs]
    best = None
    for pattern in itertools.product(*options):
        case = next(k for k, v in _CASES.items() if v == pattern)
        value = _case_minimum(case, A, y2p, y2m, U, V)
        if best is None or value < best[0]:
            best = (value, case)
    value, case = best
    x2p_hi, x2m_hi, x1_plus = _CASES[case]
    assignment = {
        "x1p": U if x1_plus else 0.0,
        "x1m": 0.0 if x1_plus else U,
        "x2p": U if x2p_hi else 0.0,
        "x2m": U if x2m_hi else 0.0,
    }
    return value, assignment, case


def z_min_bruteforce(y1p, y1m, y2p, y2m, U, V, grid_step: float):
    """Minimize Z by direct evaluation on ``{0, step, ..., U}^4`` plus the 16 corners.

    Independent of the case analysis: it only calls the raw nineteen-term sum.
    Returns ``(minimum, argmin)`` with argmin keyed like :func:`z_min_analytic`.
    """
    if not grid_step > 0:
        raise DomainError(f"grid_step must be positive, got {grid_step!r}")
    _check_ys(y1p, y1m, y2p, y2m, U, V)
    axis = np.unique(np.concatenate([np.arange(0.0, U, grid_step), [0.0, U]]))
    axis = axis[axis <= U]
    g = np.meshgrid(axis, axis, axis, axis, indexing="ij")
    z = _z(*g, y1p, y1m, y2p, y2m, U, V)
    idx = np.unravel_index(int(np.argmin(z)), z.shape)
    argmin = {k: float(g[i][idx]) for i, k in enumerate(("x1p", "x1m", "x2p", "x2m"))}
    return float(z[idx]), argmin


@dataclass
class TheoremReport:
    samples: int
    seed: int
    violations: int
    min_z: float
    min_instance: dict
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "seed": self.seed,
            "violations": self.violations,
            "min_z": self.min_z,
            "min_instance": self.min_instance,
            "tolerance": self.tolerance,
            "ok": self.ok,
        }


_NAMES = ("x1p", "x1m", "x2p", "x2m", "y1p", "y1m", "y2p", "y2m", "U", "V")


def _theorem_shard(seed: int, shard: int, n: int, tol: float):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, shard])))
    # (0, 1] rather than [0, 1)
    U = 1.0 - rng.random(n)
    V = 1.0 - rng.random(n)
    xs = rng.random((4, n)) * U
    ys = rng.random((4, n)) * V
    z = _z(*xs, *ys, U, V)
    i = int(np.argmin(z))
    inst = dict(zip(_NAMES, [float(v) for v in (*xs[:, i], *ys[:, i], U[i], V[i])]))
    return int(np.count_nonzero(z < -tol)), float(z[i]), inst


def verify_theorem(samples: int, seed: int, workers: int = 1, tol: float = 1e-12) -> TheoremReport:
    """Sample random instances and check Z >= -tol on each.

    U, V are uniform on (0, 1]; x's uniform on [0, U]; y's uniform on [0, V].
    Samples are split into fixed-size shards, shard k drawing from the
    substream ``SeedSequence([seed, k])``, so the report is identical for any
    ``workers``.
    """
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    sizes = [min(THEOREM_SHARD, samples - start) for start in range(0, samples, THEOREM_SHARD)]
    jobs = [(seed, k, n, tol) for k, n in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda args: _theorem_shard(*args), jobs))
    else:
        results = [_theorem_shard(*args) for args in jobs]
    violations = sum(r[0] for r in results)
    # first shard wins ties, independent of completion order
    _, min_z, inst = min(results, key=lambda r: r[1])
    return TheoremReport(samples, seed, violations, min_z, inst, tol)


def corner_instances():
    """Binary points of {0, 1}^10 that satisfy the box constraints (289 of 1024)."""
    for bits in itertools.product((0.0, 1.0), repeat=10):
        try:
            yield TheoremInstance(*bits)
        except InvalidInstanceError:
            continue


def corner_check() -> dict:
    """Exact Z >= 0 check on every admissible binary point of {0, 1}^10.

    Points with some x > U or y > V lie outside the theorem's hypotheses and
    are counted as rejected rather than evaluated.
    """
    admissible = list(corner_instances())
    values = [z_value(inst) for inst in admissible]
    return {
        "enumerated": 2**10,
        "admissible": len(admissible),
        "rejected": 2**10 - len(admissible),
        "failures": sum(1 for v in values if v < 0),
        "min_z": min(values),
    }


@dataclass(frozen=True, order=True)
class DeterministicStrategy:
    """Local deterministic response for one value of the hidden variable.

    ``side1`` gives the outcomes at (a, a_prime, r); ``side2`` at
    (b, b_prime, s). Each side only ever sees its own setting.
    """

    side1: tuple[Outcome, Outcome, Outcome]
    side2: tuple[Outcome, Outcome, Outcome]

    def __post_init__(self):
        if not satisfies_no_enhancement(self):
            raise DomainError(f"strategy {self.describe()} detects at a or a' (b or b') while missing r (s)")

    def response(self, setting: str) -> Outcome:
        if setting in SIDE1_SETTINGS:
            return self.side1[SIDE1_SETTINGS.index(setting)]
        return self.side2[SIDE2_SETTINGS.index(setting)]

    def describe(self) -> str:
        s1 = ",".join(f"{k}:{o.symbol}" for k, o in zip(SIDE1_SETTINGS, self.side1))
        s2 = ",".join(f"{k}:{o.symbol}" for k, o in zip(SIDE2_SETTINGS, self.side2))
        return f"[{s1} | {s2}]"

    def to_dict(self) -> dict:
        return {
            "side1": {k: o.label for k, o in zip(SIDE1_SETTINGS, self.side1)},
            "side2": {k: o.label for k, o in zip(SIDE2_SETTINGS, self.side2)},
        }


def satisfies_no_enhancement(strategy: DeterministicStrategy) -> bool:
    """Deterministic form of the supplementary assumption: silence at r (s) forces silence at a, a' (b, b')."""
    for side in (strategy.side1, strategy.side2):
        if side[2] == Outcome.NONE and (side[0] != Outcome.NONE or side[1] != Outcome.NONE):
            return False
    return True


def _side_responses():
    out = []
    for ref in DETECTED:
        for first, second in itertools.product(Outcome, repeat=2):
            out.append((first, second, ref))
    out.append((Outcome.NONE, Outcome.NONE, Outcome.NONE))
    return sorted(out)


def enumerate_strategies() -> list[DeterministicStrategy]:
    """All 19 x 19 = 361 deterministic strategies allowed by the constraint, in canonical order."""
    sides = _side_responses()
    return [DeterministicStrategy(s1, s2) for s1 in sides for s2 in sides]


def _indicator(outcome: Outcome, target: Outcome) -> float:
    return 1.0 if outcome == target else 0.0


def instance_from_strategy(strategy: DeterministicStrategy) -> TheoremInstance:
    """Per-lambda response indicators at a, a', b, b' with U, V the detection indicators at r, s."""
    a, ap, r = strategy.side1
    b, bp, s = strategy.side2
    P, M = Outcome.PLUS, Outcome.MINUS
    return TheoremInstance(
        x1p=_indicator(a, P), x1m=_indicator(a, M),
        x2p=_indicator(ap, P), x2m=_indicator(ap, M),
        y1p=_indicator(b, P), y1m=_indicator(b, M),
        y2p=_indicator(bp, P), y2m=_indicator(bp, M),
        U=0.0 if r == Outcome.NONE else 1.0,
        V=0.0 if s == Outcome.NONE else 1.0,
    )


def joint_probability(strategy: DeterministicStrategy, first: str, second: str, x: Outcome, y: Outcome) -> float:
    """Joint probability for one lambda: the product of the two one-sided indicators."""
    return _indicator(strategy.response(first), x) * _indicator(strategy.response(second), y)


def strategy_bundle(strategy: DeterministicStrategy) -> ProbabilityBundle:
    P, M = Outcome.PLUS, Outcome.MINUS
    coinc = {}
    for name, first, second in SETTING_PAIRS:
        coinc[name] = CoincidenceProbs(
            pp=joint_probability(strategy, first, second, P, P),
            mm=joint_probability(strategy, first, second, M, M),
            pm=joint_probability(strategy, first, second, P, M),
            mp=joint_probability(strategy, first, second, M, P),
        )
    singles = {
        setting: (_indicator(strategy.response(setting), P), _indicator(strategy.response(setting), M))
        for setting in ("a_prime", "b_prime")
    }
    return ProbabilityBundle(coinc, singles)


@dataclass
class BoundReport:
    expression: str
    min_value: float
    argmin: DeterministicStrategy
    vertex_count: int
    evaluated: int
    attaining: int
    violations: int
    values: list[float]

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.min_value >= LOCAL_BOUND

    def to_dict(self) -> dict:
        return {
            "expression": self.expression,
            "min_value": self.min_value,
            "bound": LOCAL_BOUND,
            "argmin": self.argmin.to_dict(),
            "argmin_text": self.argmin.describe(),
            "vertex_count": self.vertex_count,
            "evaluated": self.evaluated,
            "attaining": self.attaining,
            "violations": self.violations,
            "all_vertices_pass": self.violations == 0,
            "ok": self.ok,
        }


def lhv_bound(expression: Expression) -> BoundReport:
    """Exhaustive sweep of the 361 vertices for one inequality form.

    For the ratio form every vertex is checked in the division-free form
    numerator + denominator >= 0; the minimum ratio is taken over vertices
    with a positive denominator. The first vertex in canonical order wins ties.
    """
    expression = str(expression)
    if expression not in ("22", "28"):
        raise DomainError(f"unknown expression {expression!r}; expected '22' or '28'")
    strategies = enumerate_strategies()
    values: list[float] = []
    best: tuple[float, DeterministicStrategy] | None = None
    violations = 0
    for strat in strategies:
        bundle = strategy_bundle(strat)
        if expression == "22":
            value = expression22_lhs(bundle).value
            if value < LOCAL_BOUND:
                violations += 1
        else:
            num, den = ardehali_numerator(bundle), ardehali_denominator(bundle)
            if num + den < 0:
                violations += 1
            if den <= 0:
                continue
            value = num / den
        values.append(value)
        if best is None or value < best[0]:
            best = (value, strat)
    attaining = sum(1 for v in values if v == best[0])
    return BoundReport(expression, best[0], best[1], len(strategies), len(values), attaining, violations, values)


@dataclass(frozen=True)
class LhvModel:
    """Finite mixture of deterministic strategies."""

    strategies: Sequence[DeterministicStrategy]
    weights: Sequence[float]

    def __post_init__(self):
        if len(self.strategies) != len(self.weights) or not self.strategies:
            raise DomainError("strategies and weights must be non-empty and of equal length")
        if any(w < 0 for w in self.weights):
            raise DomainError("weights must be non-negative")
        if not math.isclose(math.fsum(self.weights), 1.0, rel_tol=0.0, abs_tol=1e-12):
            raise DomainError(f"weights sum to {math.fsum(self.weights)!r}, not 1")
        for s in self.strategies:
            if not satisfies_no_enhancement(s):
                raise DomainError(f"strategy {s.describe()} breaks the no-enhancement constraint")

    def bundle(self) -> ProbabilityBundle:
        """Ensemble probabilities: weight-averaged per-strategy probabilities."""
        parts = [strategy_bundle(s) for s in self.strategies]
        coinc = {}
        for name, _, _ in SETTING_PAIRS:
            acc = {"pp": 0.0, "mm": 0.0, "pm": 0.0, "mp": 0.0}
            for w, b in zip(self.weights, parts):
                for k, v in b.pair(name).to_dict().items():
                    acc[k] += w * v
            coinc[name] = CoincidenceProbs(**acc)
        singles = {}
        for setting in ("a_prime", "b_prime"):
            singles[setting] = (
                sum(w * b.single(setting)[0] for w, b in zip(self.weights, parts)),
                sum(w * b.single(setting)[1] for w, b in zip(self.weights, parts)),
            )
        return ProbabilityBundle(coinc, singles)


def mixture_value(model: LhvModel, expression: Expression) -> float:
    bundle = model.bundle()
    if str(expression) == "22":
        return expression22_lhs(bundle).value
    if str(expression) == "28":
        if ardehali_denominator(bundle) <= 0:
            raise DegenerateDenominatorError("mixture never fires at both r and s")
        return ardehali_lhs(bundle).value
    raise DomainError(f"unknown expression {expression!r}; expected '22' or '28'")
