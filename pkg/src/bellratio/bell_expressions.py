"""Evaluators for the singles form, the ratio form and the counts form of the
inequality, plus the CHSH value used for comparison.

All three forms share the same coincidence numerator,

    E(a,b) + E(a,b') + E(a',b) - 2 p++(a',b') - 2 p--(a',b'),

where E is the unnormalized correlation pp + mm - pm - mp. The singles form
adds the four singles of a' and b'; the ratio form adds the coincidence sums
at (a',s) and (r,b') and divides the whole by the coincidence sum at (r,s).
Every form is bounded below by -1 for local models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DegenerateDenominatorError, IncompleteBundleError
from .outcomes import PAIR_INDEX, SETTING_PAIRS, Outcome
from .qm_model import (
    CoincidenceProbs,
    ExperimentConfig,
    coincidence_arrays,
    joint_probabilities,
    singles_probability,
)

LOCAL_BOUND = -1.0
VIOLATION_TOL = 1e-12
CHSH_BOUND = 2.0

# The ratio form's violation factor at the reported orientation set, and the
# CHSH-family factor it is compared against.
RATIO_FORM_FACTOR = 1.5
CHSH_FACTOR = math.sqrt(2.0)

_E_PAIRS = ("a_b", "a_bp", "ap_b")


@dataclass(frozen=True)
class BellValue:
    value: float
    bound: float = LOCAL_BOUND
    std_error: float | None = None

    @property
    def violated(self) -> bool:
        return self.value < self.bound - VIOLATION_TOL

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "bound": self.bound,
            "violated": self.violated,
            "std_error": self.std_error,
        }


@dataclass(frozen=True)
class ProbabilityBundle:
    """Coincidence probabilities keyed by pair name, and singles keyed by setting.

    Pair names follow :data:`bellratio.outcomes.SETTING_PAIRS`. ``singles``
    maps ``"a_prime"`` and ``"b_prime"`` to ``(p_plus, p_minus)``.
    """

    coincidences: Mapping[str, CoincidenceProbs]
    singles: Mapping[str, tuple[float, float]]

    def pair(self, name: str) -> CoincidenceProbs:
        try:
            return self.coincidences[name]
        except KeyError:
            raise IncompleteBundleError(f"bundle has no coincidence entry for pair {name!r}") from None

    def single(self, setting: str) -> tuple[float, float]:
        try:
            return self.singles[setting]
        except KeyError:
            raise IncompleteBundleError(f"bundle has no singles entry for setting {setting!r}") from None

    def scaled(self, factor: float) -> "ProbabilityBundle":
        return ProbabilityBundle(
            {k: v.scaled(factor) for k, v in self.coincidences.items()},
            {k: (p * factor, m * factor) for k, (p, m) in self.singles.items()},
        )

    def to_dict(self) -> dict:
        return {
            "coincidences": {k: v.to_dict() for k, v in self.coincidences.items()},
            "singles": {k: {"plus": p, "minus": m} for k, (p, m) in self.singles.items()},
        }


def qm_bundle(config: ExperimentConfig) -> ProbabilityBundle:
    """Quantum predictions for every setting pair at the configured angles."""
    st = config.settings
    coinc = {name: joint_probabilities(config, st[first], st[second]) for name, first, second in SETTING_PAIRS}
    single = singles_probability(config)
    return ProbabilityBundle(coinc, {"a_prime": (single, single), "b_prime": (single, single)})


def _coincidence_core(bundle: ProbabilityBundle) -> float:
    total = sum(bundle.pair(name).correlation for name in _E_PAIRS)
    last = bundle.pair("ap_bp")
    return total - 2.0 * last.pp - 2.0 * last.mm


def expression22_lhs(bundle: ProbabilityBundle) -> BellValue:
    """Singles form: coincidence core plus the four singles of a' and b'."""
    core = _coincidence_core(bundle)
    return BellValue(core + sum(bundle.single("a_prime")) + sum(bundle.single("b_prime")))


def ardehali_numerator(bundle: ProbabilityBundle) -> float:
    return _coincidence_core(bundle) + bundle.pair("ap_s").total + bundle.pair("r_bp").total


def ardehali_denominator(bundle: ProbabilityBundle) -> float:
    return bundle.pair("r_s").total


def ardehali_lhs(bundle: ProbabilityBundle) -> BellValue:
    """Ratio form: the whole left-hand side divided by the (r, s) coincidence sum.

    The emission count cancels, so only coincidence probabilities enter.
    """
    den = ardehali_denominator(bundle)
    if den <= 0.0:
        raise DegenerateDenominatorError("coincidence sum at (r, s) is zero; the ratio is undefined")
    return BellValue(ardehali_numerator(bundle) / den)


def ardehali_from_table(table: np.ndarray) -> tuple[float, float]:
    """Numerator and denominator of the counts form from a (7, 3, 3) array.

    Works on counts or on probabilities; leading batch axes are allowed.
    """
    t = np.asarray(table, dtype=float)
    P, M = Outcome.PLUS, Outcome.MINUS

    def corr(i):
        return t[..., i, P, P] + t[..., i, M, M] - t[..., i, P, M] - t[..., i, M, P]

    def coinc(i):
        return t[..., i, P, P] + t[..., i, M, M] + t[..., i, P, M] + t[..., i, M, P]

    ix = PAIR_INDEX
    num = (
        corr(ix["a_b"])
        + corr(ix["a_bp"])
        + corr(ix["ap_b"])
        - 2.0 * t[..., ix["ap_bp"], P, P]
        - 2.0 * t[..., ix["ap_bp"], M, M]
        + coinc(ix["ap_s"])
        + coinc(ix["r_bp"])
    )
    return num, coinc(ix["r_s"])


def ardehali_statistic_counts(counts) -> BellValue:
    """Counts form evaluated on a :class:`bellratio.simulator.CountsTable`.

    The returned value carries no standard error; the simulator attaches the
    bootstrap estimate (see :func:`bellratio.simulator.estimate_statistic`).
    """
    num, den = ardehali_from_table(counts.table)
    if den <= 0:
        raise DegenerateDenominatorError("no coincidences recorded at (r, s); the ratio is undefined")
    return BellValue(float(num / den))


def qm_ardehali_array(config: ExperimentConfig, a, a_prime, b, b_prime, r=None, s=None):
    """Ratio form under the quantum model, vectorized over broadcastable angle arrays (degrees).

    Built from the same coincidence probabilities as :func:`qm_bundle`; used
    by the optimizer's grid scan.
    """
    st = config.settings
    r = st.r if r is None else r
    s = st.s if s is None else s
    pp_ab, pm_ab = coincidence_arrays(config, a, b)
    pp_abp, pm_abp = coincidence_arrays(config, a, b_prime)
    pp_apb, pm_apb = coincidence_arrays(config, a_prime, b)
    pp_apbp, _ = coincidence_arrays(config, a_prime, b_prime)
    pp_aps, pm_aps = coincidence_arrays(config, a_prime, s)
    pp_rbp, pm_rbp = coincidence_arrays(config, r, b_prime)
    pp_rs, pm_rs = coincidence_arrays(config, r, s)
    num = (
        2.0 * (pp_ab - pm_ab)
        + 2.0 * (pp_abp - pm_abp)
        + 2.0 * (pp_apb - pm_apb)
        - 4.0 * pp_apbp
        + 2.0 * (pp_aps + pm_aps)
        + 2.0 * (pp_rbp + pm_rbp)
    )
    den = 2.0 * (pp_rs + pm_rs)
    if np.any(den <= 0.0):
        raise DegenerateDenominatorError("coincidence sum at (r, s) is zero; the ratio is undefined")
    return num / den


def normalized_correlation(visibility: float, first, second):
    """F cos 2(first - second), degrees in."""
    return visibility * np.cos(2.0 * np.radians(np.subtract(first, second)))


def chsh_array(visibility: float, a, a_prime, b, b_prime):
    return (
        normalized_correlation(visibility, a, b)
        - normalized_correlation(visibility, a, b_prime)
        + normalized_correlation(visibility, a_prime, b)
        + normalized_correlation(visibility, a_prime, b_prime)
    )


def chsh_value(config: ExperimentConfig, a: float, a_prime: float, b: float, b_prime: float) -> float:
    """CHSH combination S of normalized correlations; local models obey |S| <= 2."""
    return float(chsh_array(config.visibility, a, a_prime, b, b_prime))


def violation_margin_ratio() -> float:
    """Excess over the bound for the ratio form, relative to the CHSH-family excess."""
    return (RATIO_FORM_FACTOR - 1.0) / (CHSH_FACTOR - 1.0)
