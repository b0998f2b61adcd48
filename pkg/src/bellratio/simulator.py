"""Seeded Monte Carlo of photon-pair detection events.

Random stream contract (counter-based, order independent)
---------------------------------------------------------
Event ``i`` of setting pair ``k`` uses raw output ``i`` of a Philox4x64-10
generator keyed by ``seed + 2**64 * k``, i.e. lane ``i % 4`` of counter block
``i // 4``. The raw 64-bit word ``w`` becomes ``u = (w >> 11) * 2**-53`` in
[0, 1), and the event lands in the first cell (fixed order ++, +-, +0, -+,
--, -0, 0+, 0-, 00) whose cumulative probability exceeds ``u``. Any shard of
events can therefore be generated alone, and totals never depend on how the
event range is split.

Bootstrap resamples draw from ``SeedSequence([seed, 1, k])`` per pair ``k``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bell_expressions import BellValue, ardehali_from_table, ardehali_statistic_counts
from .errors import DegenerateDenominatorError, InconsistentConfigError
from .outcomes import CELL_ORDER, PAIR_INDEX, PAIR_NAMES, SETTING_PAIRS, Outcome
from .qm_model import ExperimentConfig, full_outcome_distribution, require_valid

DEFAULT_SHARD = 1 << 20  # events per shard; multiple of 4
DEFAULT_BOOTSTRAP = 200
_BOOTSTRAP_STREAM = 1


@dataclass
class CountsTable:
    """Nine joint-outcome counts for each of the seven setting pairs.

    ``table[k, x, y]`` with ``k`` indexing :data:`~bellratio.outcomes.PAIR_NAMES`
    and ``x``, ``y`` indexing :class:`~bellratio.outcomes.Outcome`.
    """

    table: np.ndarray
    pairs_per_setting: int

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=np.int64)
        if self.table.shape != (len(PAIR_NAMES), 3, 3):
            raise ValueError(f"counts table must have shape (7, 3, 3), got {self.table.shape}")
        if (self.table < 0).any():
            raise ValueError("counts must be non-negative")
        totals = self.table.sum(axis=(1, 2))
        if (totals != self.pairs_per_setting).any():
            raise ValueError(f"each pair must total {self.pairs_per_setting} events, got {totals.tolist()}")

    def cell(self, pair: str, x: Outcome, y: Outcome) -> int:
        return int(self.table[PAIR_INDEX[pair], x, y])

    def singles(self, pair: str, side: int, outcome: Outcome) -> int:
        t = self.table[PAIR_INDEX[pair]]
        return int(t[outcome, :].sum() if side == 1 else t[:, outcome].sum())

    def rows(self):
        for k, name in enumerate(PAIR_NAMES):
            for x, y in CELL_ORDER:
                yield name, x.label, y.label, int(self.table[k, x, y])

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment:
            for line in header_comment.splitlines():
                buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["pair", "outcome1", "outcome2", "count"])
        writer.writerows(self.rows())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CountsTable":
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        reader = csv.DictReader(lines)
        table = np.zeros((len(PAIR_NAMES), 3, 3), dtype=np.int64)
        for row in reader:
            k = PAIR_INDEX[row["pair"]]
            table[k, Outcome.from_label(row["outcome1"]), Outcome.from_label(row["outcome2"])] = int(row["count"])
        totals = table.sum(axis=(1, 2))
        return cls(table, int(totals[0]))

    @classmethod
    def from_probabilities(cls, probs: np.ndarray, pairs_per_setting: int) -> "CountsTable":
        """Counts exactly equal to ``N * p``; the caller guarantees integrality."""
        raw = np.asarray(probs) * pairs_per_setting
        rounded = np.rint(raw).astype(np.int64)
        if not np.allclose(raw, rounded, rtol=0, atol=1e-6):
            raise ValueError("probabilities times pairs_per_setting are not integers")
        return cls(rounded, pairs_per_setting)


@dataclass
class RunResult:
    counts: CountsTable
    statistic: BellValue
    std_error: float | None
    seed: int
    bootstrap_resamples: int
    degenerate_resamples: int = 0
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        stat = self.statistic.to_dict()
        stat["std_error"] = self.std_error
        return {
            "statistic": stat,
            "std_error": self.std_error,
            "seed": self.seed,
            "bootstrap_resamples": self.bootstrap_resamples,
            "degenerate_resamples": self.degenerate_resamples,
            "pairs_per_setting": self.counts.pairs_per_setting,
            "config": self.config,
        }


def pair_cdf(config: ExperimentConfig, pair_index: int) -> np.ndarray:
    """Cumulative distribution over the nine cells for one setting pair."""
    _, first, second = SETTING_PAIRS[pair_index]
    st = config.settings
    dist = full_outcome_distribution(config, st[first], st[second])
    cdf = np.cumsum(dist.ordered())
    cdf[-1] = 1.0
    return cdf


def _stream_key(seed: int, pair_index: int) -> int:
    return seed + (pair_index << 64)


def uniforms(seed: int, pair_index: int, start: int, stop: int) -> np.ndarray:
    """Uniforms for events ``start .. stop-1`` of one pair's stream."""
    bg = np.random.Philox(key=_stream_key(seed, pair_index))
    block, lane = divmod(start, 4)
    bg.advance(block)
    raw = bg.random_raw(lane + (stop - start))[lane:]
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


def sample_shard(cdf: np.ndarray, seed: int, pair_index: int, start: int, stop: int) -> np.ndarray:
    """Cell tallies (length 9, sampler order) for one event range."""
    u = uniforms(seed, pair_index, start, stop)
    cells = np.minimum(np.searchsorted(cdf, u, side="right"), 8)
    return np.bincount(cells, minlength=9)


def run_experiment(config: ExperimentConfig, workers: int = 1, shard_size: int = DEFAULT_SHARD) -> CountsTable:
    """Draw ``pairs_per_setting`` events for each of the seven setting pairs."""
    if shard_size <= 0 or shard_size % 4:
        raise ValueError("shard_size must be a positive multiple of 4")
    require_valid(config)
    n = config.pairs_per_setting
    cdfs = [pair_cdf(config, k) for k in range(len(PAIR_NAMES))]
    jobs = [(k, start, min(start + shard_size, n)) for k in range(len(PAIR_NAMES)) for start in range(0, n, shard_size)]

    def work(job):
        k, start, stop = job
        return k, sample_shard(cdfs[k], config.seed, k, start, stop)

    table = np.zeros((len(PAIR_NAMES), 9), dtype=np.int64)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(job) for job in jobs]
    for k, tally in results:
        table[k] += tally
    # sampler order is row-major, so a plain reshape lands on [x, y]
    return CountsTable(table.reshape(len(PAIR_NAMES), 3, 3), n)


def bootstrap_statistics(counts: CountsTable, resamples: int, seed: int) -> tuple[np.ndarray, int]:
    """Statistic on ``resamples`` multinomial resamples of every pair's nine cells.

    Resamples whose (r, s) coincidences vanish are dropped; their number is
    returned alongside the surviving statistics.
    """
    n = counts.pairs_per_setting
    flat = counts.table.reshape(len(PAIR_NAMES), 9)
    boot = np.empty((resamples, len(PAIR_NAMES), 9), dtype=np.int64)
    for k in range(len(PAIR_NAMES)):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, _BOOTSTRAP_STREAM, k])))
        boot[:, k, :] = rng.multinomial(n, flat[k] / n, size=resamples)
    num, den = ardehali_from_table(boot.reshape(resamples, len(PAIR_NAMES), 3, 3))
    ok = den > 0
    return num[ok] / den[ok], int(np.count_nonzero(~ok))


def estimate_statistic(counts: CountsTable, bootstrap_resamples: int = DEFAULT_BOOTSTRAP, seed: int = 0) -> RunResult:
    """Counts-form statistic with a multinomial bootstrap standard error.

    With ``bootstrap_resamples == 0`` the standard error is ``None``.
    """
    statistic = ardehali_statistic_counts(counts)
    std_error = None
    degenerate = 0
    if bootstrap_resamples > 0:
        stats, degenerate = bootstrap_statistics(counts, bootstrap_resamples, seed)
        if len(stats) < 2:
            raise DegenerateDenominatorError("too few bootstrap resamples with (r, s) coincidences")
        std_error = float(np.std(stats, ddof=1))
    statistic = BellValue(statistic.value, statistic.bound, std_error)
    return RunResult(counts, statistic, std_error, seed, bootstrap_resamples, degenerate)


def simulate(config: ExperimentConfig, bootstrap_resamples: int = DEFAULT_BOOTSTRAP, workers: int = 1) -> RunResult:
    counts = run_experiment(config, workers=workers)
    result = estimate_statistic(counts, bootstrap_resamples, config.seed)
    result.config = config.to_dict()
    return result


@dataclass
class InvarianceReport:
    eta: float
    eta_alt: float
    statistic: float
    statistic_alt: float
    std_error: float
    std_error_alt: float
    sigmas: float

    @property
    def combined_error(self) -> float:
        return math.hypot(self.std_error, self.std_error_alt)

    @property
    def difference(self) -> float:
        return abs(self.statistic - self.statistic_alt)

    @property
    def consistent(self) -> bool:
        return self.difference <= self.sigmas * self.combined_error

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "eta_alt": self.eta_alt,
            "statistic": self.statistic,
            "statistic_alt": self.statistic_alt,
            "std_error": self.std_error,
            "std_error_alt": self.std_error_alt,
            "difference": self.difference,
            "combined_error": self.combined_error,
            "sigmas": self.sigmas,
            "consistent": self.consistent,
        }


def efficiency_invariance_check(
    config: ExperimentConfig,
    eta_alt: float,
    bootstrap_resamples: int = DEFAULT_BOOTSTRAP,
    sigmas: float = 4.0,
    workers: int = 1,
) -> InvarianceReport:
    """Run the same experiment at two efficiencies and compare the ratio statistics.

    Invalid efficiencies surface as :class:`InconsistentConfigError` or
    :class:`~bellratio.errors.DomainError` from config construction.
    """
    alt = config.replace(eta=eta_alt)
    first = simulate(config, bootstrap_resamples, workers)
    second = simulate(alt, bootstrap_resamples, workers)
    if first.std_error is None or second.std_error is None:
        raise InconsistentConfigError("invariance check needs bootstrap_resamples > 0")
    return InvarianceReport(
        config.eta, eta_alt,
        first.statistic.value, second.statistic.value,
        first.std_error, second.std_error,
        sigmas,
    )
