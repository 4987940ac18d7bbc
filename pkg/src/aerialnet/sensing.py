"""Cooperative spectrum sensing with local energy detection.

Each of ``K`` nodes compares its energy statistic against a threshold and
sends a one-bit decision to a fusion centre, which combines the bits with a
logical rule. Three rules are exposed:

* ``OR``: occupied if any node says so;
* ``AND``: occupied only if every node says so;
* ``PRINTED_EQ45``: the binomial-sum closed forms for global miss and
  false-alarm probability exactly as usually printed for this scheme. Those
  sums reduce to ``1 - P_D**K`` and ``P_FA**K``, i.e. the AND rule, and the
  rule behaves as AND wherever a decision must actually be taken.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _chi2, _montecarlo
from ._rng import stream_key
from .errors import DomainError


class FusionRule(str, enum.Enum):
    OR = "OR"
    AND = "AND"
    PRINTED_EQ45 = "PRINTED_EQ45"

    @classmethod
    def parse(cls, value) -> "FusionRule":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise DomainError(f"unknown fusion rule {value!r}") from None

    @property
    def code(self) -> int:
        return _montecarlo.RULE_OR if self is FusionRule.OR else _montecarlo.RULE_AND


@dataclass(frozen=True)
class EnergyDetector:
    n_samples: int = 10
    noise_power: float = 1.0

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise DomainError(f"n_samples must be a positive integer, got {self.n_samples!r}")
        if not (math.isfinite(self.noise_power) and self.noise_power > 0):
            raise DomainError(f"noise_power must be positive, got {self.noise_power!r}")
        object.__setattr__(self, "n_samples", int(self.n_samples))


class LocalDecision(int):
    """A hard occupancy decision, 0 or 1."""

    def __new__(cls, value):
        if value not in (0, 1):
            raise DomainError(f"decision must be 0 or 1, got {value!r}")
        return super().__new__(cls, int(value))

    def __repr__(self):
        return f"LocalDecision({int(self)})"


@dataclass(frozen=True)
class FusionModel:
    k_nodes: int
    p_d_local: float
    p_fa_local: float
    rule: FusionRule = FusionRule.OR

    def __post_init__(self):
        if int(self.k_nodes) != self.k_nodes or self.k_nodes < 1:
            raise DomainError(f"k_nodes must be a positive integer, got {self.k_nodes!r}")
        for name in ("p_d_local", "p_fa_local"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {p!r}")
        object.__setattr__(self, "k_nodes", int(self.k_nodes))
        object.__setattr__(self, "rule", FusionRule.parse(self.rule))


def local_decision(xi: float, mu: float) -> LocalDecision:
    if not (math.isfinite(xi) and math.isfinite(mu)):
        raise DomainError("test statistic and threshold must be finite")
    return LocalDecision(1 if xi >= mu else 0)


def energy_statistic(samples) -> float:
    """Sum of squared magnitudes of complex baseband samples."""
    y = np.asarray(samples)
    if y.size == 0:
        raise DomainError("energy statistic needs at least one sample")
    return float(np.sum(y.real ** 2 + y.imag ** 2))


def threshold_for_pfa(detector: EnergyDetector, target_pfa: float, *,
                      rtol: float = 1e-10) -> float:
    """Threshold whose noise-only exceedance probability is ``target_pfa``.

    Solved by bisection on the Gamma(N, 1) tail, scaled by the noise power.
    """
    if not 0.0 < target_pfa < 1.0:
        raise DomainError(f"target_pfa must lie in (0, 1), got {target_pfa!r}")
    n = detector.n_samples
    lo, hi = 0.0, float(n) + 1.0
    while _chi2.gamma_sf_int(n, hi) > target_pfa:
        lo, hi = hi, 2.0 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _chi2.gamma_sf_int(n, mid) > target_pfa:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi) * detector.noise_power


def pfa_for_threshold(detector: EnergyDetector, mu: float) -> float:
    if mu < 0 or not math.isfinite(mu):
        raise DomainError(f"threshold must be non-negative, got {mu!r}")
    return _chi2.gamma_sf_int(detector.n_samples, mu / detector.noise_power)


def local_pd(detector: EnergyDetector, mu: float, snr_linear: float) -> float:
    """Detection probability of one energy detector for a deterministic signal."""
    if mu < 0 or not math.isfinite(mu):
        raise DomainError(f"threshold must be non-negative, got {mu!r}")
    if snr_linear < 0 or not math.isfinite(snr_linear):
        raise DomainError(f"snr_linear must be non-negative, got {snr_linear!r}")
    n = detector.n_samples
    return _chi2.ncx_sf(n, mu / detector.noise_power, n * snr_linear)


def fuse(decisions, rule=FusionRule.OR) -> LocalDecision:
    bits = [LocalDecision(d) for d in decisions]
    if not bits:
        raise DomainError("cannot fuse an empty decision list")
    if FusionRule.parse(rule) is FusionRule.OR:
        return LocalDecision(int(any(bits)))
    return LocalDecision(int(all(bits)))


def miss_prob_printed(model: FusionModel) -> float:
    k, p = model.k_nodes, model.p_d_local
    return sum(math.comb(k, j) * p ** j * (1.0 - p) ** (k - j) for j in range(k))


def false_alarm_prob_printed(model: FusionModel) -> float:
    k, p = model.k_nodes, model.p_fa_local
    return 1.0 - sum(math.comb(k, j) * p ** j * (1.0 - p) ** (k - j) for j in range(k))


def fusion_probs_closed_form(model: FusionModel) -> tuple[float, float]:
    """Global ``(miss, false alarm)`` probabilities for the model's rule."""
    k, pd, pfa = model.k_nodes, model.p_d_local, model.p_fa_local
    if model.rule is FusionRule.OR:
        return (1.0 - pd) ** k, 1.0 - (1.0 - pfa) ** k
    if model.rule is FusionRule.AND:
        return 1.0 - pd ** k, pfa ** k
    return miss_prob_printed(model), false_alarm_prob_printed(model)


def simulate_fusion(model: FusionModel, trials: int, seed: int = 0, *,
                    chunk_size: int | None = None, workers: int = 1) -> tuple[float, float]:
    """Empirical ``(miss, false alarm)`` rates from Bernoulli local decisions.

    Every draw is keyed on ``(seed, hypothesis, trial, node)``, so the result
    does not depend on ``chunk_size`` or ``workers``.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    misses, fas = _montecarlo.fusion_counts(
        stream_key(seed, 1), stream_key(seed, 0), int(trials), model.k_nodes,
        float(model.p_d_local), float(model.p_fa_local), model.rule.code,
        chunk_size=chunk_size, workers=workers)
    return misses / trials, fas / trials


def simulate_detection(detector: EnergyDetector, mu: float, snr_linear: float,
                       trials: int, seed: int = 0, *, k_nodes: int = 1,
                       rule=FusionRule.OR, stream: int = 2,
                       chunk_size: int | None = None, workers: int = 1) -> float:
    """Fraction of trials in which the (fused) energy detectors declare a signal.

    Each node draws ``n_samples`` complex samples: circular Gaussian noise of
    the detector's noise power plus, when ``snr_linear > 0``, a constant
    signal of power ``snr_linear * noise_power``. With ``snr_linear = 0`` this
    is the empirical false-alarm rate.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if snr_linear < 0:
        raise DomainError("snr_linear must be non-negative")
    rule = FusionRule.parse(rule)
    sigma = math.sqrt(detector.noise_power)
    amp = math.sqrt(snr_linear * detector.noise_power)
    hits = _montecarlo.energy_hits(
        stream_key(seed, stream), int(trials), int(k_nodes), detector.n_samples,
        amp, sigma, float(mu), rule.code, chunk_size=chunk_size, workers=workers)
    return hits / trials


@dataclass(frozen=True)
class RocPoint:
    global_pfa: float
    global_pd: float
    local_pfa: float
    threshold: float
    reachable: bool = True


def local_pfa_for_global(global_pfa: float, k_nodes: int, rule) -> float:
    """Per-node false-alarm probability that yields ``global_pfa`` under ``rule``."""
    if FusionRule.parse(rule) is FusionRule.OR:
        return -math.expm1(math.log1p(-global_pfa) / k_nodes)
    return global_pfa ** (1.0 / k_nodes)


def global_pd(local_detection: float, k_nodes: int, rule) -> float:
    if FusionRule.parse(rule) is FusionRule.OR:
        return -math.expm1(k_nodes * math.log1p(-local_detection)) if local_detection < 1 else 1.0
    return local_detection ** k_nodes


def roc_curve(detector: EnergyDetector, k_nodes: int, snr_linear: float, rule,
              pfa_points) -> list[RocPoint]:
    """Global (P_FA, P_D) pairs for cooperative energy detection.

    For each global false-alarm target the per-node threshold is calibrated by
    inverting the rule's false-alarm composition and then the chi-square tail.
    Targets whose per-node false-alarm probability is not representable in
    (0, 1) are returned with ``reachable=False`` and NaN probabilities.
    """
    rule = FusionRule.parse(rule)
    if int(k_nodes) != k_nodes or k_nodes < 1:
        raise DomainError("k_nodes must be a positive integer")
    pts = [float(p) for p in pfa_points]
    for p in pts:
        if not 0.0 < p < 1.0:
            raise DomainError(f"false-alarm points must lie in (0, 1), got {p!r}")
    if any(b < a for a, b in zip(pts, pts[1:])):
        raise DomainError("false-alarm points must be sorted ascending")
    curve = []
    for p in pts:
        local_pfa = local_pfa_for_global(p, k_nodes, rule)
        if not 0.0 < local_pfa < 1.0:
            curve.append(RocPoint(p, math.nan, local_pfa, math.nan, reachable=False))
            continue
        mu = threshold_for_pfa(detector, local_pfa)
        pd = local_pd(detector, mu, snr_linear)
        curve.append(RocPoint(p, global_pd(pd, k_nodes, rule), local_pfa, mu))
    return curve


def roc_to_text(curves, header: dict | None = None, *, extra_columns=()) -> str:
    """Export ``{(k_nodes, rule): [RocPoint, ...]}`` as a comma-separated table.

    ``extra_columns`` is a sequence of ``(name, {(k, rule): [values]})`` pairs
    appended after the standard columns.
    """
    lines = [f"# {k}={v}" for k, v in (header or {}).items()]
    cols = ["global_pfa", "global_pd", "k_nodes", "rule"] + [c for c, _ in extra_columns]
    lines.append(",".join(cols))
    for (k, rule), pts in curves.items():
        rule = FusionRule.parse(rule)
        for idx, pt in enumerate(pts):
            row = [f"{pt.global_pfa:.6f}",
                   f"{pt.global_pd:.6f}" if pt.reachable else "unreachable",
                   str(k), rule.value]
            row.extend(f"{vals[(k, rule)][idx]:.6f}" for _, vals in extra_columns)
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"
