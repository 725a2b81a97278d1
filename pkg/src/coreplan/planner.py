"""Closed-form planning: sample size, slot arithmetic, and core-count bounds.

Bounds are returned as reals; callers apply ceil when comparing against an
integer number of cores. Slot and per-slot counts are computed with exact
rational arithmetic on the float inputs, so floor/ceil never flip on a
rounding error.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .errors import InfeasibleError, ResourceError, ValidationError
from .workload import TimingStats

Z_SCORES = {90: 1.645, 95: 1.960, 99: 2.576}

IDEAL = "ideal"
REAL = "real"


def _exact(x) -> Fraction:
    # Decimal literals such as 0.05 are meant exactly, not as their binary neighbour.
    return Fraction(repr(float(x)))


def sample_size(z: float, p: float = 0.5, e: float = 0.05) -> int:
    """Cochran sample size ceil(Z^2 p (1-p) / e^2)."""
    if not z > 0:
        raise ValidationError(f"z={z} must be positive")
    if not 0 < p < 1:
        raise ValidationError(f"p={p} must lie in (0, 1)")
    if not 0 < e < 1:
        raise ValidationError(f"e={e} must lie in (0, 1)")
    zf, pf, ef = _exact(z), _exact(p), _exact(e)
    return max(1, math.ceil(zf * zf * pf * (1 - pf) / (ef * ef)))


def z_for_confidence(level: int) -> float:
    try:
        return Z_SCORES[int(level)]
    except (KeyError, ValueError, TypeError):
        raise ValidationError(
            f"no tabulated z-score for {level}% confidence; pass Z directly"
        ) from None


def lemma1_bound(x: int, deadline: float, t_max: float) -> float:
    """Analytic core lower bound x * t_max / deadline."""
    if not t_max > 0:
        raise ValidationError("t_max must be positive")
    if not deadline > t_max:
        raise InfeasibleError(
            f"deadline {deadline} does not exceed the slowest sample query ({t_max})"
        )
    return x * t_max / deadline


def hoeffding_baseline(x: int, deadline: float, t_bar: float, t_hat: float, k: int, p_f: float) -> float:
    """Probabilistic core bound (x/T) * (t_bar + sqrt(t_hat^2 ln(2/p_f) / 2k))."""
    if not 0 < p_f < 1:
        raise ValidationError(f"p_f={p_f} must lie in (0, 1)")
    if k < 1:
        raise ValidationError("need at least one sample timing")
    if not deadline > 0:
        raise ValidationError("deadline must be positive")
    return (x / deadline) * (t_bar + math.sqrt(t_hat * t_hat * math.log(2 / p_f) / (2 * k)))


def hoeffding_from_stats(x: int, deadline: float, stats: TimingStats, p_f: float) -> float:
    return hoeffding_baseline(x, deadline, stats.t_bar, stats.t_hat, stats.s, p_f)


def allocate(query_indices, ell: int, k: int) -> list[list[int]]:
    """Contiguous blocks of k: slot i holds indices[i*k : (i+1)*k]."""
    items = list(query_indices)
    if ell < 1 or k < 1:
        raise ValidationError("ell and k must be >= 1")
    if len(items) > ell * k:
        raise AssertionError(f"{len(items)} queries exceed capacity {ell}*{k}")
    return [items[i * k : (i + 1) * k] for i in range(ell)]


@dataclass
class PlanConfig:
    total_queries: int
    deadline: float
    c_max: int | None = None
    d: float = 1.0
    c: int = 1
    z: float = Z_SCORES[99]
    p: float = 0.5
    e: float = 0.05
    sample_fraction: float | None = None
    p_f: float = 0.01
    t_hat: float | None = None
    t_hat_factor: float = 2.0
    max_retries: int = 3

    def __post_init__(self):
        if self.total_queries < 1:
            raise ValidationError("total_queries must be >= 1")
        if not self.deadline > 0:
            raise ValidationError("deadline must be positive")
        if not 0 < self.d <= 1:
            raise ValidationError(f"d={self.d} must lie in (0, 1]")
        if self.c < 1:
            raise ValidationError("c must be >= 1")
        if self.c_max is not None and self.c_max < 1:
            raise ValidationError("c_max must be >= 1")
        if not self.z > 0 or not 0 < self.p < 1 or not 0 < self.e < 1:
            raise ValidationError("need z > 0, 0 < p < 1, 0 < e < 1")
        if self.sample_fraction is not None and not 0 < self.sample_fraction < 1:
            raise ValidationError("sample fraction must lie in (0, 1)")
        if not 0 < self.p_f < 1:
            raise ValidationError("p_f must lie in (0, 1)")
        if self.t_hat_factor < 1:
            raise ValidationError("t_hat factor must be >= 1")
        if self.max_retries < 0:
            raise ValidationError("max_retries must be >= 0")

    @property
    def sample_policy(self) -> str:
        return "cochran" if self.sample_fraction is None else f"fraction={self.sample_fraction}"

    def sample_count(self, reference: int | None = None) -> int:
        """Sample size under the configured policy.

        The fixed-fraction policy takes a share of ``reference`` (the smallest
        query count of a suite), defaulting to this run's total.
        """
        if self.sample_fraction is None:
            s = sample_size(self.z, self.p, self.e)
        else:
            ref = self.total_queries if reference is None else reference
            s = max(1, math.ceil(_exact(self.sample_fraction) * ref))
        if s >= self.total_queries:
            raise InfeasibleError(
                f"sample size {s} leaves no queries to plan out of {self.total_queries}; "
                "lower the confidence, raise e, or use a sample fraction"
            )
        return s


@dataclass
class Plan:
    mode: str
    total_queries: int
    deadline: float
    s: int
    ell: int
    k: int
    assignment: list
    t_max: float
    t_pre: float | None = None
    t_avg: float | None = None
    d: float = 1.0
    bounds: dict = field(default_factory=dict)

    @property
    def cores_required(self) -> int:
        # Ideal mode preprocesses on s cores, so it never needs fewer than s.
        return max(self.k, self.s) if self.mode == IDEAL else self.k

    def to_dict(self) -> dict:
        out = asdict(self)
        out["cores_required"] = self.cores_required
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Plan":
        fields = {f for f in cls.__dataclass_fields__}
        missing = {"mode", "total_queries", "deadline", "s", "ell", "k", "assignment", "t_max"} - data.keys()
        if missing:
            raise ValidationError(f"plan is missing fields: {sorted(missing)}")
        plan = cls(**{k: v for k, v in data.items() if k in fields})
        plan.assignment = [list(map(int, slot)) for slot in plan.assignment]
        return plan


def slot_width(x: int, s: int, ell: int) -> int:
    """Smallest k with k * ell >= x - s."""
    return -(-(x - s) // ell)


def _slots_and_width(x: int, s: int, numerator: Fraction, step: Fraction, advice: str):
    ell = math.floor(numerator / step)
    if ell < 1:
        raise InfeasibleError(f"the deadline admits no processing slot ({advice})")
    return ell, slot_width(x, s, ell)


def plan_ideal(x: int, deadline: float, s: int, t_max: float) -> Plan:
    """Slot plan for an unbounded machine with s-way parallel preprocessing."""
    if not 0 < s < x:
        raise ValidationError(f"need 0 < s < x, got s={s}, x={x}")
    c_bound = lemma1_bound(x, deadline, t_max)
    tm = Fraction(t_max)
    ell, k = _slots_and_width(x, s, Fraction(deadline) - tm, tm, "raise the deadline")
    return Plan(
        mode=IDEAL, total_queries=x, deadline=deadline, s=s, ell=ell, k=k,
        assignment=allocate(range(s, x), ell, k), t_max=t_max,
        bounds={"lemma1": c_bound},
    )


def plan_real(config: PlanConfig, stats: TimingStats) -> Plan:
    """Slot plan for a machine with at most ``config.c_max`` cores.

    Gates on the analytic bound first, then divides the scaled deadline left
    after sequential-equivalent preprocessing into slots of length t_avg.
    """
    x, deadline, s = config.total_queries, config.deadline, stats.s
    if not 0 < s < x:
        raise ValidationError(f"need 0 < s < x, got s={s}, x={x}")
    c_bound = lemma1_bound(x, deadline, stats.t_max)
    if config.c_max is not None and config.c_max < math.ceil(c_bound):
        raise ResourceError(config.c_max, math.ceil(c_bound))
    numerator = Fraction(config.d) * Fraction(deadline) - Fraction(stats.t_pre)
    ell, k = _slots_and_width(x, s, numerator, Fraction(stats.t_avg), "raise the deadline or d")
    return Plan(
        mode=REAL, total_queries=x, deadline=deadline, s=s, ell=ell, k=k,
        assignment=allocate(range(s, x), ell, k), t_max=stats.t_max,
        t_pre=stats.t_pre, t_avg=stats.t_avg, d=config.d,
        bounds={"lemma1": c_bound, "hoeffding": hoeffding_from_stats(x, deadline, stats, config.p_f)},
    )
