"""Test statistics, p-values and effect sizes from observed allele counts.

Given a 2x2 allele table for one marker (M1/M2 counts among cases and
controls), this module computes:

* ``t_statistic`` -- the classic allele test: the case/control difference of
  sample allele frequencies standardized by its plug-in binomial variance.
  Its power grows with the marker's minor allele frequency.
* ``w_statistic`` -- the prevalence-standardized test: the same difference
  divided by ``sqrt(q1_hat*q2_hat)`` where ``q1_hat`` mixes the case and
  control frequencies with an externally supplied prevalence estimate.
  Its power is roughly flat in the allele frequency, which removes the
  a-priori advantage of common markers.
* ``w_delta_statistic`` -- the same construction with an arbitrary mixing
  weight in [0, 1] instead of the prevalence estimate.
* ``w_corrected`` -- continuity-corrected W for finite samples.
* ``u_statistic`` -- per-marker choice of T or W driven by the estimated
  variance ratio ``q_hat``.

The statistics are tied together by exact algebraic identities:
``w * q_hat == t`` and ``w_delta * q_hat_delta == t``, and ``|w| > |t|``
exactly when ``q_hat < 1``. All functions are pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import ndtri

from .model import DesignConstants

__all__ = [
    "DegenerateTableError",
    "AlleleCounts",
    "TestReport",
    "sample_freqs",
    "t_statistic",
    "w_statistic",
    "w_delta_statistic",
    "w_corrected",
    "continuity_correction",
    "q_hat",
    "q_hat_delta",
    "u_statistic",
    "p_value",
    "two_sided_critical_value",
    "effect_size",
    "evaluate_counts",
    "CORRECTION_DIRECTIONS",
]

_SQRT2 = math.sqrt(2.0)

CORRECTION_DIRECTIONS = ("toward_zero", "away_from_zero")


class DegenerateTableError(ValueError):
    """One of the four sample allele frequencies is 0 or 1."""


@dataclass(frozen=True)
class AlleleCounts:
    """Observed 2x2 allele table for one marker.

    ``r1``/``r2`` are M1/M2 allele counts among cases, ``s1``/``s2`` among
    controls. Each group total is twice its individual count, so totals must
    be even and at least 2.
    """

    r1: int
    r2: int
    s1: int
    s2: int

    def __post_init__(self) -> None:
        for name in ("r1", "r2", "s1", "s2"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {value!r}")
        for label, total in (("case", self.r1 + self.r2), ("control", self.s1 + self.s2)):
            if total < 2 or total % 2:
                raise ValueError(
                    f"{label} allele total must be even and >= 2, got {total}"
                )

    @property
    def r_cases(self) -> int:
        return (self.r1 + self.r2) // 2

    @property
    def s_controls(self) -> int:
        return (self.s1 + self.s2) // 2

    def design(self) -> DesignConstants:
        return DesignConstants(self.r_cases, self.s_controls)

    @property
    def degenerate(self) -> bool:
        """True when any sample allele frequency is 0 or 1."""
        return 0 in (self.r1, self.r2, self.s1, self.s2)

    @property
    def monomorphic(self) -> bool:
        """True when the marker shows no variation at all (single allele)."""
        return self.r1 + self.s1 == 0 or self.r2 + self.s2 == 0


@dataclass(frozen=True)
class TestReport:
    """Per-marker statistics, p-values and effect size.

    Degenerate tables (a sample frequency of 0 or 1) get no statistic values
    and conservative p-values of 1.0; fully monomorphic markers are skipped
    with empty fields. ``flags`` is empty for clean tables.
    """

    q_hat_ctrl: float
    q_hat_case: float
    t_stat: float | None
    w_stat: float | None
    w_cor_stat: float | None
    u_stat: float | None
    p_t: float | None
    p_w: float | None
    p_u: float | None
    q_hat: float | None
    effect_ratio: float | None
    effect_ci: tuple[float, float] | None
    degenerate: bool
    flags: tuple[str, ...] = ()


def _resolve_design(counts: AlleleCounts, design: DesignConstants | None) -> DesignConstants:
    derived = counts.design()
    if design is None:
        return derived
    if (design.r_cases, design.s_controls) != (derived.r_cases, derived.s_controls):
        raise ValueError(
            f"design ({design.r_cases}, {design.s_controls}) does not match the "
            f"allele totals ({derived.r_cases}, {derived.s_controls})"
        )
    return design


def _require_nondegenerate(counts: AlleleCounts) -> None:
    if counts.degenerate:
        raise DegenerateTableError(
            "all four allele counts must be positive; got "
            f"(r1={counts.r1}, r2={counts.r2}, s1={counts.s1}, s2={counts.s2})"
        )


def _check_pi_hat(pi_hat: float) -> None:
    if not 0.0 < pi_hat < 1.0:
        raise ValueError(f"pi_hat must lie strictly inside (0, 1), got {pi_hat!r}")


def _check_delta_weight(delta_weight: float) -> None:
    if not 0.0 <= delta_weight <= 1.0:
        raise ValueError(f"delta_weight must lie in [0, 1], got {delta_weight!r}")


def sample_freqs(counts: AlleleCounts) -> tuple[float, float]:
    """Sample M1 frequencies ``(q_hat_ctrl, q_hat_case)``."""
    return (
        counts.s1 / (counts.s1 + counts.s2),
        counts.r1 / (counts.r1 + counts.r2),
    )


def _mixture(q_ctrl: float, q_case: float, weight: float) -> tuple[float, float]:
    """Weighted M1/M2 frequency mixtures, anchored at the control value.

    Algebraically ``weight*q_case + (1-weight)*q_ctrl``; the anchored form is
    exact when the two frequencies coincide, which keeps the tied-table
    corner (t == w == 0, q_hat == 1) free of round-off.
    """
    m1 = q_ctrl + weight * (q_case - q_ctrl)
    m2 = (1.0 - q_ctrl) + weight * (q_ctrl - q_case)
    return m1, m2


def t_statistic(counts: AlleleCounts, design: DesignConstants | None = None) -> float:
    """Classic allele test statistic.

    ``(q_hat_ctrl - q_hat_case) / sqrt(V_hat)`` with the variance estimated
    by plugging the sample frequencies into the binomial form
    ``q*(1-q)/(2S) + q*(1-q)/(2R)``. Asymptotically standard normal under
    no association.
    """
    _require_nondegenerate(counts)
    design = _resolve_design(counts, design)
    q_ctrl, q_case = sample_freqs(counts)
    v_hat = q_ctrl * (1.0 - q_ctrl) / (2 * design.s_controls) + q_case * (
        1.0 - q_case
    ) / (2 * design.r_cases)
    return (q_ctrl - q_case) / math.sqrt(v_hat)


def w_delta_statistic(
    counts: AlleleCounts, delta_weight: float, design: DesignConstants | None = None
) -> float:
    """Frequency-mixed allele test statistic with mixing weight ``delta_weight``.

    ``sqrt(m) * (q_hat_ctrl - q_hat_case) / sqrt(m1*m2)`` where
    ``m1 = dw*q_hat_case + (1-dw)*q_hat_ctrl`` and ``m2`` is the analogous
    mixture of the M2 frequencies. The weight 0 standardizes by the control
    frequencies only, 1 by the case frequencies only, and the prevalence
    recovers :func:`w_statistic`.
    """
    _check_delta_weight(delta_weight)
    _require_nondegenerate(counts)
    design = _resolve_design(counts, design)
    q_ctrl, q_case = sample_freqs(counts)
    m1, m2 = _mixture(q_ctrl, q_case, delta_weight)
    return math.sqrt(design.m) * (q_ctrl - q_case) / math.sqrt(m1 * m2)


def w_statistic(
    counts: AlleleCounts, pi_hat: float, design: DesignConstants | None = None
) -> float:
    """Prevalence-standardized allele test statistic.

    ``pi_hat`` is an external estimate of the disease prevalence; it cannot
    be recovered from a case-control sample and must come from outside data.
    Identical to :func:`w_delta_statistic` with the prevalence as weight,
    and tied to :func:`t_statistic` by ``w * q_hat == t``.
    """
    _check_pi_hat(pi_hat)
    return w_delta_statistic(counts, pi_hat, design)


def continuity_correction(design: DesignConstants) -> float:
    """Half-lattice-step numerator shift, ``0.5 * min(S, R) / (2*S*R)``."""
    r, s = design.r_cases, design.s_controls
    return 0.5 * min(r, s) / (2.0 * s * r)


def _corrected_difference(diff: float, c: float, direction: str) -> float:
    if direction == "toward_zero":
        # Shrink the absolute difference, clamping at zero so the
        # correction can never flip the sign.
        return math.copysign(max(abs(diff) - c, 0.0), diff)
    if direction == "away_from_zero":
        return math.copysign(abs(diff) + c, diff) if diff != 0.0 else 0.0
    raise ValueError(
        f"direction must be one of {CORRECTION_DIRECTIONS}, got {direction!r}"
    )


def w_corrected(
    counts: AlleleCounts,
    pi_hat: float,
    design: DesignConstants | None = None,
    direction: str = "toward_zero",
    delta_weight: float | None = None,
) -> float:
    """Continuity-corrected W (or W_delta when ``delta_weight`` is given).

    The frequency difference in the numerator is shifted by
    ``0.5*min(S,R)/(2*S*R)`` before standardizing. The default
    ``toward_zero`` shrinks the absolute difference (never past zero), which
    damps the finite-sample tail inflation of W; ``away_from_zero`` applies
    the opposite shift for sensitivity analysis.
    """
    _check_pi_hat(pi_hat)
    if delta_weight is None:
        delta_weight = pi_hat
    _check_delta_weight(delta_weight)
    _require_nondegenerate(counts)
    design = _resolve_design(counts, design)
    q_ctrl, q_case = sample_freqs(counts)
    diff = _corrected_difference(
        q_ctrl - q_case, continuity_correction(design), direction
    )
    m1, m2 = _mixture(q_ctrl, q_case, delta_weight)
    return math.sqrt(design.m) * diff / math.sqrt(m1 * m2)


def q_hat_delta(
    counts: AlleleCounts, delta_weight: float, design: DesignConstants | None = None
) -> float:
    """Sample variance ratio satisfying ``w_delta * q_hat_delta == t`` exactly.

    The numerator is the product of the delta-mixed frequencies (the square
    of the W_delta denominator); the denominator is the sampling-weighted
    mixture of the case/control variance products (the square of the T
    denominator, rescaled by m).
    """
    _check_delta_weight(delta_weight)
    _require_nondegenerate(counts)
    design = _resolve_design(counts, design)
    q_ctrl, q_case = sample_freqs(counts)
    m1, m2 = _mixture(q_ctrl, q_case, delta_weight)
    u_ctrl = q_ctrl * (1.0 - q_ctrl)
    u_case = q_case * (1.0 - q_case)
    g = u_case + design.lam * (u_ctrl - u_case)
    return math.sqrt(m1 * m2 / g)


def q_hat(
    counts: AlleleCounts, pi_hat: float, design: DesignConstants | None = None
) -> float:
    """Sample variance ratio ``q_hat`` linking T and W: ``t == w * q_hat``."""
    _check_pi_hat(pi_hat)
    return q_hat_delta(counts, pi_hat, design)


def u_statistic(
    counts: AlleleCounts, pi_hat: float, design: DesignConstants | None = None
) -> float:
    """Combined statistic: T where ``q_hat > 1``, W where ``q_hat <= 1``.

    Picks, marker by marker, whichever of the two statistics is the larger
    in absolute value, so the combined test attains the better power of the
    two while staying asymptotically standard normal under no association.
    """
    t = t_statistic(counts, design)
    w = w_statistic(counts, pi_hat, design)
    return t if q_hat(counts, pi_hat, design) > 1.0 else w


def p_value(stat: float) -> float:
    """Two-sided tail probability under the standard normal reference.

    Computed through the complementary error function, so there is no
    cancellation in the far tails (accurate up to |stat| around 38, below
    which the result underflows gradually).
    """
    if not math.isfinite(stat):
        raise ValueError(f"statistic must be finite, got {stat!r}")
    return math.erfc(abs(stat) / _SQRT2)


def two_sided_critical_value(alpha: float) -> float:
    """Upper alpha/2 standard normal quantile, the two-sided rejection cutoff.

    Evaluated through the inverse normal CDF at ``alpha/2`` (no cancellation
    for small levels; accurate down to alpha ~ 1e-12 and beyond).
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    return -float(ndtri(alpha / 2.0))


def effect_size(
    counts: AlleleCounts, ci_level: float = 0.95
) -> tuple[float, float, float]:
    """Control/case frequency ratio with a log-scale normal confidence interval.

    The ratio ``q_hat_ctrl / q_hat_case`` estimates the factor by which
    carrying M1 changes the control:case odds relative to the population
    baseline; values below 1 mark risk alleles. The interval is a delta-method
    normal interval on the log ratio with independent binomial variances
    ``(1-q)/(2S*q)`` and ``(1-q)/(2R*q)``.
    """
    if not 0.0 < ci_level < 1.0:
        raise ValueError(f"ci_level must lie in (0, 1), got {ci_level!r}")
    _require_nondegenerate(counts)
    q_ctrl, q_case = sample_freqs(counts)
    design = counts.design()
    ratio = q_ctrl / q_case
    var_log = (1.0 - q_ctrl) / (2 * design.s_controls * q_ctrl) + (1.0 - q_case) / (
        2 * design.r_cases * q_case
    )
    half = two_sided_critical_value(1.0 - ci_level) * math.sqrt(var_log)
    log_ratio = math.log(ratio)
    return ratio, math.exp(log_ratio - half), math.exp(log_ratio + half)


def evaluate_counts(
    counts: AlleleCounts,
    pi_hat: float,
    design: DesignConstants | None = None,
    *,
    ci_level: float = 0.95,
    direction: str = "toward_zero",
) -> TestReport:
    """Compute the full per-marker report, handling degenerate tables.

    Monomorphic markers are skipped (empty statistics, ``monomorphic`` flag);
    other degenerate tables get the ``degenerate`` flag and conservative
    p-values of 1.0, plus ``undefined_ratio`` when no case copy of M1 was
    seen at all.
    """
    _check_pi_hat(pi_hat)
    design = _resolve_design(counts, design)
    q_ctrl, q_case = sample_freqs(counts)
    if counts.monomorphic:
        return TestReport(
            q_hat_ctrl=q_ctrl,
            q_hat_case=q_case,
            t_stat=None,
            w_stat=None,
            w_cor_stat=None,
            u_stat=None,
            p_t=None,
            p_w=None,
            p_u=None,
            q_hat=None,
            effect_ratio=None,
            effect_ci=None,
            degenerate=True,
            flags=("monomorphic",),
        )
    if counts.degenerate:
        flags = ("degenerate",) if q_case > 0.0 else ("degenerate", "undefined_ratio")
        return TestReport(
            q_hat_ctrl=q_ctrl,
            q_hat_case=q_case,
            t_stat=None,
            w_stat=None,
            w_cor_stat=None,
            u_stat=None,
            p_t=1.0,
            p_w=1.0,
            p_u=1.0,
            q_hat=None,
            effect_ratio=None,
            effect_ci=None,
            degenerate=True,
            flags=flags,
        )
    t = t_statistic(counts, design)
    w = w_statistic(counts, pi_hat, design)
    w_cor = w_corrected(counts, pi_hat, design, direction)
    qh = q_hat(counts, pi_hat, design)
    u = t if qh > 1.0 else w
    ratio, lo, hi = effect_size(counts, ci_level)
    return TestReport(
        q_hat_ctrl=q_ctrl,
        q_hat_case=q_case,
        t_stat=t,
        w_stat=w,
        w_cor_stat=w_cor,
        u_stat=u,
        p_t=p_value(t),
        p_w=p_value(w),
        p_u=p_value(u),
        q_hat=qh,
        effect_ratio=ratio,
        effect_ci=(lo, hi),
        degenerate=False,
        flags=(),
    )
