"""The one-parameter Moebius family F_a(x) = 2 + a - 1/x on the cotangent coordinate.

For a solution u of the three-term recurrence at energy E, the ratio
x_n = u(n+1)/u(n) evolves by x_n = F_{E-2-V(n)}(x_{n-1}).  Site value 0 at
energy E = 2 + lambda - a therefore acts by F_{lambda-a}, site value lambda
by F_{-a}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidInput, ParametersInadmissible, PoleError

_POLE_EPS = 0.0  # exact-zero test; callers supply the tolerance semantics


def moebius_apply(a: float, x: float) -> float:
    """F_a(x) = 2 + a - 1/x.  Raises PoleError at x = 0."""
    if x == 0.0:
        raise PoleError("F_a has a pole at x = 0")
    return (2.0 + a) - 1.0 / x


def moebius_inverse(a: float, x: float) -> float:
    """F_a^{-1}(x) = 1/(2 + a - x).  Raises PoleError at x = 2 + a."""
    d = (2.0 + a) - x
    if d == 0.0:
        raise PoleError("F_a^{-1} has a pole at x = 2 + a")
    return 1.0 / d


def moebius_derivative(a: float, x: float) -> float:
    """F_a'(x) = 1/x^2, independent of the shift parameter a."""
    if x == 0.0:
        raise PoleError("F_a' has a pole at x = 0")
    return 1.0 / (x * x)


def fixed_points(a: float) -> tuple[float, float]:
    """Fixed points of F_a for a > 0: roots of x^2 - (2+a)x + 1 = 0.

    Returns (x_rep, x_att) = 1 + a/2 -/+ sqrt(a + a^2/4).  Their product is 1.
    """
    if a <= 0.0:
        raise InvalidInput("fixed points require a > 0 (a = 0 is a degenerate double point at 1)")
    s = math.sqrt(a + a * a / 4.0)
    x_att = 1.0 + a / 2.0 + s
    # compute the repeller as 1/x_att (product of the quadratic's roots is 1)
    # to avoid cancellation for small a
    x_rep = 1.0 / x_att
    return x_rep, x_att


def lambda_admissible(lam: float) -> bool:
    """Smallness condition on lambda for the trapping-interval construction.

    Both inequalities must hold:
        (1 - lam) * sqrt(lam + lam^2/4) - lam/2 - lam^2/2 > 0
        sqrt(lam + lam^2/4) > 3*lam/2
    """
    if lam <= 0.0:
        raise InvalidInput("lambda must be positive")
    s = math.sqrt(lam + lam * lam / 4.0)
    first = (1.0 - lam) * s - lam / 2.0 - lam * lam / 2.0
    return first > 0.0 and s > 1.5 * lam


@dataclass(frozen=True)
class TrappingIntervals:
    """The intervals I = [1+delta, x_att(lam-a)] and Ihat = [x_rep(lam-a), 1-delta].

    ``shift`` optionally overrides the Moebius parameter lam - a used for the
    fixed points; callers working from an energy pass E - 2 so that the
    quasi-periodic c = 0 reduction evaluates bitwise-identical expressions.
    """

    lam: float
    a: float
    delta: float
    shift: float | None = None
    i_lo: float = field(init=False)
    i_hi: float = field(init=False)
    ihat_lo: float = field(init=False)
    ihat_hi: float = field(init=False)

    def __post_init__(self):
        if self.delta <= 0.0:
            raise InvalidInput("delta must be positive")
        if not (0.0 < self.a < self.lam):
            raise InvalidInput("need 0 < a < lambda")
        x_rep, x_att = fixed_points(self.lam - self.a if self.shift is None else self.shift)
        object.__setattr__(self, "i_lo", 1.0 + self.delta)
        object.__setattr__(self, "i_hi", x_att)
        object.__setattr__(self, "ihat_lo", x_rep)
        object.__setattr__(self, "ihat_hi", 1.0 - self.delta)
        if self.i_lo >= self.i_hi or self.ihat_lo >= self.ihat_hi:
            raise ParametersInadmissible("trapping interval is empty; delta too large")

    @property
    def interval(self) -> tuple[float, float]:
        return self.i_lo, self.i_hi

    @property
    def interval_hat(self) -> tuple[float, float]:
        return self.ihat_lo, self.ihat_hi

    def in_interval(self, x: float) -> bool:
        return self.i_lo <= x <= self.i_hi

    def in_interval_hat(self, x: float) -> bool:
        return self.ihat_lo <= x <= self.ihat_hi


@dataclass(frozen=True)
class CoveringReport:
    """Margins of the two set-covering statements behind the constructor.

    backward_gap_margin: F_{-a}(x_att) - F_{lam-a}(1+delta) on I
    backward_low_margin: (1+delta) - F_{-a}(1+delta)
    forward_gap_margin:  F_{lam-a}^{-1}(1-delta) - F_{-a}^{-1}(x_rep) on Ihat
    forward_high_margin: F_{-a}^{-1}(1-delta) - (1-delta)
    """

    lam: float
    a: float
    delta: float
    backward_gap_margin: float
    backward_low_margin: float
    forward_gap_margin: float
    forward_high_margin: float

    @property
    def ok(self) -> bool:
        return (
            self.backward_gap_margin >= 0.0
            and self.backward_low_margin >= 0.0
            and self.forward_gap_margin >= 0.0
            and self.forward_high_margin >= 0.0
        )

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "a": self.a,
            "delta": self.delta,
            "backward_gap_margin": self.backward_gap_margin,
            "backward_low_margin": self.backward_low_margin,
            "forward_gap_margin": self.forward_gap_margin,
            "forward_high_margin": self.forward_high_margin,
            "ok": self.ok,
        }


def covering_check(lam: float, a: float, delta: float, *, strict: bool = True) -> CoveringReport:
    """Verify by monotone endpoint images that

        I    is covered by F_{-a}(I) together with F_{lam-a}(I), and
        Ihat is covered by F_{-a}^{-1}(Ihat) together with F_{lam-a}^{-1}(Ihat).

    Both maps are increasing on x > 0, so interval images are endpoint
    intervals and the covering reduces to four endpoint comparisons.
    Raises ParametersInadmissible when the covering fails (unless strict=False,
    in which case the failing report is returned).
    """
    if not lambda_admissible(lam):
        raise InvalidInput(f"lambda = {lam} fails the admissibility inequalities")
    if not (0.0 < a < lam):
        raise InvalidInput("need 0 < a < lambda")
    traps = TrappingIntervals(lam, a, delta)
    i_lo, i_hi = traps.interval
    h_lo, h_hi = traps.interval_hat

    # I subset F_{-a}(I) u F_{lam-a}(I): the upper end i_hi = x_att is fixed
    # by F_{lam-a}; need the lower image to reach below 1+delta and no gap
    # between the two image intervals.
    back_low = i_lo - moebius_apply(-a, i_lo)
    back_gap = moebius_apply(-a, i_hi) - moebius_apply(lam - a, i_lo)

    # Ihat subset F_{-a}^{-1}(Ihat) u F_{lam-a}^{-1}(Ihat): the lower end
    # h_lo = x_rep is fixed by F_{lam-a}^{-1}; need the upper preimage to
    # reach above 1-delta and no gap.
    fwd_high = moebius_inverse(-a, h_hi) - h_hi
    fwd_gap = moebius_inverse(lam - a, h_hi) - moebius_inverse(-a, h_lo)

    report = CoveringReport(lam, a, delta, back_gap, back_low, fwd_gap, fwd_high)
    if strict and not report.ok:
        raise ParametersInadmissible(
            f"trapping-interval covering fails for lambda={lam}, a={a}, delta={delta}: "
            f"{report.to_dict()}"
        )
    return report


# ---------------------------------------------------------------------------
# Orbit classification at the top of the Bernoulli spectrum (E = 2 + lambda)


CASE_CONTRADICTION = "hits_below_x_rep_contradiction"
CASE_FORWARD = "enters_I_forward"
CASE_BACKWARD = "enters_Ihatinv_backward"
CASE_CONTRACTING = "above_x_att_contracting"


@dataclass(frozen=True)
class OrbitClassification:
    case: str
    entry_index: int | None
    log_derivative_bound: float
    forward_bounded: bool
    backward_bounded: bool
    forward_case: str | None = None
    backward_case: str | None = None

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "entry_index": self.entry_index,
            "log_derivative_bound": self.log_derivative_bound,
            "forward_bounded": self.forward_bounded,
            "backward_bounded": self.backward_bounded,
            "forward_case": self.forward_case,
            "backward_case": self.backward_case,
        }


def classify_positive_orbit(realization, lam: float, x0: float, horizon: int | None = None):
    """Classify the ratio orbit of a would-be positive solution at E = 2 + lambda.

    ``realization`` holds site values in {0, lam} indexed by offset from the
    centre: realization[k] is the value at site k - len//2.  The orbit runs
    forward through sites 1, 2, ... (x_n = F_{lam - w(n)}(x_{n-1})) and
    backward through sites 0, -1, ... by inverse maps.

    The primary case tag is the first applicable of: fell below x_rep
    (positivity must fail), entered I = [1, x_att] forward, entered
    Ihat = [x_rep, 1] backward, or stayed above x_att (contracting).  Both
    per-side verdicts are reported so callers can check the one-sided
    non-decay conclusion.
    """
    if lam <= 0.0:
        raise InvalidInput("lambda must be positive")
    if x0 <= 0.0:
        raise InvalidInput("x0 must be positive")
    vals = list(realization)
    n = len(vals)
    mid = n // 2
    if horizon is None:
        horizon = mid
    horizon = min(horizon, mid)

    x_rep, x_att = fixed_points(lam)

    def site(k):  # site value at integer site k
        return vals[mid + k]

    # forward sweep over sites 1..horizon
    fwd_case = None
    fwd_entry = None
    log_der = 0.0  # log of the composed forward derivative product
    max_log_der = 0.0
    x = x0
    if 1.0 <= x <= x_att:
        fwd_case = CASE_FORWARD
        fwd_entry = 0
    if x < x_rep:
        fwd_case = CASE_CONTRADICTION
        fwd_entry = 0
    for k in range(1, horizon + 1):
        if fwd_case is not None:
            break
        try:
            x = moebius_apply(lam - site(k), x)
        except PoleError:
            fwd_case = CASE_CONTRADICTION
            fwd_entry = k
            break
        if x <= 0.0 or x < x_rep:
            fwd_case = CASE_CONTRADICTION
            fwd_entry = k
            break
        log_der += -2.0 * math.log(x)
        max_log_der = max(max_log_der, log_der)
        if 1.0 <= x <= x_att:
            fwd_case = CASE_FORWARD
            fwd_entry = k
            break
    if fwd_case is None:
        # never dropped below x_rep nor entered I within the horizon
        fwd_case = CASE_CONTRACTING if x > x_att else None

    # backward sweep over sites 0, -1, ..
    bwd_case = None
    bwd_entry = None
    x = x0
    for k in range(0, -horizon, -1):
        if x_rep <= x <= 1.0:
            bwd_case = CASE_BACKWARD
            bwd_entry = k
            break
        try:
            x = moebius_inverse(lam - site(k), x)
        except PoleError:
            bwd_case = CASE_CONTRADICTION
            bwd_entry = k
            break
        if x <= 0.0:
            bwd_case = CASE_CONTRADICTION
            bwd_entry = k
            break

    forward_bounded = fwd_case in (CASE_FORWARD, CASE_CONTRACTING)
    backward_bounded = bwd_case == CASE_BACKWARD

    if fwd_case == CASE_CONTRADICTION:
        case, entry = CASE_CONTRADICTION, fwd_entry
    elif fwd_case == CASE_FORWARD:
        case, entry = CASE_FORWARD, fwd_entry
    elif backward_bounded:
        case, entry = CASE_BACKWARD, bwd_entry
    elif fwd_case == CASE_CONTRACTING:
        case, entry = CASE_CONTRACTING, None
    else:
        case, entry = CASE_CONTRADICTION, fwd_entry
    return OrbitClassification(
        case=case,
        entry_index=entry,
        log_derivative_bound=max_log_der,
        forward_bounded=forward_bounded,
        backward_bounded=backward_bounded,
        forward_case=fwd_case,
        backward_case=bwd_case,
    )
