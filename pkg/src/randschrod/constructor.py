"""Construction of {0, lambda} realizations whose ground-state energy is a
prescribed E = 2 + lambda - a, with a positive exponentially decaying
eigenfunction, plus independent certificate verification.

The backward/transit/forward engine is shared with the quasi-periodic
module: it is parameterized by per-site trapping bands and per-site Moebius
parameters, so the zero-background case uses constant bands while the
skew-product case evaluates invariant sections along the rotation orbit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cocycle, spectrum
from .errors import InvalidInput, ParametersInadmissible, RandschrodError
from .moebius import (
    TrappingIntervals,
    covering_check,
    fixed_points,
    lambda_admissible,
    moebius_apply,
    moebius_inverse,
)

ZERO = "Zero"
LAMBDA = "Lambda"
POLICIES = ("max_margin", "prefer_zero", "prefer_lambda")

DEFAULT_TOLERANCES = {"tol_res": 1e-10, "tol_eig": 1e-6, "rho_min": 1e-4}


@dataclass
class ConstructorParams:
    lam: float
    a: float
    delta: float | None = None
    n_back: int = 200
    n_fwd: int = 200
    x0: float | None = None
    choice_policy: str = "max_margin"

    def __post_init__(self):
        if self.delta is None:
            self.delta = self.a
        if self.choice_policy not in POLICIES:
            raise InvalidInput(f"unknown policy {self.choice_policy!r}")
        if not (0.0 < self.a < self.lam):
            raise InvalidInput("need 0 < a < lambda")
        if not lambda_admissible(self.lam):
            raise InvalidInput(f"lambda = {self.lam} fails the admissibility inequalities")
        if self.n_back < 1 or self.n_fwd < 1:
            raise InvalidInput("window half-lengths must be positive")
        covering_check(self.lam, self.a, self.delta)
        traps = self.trapping_intervals()
        if self.x0 is None:
            # Starting at the bottom of the trapping interval splits the slow
            # neutral transit through x ~ 1 (length ~ pi / sqrt(a) in total)
            # between the backward and forward halves of the window, so the
            # symmetric default window accommodates small a.  Callers that
            # need immediate branching (e.g. word trees) should pass the
            # interval midpoint explicitly.
            self.x0 = traps.i_lo
        if not traps.in_interval(self.x0):
            raise InvalidInput(f"x0 = {self.x0} outside the trapping interval {traps.interval}")

    @property
    def energy(self) -> float:
        return 2.0 + self.lam - self.a

    def trapping_intervals(self) -> TrappingIntervals:
        # derive the fixed points from the energy shift E - 2 so the
        # quasi-periodic c = 0 reduction evaluates bitwise-identical expressions
        return TrappingIntervals(self.lam, self.a, self.delta, shift=self.energy - 2.0)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "a": self.a,
            "delta": self.delta,
            "n_back": self.n_back,
            "n_fwd": self.n_fwd,
            "x0": self.x0,
            "choice_policy": self.choice_policy,
        }


# ---------------------------------------------------------------------------
# Option sets (zero background)


def _interval_margin(x: float, lo: float, hi: float) -> float:
    return min(x - lo, hi - x)


def backward_options(x: float, params: ConstructorParams):
    """Word values whose inverse map keeps x in I (Zero <-> F_{lam-a},
    Lambda <-> F_{-a})."""
    traps = params.trapping_intervals()
    if not traps.in_interval(x):
        raise InvalidInput(f"x = {x} outside the trapping interval")
    E = params.energy
    opts = set()
    for name, v in ((ZERO, 0.0), (LAMBDA, params.lam)):
        y = moebius_inverse(E - 2.0 - v, x)
        if traps.in_interval(y):
            opts.add(name)
    if not opts:
        raise RandschrodError(
            f"empty backward option set at x = {x} despite a validated covering"
        )
    return opts


def forward_options(x: float, params: ConstructorParams):
    """Word values whose forward map keeps x in Ihat."""
    traps = params.trapping_intervals()
    if not traps.in_interval_hat(x):
        raise InvalidInput(f"x = {x} outside the backward trapping interval")
    E = params.energy
    opts = set()
    for name, v in ((ZERO, 0.0), (LAMBDA, params.lam)):
        y = moebius_apply(E - 2.0 - v, x)
        if traps.in_interval_hat(y):
            opts.add(name)
    if not opts:
        raise RandschrodError(
            f"empty forward option set at x = {x} despite a validated covering"
        )
    return opts


def transit(x: float, params: ConstructorParams, max_steps: int = 10**6):
    """Iterate F_{-a} (site value lambda) from x in I until the orbit lands
    in Ihat; returns (step count, landing point)."""
    traps = params.trapping_intervals()
    if not traps.in_interval(x):
        raise InvalidInput(f"x = {x} outside the trapping interval")
    E = params.energy
    p = E - 2.0 - params.lam
    for k in range(1, max_steps + 1):
        x = moebius_apply(p, x)
        if traps.in_interval_hat(x):
            return k, x
        if x < traps.ihat_lo:
            raise ParametersInadmissible(
                f"transit overshot below the backward interval at step {k} "
                f"(x = {x}); step size a too large relative to the interval width"
            )
    raise ParametersInadmissible(f"transit did not land within {max_steps} steps")


# ---------------------------------------------------------------------------
# The construction engine (shared with the quasi-periodic module)


def _pick(choices, policy):
    """choices: list of (word_value_name, image).  Returns the chosen entry.
    ``choices`` must already be restricted to admissible options and carry
    the margin of each image in its interval."""
    if len(choices) == 1:
        return choices[0]
    if policy == "prefer_zero":
        for c in choices:
            if c[0] == ZERO:
                return c
        return choices[0]
    if policy == "prefer_lambda":
        for c in choices:
            if c[0] == LAMBDA:
                return c
        return choices[0]
    # max_margin
    return max(choices, key=lambda c: c[2])


def run_construction(
    E: float,
    lam: float,
    n_back: int,
    n_fwd: int,
    x0: float,
    policy: str,
    interval_I,
    interval_hat,
    site_shift,
    empty_option_error=RandschrodError,
):
    """Backward / transit / forward construction of a word and its ratio orbit.

    interval_I(n), interval_hat(n): per-site trapping bands (lo, hi).
    site_shift(n): background contribution at site n; the Moebius parameter
    for word value v at site n is E - 2 - site_shift(n) - v.

    Returns a dict with the word values per site, the ratio orbit
    x_n = u(n+1)/u(n) for n in [-n_back - 1, n_fwd], and the transit end.
    """
    word = {}
    ratios = {0: x0}

    lo, hi = interval_I(0)
    if not lo <= x0 <= hi:
        raise InvalidInput(f"x0 = {x0} outside the site-0 trapping band [{lo}, {hi}]")

    # backward pass: choose sites 0, -1, ..., -n_back; each choice produces
    # the previous ratio via the inverse map
    x = x0
    for n in range(0, -n_back - 1, -1):
        lo, hi = interval_I(n - 1)
        choices = []
        for name, v in ((ZERO, 0.0), (LAMBDA, lam)):
            y = moebius_inverse(E - 2.0 - site_shift(n) - v, x)
            if lo <= y <= hi:
                choices.append((name, y, _interval_margin(y, lo, hi)))
        if not choices:
            raise empty_option_error(
                f"empty backward option set at site {n}, x = {x}; "
                "the covering guarantee failed for these parameters"
            )
        name, y, _ = _pick(choices, policy)
        word[n] = 0.0 if name == ZERO else lam
        ratios[n - 1] = y
        x = y

    # transit: push forward with word value lambda until the orbit lands in
    # the backward band
    x = x0
    n = 1
    transit_end = None
    while n <= n_fwd:
        y = moebius_apply(E - 2.0 - site_shift(n) - lam, x)
        lo, hi = interval_hat(n)
        word[n] = lam
        ratios[n] = y
        x = y
        if lo <= y <= hi:
            transit_end = n
            break
        if y < lo:
            raise ParametersInadmissible(
                f"transit overshot below the backward band at site {n} (x = {y})"
            )
        n += 1
    if transit_end is None:
        raise ParametersInadmissible(
            f"transit did not land in the backward band within n_fwd = {n_fwd} sites"
        )

    # forward pass: keep the orbit in the backward band
    for n in range(transit_end + 1, n_fwd + 1):
        lo, hi = interval_hat(n)
        choices = []
        for name, v in ((ZERO, 0.0), (LAMBDA, lam)):
            y = moebius_apply(E - 2.0 - site_shift(n) - v, x)
            if lo <= y <= hi:
                choices.append((name, y, _interval_margin(y, lo, hi)))
        if not choices:
            raise empty_option_error(
                f"empty forward option set at site {n}, x = {x}; "
                "the covering guarantee failed for these parameters"
            )
        name, y, _ = _pick(choices, policy)
        word[n] = 0.0 if name == ZERO else lam
        ratios[n] = y
        x = y

    return {"word": word, "ratios": ratios, "transit_end": transit_end}


def reconstruct_eigenfunction(ratios: dict, n_back: int, n_fwd: int):
    """log u from the ratio orbit, anchored at u(0) = 1.

    Returns (log_u over [-n_back, n_fwd], log_u_left_outside,
    log_u_right_outside) where the outside values sit at -n_back - 1 and
    n_fwd + 1.
    """
    log_u = np.zeros(n_back + n_fwd + 1)
    acc = 0.0
    for n in range(1, n_fwd + 1):
        acc += math.log(ratios[n - 1])
        log_u[n_back + n] = acc
    log_right = acc + math.log(ratios[n_fwd])
    acc = 0.0
    for n in range(-1, -n_back - 1, -1):
        acc -= math.log(ratios[n])
        log_u[n_back + n] = acc
    log_left = acc - math.log(ratios[-n_back - 1])
    return log_u, log_left, log_right


# ---------------------------------------------------------------------------
# Certificates


@dataclass
class GroundStateCertificate:
    realization: spectrum.RealizationWindow
    energy: float
    eigenfunction: np.ndarray  # u over the window, u(0) = 1
    log_u: np.ndarray
    log_u_left_outside: float
    log_u_right_outside: float
    ratios: np.ndarray  # x_n for n in [n_min - 1, n_max]
    transit_end: int
    decay_rate_back: float
    decay_rate_fwd: float
    min_entry: float
    residual: float
    params: dict = field(default_factory=dict)
    background_descriptor: dict = field(default_factory=lambda: {"type": "zero"})

    @property
    def n_back(self) -> int:
        return -self.realization.n_min

    @property
    def n_fwd(self) -> int:
        return self.realization.n_max

    def ratio(self, n: int) -> float:
        return float(self.ratios[n - self.realization.n_min + 1])

    def to_json_dict(self) -> dict:
        lam = self.params.get("lambda")
        bits = [1 if w > 0 else 0 for w in self.realization.word]
        return {
            "schema_version": 1,
            "kind": "ground_state_certificate",
            "energy": self.energy,
            "lambda": lam,
            "n_min": self.realization.n_min,
            "n_max": self.realization.n_max,
            "word_bits": "".join(map(str, bits)),
            "background": self.background_descriptor,
            "eigenfunction": self.eigenfunction.tolist(),
            "log_u": self.log_u.tolist(),
            "log_u_left_outside": self.log_u_left_outside,
            "log_u_right_outside": self.log_u_right_outside,
            "ratios": self.ratios.tolist(),
            "transit_end": self.transit_end,
            "decay_rate_back": self.decay_rate_back,
            "decay_rate_fwd": self.decay_rate_fwd,
            "min_entry": self.min_entry,
            "residual": self.residual,
            "params": self.params,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "GroundStateCertificate":
        if d.get("schema_version") != 1 or d.get("kind") != "ground_state_certificate":
            raise InvalidInput("not a version-1 ground-state certificate document")
        lam = d["lambda"]
        bits = d["word_bits"]
        word = np.array([lam if b == "1" else 0.0 for b in bits])
        n_min, n_max = int(d["n_min"]), int(d["n_max"])
        bg = _background_from_descriptor(d["background"], n_min, n_max)
        window = spectrum.RealizationWindow(n_min, n_max, bg, word)
        return cls(
            realization=window,
            energy=float(d["energy"]),
            eigenfunction=np.array(d["eigenfunction"]),
            log_u=np.array(d["log_u"]),
            log_u_left_outside=float(d["log_u_left_outside"]),
            log_u_right_outside=float(d["log_u_right_outside"]),
            ratios=np.array(d["ratios"]),
            transit_end=int(d["transit_end"]),
            decay_rate_back=float(d["decay_rate_back"]),
            decay_rate_fwd=float(d["decay_rate_fwd"]),
            min_entry=float(d["min_entry"]),
            residual=float(d["residual"]),
            params=dict(d["params"]),
            background_descriptor=dict(d["background"]),
        )


def _background_from_descriptor(desc: dict, n_min: int, n_max: int) -> np.ndarray:
    kind = desc.get("type", "zero")
    if kind == "zero":
        return np.zeros(n_max - n_min + 1)
    if kind == "quasiperiodic":
        from .quasiperiodic import QPBackground

        bg = QPBackground.from_dict(desc)
        return np.array([bg.value(n) for n in range(n_min, n_max + 1)])
    if kind == "explicit":
        return np.asarray(desc["values"], dtype=float)
    raise InvalidInput(f"unknown background descriptor {kind!r}")


def _fit_slope(ns, logs):
    ns = np.asarray(ns, dtype=float)
    logs = np.asarray(logs, dtype=float)
    coeff = np.polyfit(ns, logs, 1)
    return float(coeff[0])


def finish_certificate(
    result: dict,
    E: float,
    lam: float,
    n_back: int,
    n_fwd: int,
    params_dict: dict,
    background: np.ndarray | None = None,
    background_descriptor: dict | None = None,
) -> GroundStateCertificate:
    """Assemble a certificate from an engine result (word + ratio orbit)."""
    word = np.array([result["word"][n] for n in range(-n_back, n_fwd + 1)])
    if background is None:
        background = np.zeros_like(word)
    window = spectrum.RealizationWindow(-n_back, n_fwd, background, word)
    log_u, log_left, log_right = reconstruct_eigenfunction(result["ratios"], n_back, n_fwd)
    u = np.exp(log_u)
    sites = np.arange(-n_back, n_fwd + 1)

    sol_values = np.concatenate([[math.exp(log_left)], u, [math.exp(log_right)]])
    sol = cocycle.SolutionWindow(-n_back, n_fwd, E, sol_values)
    residual = float(np.max(sol.relative_residuals(window)))

    back_mask = sites <= -max(1, n_back // 2)
    k = result["transit_end"]
    fwd_start = max(k + 5, n_fwd // 2)
    fwd_mask = sites >= min(fwd_start, n_fwd - 10)
    decay_back = _fit_slope(sites[back_mask], log_u[back_mask])
    decay_fwd = -_fit_slope(sites[fwd_mask], log_u[fwd_mask])

    ratios = np.array([result["ratios"][n] for n in range(-n_back - 1, n_fwd + 1)])
    return GroundStateCertificate(
        realization=window,
        energy=E,
        eigenfunction=u,
        log_u=log_u,
        log_u_left_outside=log_left,
        log_u_right_outside=log_right,
        ratios=ratios,
        transit_end=k,
        decay_rate_back=decay_back,
        decay_rate_fwd=decay_fwd,
        min_entry=float(u.min()),
        residual=residual,
        params=params_dict,
        background_descriptor=background_descriptor or {"type": "zero"},
    )


def construct(params: ConstructorParams) -> GroundStateCertificate:
    """Run the backward/transit/forward construction for the zero-background
    Bernoulli model at E = 2 + lambda - a."""
    E = params.energy
    traps = params.trapping_intervals()

    result = run_construction(
        E,
        params.lam,
        params.n_back,
        params.n_fwd,
        params.x0,
        params.choice_policy,
        interval_I=lambda n: traps.interval,
        interval_hat=lambda n: traps.interval_hat,
        site_shift=lambda n: 0.0,
    )
    meta = params.to_dict()
    meta["energy"] = E
    return finish_certificate(result, E, params.lam, params.n_back, params.n_fwd, meta)


def verify_certificate(cert: GroundStateCertificate, tolerances: dict | None = None) -> dict:
    """Independent verification of a certificate.

    Checks: (i) recurrence residual, (ii) positivity, (iii) exponential decay
    of both tails, (iv) the Dirichlet-truncation top eigenvalue matches the
    certificate energy, (v) no truncation eigenvalue exceeds it.
    """
    tol = dict(DEFAULT_TOLERANCES)
    if tolerances:
        tol.update(tolerances)

    window = cert.realization
    u = cert.eigenfunction
    sites = np.arange(window.n_min, window.n_max + 1)

    sol_values = np.concatenate(
        [[math.exp(cert.log_u_left_outside)], u, [math.exp(cert.log_u_right_outside)]]
    )
    sol = cocycle.SolutionWindow(window.n_min, window.n_max, cert.energy, sol_values)
    residual = float(np.max(sol.relative_residuals(window)))
    check_res = residual <= tol["tol_res"]

    check_pos = bool(np.all(u > 0.0))

    n_back, n_fwd = -window.n_min, window.n_max
    back_mask = sites <= -max(1, n_back // 2)
    fwd_mask = sites >= min(max(cert.transit_end + 5, n_fwd // 2), n_fwd - 10)
    slope_back = _fit_slope(sites[back_mask], cert.log_u[back_mask])
    slope_fwd = _fit_slope(sites[fwd_mask], cert.log_u[fwd_mask])
    check_decay = slope_back >= tol["rho_min"] and slope_fwd <= -tol["rho_min"]

    tr = spectrum.truncated_spectrum(spectrum.assemble_truncation(window))
    top = tr.top
    check_top = abs(top - cert.energy) <= tol["tol_eig"]
    check_max = bool(np.all(tr.eigenvalues <= cert.energy + tol["tol_eig"]))

    report = {
        "tolerances": tol,
        "residual": residual,
        "residual_ok": check_res,
        "positive": check_pos,
        "decay_back": slope_back,
        "decay_fwd": -slope_fwd,
        "decay_ok": check_decay,
        "top_eigenvalue": top,
        "top_gap": top - cert.energy,
        "top_ok": check_top,
        "no_eigenvalue_above": check_max,
        "ok": check_res and check_pos and check_decay and check_top and check_max,
    }
    return report


def sweep_interval(lam: float, a_grid, base_params: dict | None = None, tolerances=None) -> dict:
    """Construct and verify one certificate per grid energy E = 2 + lambda - a.

    Per-energy failures are collected in the report, not raised.
    """
    base = dict(base_params or {})
    rows = []
    for a in a_grid:
        row = {"a": float(a), "E": 2.0 + lam - float(a)}
        try:
            params = ConstructorParams(lam=lam, a=float(a), **base)
            cert = construct(params)
            report = verify_certificate(cert, tolerances)
            row.update(
                ok=report["ok"],
                residual=report["residual"],
                decay_back=report["decay_back"],
                decay_fwd=report["decay_fwd"],
                top_gap=report["top_gap"],
            )
        except RandschrodError as exc:
            row.update(ok=False, error=str(exc))
        rows.append(row)
    return {
        "lambda": lam,
        "rows": rows,
        "verified": sum(1 for r in rows if r.get("ok")),
        "total": len(rows),
    }
