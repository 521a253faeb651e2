"""Quasi-periodic backgrounds V_bg(n) = c f(theta0 + n alpha): top-energy
estimation, the projective skew product over the circle rotation,
graph-transform invariant sections, cylinder covering checks, and the
cylinder-based ground-state construction.

Everything runs in unconjugated coordinates: above the background's top
energy the projective cocycle is uniformly hyperbolic, and the attracting /
repelling sections are computed directly by forward / backward graph
transforms on a periodic grid.  The cylinders' inner boundaries follow an
adapted center curve 1 + g(theta) obtained from a cohomological solve (the
transit map drifts by about -c f(theta) per step, so a theta-independent
level would lose the O(a) covering margin).  When c = 0 every operation
specializes bitwise to its constant-background counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.interpolate
import scipy.linalg

from . import constructor as gsc
from .errors import (
    InvalidInput,
    ParametersInadmissible,
    PoleError,
    SpectralRegimeError,
)
from .moebius import fixed_points, lambda_admissible, moebius_apply, moebius_inverse

DEFAULT_GRID = 4096
GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class QPBackground:
    """c * f(theta0 + n*alpha) with f a trigonometric polynomial:
    f(t) = sum_k fourier_cos[k] cos(2 pi k t) + sum_k fourier_sin[k] sin(2 pi (k+1) t).
    """

    fourier_cos: tuple
    fourier_sin: tuple = ()
    alpha: float = GOLDEN_MEAN
    theta0: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "fourier_cos", tuple(float(x) for x in self.fourier_cos))
        object.__setattr__(self, "fourier_sin", tuple(float(x) for x in self.fourier_sin))
        if self.c < 0.0:
            raise InvalidInput("coupling c must be nonnegative")

    @classmethod
    def cosine(cls, alpha: float = GOLDEN_MEAN, theta0: float = 0.0, c: float = 0.0):
        """The pilot sampling function f(t) = cos(2 pi t)."""
        return cls(fourier_cos=(0.0, 1.0), alpha=alpha, theta0=theta0, c=c)

    def f(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for k, ck in enumerate(self.fourier_cos):
            if ck:
                out = out + ck * np.cos(2.0 * np.pi * k * theta)
        for k, sk in enumerate(self.fourier_sin):
            if sk:
                out = out + sk * np.sin(2.0 * np.pi * (k + 1) * theta)
        return out if out.shape else float(out)

    def sup_norm(self) -> float:
        """Upper bound sum |coefficients| on |f|."""
        return sum(abs(x) for x in self.fourier_cos) + sum(abs(x) for x in self.fourier_sin)

    def theta(self, n: int) -> float:
        return (self.theta0 + n * self.alpha) % 1.0

    def value(self, n: int) -> float:
        if self.c == 0.0:
            return 0.0
        return self.c * float(self.f(self.theta(n)))

    def to_dict(self) -> dict:
        return {
            "type": "quasiperiodic",
            "fourier_cos": list(self.fourier_cos),
            "fourier_sin": list(self.fourier_sin),
            "alpha": self.alpha,
            "theta0": self.theta0,
            "c": self.c,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QPBackground":
        return cls(
            fourier_cos=tuple(d.get("fourier_cos", ())),
            fourier_sin=tuple(d.get("fourier_sin", ())),
            alpha=float(d["alpha"]),
            theta0=float(d["theta0"]),
            c=float(d["c"]),
        )


def qp_value(bg: QPBackground, n: int) -> float:
    """Background potential value c f(theta0 + n alpha)."""
    return bg.value(n)


def top_energy_report(bg: QPBackground, window_half_length: int = 500, phase_samples: int = 32) -> dict:
    """Top of the background spectrum by phase-sampled Dirichlet truncations
    with a Richardson size extrapolation (truncation error is O(1/L^2))."""
    if window_half_length < 50:
        raise InvalidInput("window_half_length must be at least 50 (window >= 100)")
    if phase_samples < 1:
        raise InvalidInput("phase_samples must be positive")
    sizes = (2 * window_half_length + 1, 2 * (2 * window_half_length) + 1)
    tops = []
    for L in sizes:
        best = -math.inf
        for s in range(phase_samples):
            theta = s / phase_samples
            n = np.arange(L)
            V = bg.c * bg.f((theta + n * bg.alpha) % 1.0) if bg.c else np.zeros(L)
            ev = scipy.linalg.eigvalsh_tridiagonal(
                np.asarray(V, dtype=float), np.ones(L - 1), select="i", select_range=(L - 1, L - 1)
            )
            best = max(best, float(ev[0]))
        tops.append(best)
    e1, e2 = tops
    e_star = e2 + (e2 - e1) / 3.0  # O(1/L^2) Richardson step
    return {
        "e_star": e_star,
        "error_bar": abs(e2 - e1) / 3.0,
        "window_sizes": list(sizes),
        "raw_tops": tops,
        "phase_samples": phase_samples,
    }


def top_energy(bg: QPBackground, window_half_length: int = 500, phase_samples: int = 32) -> float:
    return top_energy_report(bg, window_half_length, phase_samples)["e_star"]


def skew_step(bg: QPBackground, E: float, theta: float, x: float):
    """One projective cocycle step over the rotation:
    (theta, x) -> (theta + alpha, E - c f(theta) - 1/x)."""
    if x == 0.0:
        raise PoleError("skew step has a pole at x = 0")
    w = E - (bg.c * float(bg.f(theta)) if bg.c else 0.0)
    return (theta + bg.alpha) % 1.0, w - 1.0 / x


def skew_inverse(bg: QPBackground, E: float, theta: float, x: float):
    """Inverse of skew_step: (theta, x) -> (theta - alpha, 1/(w(theta-alpha) - x))."""
    theta_prev = (theta - bg.alpha) % 1.0
    w = E - (bg.c * float(bg.f(theta_prev)) if bg.c else 0.0)
    if w - x == 0.0:
        raise PoleError("inverse skew step has a pole at x = w(theta - alpha)")
    return theta_prev, 1.0 / (w - x)


@dataclass
class Section:
    """A circle section theta -> x sampled at theta_i = i/G, with circular
    cubic interpolation between grid points.  ``constant`` short-circuits
    interpolation (the c = 0 reduction stays exact)."""

    values: np.ndarray
    tag: str  # "attracting" | "repelling"
    constant: bool = False
    _spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or len(self.values) < 4:
            raise InvalidInput("section needs at least 4 grid values")

    @property
    def grid_size(self) -> int:
        return len(self.values)

    def value(self, theta):
        if self.constant:
            v = float(self.values[0])
            if np.ndim(theta) == 0:
                return v
            return np.full(np.shape(theta), v)
        if self._spline is None:
            G = self.grid_size
            xs = np.arange(G + 1) / G
            ys = np.concatenate([self.values, self.values[:1]])
            self._spline = scipy.interpolate.CubicSpline(xs, ys, bc_type="periodic")
        out = self._spline(np.asarray(theta) % 1.0)
        return float(out) if np.ndim(theta) == 0 else out

    def invariance_residual(self, bg: QPBackground, E: float) -> float:
        """sup_i |x(theta_i + alpha) - Phi(theta_i, x_i)| with the skew map
        Phi(theta, x) = E - c f(theta) - 1/x."""
        G = self.grid_size
        thetas = np.arange(G) / G
        w = E - (bg.c * bg.f(thetas) if bg.c else 0.0)
        images = w - 1.0 / self.values
        return float(np.max(np.abs(self.value((thetas + bg.alpha) % 1.0) - images)))


def invariant_sections(
    bg: QPBackground,
    E: float,
    grid: int = DEFAULT_GRID,
    max_iter: int = 2000,
    tol: float = 1e-12,
):
    """Attracting and repelling invariant sections of the skew product at
    energy E above the background's spectral top.

    psi_att: forward graph-transform iterates of a constant upper section;
    psi_rep: backward iterates of a constant lower section.  Raises
    SpectralRegimeError when the iteration leaves the hyperbolic regime or
    fails to converge (E too close to the spectrum for this grid).
    """
    if grid < 16:
        raise InvalidInput("grid must be at least 16")
    if bg.c == 0.0:
        x_rep, x_att = fixed_points(E - 2.0)
        att = Section(np.full(grid, x_att), "attracting", constant=True)
        rep = Section(np.full(grid, x_rep), "repelling", constant=True)
        return att, rep

    thetas = np.arange(grid) / grid
    w = E - bg.c * bg.f(thetas)  # fibre parameter at theta_i
    if np.min(w) <= 2.0:
        raise SpectralRegimeError(
            f"E = {E} is not uniformly above the fibre threshold (min w = {np.min(w)})"
        )
    theta_prev = (thetas - bg.alpha) % 1.0
    w_prev = E - bg.c * bg.f(theta_prev)
    theta_next = (thetas + bg.alpha) % 1.0

    # forward transform: psi(theta) = w(theta - alpha) - 1/psi(theta - alpha)
    att_vals = np.full(grid, E + bg.c * bg.sup_norm())
    converged = False
    for _ in range(max_iter):
        prev = Section(att_vals, "attracting").value(theta_prev)
        if np.min(prev) <= 0.0:
            raise SpectralRegimeError("attracting-section iterate left the positive cone")
        new_vals = w_prev - 1.0 / prev
        change = float(np.max(np.abs(new_vals - att_vals)))
        att_vals = new_vals
        if change < tol:
            converged = True
            break
    if not converged:
        raise SpectralRegimeError(
            f"attracting section did not converge in {max_iter} iterations (E too "
            "close to the spectrum for this grid)"
        )

    # backward transform: psi(theta) = 1/(w(theta) - psi(theta + alpha))
    rep_vals = np.zeros(grid)
    converged = False
    for it in range(max_iter):
        nxt = Section(rep_vals, "repelling").value(theta_next) if it else rep_vals
        denom = w - nxt
        if np.min(denom) <= 0.0:
            raise SpectralRegimeError("repelling-section iterate hit the fibre pole")
        new_vals = 1.0 / denom
        change = float(np.max(np.abs(new_vals - rep_vals)))
        rep_vals = new_vals
        if change < tol:
            converged = True
            break
    if not converged:
        raise SpectralRegimeError(
            f"repelling section did not converge in {max_iter} iterations"
        )

    if np.any(rep_vals >= att_vals):
        raise SpectralRegimeError("sections cross; hyperbolicity lost at this energy")
    return Section(att_vals, "attracting"), Section(rep_vals, "repelling")


def section_gap(att: Section, rep: Section) -> float:
    """sup psi_att - inf psi_rep."""
    return float(np.max(att.values) - np.min(rep.values))


def sections_to_rows(att: Section, rep: Section):
    """(theta, x_att, x_rep) rows for delimited output."""
    G = att.grid_size
    return [(i / G, float(att.values[i]), float(rep.values[i])) for i in range(G)]


# ---------------------------------------------------------------------------
# Adapted center curve for the cylinders


class TrigCurve:
    """A real trigonometric polynomial stored by its rFFT coefficients on a
    uniform grid of size G; evaluated exactly at arbitrary theta."""

    def __init__(self, grid_values: np.ndarray, mode_cut: int = 256, coeff_tol: float = 1e-15):
        grid_values = np.asarray(grid_values, dtype=float)
        G = len(grid_values)
        coeffs = np.fft.rfft(grid_values) / G
        kmax = min(mode_cut, len(coeffs) - 1)
        coeffs = coeffs[: kmax + 1]
        keep = np.abs(coeffs) > coeff_tol
        keep[0] = True
        self.ks = np.nonzero(keep)[0]
        self.coeffs = coeffs[keep]
        self.grid_size = G

    def value(self, theta):
        theta = np.asarray(theta, dtype=float)
        phases = np.exp(2j * np.pi * np.outer(theta.ravel(), self.ks))
        # rFFT convention: x(t) = c_0 + 2 Re sum_{k>=1} c_k e^{2 pi i k t}
        weights = np.where(self.ks == 0, 1.0, 2.0)
        out = np.real(phases @ (self.coeffs * weights))
        return float(out[0]) if theta.ndim == 0 else out.reshape(theta.shape)


def _cohomological_solve(values: np.ndarray, alpha: float) -> np.ndarray:
    """Solve D(theta + alpha) - D(theta) = values(theta) (zero-mean data) in
    Fourier space on the grid carrying ``values``."""
    G = len(values)
    r = np.fft.rfft(values)
    k = np.arange(len(r))
    denom = np.exp(2j * np.pi * k * alpha) - 1.0
    small = np.abs(denom) < 1e-8
    if np.any(small & (np.abs(r) > 1e-9 * G)):
        raise InvalidInput("frequency alpha is too resonant for the cohomological solve")
    denom[0] = 1.0
    d = np.where(small, 0.0, r / denom)
    d[0] = 0.0
    return np.fft.irfft(d, n=G)


def transit_center_curve(
    bg: QPBackground, E: float, lam: float, grid: int = 1024, rounds: int = 4
) -> dict:
    """Adapted center curve 1 + g(theta) for the cylinders.

    The transit map (word value lam) advances the section angle by alpha and
    acts by x -> 2 + q(theta) - 1/x with q(theta) = E - 2 - lam - c f(theta),
    which drifts by roughly -a - c f(theta) per step.  g is chosen so
    F_{q(theta)}(1 + g(theta)) = 1 + g(theta + alpha) + drift with the
    oscillating part of ``drift`` removed iteratively (FFT cohomological
    solves); what remains is approximately -a.  c = 0 gives g = 0.
    """
    if bg.c == 0.0:
        return {"curve": None, "drift": E - 2.0 - lam, "residual_oscillation": 0.0}
    thetas = np.arange(grid) / grid
    q = E - 2.0 - lam - bg.c * bg.f(thetas)
    g = np.zeros(grid)
    drift = 0.0
    osc = math.inf
    for _ in range(rounds):
        curve = TrigCurve(g)
        g_next = curve.value((thetas + bg.alpha) % 1.0)
        r = (2.0 + q) - 1.0 / (1.0 + g) - (1.0 + g_next)
        drift = float(np.mean(r))
        tilde = r - drift
        osc = float(np.max(np.abs(tilde)))
        if osc < 1e-13:
            break
        g = g + _cohomological_solve(tilde, bg.alpha)
    return {"curve": TrigCurve(g), "drift": drift, "residual_oscillation": osc}


# ---------------------------------------------------------------------------
# Cylinders and covering


class Cylinders:
    """Per-site trapping bands along the rotation orbit:
    U(theta)    = [1 + g(theta) + delta, psi_att(theta)]
    Uhat(theta) = [psi_rep(theta), 1 + g(theta) - delta]
    with g the adapted center curve (identically 0 when c = 0, making the
    bands bitwise equal to the constant-background trapping intervals)."""

    def __init__(self, bg: QPBackground, E: float, lam: float, att: Section, rep: Section, delta: float):
        self.bg = bg
        self.att = att
        self.rep = rep
        self.delta = delta
        if bg.c == 0.0:
            self.curve = None
            self.const = (
                1.0 + delta,
                float(att.values[0]),
                float(rep.values[0]),
                1.0 - delta,
            )
            self.drift = E - 2.0 - lam
        else:
            info = transit_center_curve(bg, E, lam)
            self.curve = info["curve"]
            self.drift = info["drift"]
            self.const = None

    def band_I(self, theta: float):
        if self.const is not None:
            return self.const[0], self.const[1]
        g = self.curve.value(theta)
        return 1.0 + g + self.delta, self.att.value(theta)

    def band_hat(self, theta: float):
        if self.const is not None:
            return self.const[2], self.const[3]
        g = self.curve.value(theta)
        return self.rep.value(theta), 1.0 + g - self.delta

    def interval_I(self, n: int):
        # the ratio x_n = u(n+1)/u(n) advances by the site-(n+1) map, so it
        # lives at section angle theta_{n+1}
        if self.const is not None:
            return self.const[0], self.const[1]
        return self.band_I(self.bg.theta(n + 1))

    def interval_hat(self, n: int):
        if self.const is not None:
            return self.const[2], self.const[3]
        return self.band_hat(self.bg.theta(n + 1))


def qp_covering_check(
    bg: QPBackground,
    lam: float,
    E: float,
    cyl: Cylinders,
    grid: int = 512,
    tol: float = 1e-9,
    strict: bool = True,
) -> dict:
    """Runtime covering check on a theta grid.

    The step from section angle theta to theta + alpha uses the Moebius
    parameter E - 2 - c f(theta) - v.  U(theta + alpha) must be covered by
    the forward images of U(theta) under the two site maps, and Uhat(theta)
    by the preimages of Uhat(theta + alpha); monotonicity reduces both to
    endpoint margins.  Section-endpoint margins are zero up to the section
    residual, hence the small tolerance."""
    worst = {
        "backward_low": math.inf,
        "backward_gap": math.inf,
        "backward_high": math.inf,
        "forward_low": math.inf,
        "forward_gap": math.inf,
        "forward_high": math.inf,
    }
    npts = 1 if cyl.const is not None else grid
    for i in range(npts):
        theta = i / grid
        theta_next = (theta + bg.alpha) % 1.0
        p0 = E - 2.0 - (bg.c * float(bg.f(theta)) if bg.c else 0.0)
        pl = p0 - lam
        lo, hi = cyl.band_I(theta)
        lo_n, hi_n = cyl.band_I(theta_next)
        h_lo, h_hi = cyl.band_hat(theta)
        h_lo_n, h_hi_n = cyl.band_hat(theta_next)

        # backward: U(theta + alpha) inside F_pl(U(theta)) u F_p0(U(theta))
        worst["backward_low"] = min(worst["backward_low"], lo_n - moebius_apply(pl, lo))
        worst["backward_gap"] = min(
            worst["backward_gap"], moebius_apply(pl, hi) - moebius_apply(p0, lo)
        )
        worst["backward_high"] = min(
            worst["backward_high"], moebius_apply(p0, hi) - hi_n
        )

        # forward: Uhat(theta) inside the two preimages of Uhat(theta + alpha)
        worst["forward_low"] = min(
            worst["forward_low"], h_lo - moebius_inverse(p0, h_lo_n)
        )
        worst["forward_gap"] = min(
            worst["forward_gap"], moebius_inverse(p0, h_hi_n) - moebius_inverse(pl, h_lo_n)
        )
        worst["forward_high"] = min(
            worst["forward_high"], moebius_inverse(pl, h_hi_n) - h_hi
        )
    ok = all(v >= -tol for v in worst.values())
    report = {"margins": worst, "tol": tol, "ok": ok}
    if strict and not ok:
        raise ParametersInadmissible(f"cylinder covering fails: {report}")
    return report


# ---------------------------------------------------------------------------
# Construction


@dataclass
class QPConstructParams:
    lam: float
    a: float
    delta: float | None = None
    n_back: int = 200
    n_fwd: int = 200
    x0: float | None = None
    choice_policy: str = "max_margin"
    grid: int = DEFAULT_GRID
    section_tol: float = 1e-12
    max_iter: int = 2000
    e_star: float | None = None  # override the top_energy estimate

    def __post_init__(self):
        if self.delta is None:
            self.delta = self.a
        if self.choice_policy not in gsc.POLICIES:
            raise InvalidInput(f"unknown policy {self.choice_policy!r}")
        if not (0.0 < self.a < self.lam):
            raise InvalidInput("need 0 < a < lambda")
        if not lambda_admissible(self.lam):
            raise InvalidInput(f"lambda = {self.lam} fails the admissibility inequalities")

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "a": self.a,
            "delta": self.delta,
            "n_back": self.n_back,
            "n_fwd": self.n_fwd,
            "x0": self.x0,
            "choice_policy": self.choice_policy,
            "grid": self.grid,
            "section_tol": self.section_tol,
            "e_star": self.e_star,
        }


def qp_construct(
    bg: QPBackground,
    params: QPConstructParams,
    sections=None,
) -> gsc.GroundStateCertificate:
    """Cylinder-based backward/transit/forward construction at
    E = E* + lambda - a over the quasi-periodic background.

    ``sections`` may carry precomputed (psi_att, psi_rep) for this energy.
    With c = 0 the output agrees bitwise with the constant-background
    constructor at identical policy and window.
    """
    e_star = params.e_star
    if e_star is None:
        e_star = 2.0 if bg.c == 0.0 else top_energy(bg)
    E = e_star + params.lam - params.a

    if sections is None:
        att, rep = invariant_sections(bg, E, params.grid, params.max_iter, params.section_tol)
    else:
        att, rep = sections
    cyl = Cylinders(bg, E, params.lam, att, rep, params.delta)
    qp_covering_check(bg, params.lam, E, cyl)

    x0 = params.x0
    if x0 is None:
        # Bottom of the site-0 band: splits the neutral transit between the
        # two window halves (matches the zero-background default).
        lo, _ = cyl.interval_I(0)
        x0 = lo

    result = gsc.run_construction(
        E,
        params.lam,
        params.n_back,
        params.n_fwd,
        x0,
        params.choice_policy,
        interval_I=cyl.interval_I,
        interval_hat=cyl.interval_hat,
        site_shift=bg.value,
        empty_option_error=ParametersInadmissible,
    )
    background = np.array([bg.value(n) for n in range(-params.n_back, params.n_fwd + 1)])
    meta = params.to_dict()
    meta["energy"] = E
    meta["e_star_used"] = e_star
    return gsc.finish_certificate(
        result,
        E,
        params.lam,
        params.n_back,
        params.n_fwd,
        meta,
        background=background,
        background_descriptor=bg.to_dict(),
    )


def qp_sweep_interval(
    bg: QPBackground,
    lam: float,
    a_grid,
    base_params: dict | None = None,
    tolerances=None,
) -> dict:
    """One verified certificate per energy E = E* + lambda - a across the
    grid; per-energy failures are collected, not raised."""
    base = dict(base_params or {})
    e_star = base.pop("e_star", None)
    if e_star is None:
        e_star = 2.0 if bg.c == 0.0 else top_energy(bg)
    rows = []
    gaps = []
    for a in a_grid:
        a = float(a)
        row = {"a": a, "E": e_star + lam - a}
        try:
            params = QPConstructParams(lam=lam, a=a, e_star=e_star, **base)
            att, rep = invariant_sections(
                bg, row["E"], params.grid, params.max_iter, params.section_tol
            )
            gap = section_gap(att, rep)
            gaps.append(gap)
            cert = qp_construct(bg, params, sections=(att, rep))
            report = gsc.verify_certificate(cert, tolerances)
            row.update(
                ok=report["ok"],
                residual=report["residual"],
                top_gap=report["top_gap"],
                section_gap=gap,
                section_residual=max(
                    att.invariance_residual(bg, row["E"]),
                    rep.invariance_residual(bg, row["E"]),
                ),
            )
        except (InvalidInput, SpectralRegimeError) as exc:
            row.update(ok=False, error=str(exc))
        rows.append(row)
    return {
        "lambda": lam,
        "e_star": e_star,
        "background": bg.to_dict(),
        "rows": rows,
        "verified": sum(1 for r in rows if r.get("ok")),
        "total": len(rows),
        "section_gap_range": [min(gaps), max(gaps)] if gaps else None,
    }
