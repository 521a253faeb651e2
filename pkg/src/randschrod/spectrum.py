"""Operator assembly, truncated spectra, almost-sure spectrum formulas and
Monte-Carlo essential-spectrum estimation."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import cocycle
from .errors import InvalidInput, NumericFailure


@dataclass(frozen=True)
class SiteSupport:
    """Topological support of an atomic single-site distribution.

    Weights are optional and only affect sampling, never the spectrum
    formulas (those see the support alone).
    """

    points: tuple[float, ...]
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if len(pts) == 0:
            raise InvalidInput("support must be nonempty")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise InvalidInput("support points must be strictly increasing")
        object.__setattr__(self, "points", pts)
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != len(pts) or any(x <= 0 for x in w):
                raise InvalidInput("weights must be positive and match the support")
            total = sum(w)
            object.__setattr__(self, "weights", tuple(x / total for x in w))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(np.array(self.points), size=size, p=self.weights)

    def issubset(self, other: "SiteSupport") -> bool:
        return set(self.points) <= set(other.points)


@dataclass(frozen=True)
class RealizationWindow:
    """A finite potential window: V(n) = background(n) + word(n) over
    [n_min, n_max]."""

    n_min: int
    n_max: int
    background: np.ndarray
    word: np.ndarray
    potential: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n_min > self.n_max:
            raise InvalidInput("need n_min <= n_max")
        length = self.n_max - self.n_min + 1
        bg = np.asarray(self.background, dtype=float)
        wd = np.asarray(self.word, dtype=float)
        if len(bg) != length or len(wd) != length:
            raise InvalidInput("background and word must span the window")
        object.__setattr__(self, "background", bg)
        object.__setattr__(self, "word", wd)
        object.__setattr__(self, "potential", bg + wd)

    @classmethod
    def from_word(cls, word, n_min: int = 0, background=None) -> "RealizationWindow":
        word = np.asarray(word, dtype=float)
        if background is None:
            background = np.zeros_like(word)
        return cls(n_min, n_min + len(word) - 1, background, word)

    @classmethod
    def ramp(cls, n_min: int, n_max: int, perturbation=None) -> "RealizationWindow":
        sites = np.arange(n_min, n_max + 1, dtype=float)
        word = np.zeros_like(sites) if perturbation is None else np.asarray(perturbation, float)
        return cls(n_min, n_max, sites, word)

    def __len__(self) -> int:
        return self.n_max - self.n_min + 1

    def value(self, n: int) -> float:
        if n < self.n_min or n > self.n_max:
            raise InvalidInput(f"site {n} outside window")
        return float(self.potential[n - self.n_min])

    def to_dict(self) -> dict:
        return {
            "n_min": self.n_min,
            "n_max": self.n_max,
            "background": self.background.tolist(),
            "word": self.word.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RealizationWindow":
        return cls(int(d["n_min"]), int(d["n_max"]), d["background"], d["word"])


class SpectrumSet:
    """A normalized finite union of disjoint closed intervals."""

    def __init__(self, intervals):
        merged = []
        for l, r in sorted((float(l), float(r)) for l, r in intervals):
            if r < l:
                raise InvalidInput(f"interval [{l}, {r}] is empty")
            if merged and l <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], r)
            else:
                merged.append([l, r])
        self.intervals = [(l, r) for l, r in merged]

    def __eq__(self, other):
        return isinstance(other, SpectrumSet) and self.intervals == other.intervals

    def __repr__(self):
        body = " u ".join(f"[{l:g}, {r:g}]" for l, r in self.intervals)
        return f"SpectrumSet({body or 'empty'})"

    def __bool__(self):
        return bool(self.intervals)

    def contains_point(self, x: float, tol: float = 0.0) -> bool:
        return any(l - tol <= x <= r + tol for l, r in self.intervals)

    def dilate(self, eps: float) -> "SpectrumSet":
        return SpectrumSet([(l - eps, r + eps) for l, r in self.intervals])

    def union(self, other: "SpectrumSet") -> "SpectrumSet":
        return SpectrumSet(self.intervals + other.intervals)

    def issubset(self, other: "SpectrumSet", tol: float = 0.0) -> bool:
        return not self.uncovered_by(other, tol)

    def uncovered_by(self, other: "SpectrumSet", tol: float = 0.0):
        """Subintervals of self not covered by other dilated by tol."""
        cover = other.dilate(tol).intervals if tol else other.intervals
        gaps = []
        for l, r in self.intervals:
            pos = l
            for cl, cr in cover:
                if cr < pos:
                    continue
                if cl > r:
                    break
                if cl > pos:
                    gaps.append((pos, cl))
                pos = max(pos, cr)
                if pos >= r:
                    break
            if pos < r:
                gaps.append((pos, r))
        return gaps

    def hausdorff_distance(self, other: "SpectrumSet") -> float:
        if not self.intervals or not other.intervals:
            return float("inf") if self.intervals != other.intervals else 0.0

        def directed(a, b):
            # sup over x in a of dist(x, b); candidates are a's endpoints and
            # the midpoints of b's gaps clipped into a
            pts = [p for l, r in a.intervals for p in (l, r)]
            for (l1, r1), (l2, _) in zip(b.intervals, b.intervals[1:]):
                m = 0.5 * (r1 + l2)
                if a.contains_point(m):
                    pts.append(m)
            def dist(x):
                return min(max(l - x, 0.0, x - r) for l, r in b.intervals)
            return max(dist(x) for x in pts)

        return max(directed(self, other), directed(other, self))

    def to_pairs(self):
        return [[l, r] for l, r in self.intervals]


def anderson_almost_sure_spectrum(support: SiteSupport) -> SpectrumSet:
    """Almost-sure spectrum of the i.i.d. model: union of [-2 + s, 2 + s]
    over the support points, with overlapping components merged."""
    return SpectrumSet([(-2.0 + s, 2.0 + s) for s in support.points])


def assemble_truncation(window: RealizationWindow):
    """Symmetric tridiagonal coefficients of the Dirichlet (hard-wall)
    truncation: diagonal = V, off-diagonal = 1."""
    diag = np.array(window.potential, dtype=float)
    if len(diag) < 1:
        raise InvalidInput("window must contain at least one site")
    off = np.ones(len(diag) - 1)
    return diag, off


@dataclass
class TruncationResult:
    eigenvalues: np.ndarray
    top_vector: np.ndarray | None = None
    residual: float | None = None

    @property
    def top(self) -> float:
        return float(self.eigenvalues[-1])


def truncated_spectrum(tridiag, want_top_vector: bool = False) -> TruncationResult:
    """All eigenvalues of a symmetric tridiagonal truncation, ascending; the
    normalized top eigenvector on request."""
    diag, off = tridiag
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    try:
        if want_top_vector:
            if len(diag) == 1:
                evals, evecs = diag.copy(), np.ones((1, 1))
            else:
                evals, evecs = scipy.linalg.eigh_tridiagonal(diag, off)
            vec = evecs[:, -1]
            hv = diag * vec
            if len(diag) > 1:
                hv[:-1] += off * vec[1:]
                hv[1:] += off * vec[:-1]
            residual = float(np.linalg.norm(hv - evals[-1] * vec))
            return TruncationResult(evals, vec, residual)
        if len(diag) == 1:
            return TruncationResult(diag.copy())
        evals = scipy.linalg.eigvalsh_tridiagonal(diag, off)
        return TruncationResult(evals)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - solver failure path
        raise NumericFailure(f"tridiagonal eigensolver failed: {exc}") from exc


def eigenvalue_count_in_interval(window: RealizationWindow, interval) -> int:
    """Number of Dirichlet-truncation eigenvalues in the closed interval."""
    lo, hi = float(interval[0]), float(interval[1])
    if hi < lo:
        raise InvalidInput("interval is empty")
    diag, off = assemble_truncation(window)
    if len(diag) == 1:
        return int(lo <= diag[0] <= hi)
    # select='v' is half-open (lo, hi]; nudge the lower edge to make it closed
    eps = 1e-12 * max(1.0, abs(lo))
    evals = scipy.linalg.eigvalsh_tridiagonal(diag, off, select="v", select_range=(lo - eps, hi))
    return len(evals)


# ---------------------------------------------------------------------------
# Monte-Carlo essential-spectrum estimation


@dataclass
class MCParams:
    window_half_length: int = 1000
    samples: int = 100
    grid_step: float = 0.02
    seed: int = 0
    K: float = 10.0
    N: int = 20
    angle_grid: int = 64
    min_count: int = 3
    threads: int = 1
    # Gershgorin confines the spectrum to [min V - 2, max V + 2]; the pad only
    # adds confirmatory grid points outside that bracket.
    energy_pad: float = 0.1

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _sample_word(support: SiteSupport, seed: int, sample_index: int, length: int) -> np.ndarray:
    rng = np.random.default_rng([seed, sample_index])
    return support.sample(rng, length)


def mc_essential_spectrum(
    support: SiteSupport,
    params: MCParams | None = None,
    background=None,
    energy_range=None,
):
    """Estimate the almost-sure essential spectrum by a witness-criterion scan.

    For each grid energy, sampled potential windows are scanned for an
    essential-spectrum witness; the estimate is the union of the witnessed
    grid points dilated by one grid step.  Reproducible bit-for-bit given
    (seed, params): sample k always uses the substream (seed, k).

    Returns (SpectrumSet, report) where the report carries per-point witness
    statistics.
    """
    params = params or MCParams()
    if params.samples < 1:
        raise InvalidInput("samples must be at least 1")
    if params.grid_step <= 0:
        raise InvalidInput("grid_step must be positive")
    L = params.window_half_length
    length = 2 * L + 1
    if background is None:
        bg = np.zeros(length)
    else:
        bg = np.asarray(background, dtype=float)
        if len(bg) != length:
            raise InvalidInput("background must span the window")

    if energy_range is None:
        lo = float(bg.min()) + min(support.points) - 2.0 - params.energy_pad
        hi = float(bg.max()) + max(support.points) + 2.0 + params.energy_pad
    else:
        lo, hi = map(float, energy_range)
    g = params.grid_step
    j_lo = int(np.ceil(lo / g))
    j_hi = int(np.floor(hi / g))
    grid = np.array([j * g for j in range(j_lo, j_hi + 1)])

    words = [_sample_word(support, params.seed, k, length) for k in range(params.samples)]
    windows = [RealizationWindow(-L, L, bg, w) for w in words]

    def scan(E):
        for k, win in enumerate(windows):
            w = cocycle.witness_search(
                E, win, K=params.K, N=params.N,
                angle_grid=params.angle_grid, min_count=params.min_count,
            )
            if w is not None:
                return {"E": float(E), "found": True, "first_sample": k,
                        "positions": len(w.positions)}
        return {"E": float(E), "found": False, "first_sample": None, "positions": 0}

    if params.threads > 1:
        with ThreadPoolExecutor(max_workers=params.threads) as pool:
            stats = list(pool.map(scan, grid))
    else:
        stats = [scan(E) for E in grid]

    hits = [s["E"] for s in stats if s["found"]]
    estimate = SpectrumSet([(E - g, E + g) for E in hits])
    report = {
        "params": params.to_dict(),
        "grid": [float(E) for E in grid],
        "stats": stats,
        "estimate": estimate.to_pairs(),
    }
    return estimate, report


def support_monotonicity_check(
    support1: SiteSupport,
    support2: SiteSupport,
    params: MCParams | None = None,
    background=None,
    tolerance: float | None = None,
):
    """Monte-Carlo check of spectrum monotonicity in the single-site support.

    Estimates both spectra with identical parameters and asserts that the
    first estimate is contained in the second dilated by the tolerance
    (default: one grid step).  The report lists any violating subintervals.
    """
    params = params or MCParams()
    if not support1.issubset(support2):
        raise InvalidInput("support1 must be a subset of support2")
    tol = params.grid_step if tolerance is None else tolerance
    est1, rep1 = mc_essential_spectrum(support1, params, background)
    est2, rep2 = mc_essential_spectrum(support2, params, background)
    violations = est1.uncovered_by(est2, tol)
    return {
        "support1": list(support1.points),
        "support2": list(support2.points),
        "tolerance": tol,
        "estimate1": est1.to_pairs(),
        "estimate2": est2.to_pairs(),
        "violations": [[a, b] for a, b in violations],
        "contained": not violations,
        "report1": rep1,
        "report2": rep2,
    }
