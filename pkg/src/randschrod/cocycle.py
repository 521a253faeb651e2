"""SL(2,R) transfer matrices, cocycle products, solution propagation and
essential-spectrum witnesses for 1D discrete Schrodinger operators.

All functions take a window-like object exposing ``n_min``, ``n_max`` and a
``potential`` array (index 0 corresponds to site ``n_min``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, NumericFailure

DET_TOL = 1e-9
_OVERFLOW_LIMIT = 1e150


def step_matrix(E: float, v: float) -> np.ndarray:
    """One-site transfer matrix ((E - v, -1), (1, 0)); det = 1 exactly."""
    return np.array([[E - v, -1.0], [1.0, 0.0]])


def step_matrix_inverse(E: float, v: float) -> np.ndarray:
    """Exact inverse ((0, 1), (-1, E - v)) of the one-site transfer matrix."""
    return np.array([[0.0, 1.0], [-1.0, E - v]])


def _check_det(mat: np.ndarray) -> np.ndarray:
    d = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    # rounding error in the determinant scales with the squared matrix norm,
    # so the tolerance must be relative to it
    scale = max(1.0, float(np.max(np.abs(mat))) ** 2)
    if abs(d - 1.0) > DET_TOL * scale:
        raise NumericFailure(f"cocycle product drifted off SL(2,R): det = {d!r}")
    return mat


def _site_index(window, n: int) -> int:
    if n < window.n_min or n > window.n_max:
        raise InvalidInput(f"site {n} outside window [{window.n_min}, {window.n_max}]")
    return n - window.n_min


def product_over(E: float, window, m: int, i: int) -> np.ndarray:
    """Cocycle product T_[m, m+i] at energy E.

    i > 0: Pi_{m+i-1} ... Pi_m;  i = 0: identity;
    i < 0: Pi_{m+i}^{-1} ... Pi_{m-1}^{-1}.
    """
    V = window.potential
    if i == 0:
        return np.eye(2)
    acc = np.eye(2)
    if i > 0:
        for n in range(m, m + i):
            acc = step_matrix(E, V[_site_index(window, n)]) @ acc
    else:
        for n in range(m - 1, m + i - 1, -1):
            acc = step_matrix_inverse(E, V[_site_index(window, n)]) @ acc
    return _check_det(acc)


@dataclass
class SolutionWindow:
    """A solution u of the three-term recurrence sampled over
    [n_min - 1, n_max + 1], stored as values * exp(log_scale)."""

    n_min: int
    n_max: int
    energy: float
    values: np.ndarray
    log_scale: float = 0.0

    def value(self, n: int) -> float:
        if n < self.n_min - 1 or n > self.n_max + 1:
            raise InvalidInput(f"site {n} outside solution window")
        return float(self.values[n - self.n_min + 1])

    def relative_residuals(self, window) -> np.ndarray:
        """Per-site residual of the recurrence, scaled by the largest term."""
        u = self.values
        V = np.asarray(window.potential)
        lhs = u[2:] + u[:-2] + (V - self.energy) * u[1:-1]
        scale = np.maximum.reduce(
            [np.abs(u[2:]), np.abs(u[:-2]), np.abs((V - self.energy) * u[1:-1])]
        )
        scale = np.where(scale == 0.0, 1.0, scale)
        return np.abs(lhs) / scale


def propagate(E: float, window, u_prev: float, u_first: float) -> SolutionWindow:
    """Propagate the recurrence across the window from the initial pair
    (u(n_min - 1), u(n_min)).  Rescales by a shared exponent on overflow."""
    if u_prev == 0.0 and u_first == 0.0:
        raise InvalidInput("initial pair must not be identically zero")
    V = np.asarray(window.potential, dtype=float)
    length = len(V)
    out = np.empty(length + 2)
    out[0] = u_prev
    out[1] = u_first
    log_scale = 0.0
    for k in range(length):
        nxt = (E - V[k]) * out[k + 1] - out[k]
        if not math.isfinite(nxt):
            raise NumericFailure(f"propagation overflowed at site {window.n_min + k}")
        if abs(nxt) > _OVERFLOW_LIMIT:
            out[: k + 2] *= 1e-150
            nxt *= 1e-150
            log_scale += 150.0 * math.log(10.0)
        out[k + 2] = nxt
    return SolutionWindow(window.n_min, window.n_max, E, out, log_scale)


@dataclass
class Witness:
    """Finite-window surrogate for the essential-spectrum criterion: positions
    m_j pairwise more than 2N apart and unit vectors u_j with
    ||T_[m_j, m_j + i] u_j|| <= K for all |i| <= N."""

    K: float
    N: int
    positions: list[int]
    vectors: list[tuple[float, float]]
    min_norms: list[float]

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "N": self.N,
            "positions": list(self.positions),
            "vectors": [list(v) for v in self.vectors],
            "min_norms": list(self.min_norms),
        }


def _scan_positions(E, V, N, angle_grid, K, p_lo, p_hi):
    """Vectorized scan of the candidate positions p in [p_lo, p_hi).

    Position p corresponds to array index N + p in V.  For each position and
    each unit vector on the angle grid, tracks max_{|i|<=N} ||T u||^2;
    positions where every angle exceeds K are dropped progressively (the max
    only grows).  Returns (best, angle_index, u0, u1) where best[p - p_lo] is
    the minimum over surviving angles of the max norm (inf when none
    survive).
    """
    P = p_hi - p_lo
    angles = np.pi * (np.arange(angle_grid) + 0.5) / angle_grid
    u0 = np.cos(angles)
    u1 = np.sin(angles)
    K2 = K * K

    best = np.full(P, math.inf)
    best_angle = np.full(P, -1, dtype=int)
    pos = np.arange(p_lo, p_hi)  # surviving position indices
    maxsq = np.ones((P, angle_grid))

    def sweep(forward: bool):
        nonlocal pos, maxsq
        w0 = np.broadcast_to(u0, (len(pos), angle_grid)).copy()
        w1 = np.broadcast_to(u1, (len(pos), angle_grid)).copy()
        ms = maxsq
        p = pos
        for i in range(1, N + 1):
            if forward:
                v = V[N + i - 1 + p][:, None]  # site value at step i - 1
                w0, w1 = (E - v) * w0 - w1, w0
            else:
                v = V[N - i + p][:, None]
                w0, w1 = w1, -w0 + (E - v) * w1
            np.maximum(ms, w0 * w0 + w1 * w1, out=ms)
            alive = (ms <= K2).any(axis=1)
            if not alive.all():
                p = p[alive]
                if len(p) == 0:
                    break
                w0, w1, ms = w0[alive], w1[alive], ms[alive]
        return p, ms

    # forward sweep prunes; the backward sweep continues on the survivors
    pos, maxsq = sweep(forward=True)
    if len(pos):
        pos, maxsq = sweep(forward=False)
    if len(pos):
        masked = np.where(maxsq <= K2, maxsq, math.inf)
        j = np.argmin(masked, axis=1)
        vals = masked[np.arange(len(pos)), j]
        ok = np.isfinite(vals)
        best[pos[ok] - p_lo] = np.sqrt(vals[ok])
        best_angle[pos[ok] - p_lo] = j[ok]
    return best, best_angle, u0, u1


def witness_search(
    E: float,
    window,
    K: float = 10.0,
    N: int = 20,
    angle_grid: int = 256,
    min_count: int = 3,
):
    """Greedy scan for an essential-spectrum witness at energy E.

    Scans candidate positions left to right; at each position the best unit
    vector over a uniform angle grid is evaluated against the norm bound K
    over offsets |i| <= N.  Accepted positions are kept pairwise more than
    2N apart.  Returns a Witness when at least ``min_count`` positions
    qualify, otherwise None (absence is a valid result, not an error).
    """
    if angle_grid < 8:
        raise InvalidInput("angle_grid must be at least 8")
    V = np.asarray(window.potential, dtype=float)
    if len(V) < 2 * N + 1:
        raise InvalidInput("window shorter than 2N + 1")
    P = len(V) - 2 * N
    chunk = max(512, (2 * N + 1) * min_count)
    positions, vectors, norms = [], [], []
    p = 0
    for lo in range(0, P, chunk):
        hi = min(lo + chunk, P)
        if p >= hi:
            continue
        best, best_angle, u0, u1 = _scan_positions(E, V, N, angle_grid, K, lo, hi)
        while p < hi:
            if p >= lo and math.isfinite(best[p - lo]):
                j = best_angle[p - lo]
                positions.append(window.n_min + N + p)
                vectors.append((float(u0[j]), float(u1[j])))
                norms.append(float(best[p - lo]))
                p += 2 * N + 1
            else:
                p += 1
        if len(positions) >= min_count:
            return Witness(K, N, positions, vectors, norms)
    if len(positions) >= min_count:
        return Witness(K, N, positions, vectors, norms)
    return None


def lyapunov_estimate(E: float, sampler, length: int, seed: int, restarts: int = 8) -> float:
    """Crude Lyapunov-exponent estimate (1/length) log ||product||, averaged
    over restarts with independent potentials; clamped to be nonnegative.

    ``sampler(rng, length)`` must return a potential array of the given length.
    """
    if length < 100:
        raise InvalidInput("length must be at least 100")
    total = 0.0
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        V = np.asarray(sampler(rng, length), dtype=float)
        w = np.array([1.0, 0.0])
        log_norm = 0.0
        for k in range(length):
            w = np.array([(E - V[k]) * w[0] - w[1], w[0]])
            nrm = math.hypot(w[0], w[1])
            if nrm > 1e100 or nrm < 1e-100:
                log_norm += math.log(nrm)
                w /= nrm
        nrm = math.hypot(w[0], w[1])
        total += (log_norm + math.log(nrm)) / length
    return max(total / restarts, 0.0)


def cone_check(E: float, M: float, n: int, samples: int, seed: int = 0) -> dict:
    """Check the ramp-potential cone argument at site n.

    For sampled vectors in the open cone |v1| > |v2| and bounded perturbations
    |V_b| <= M, verifies that Pi_n maps the cone into itself and expands the
    1-norm by at least (n - E - M)/2.  Requires n > E + M + 1.
    """
    if not n > E + M + 1:
        raise InvalidInput("cone argument needs n > E + M + 1")
    if samples < 1:
        raise InvalidInput("samples must be positive")
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=samples)
    v1 = signs
    # open cone: keep |v2| strictly below |v1|
    v2 = rng.uniform(-1.0, 1.0, size=samples) * 0.999999
    vb = rng.uniform(-M, M, size=samples) if M > 0 else np.zeros(samples)
    w1 = (E - n - vb) * v1 - v2
    w2 = v1
    in_cone = np.abs(w1) > np.abs(w2)
    factor = (np.abs(w1) + np.abs(w2)) / (np.abs(v1) + np.abs(v2))
    required = (n - E - M) / 2.0
    expanded = factor >= required
    return {
        "E": E,
        "M": M,
        "n": n,
        "samples": samples,
        "in_cone_fraction": float(np.mean(in_cone)),
        "expanded_fraction": float(np.mean(expanded)),
        "min_expansion_factor": float(np.min(factor)),
        "required_factor": required,
        "ok": bool(np.all(in_cone) and np.all(expanded)),
    }
