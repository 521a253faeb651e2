"""Enumeration of the constructor's admissible words as a tree, with branch
growth statistics, the 1/(N+1) Hausdorff-dimension lower bound, and a Hoelder
check for the map extracting free choices.

The tree follows the backward pass of the ground-state constructor: a branch
state is the current ratio x in I, and each level applies one inverse map per
admissible site value.  Steps with a single admissible value are "forced";
maximal forced runs play the role of the g-words, and N_observed is the
longest *completed* forced run (one terminated by a branching choice).  Runs
still open at the enumeration frontier are censored -- counting them would
make the statistic grow with the depth instead of stabilizing -- and their
maximum is reported separately as ``longest_open_run``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constructor import ConstructorParams
from .errors import InvalidInput
from .moebius import moebius_inverse

DEFAULT_CAP = 10**6
DEFAULT_DEPTH = 20


@dataclass
class _Branch:
    word: tuple  # chosen site values, in choice order
    x: float  # current ratio (far backward end)
    free_bits: str  # one bit per free (two-option) choice: 0 -> value 0, 1 -> value lam
    forced_run: int  # length of the current (still open) run of forced steps
    max_forced: int  # longest completed forced run seen on this branch


@dataclass
class AdmissibleTree:
    depth: int
    branch_counts: list  # branch count per level, index 0 = root level (1)
    branches: list  # _Branch leaves at the final enumerated level
    n_observed: int  # max completed forced-run length over all branches
    longest_open_run: int  # max censored (still open) run at the frontier
    truncated: bool
    cap: int
    params: ConstructorParams | None = None
    x0: float | None = None  # root ratio the enumeration started from

    @property
    def branch_count(self) -> int:
        return self.branch_counts[-1]

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "branch_counts": list(self.branch_counts),
            "branch_count": self.branch_count,
            "n_observed": self.n_observed,
            "longest_open_run": self.longest_open_run,
            "truncated": self.truncated,
            "cap": self.cap,
        }

    def stats_rows(self):
        """(depth, branch_count) rows for delimited output."""
        return [(d, c) for d, c in enumerate(self.branch_counts)]


def _options(x: float, E: float, lam: float, lo: float, hi: float):
    """Admissible site values at state x for one backward step, with the
    resulting previous ratios; deterministic (0, lam) order."""
    out = []
    for bit, v in (("0", 0.0), ("1", lam)):
        y = moebius_inverse(E - 2.0 - v, x)
        if lo <= y <= hi:
            out.append((bit, v, y))
    return out


def build_tree(
    params: ConstructorParams,
    depth: int = DEFAULT_DEPTH,
    cap: int = DEFAULT_CAP,
    x0: float | None = None,
) -> AdmissibleTree:
    """Breadth-first enumeration of admissible backward choice sequences.

    The root ratio ``x0`` defaults to the midpoint of the trapping interval,
    where both site values are typically admissible at once; near the lower
    endpoint the first choices are all forced, which degenerates the tree.
    Truncation at ``cap`` branches keeps the per-level counts valid as lower
    bounds and sets ``truncated``.
    """
    if depth < 1:
        raise InvalidInput("depth must be at least 1")
    if cap < 1:
        raise InvalidInput("cap must be positive")
    E = params.energy
    traps = params.trapping_intervals()
    lo, hi = traps.interval
    if x0 is None:
        x0 = 0.5 * (lo + hi)
    elif not lo <= x0 <= hi:
        raise InvalidInput(f"x0 = {x0} outside the trapping interval {traps.interval}")

    level = [_Branch((), x0, "", 0, 0)]
    counts = [1]
    truncated = False
    for _ in range(depth):
        nxt = []
        for br in level:
            opts = _options(br.x, E, params.lam, lo, hi)
            if not opts:
                continue  # dead branch (cannot happen under a valid covering)
            forced = len(opts) == 1
            for bit, v, y in opts:
                if forced:
                    nxt.append(
                        _Branch(br.word + (v,), y, br.free_bits, br.forced_run + 1,
                                br.max_forced)
                    )
                else:
                    # a free choice terminates the current forced run, which
                    # only now counts toward the observed maximum
                    nxt.append(
                        _Branch(br.word + (v,), y, br.free_bits + bit, 0,
                                max(br.max_forced, br.forced_run))
                    )
            if len(nxt) >= cap:
                truncated = True
                break
        level = nxt[:cap]
        counts.append(len(level))
        if truncated:
            break
    n_obs = max((br.max_forced for br in level), default=0)
    open_run = max((br.forced_run for br in level), default=0)
    return AdmissibleTree(
        depth=len(counts) - 1,
        branch_counts=counts,
        branches=level,
        n_observed=n_obs,
        longest_open_run=open_run,
        truncated=truncated,
        cap=cap,
        params=params,
        x0=x0,
    )


def replay_branch(tree: AdmissibleTree, branch: _Branch) -> bool:
    """Exact replay of a branch's word through the backward step map; every
    intermediate state must land back in the trapping interval."""
    params = tree.params
    E = params.energy
    lo, hi = params.trapping_intervals().interval
    x = tree.x0
    for v in branch.word:
        x = moebius_inverse(E - 2.0 - v, x)
        if not lo <= x <= hi:
            return False
    return x == branch.x


def growth_rate(tree: AdmissibleTree) -> dict:
    """Empirical branching entropy log2(branches)/depth, plus a linear fit of
    log2(count) against depth over the last half of the levels."""
    if tree.depth < 5:
        raise InvalidInput("growth rate needs depth >= 5")
    counts = np.array(tree.branch_counts, dtype=float)
    depths = np.arange(len(counts), dtype=float)
    overall = math.log2(counts[-1]) / tree.depth
    half = len(counts) // 2
    slope = float(np.polyfit(depths[half:], np.log2(counts[half:]), 1)[0])
    return {"overall": overall, "tail_fit": slope, "depth": tree.depth}


def dimension_lower_bound(n: int) -> float:
    """1/(N+1): Hausdorff-dimension lower bound transported through the
    forced-run factor map (full binary shift has dimension 1 in the 2^{-k}
    metric)."""
    if n < 0:
        raise InvalidInput("N must be nonnegative")
    return 1.0 / (n + 1)


def _common_prefix_len(a, b) -> int:
    k = 0
    for x, y in zip(a, b):
        if x != y:
            break
        k += 1
    return k


def holder_check(tree: AdmissibleTree, sample_pairs: int, seed: int = 0) -> dict:
    """Check the Hoelder bound d(G(w), G(w')) <= d(w, w')^{1/(N+1)} on sampled
    branch pairs, where G extracts the free-choice bits and d is the 2^{-k}
    cylinder metric.  Equivalent integer form: k_free * (N+1) >= k_word is
    required whenever the words differ.
    """
    if len(tree.branches) < 2:
        raise InvalidInput("tree needs at least 2 branches")
    if sample_pairs < 1:
        raise InvalidInput("sample_pairs must be positive")
    rng = np.random.default_rng(seed)
    n = tree.n_observed
    worst_ratio = 0.0
    violations = 0
    checked = 0
    for _ in range(sample_pairs):
        i, j = rng.integers(0, len(tree.branches), size=2)
        if i == j:
            continue
        bi, bj = tree.branches[i], tree.branches[j]
        m = _common_prefix_len(bi.word, bj.word)
        if m >= min(len(bi.word), len(bj.word)):
            continue  # one word a prefix of the other (unequal depths)
        k = _common_prefix_len(bi.free_bits, bj.free_bits)
        checked += 1
        d_image = 2.0 ** (-k)
        d_word = (2.0 ** (-m)) ** (1.0 / (n + 1))
        ratio = d_image / d_word
        worst_ratio = max(worst_ratio, ratio)
        if k * (n + 1) < m:
            violations += 1
    return {
        "pairs_checked": checked,
        "violations": violations,
        "worst_ratio": worst_ratio,
        "n_observed": n,
        "ok": violations == 0,
    }
