"""Subchannel reliability estimation for the binary symmetric channel.

Two independent routes are provided.  ``density_evolution_minsum`` tracks
the exact distribution of min-sum LLRs through the recursive transform;
because every BSC observation is ``+-L0`` with ``L0 = ln((1-p)/p)``, all
intermediate LLRs are integer multiples of ``L0`` and the distributions
live on an integer grid with no discretisation error beyond pruning.
``genie_sc_error_rates`` estimates the same per-subchannel error rates by
Monte Carlo simulation of a genie-aided successive decoder.

Subchannel indexing is natural (not bit-reversed): the most significant
bit of an index selects the outermost operation, with 0 mapping to the
check-node side and 1 to the variable-node side.  Index 0 is therefore
the least reliable subchannel and index n-1 the most reliable one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_GENIE_CHUNK = 8192  # trials per RNG stream; fixed so results never depend on batching


class LevelDistribution:
    """Probability masses of an integer-valued LLR level.

    ``mass[i]`` is the probability of level ``lo + i``.  Masses may sum to
    slightly less than one after pruning; the deficit is the probability
    discarded from the tails.
    """

    __slots__ = ("lo", "mass")

    def __init__(self, lo: int, mass: np.ndarray):
        self.lo = int(lo)
        self.mass = np.asarray(mass, dtype=np.float64)

    @classmethod
    def bsc(cls, p: float) -> "LevelDistribution":
        """Channel-output distribution: level +1 w.p. 1-p, level -1 w.p. p."""
        return cls(-1, np.array([p, 0.0, 1.0 - p]))

    @property
    def hi(self) -> int:
        return self.lo + len(self.mass) - 1

    def error_probability(self) -> float:
        """Mass below zero plus half the mass at zero (coin-flip ties)."""
        neg = self.mass[: max(0, -self.lo)].sum()
        zero = self.mass[-self.lo] if self.lo <= 0 <= self.hi else 0.0
        return float(neg + 0.5 * zero)

    def _split(self):
        """Return (z, pos, neg) with pos[l-1], neg[l-1] the mass at +-l."""
        width = max(self.hi, -self.lo, 0)
        pos = np.zeros(width)
        neg = np.zeros(width)
        levels = np.arange(self.lo, self.hi + 1)
        above = levels >= 1
        below = levels <= -1
        pos[levels[above] - 1] = self.mass[above]
        neg[-levels[below] - 1] = self.mass[below]
        zero = self.mass[-self.lo] if self.lo <= 0 <= self.hi else 0.0
        return float(zero), pos, neg

    def check_convolve(self) -> "LevelDistribution":
        """Distribution of sign(a)sign(b)min(|a|,|b|) for iid copies a, b."""
        total = float(self.mass.sum())
        z, pos, neg = self._split()
        # Suffix sums over strictly larger magnitudes.
        sp = np.flip(np.cumsum(np.flip(pos))) - pos
        sn = np.flip(np.cumsum(np.flip(neg))) - neg
        out_pos = pos * pos + neg * neg + 2.0 * (pos * sp + neg * sn)
        out_neg = 2.0 * pos * neg + 2.0 * (pos * sn + neg * sp)
        out_zero = 2.0 * z * total - z * z
        width = len(pos)
        mass = np.concatenate([out_neg[::-1], [out_zero], out_pos])
        return LevelDistribution(-width, mass)

    def var_convolve(self) -> "LevelDistribution":
        """Distribution of a + b for iid copies a, b."""
        return LevelDistribution(2 * self.lo, np.convolve(self.mass, self.mass))

    def compact(self, prune_eps: float, max_levels: int) -> "LevelDistribution":
        """Drop negligible tail mass and saturate the support to a window.

        Mass outside a zero-centred window of ``max_levels`` levels is
        folded onto the window edges, mimicking a saturating decoder.
        """
        mass = self.mass
        lo = self.lo
        if len(mass) > max_levels:
            new_lo = max(lo, -(max_levels // 2))
            new_hi = new_lo + max_levels - 1
            if new_hi < self.hi or new_lo > lo:
                clipped = mass[max(0, new_lo - lo) : new_hi - lo + 1].copy()
                clipped[0] += mass[: max(0, new_lo - lo)].sum()
                clipped[-1] += mass[new_hi - lo + 1 :].sum()
                mass, lo = clipped, new_lo
        if prune_eps > 0.0:
            keep = np.nonzero(mass >= prune_eps)[0]
            if len(keep) == 0:
                return LevelDistribution(0, np.array([mass.sum()]))
            mass = mass[keep[0] : keep[-1] + 1]
            lo = lo + int(keep[0])
        return LevelDistribution(lo, mass)


@dataclass
class ReliabilityProfile:
    """Per-subchannel error rates plus the induced freezing order.

    ``order`` lists subchannel indices from least to most reliable
    (descending error rate, smaller index first on ties), so the first
    ``n - k`` entries are the natural frozen set for a rate-k/n code.
    """

    n: int
    design_p: float
    p_err: np.ndarray
    order: np.ndarray = field(init=False)

    def __post_init__(self):
        self.p_err = np.asarray(self.p_err, dtype=np.float64)
        if len(self.p_err) != self.n:
            raise ValueError("profile length must equal n")
        self.order = np.argsort(-self.p_err, kind="stable")

    def least_reliable(self, count: int) -> np.ndarray:
        if not 0 <= count <= self.n:
            raise ValueError("count out of range")
        return self.order[:count].copy()

    def most_reliable(self, count: int) -> np.ndarray:
        if not 0 <= count <= self.n:
            raise ValueError("count out of range")
        return self.order[::-1][:count].copy()


def _validate_channel(p: float) -> float:
    p = float(p)
    if not 0.0 < p < 0.5:
        raise ValueError(f"crossover probability must lie in (0, 0.5), got {p}")
    return p


def density_evolution_minsum(
    p: float,
    m: int,
    prune_eps: float = 1e-12,
    max_levels: int = 4096,
    mem_limit_bytes: int = 4 << 30,
) -> ReliabilityProfile:
    """Exact min-sum density evolution over BSC(p) for block length 2**m.

    Parameters
    ----------
    p : float
        Channel crossover probability, in (0, 0.5).
    m : int
        Number of polarisation stages; the profile covers n = 2**m
        subchannels.
    prune_eps : float
        Masses below this threshold are discarded after every stage.
    max_levels : int
        Saturation width of the integer level grid.
    mem_limit_bytes : int
        Upper bound on live distribution storage; exceeded runs raise
        ValueError instead of thrashing.
    """
    p = _validate_channel(p)
    m = int(m)
    if m < 0 or m > 20:
        raise ValueError("stage count must lie in [0, 20]")
    dists = [LevelDistribution.bsc(p)]
    for _ in range(m):
        live = sum(len(d.mass) for d in dists)
        if live * 2 * 2 * 8 > mem_limit_bytes:
            raise ValueError("density evolution exceeds the memory budget; "
                             "lower max_levels or raise mem_limit_bytes")
        nxt = []
        for d in dists:
            nxt.append(d.check_convolve().compact(prune_eps, max_levels))
            nxt.append(d.var_convolve().compact(prune_eps, max_levels))
        dists = nxt
    p_err = np.array([d.error_probability() for d in dists])
    return ReliabilityProfile(n=1 << m, design_p=p, p_err=np.clip(p_err, 0.0, 0.5))


def genie_sc_error_rates(
    p: float,
    m: int,
    trials: int,
    seed: int,
) -> ReliabilityProfile:
    """Monte Carlo estimate of genie-aided min-sum decision error rates.

    For the all-zero input every partial sum is zero, so the genie-aided
    recursion reduces to a tree fold with integer check and sum updates.
    Zero-LLR ties are broken by a fair coin.  Trials are simulated in
    fixed-size chunks, each keyed by ``(seed, chunk)`` so results do not
    depend on how work is batched.
    """
    p = _validate_channel(p)
    m = int(m)
    if m < 0 or m > 16:
        raise ValueError("stage count must lie in [0, 16]")
    trials = int(trials)
    if trials < 1:
        raise ValueError("trials must be positive")
    n = 1 << m
    errors = np.zeros(n, dtype=np.int64)
    done = 0
    chunk = 0
    while done < trials:
        count = min(_GENIE_CHUNK, trials - done)
        rng = np.random.Generator(np.random.Philox(key=[seed, chunk]))
        flips = rng.random((count, n)) < p
        llr = np.where(flips, -1, 1).astype(np.int32)[:, None, :]
        for _ in range(m):
            width = llr.shape[2]
            left = llr[:, :, : width // 2]
            right = llr[:, :, width // 2 :]
            chk = np.sign(left) * np.sign(right) * np.minimum(abs(left), abs(right))
            var = left + right
            llr = np.stack([chk, var], axis=2).reshape(count, -1, width // 2)
        llr = llr[:, :, 0]
        coins = rng.random((count, n)) < 0.5
        errors += ((llr < 0) | ((llr == 0) & coins)).sum(axis=0)
        done += count
        chunk += 1
    return ReliabilityProfile(n=n, design_p=p, p_err=errors / trials)
