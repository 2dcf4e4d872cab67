"""Monte Carlo code design for the nested pair.

The flow: build candidate low-rate subcodes over a grid of construction
crossovers, measure each candidate's operating crossover by simulated
decoding, keep the best, turn its margin over the measurement channel
into a distortion budget, then shrink the quantizer frozen set until
simulated quantization distortion meets that budget.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from math import ceil, log, sqrt

import numpy as np
from scipy.stats import norm

from .codes import (
    KIND_STATIC,
    NestedCodePair,
    PolarSubcode,
    build_randomized_psc,
    default_ta_tb,
    expand_info,
    stack_nested,
)
from .decoding import (
    FrozenSchedule,
    SclBatchDecoder,
    SequentialDecoder,
    channel_llrs,
    expected_metric_bias,
    quantize_batch,
)
from .gf2 import inverse_star, polar_transform
from .reliability import ReliabilityProfile, density_evolution_minsum

# Monte Carlo runs are split into fixed-size logical chunks, each drawn
# from Philox keyed by (seed, chunk index).  Results therefore do not
# depend on batching, and equal seeds give common random numbers across
# codes of equal geometry.
CHUNK_TRIALS = 4096

# Stream tag keeping quantizer-trimming source draws disjoint from the
# per-chunk keys used by the error-rate estimators.
_SOURCE_STREAM = 1 << 32


class BracketingError(ValueError):
    """The BLER target is not bracketed by the measured grid points."""

    def __init__(self, message: str, points: list["BlerPoint"]):
        super().__init__(message)
        self.points = points


class DesignError(RuntimeError):
    """No admissible nested pair exists for the requested parameters."""


def wilson_interval(errors: int, trials: int, confidence: float = 0.95):
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 0 <= errors <= trials:
        raise ValueError("errors must lie in [0, trials]")
    z = norm.ppf(0.5 + confidence / 2.0)
    phat = errors / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2.0 * trials)) / denom
    half = z * sqrt(phat * (1.0 - phat) / trials
                    + z * z / (4.0 * trials * trials)) / denom
    # At the extremes centre - half is 0 or centre + half is 1 exactly;
    # pin them so rounding noise cannot leak through.
    low = 0.0 if errors == 0 else float(max(0.0, centre - half))
    high = 1.0 if errors == trials else float(min(1.0, centre + half))
    return low, high


@dataclass
class BlerPoint:
    """Block-error estimate at one channel crossover."""

    crossover: float
    trials: int
    errors: int
    bler: float
    ci_low: float
    ci_high: float
    sum_avg: float
    comp_avg: float


@dataclass
class DistortionPoint:
    """Mean quantization distortion with a normal-approximation interval."""

    trials: int
    mean: float
    ci_low: float
    ci_high: float
    sum_avg: float
    comp_avg: float


def _chunk_sizes(trials: int):
    sizes = []
    left = int(trials)
    while left > 0:
        sizes.append(min(CHUNK_TRIALS, left))
        left -= sizes[-1]
    return sizes


def measure_bler(
    code: PolarSubcode,
    crossover: float,
    trials: int,
    seed: int,
    decoder: str = "scl",
    list_size: int = 8,
    queue_size: int = 1024,
    bias: np.ndarray | None = None,
    max_errors: int | None = None,
) -> BlerPoint:
    """Estimate the block-error rate of ``code`` over BSC(crossover).

    Uniform information words are encoded; a block error is any mismatch
    between the transmitted and decoded codeword.  When ``max_errors``
    is given the run stops at the first chunk boundary where the error
    count exceeds it.  Identical seeds reuse the same information words
    and noise across codes of equal (n, k), pairing their estimates.
    """
    if not 0.0 < crossover < 0.5:
        raise ValueError("crossover must lie in (0, 0.5)")
    if trials < 1:
        raise ValueError("trials must be positive")
    if decoder not in ("scl", "seq"):
        raise ValueError("decoder must be 'scl' or 'seq'")
    schedule = FrozenSchedule.from_code(code)
    if decoder == "scl":
        engine = SclBatchDecoder(schedule, list_size)
    else:
        if bias is None:
            if code.design_p is None:
                raise ValueError(
                    "sequential decoding needs a bias or a code with design_p")
            profile = density_evolution_minsum(code.design_p, code.m)
            bias = expected_metric_bias(profile.p_err, crossover)
        engine = SequentialDecoder(schedule, list_size, queue_size, bias)
    n = code.n
    errors = 0
    done = 0
    sums = 0.0
    comps = 0.0
    for chunk, size in enumerate(_chunk_sizes(trials)):
        rng = np.random.Generator(np.random.Philox(key=[seed, chunk]))
        info = rng.integers(0, 2, size=(size, code.k), dtype=np.uint8)
        noise = (rng.random((size, n)) < crossover).astype(np.uint8)
        x = polar_transform(expand_info(code, info))
        llr = channel_llrs(x ^ noise, crossover)
        if decoder == "scl":
            res = engine.decode(llr)
            errors += int((res.best_x() != x).any(axis=1).sum())
            sums += res.sum_count
            comps += res.comp_count
        else:
            for i in range(size):
                out = engine.decode(llr[i])
                errors += int((out.x_hat != x[i]).any())
                sums += out.sum_count
                comps += out.comp_count
        done += size
        if max_errors is not None and errors > max_errors:
            break
    low, high = wilson_interval(errors, done)
    return BlerPoint(crossover=float(crossover), trials=done, errors=errors,
                     bler=errors / done, ci_low=low, ci_high=high,
                     sum_avg=sums / done, comp_avg=comps / done)


def _log_interpolate(target: float, lo: BlerPoint, hi: BlerPoint) -> float:
    """Crossover where log-linear BLER(p) meets ``target``.

    Zero error counts are floored at half an error to keep the log
    finite.
    """
    b_lo = max(lo.bler, 0.5 / lo.trials)
    b_hi = max(hi.bler, 0.5 / hi.trials)
    if b_hi <= b_lo:
        return lo.crossover
    frac = (log(target) - log(b_lo)) / (log(b_hi) - log(b_lo))
    frac = min(max(frac, 0.0), 1.0)
    return lo.crossover + frac * (hi.crossover - lo.crossover)


def find_pc(
    code: PolarSubcode,
    p_grid,
    target_pb: float,
    trials: int,
    seed: int,
    decoder: str = "scl",
    list_size: int = 8,
    queue_size: int = 1024,
) -> tuple[float, list[BlerPoint]]:
    """Largest crossover where the code still meets a block-error target.

    The grid is evaluated from the top down; points whose error count
    already rules out meeting the target stop early, and the scan ends
    at the first grid point at or below the target.  The returned
    crossover refines that bracket by interpolating linearly in
    (crossover, log BLER).  Raises :class:`BracketingError` when every
    measured point sits on one side of the target.
    """
    grid = [float(p) for p in p_grid]
    if len(grid) < 2:
        raise ValueError("the crossover grid needs at least two points")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("the crossover grid must be strictly ascending")
    if not all(0.0 < p <= 0.5 for p in grid):
        raise ValueError("grid points must lie in (0, 0.5]")
    if grid[-1] == 0.5:
        grid[-1] = np.nextafter(0.5, 0.0)
    if target_pb * trials < 20.0:
        raise ValueError("need target_pb * trials >= 20 for a usable estimate")
    stop_at = ceil(target_pb * trials)
    points: list[BlerPoint] = []
    hit = None
    for p in reversed(grid):
        pt = measure_bler(code, p, trials, seed, decoder=decoder,
                          list_size=list_size, queue_size=queue_size,
                          max_errors=stop_at)
        points.append(pt)
        if pt.trials == trials and pt.bler <= target_pb:
            hit = pt
            break
    points.sort(key=lambda q: q.crossover)
    if hit is None:
        best = min(pt.bler for pt in points)
        raise BracketingError(
            f"no grid point reaches BLER <= {target_pb:g}: the best measured "
            f"rate is {best:.3g} at crossover {points[0].crossover:g}; the "
            f"target crossover, if any, lies below the grid", points)
    if hit.crossover == grid[-1]:
        raise BracketingError(
            f"the top grid point {hit.crossover:g} already has BLER "
            f"{hit.bler:.3g} <= {target_pb:g}; the target crossover lies "
            f"above the grid", points)
    above = points[points.index(hit) + 1]
    return _log_interpolate(target_pb, hit, above), points


@dataclass
class DesignParams:
    """Inputs of the nested-pair design procedure."""

    p_a: float
    n: int
    key_len: int
    target_pb: float
    list_size: int = 8
    queue_size: int = 1024
    p_grid: tuple[float, ...] | None = None
    pc_grid: tuple[float, ...] | None = None
    trials: int | None = None
    quant_trials: int = 2000
    seed: int = 0
    t_a: int | None = None
    t_b: int | None = None
    decoder: str = "scl"

    def __post_init__(self):
        if not 0.0 < self.p_a < 0.5:
            raise ValueError("p_a must lie in (0, 0.5)")
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two, at least 2")
        if not 0 < self.key_len < self.n:
            raise ValueError("key_len must lie in [1, n)")
        if not 0.0 < self.target_pb < 1.0:
            raise ValueError("target_pb must lie in (0, 1)")
        if self.p_grid is None:
            self.p_grid = default_design_grid(self.p_a, 8)
        else:
            self.p_grid = tuple(float(p) for p in self.p_grid)
        if self.pc_grid is None:
            self.pc_grid = default_design_grid(self.p_a, 12)
        else:
            self.pc_grid = tuple(float(p) for p in self.pc_grid)
        for name, grid in (("p_grid", self.p_grid), ("pc_grid", self.pc_grid)):
            if any(not self.p_a < p <= 0.5 for p in grid):
                raise ValueError(f"{name} must lie inside (p_a, 0.5]")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError(f"{name} must be strictly ascending")
        if self.trials is None:
            self.trials = ceil(20.0 / self.target_pb)
        if self.target_pb * self.trials < 20.0:
            raise ValueError("need target_pb * trials >= 20")
        if self.quant_trials < 1:
            raise ValueError("quant_trials must be positive")
        if self.decoder not in ("scl", "seq"):
            raise ValueError("decoder must be 'scl' or 'seq'")


def default_design_grid(p_a: float, steps: int) -> tuple[float, ...]:
    """Evenly spaced candidate crossovers in (p_a + 0.01, p_a + 0.25]."""
    lo = p_a + 0.01
    hi = min(0.5, p_a + 0.25)
    return tuple(lo + (hi - lo) * (i + 1) / steps for i in range(steps))


@dataclass
class CandidateOutcome:
    """One construction crossover and its measured operating point."""

    design_p: float
    p_c: float | None
    note: str = ""


@dataclass
class DesignReport:
    """Chosen operating point and the trimming trace behind it."""

    n: int
    key_len: int
    p_a: float
    target_pb: float
    list_size: int
    design_p: float
    p_c: float
    expected_q: float
    p1: float
    m1: int
    m2: int
    qbar: float
    trace: tuple[tuple[int, float], ...]
    candidates: tuple[CandidateOutcome, ...]


def select_quantizer_set(
    code: PolarSubcode,
    profile: ReliabilityProfile,
    expected_q: float,
    trials: int,
    seed: int,
    list_size: int = 8,
) -> tuple[np.ndarray, list[tuple[int, float]]]:
    """Shrink the quantizer frozen set until distortion meets a budget.

    Starting from all static pivots of ``code``, the most reliable
    remaining pivot (per ``profile``) is removed until the mean
    distortion of a fixed batch of uniform sources drops to
    ``expected_q``.  Each source keeps the best codeword seen so far;
    removals only enlarge the quantizer codebook, so the returned trace
    of (frozen count, mean distortion) is non-increasing.
    """
    n = code.n
    static = [row.pivot for row in code.matrix.rows if row.kind == KIND_STATIC]
    pos = np.empty(n, dtype=np.int64)
    pos[profile.order] = np.arange(n)  # 0 = least reliable
    removal = sorted(static, key=lambda i: -pos[i])
    rng = np.random.Generator(np.random.Philox(key=[seed, _SOURCE_STREAM]))
    x = rng.integers(0, 2, size=(int(trials), n), dtype=np.uint8)
    f1 = set(static)
    best = np.full(len(x), n, dtype=np.int64)
    trace: list[tuple[int, float]] = []
    while True:
        pair = stack_nested(sorted(f1), code)
        _, _, dist, _, _ = quantize_batch(x, pair, profile.design_p, list_size)
        best = np.minimum(best, dist)
        qbar = float(best.mean()) / n
        trace.append((len(f1), qbar))
        if qbar <= expected_q:
            return np.array(sorted(f1), dtype=np.int64), trace
        if not removal:
            raise DesignError(
                f"distortion {qbar:.4f} stays above the budget "
                f"{expected_q:.4f} with an empty frozen set")
        f1.remove(removal.pop(0))


def design_nested(params: DesignParams) -> tuple[NestedCodePair, DesignReport]:
    """Design a nested pair meeting a block-error target over BSC(p_a).

    Candidate low-rate subcodes are built for every construction
    crossover in ``params.p_grid`` and their operating crossovers are
    measured with :func:`find_pc`; the candidate tolerating the most
    noise wins.  Its margin over the measurement channel fixes the
    distortion budget, and :func:`select_quantizer_set` trims the
    quantizer to meet it.
    """
    n, k = params.n, params.key_len
    m = n.bit_length() - 1
    if params.t_a is None or params.t_b is None:
        t_a, t_b = default_ta_tb(n, k)
        t_a = params.t_a if params.t_a is not None else t_a
        t_b = params.t_b if params.t_b is not None else t_b
    else:
        t_a, t_b = params.t_a, params.t_b
    outcomes: list[CandidateOutcome] = []
    best_code = None
    best_pc = -1.0
    for p in params.p_grid:
        profile = density_evolution_minsum(p, m)
        cand = build_randomized_psc(n, k, profile, t_a, t_b, params.seed)
        try:
            p_c, _ = find_pc(cand, params.pc_grid, params.target_pb,
                             params.trials, params.seed,
                             decoder=params.decoder,
                             list_size=params.list_size,
                             queue_size=params.queue_size)
        except BracketingError as exc:
            if "above the grid" in str(exc):
                raise DesignError(
                    f"candidate at construction crossover {p:g} exceeds the "
                    f"measurement grid; extend pc_grid upward ({exc})") from exc
            outcomes.append(CandidateOutcome(p, None, str(exc)))
            continue
        outcomes.append(CandidateOutcome(p, p_c))
        if p_c > best_pc:
            best_pc = p_c
            best_code = cand
    if best_code is None:
        notes = "; ".join(
            f"p={c.design_p:g}: {c.note}" for c in outcomes)
        raise DesignError(
            f"no candidate meets BLER {params.target_pb:g} anywhere on the "
            f"measurement grid ({notes})")
    expected_q = inverse_star(best_pc, params.p_a)
    p1 = inverse_star(best_code.design_p, params.p_a)
    profile1 = density_evolution_minsum(p1, m)
    f1, trace = select_quantizer_set(best_code, profile1, expected_q,
                                     params.quant_trials, params.seed,
                                     params.list_size)
    pair = dataclasses.replace(stack_nested(f1, best_code), p_a=params.p_a)
    report = DesignReport(
        n=n, key_len=k, p_a=params.p_a, target_pb=params.target_pb,
        list_size=params.list_size, design_p=best_code.design_p,
        p_c=best_pc, expected_q=expected_q, p1=p1,
        m1=pair.m1, m2=pair.m2, qbar=trace[-1][1], trace=tuple(trace),
        candidates=tuple(outcomes))
    return pair, report


def measure_distortion(
    pair: NestedCodePair,
    trials: int,
    seed: int,
    list_size: int = 8,
    design_p1: float | None = None,
) -> DistortionPoint:
    """Mean quantization distortion of fresh uniform sources."""
    if trials < 1:
        raise ValueError("trials must be positive")
    n = pair.n
    if design_p1 is None:
        if pair.code.design_p is not None and pair.p_a is not None:
            design_p1 = inverse_star(pair.code.design_p, pair.p_a)
        else:
            design_p1 = 0.25
    total = 0.0
    total_sq = 0.0
    sums = 0.0
    comps = 0.0
    done = 0
    for chunk, size in enumerate(_chunk_sizes(trials)):
        rng = np.random.Generator(np.random.Philox(key=[seed, chunk]))
        x = rng.integers(0, 2, size=(size, n), dtype=np.uint8)
        _, _, dist, s, c = quantize_batch(x, pair, design_p1, list_size)
        frac = dist / n
        total += float(frac.sum())
        total_sq += float((frac * frac).sum())
        sums += s
        comps += c
        done += size
    mean = total / done
    var = max(total_sq / done - mean * mean, 0.0)
    half = float(norm.ppf(0.975)) * sqrt(var / done)
    return DistortionPoint(trials=done, mean=mean,
                           ci_low=max(0.0, mean - half),
                           ci_high=min(0.5, mean + half),
                           sum_avg=sums / done, comp_avg=comps / done)
