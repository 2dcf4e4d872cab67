"""Min-sum decoders over the polar transform: SC, list, and sequential.

All decoders consume channel LLRs and a :class:`FrozenSchedule`, which
pins each frozen position to an offset plus a GF(2) combination of
earlier positions.  Decisions follow the path-metric convention: a path
absorbs ``|llr|`` whenever it decides against the hard decision, so the
metric of a complete path equals the weighted Hamming mismatch between
the channel hard decisions and the path's codeword.

Per-phase processing order is natural: the most significant bit of a
position index selects the outermost operation (0 = check side, 1 =
variable side), matching the reliability profiles.

Operation counters
------------------
``sum_count``
    variable-node additions (one per element of every g update on an
    active path) plus performed metric-penalty additions.
``comp_count``
    check-node minimum comparisons (one per element of every f update on
    an active path), one hard-decision sign check per active path per
    position, a flat ``2L * ceil(log2(2L))`` sorting charge per
    unfrozen position for list decoding, and ``ceil(log2(size + 1))``
    per priority-queue operation for sequential decoding.

The counters model work per decoded block; batch helpers report totals
that callers divide by the number of blocks.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from math import ceil, inf, log, log2

import numpy as np

from .codes import NestedCodePair, PolarSubcode
from .gf2 import as_bit_array, pack_rows, packed_bit, polar_transform


def channel_llrs(y, p: float):
    """Observation LLRs for a memoryless binary symmetric channel."""
    p = float(p)
    if not 0.0 < p < 0.5:
        raise ValueError("crossover probability must lie in (0, 0.5)")
    y = as_bit_array(y)
    return (1.0 - 2.0 * y.astype(np.float64)) * log((1.0 - p) / p)


@dataclass
class FrozenSchedule:
    """Frozen-position constraints in decoding order.

    ``coeffs`` holds one row per frozen position with the pivot column
    cleared, so row r forces ``u[pivot[r]] = offset[r] + <coeffs[r], u>``
    over GF(2) with the inner product reaching only earlier positions.
    """

    n: int
    pivots: np.ndarray
    coeffs: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        self.pivots = np.asarray(self.pivots, dtype=np.int64)
        self.coeffs = as_bit_array(self.coeffs)
        self.offsets = as_bit_array(self.offsets)
        if self.coeffs.shape != (len(self.pivots), self.n):
            raise ValueError("coefficient matrix shape must be (rows, n)")
        if len(self.offsets) != len(self.pivots):
            raise ValueError("one offset per frozen row is required")
        order = np.argsort(self.pivots)
        self.pivots = self.pivots[order]
        self.coeffs = self.coeffs[order]
        self.offsets = self.offsets[order]
        if len(np.unique(self.pivots)) != len(self.pivots):
            raise ValueError("frozen pivots must be distinct")
        for r, piv in enumerate(self.pivots):
            if self.coeffs[r, piv:].any():
                raise ValueError("coefficients must precede their pivot")

    @classmethod
    def from_code(cls, code: PolarSubcode, offsets=None) -> "FrozenSchedule":
        """Build the schedule for a code, with optional per-row offsets.

        ``offsets`` aligns with ``code.matrix.rows``; zeros decode the
        code itself, helper-data syndromes decode a coset.
        """
        rows = code.matrix.rows
        if offsets is None:
            offsets = np.zeros(len(rows), dtype=np.uint8)
        offsets = as_bit_array(offsets)
        if len(offsets) != len(rows):
            raise ValueError("one offset per constraint row is required")
        coeffs = np.zeros((len(rows), code.n), dtype=np.uint8)
        pivots = np.empty(len(rows), dtype=np.int64)
        for r, row in enumerate(rows):
            coeffs[r] = row.coeffs
            coeffs[r, row.pivot] = 0
            pivots[r] = row.pivot
        return cls(code.n, pivots, coeffs, offsets.copy())

    def verify(self, u) -> np.ndarray:
        """True per word when every frozen constraint holds with its offset."""
        u = as_bit_array(u)
        flat = u.reshape(-1, self.n)
        ok = np.ones(len(flat), dtype=bool)
        for r, piv in enumerate(self.pivots):
            par = (flat & self.coeffs[r]).sum(axis=1) & 1
            ok &= (par.astype(np.uint8) ^ self.offsets[r]) == flat[:, piv]
        return ok.reshape(u.shape[:-1]) if u.ndim > 1 else bool(ok[0])


@dataclass
class DecodeOutcome:
    """Result of decoding one block."""

    u_hat: np.ndarray
    x_hat: np.ndarray
    metric: float
    sum_count: float
    comp_count: float
    list_rank: int = 0
    degraded: bool = False


@dataclass
class BatchDecodeResult:
    """Full list output for a batch of blocks."""

    u_hat: np.ndarray    # (batch, L, n)
    x_hat: np.ndarray    # (batch, L, n)
    metrics: np.ndarray  # (batch, L)
    sum_count: float     # totals over the batch
    comp_count: float

    def best_index(self) -> np.ndarray:
        return np.argmin(self.metrics, axis=1)

    def best_u(self) -> np.ndarray:
        idx = self.best_index()
        return self.u_hat[np.arange(len(idx)), idx]

    def best_x(self) -> np.ndarray:
        idx = self.best_index()
        return self.x_hat[np.arange(len(idx)), idx]


def _trailing_zeros(value: int) -> int:
    return (value & -value).bit_length() - 1


class SclBatchDecoder:
    """Vectorised successive-cancellation list decoder.

    Decodes whole batches against one schedule.  Candidate forks are
    ranked by metric with ties resolved in favour of the lower parent
    path index and the zero bit, and surviving paths occupy list slots
    in that sorted order.
    """

    def __init__(self, schedule: FrozenSchedule, list_size: int):
        if list_size < 1:
            raise ValueError("list size must be at least 1")
        self.schedule = schedule
        self.L = int(list_size)
        n = schedule.n
        if n < 2 or n & (n - 1):
            raise ValueError("block length must be a power of two, at least 2")
        self.n = n
        self.m = n.bit_length() - 1
        self.phase_row = np.full(n, -1, dtype=np.int64)
        for r, piv in enumerate(schedule.pivots):
            self.phase_row[piv] = r
        n_rows = len(schedule.pivots)
        self.col_masks = pack_rows(schedule.coeffs.T) if n_rows else \
            np.zeros((n, 1), dtype=np.uint64)
        self.u_words = (n + 63) // 64
        # Deterministic per-phase charges: active path counts, f/g widths.
        actives = np.empty(n, dtype=np.int64)
        a = 1
        for phase in range(n):
            actives[phase] = a
            if self.phase_row[phase] < 0:
                a = min(2 * a, self.L)
        self.actives = actives
        f_width = np.empty(n, dtype=np.int64)
        g_width = np.empty(n, dtype=np.int64)
        for phase in range(n):
            z = self.m if phase == 0 else _trailing_zeros(phase)
            g_width[phase] = 0 if phase == 0 else 1 << z
            f_width[phase] = (1 << z) - 1 if phase else n - 1
        n_info = int((self.phase_row < 0).sum())
        sort_charge = 2 * self.L * ceil(log2(2 * self.L))
        self.base_sum = float((g_width * actives).sum())
        self.base_comp = float((f_width * actives).sum() + actives.sum()
                               + n_info * sort_charge)

    @staticmethod
    def _f(a, b):
        return np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))

    def decode(self, llrs) -> BatchDecodeResult:
        n, m, L = self.n, self.m, self.L
        llrs = np.asarray(llrs, dtype=np.float64)
        if llrs.ndim == 1:
            llrs = llrs[None, :]
        if llrs.shape[1] != n:
            raise ValueError(f"expected LLR rows of length {n}")
        batch = llrs.shape[0]
        lev = [llrs.astype(np.float32)[:, None, :]] + [None] * m
        bbuf = [None] * (m + 1)
        metrics = np.full((batch, L), np.float32(np.inf))
        metrics[:, 0] = 0.0
        u_words = np.zeros((batch, L, self.u_words), dtype=np.uint64)
        acc = np.zeros((batch, L, self.col_masks.shape[1]), dtype=np.uint64)
        lanes = np.arange(L)
        x_hat = None
        extra_sums = 0
        offsets = self.schedule.offsets

        def store_walk(phase, bits):
            nonlocal x_hat
            cur = bits[:, :, None]
            d, ph = m, phase
            while d > 0 and (ph & 1):
                cur = np.concatenate([bbuf[d] ^ cur, cur], axis=2)
                ph >>= 1
                d -= 1
            if d > 0:
                bbuf[d] = cur
            else:
                x_hat = cur

        for phase in range(n):
            if phase == 0:
                src = lev[0]
                for d in range(1, m + 1):
                    half = n >> d
                    lev[d] = self._f(src[:, :, :half], src[:, :, half:])
                    src = lev[d]
            else:
                z = _trailing_zeros(phase)
                d0 = m - z
                prev = lev[d0 - 1]
                half = n >> d0
                sign = 1.0 - 2.0 * bbuf[d0].astype(np.float32)
                lev[d0] = prev[:, :, half:] + sign * prev[:, :, :half]
                src = lev[d0]
                for d in range(d0 + 1, m + 1):
                    half = n >> d
                    lev[d] = self._f(src[:, :, :half], src[:, :, half:])
                    src = lev[d]
            lam = lev[m][:, :, 0]
            r = int(self.phase_row[phase])
            a = int(self.actives[phase])
            if r >= 0:
                bits = packed_bit(acc, r) ^ offsets[r]
                hard = (lam < 0).astype(np.uint8)
                mism = (hard != bits) & (lam != 0)
                pen = np.where(mism, np.abs(lam), np.float32(0.0))
                metrics = metrics + pen
                extra_sums += int(mism[:, :a].sum())
            else:
                pen0 = np.maximum(-lam, np.float32(0.0))
                pen1 = np.maximum(lam, np.float32(0.0))
                cand = np.stack([metrics + pen0, metrics + pen1], axis=2)
                cand = cand.reshape(batch, 2 * L)
                order = np.argsort(cand, axis=1, kind="stable")[:, :L]
                metrics = np.take_along_axis(cand, order, axis=1)
                src_path = order >> 1
                bits = (order & 1).astype(np.uint8)
                extra_sums += int((lam[:, :a] != 0).sum())
                if L > 1 and not (src_path == lanes).all():
                    gidx = src_path[:, :, None]
                    for d in range(1, m):
                        if lev[d].shape[1] > 1 and not (phase >> (m - d - 1)) & 1:
                            lev[d] = np.take_along_axis(lev[d], gidx, axis=1)
                    for d in range(1, m + 1):
                        if (phase >> (m - d)) & 1:
                            bbuf[d] = np.take_along_axis(bbuf[d], gidx, axis=1)
                    u_words = np.take_along_axis(u_words, gidx, axis=1)
                    acc = np.take_along_axis(acc, gidx, axis=1)
            word = phase >> 6
            u_words[:, :, word] |= bits.astype(np.uint64) << np.uint64(phase & 63)
            store_walk(phase, bits)
            mask = self.col_masks[phase]
            if mask.any():
                acc = acc ^ mask[None, None, :] * bits[:, :, None].astype(np.uint64)
        u_hat = np.unpackbits(
            u_words.view(np.uint8).reshape(batch, L, -1), axis=2,
            count=n, bitorder="little")
        sum_count = self.base_sum * batch + extra_sums
        comp_count = self.base_comp * batch
        return BatchDecodeResult(u_hat=u_hat, x_hat=x_hat.copy(),
                                 metrics=metrics.astype(np.float64),
                                 sum_count=sum_count, comp_count=comp_count)


def scl_decode(schedule: FrozenSchedule, llrs, list_size: int = 8) -> DecodeOutcome:
    """List-decode one block and return the best path by metric."""
    result = SclBatchDecoder(schedule, list_size).decode(np.asarray(llrs)[None, :])
    best = int(result.best_index()[0])
    return DecodeOutcome(u_hat=result.u_hat[0, best], x_hat=result.x_hat[0, best],
                         metric=float(result.metrics[0, best]),
                         sum_count=result.sum_count, comp_count=result.comp_count,
                         list_rank=best)


def sc_decode(schedule: FrozenSchedule, llrs) -> DecodeOutcome:
    """Plain successive cancellation; an independent single-path routine."""
    u, x, metric, sums, comps = _sc_batch(schedule, np.asarray(llrs)[None, :])
    return DecodeOutcome(u_hat=u[0], x_hat=x[0], metric=float(metric[0]),
                         sum_count=sums, comp_count=comps)


def _sc_batch(schedule: FrozenSchedule, llrs):
    """Batched single-path successive cancellation (no list machinery)."""
    n = schedule.n
    m = n.bit_length() - 1
    llrs = np.asarray(llrs, dtype=np.float64)
    batch = llrs.shape[0]
    phase_row = np.full(n, -1, dtype=np.int64)
    for r, piv in enumerate(schedule.pivots):
        phase_row[piv] = r
    n_rows = len(schedule.pivots)
    col_masks = pack_rows(schedule.coeffs.T) if n_rows else \
        np.zeros((n, 1), dtype=np.uint64)
    lev = [llrs.astype(np.float32)]
    lev += [np.empty((batch, n >> d), dtype=np.float32) for d in range(1, m + 1)]
    bbuf = [None] + [np.empty((batch, n >> d), dtype=np.uint8) for d in range(1, m + 1)]
    metric = np.zeros(batch, dtype=np.float64)
    acc = np.zeros((batch, col_masks.shape[1]), dtype=np.uint64)
    u_hat = np.empty((batch, n), dtype=np.uint8)
    x_hat = None
    sums = 0.0
    comps = 0.0
    extra = 0

    def walk(phase, bits):
        nonlocal x_hat
        cur = bits[:, None]
        d, ph = m, phase
        while d > 0 and (ph & 1):
            cur = np.concatenate([bbuf[d] ^ cur, cur], axis=1)
            ph >>= 1
            d -= 1
        if d > 0:
            bbuf[d] = cur
        else:
            x_hat = cur

    for phase in range(n):
        if phase == 0:
            src = lev[0]
            for d in range(1, m + 1):
                half = n >> d
                a, b = src[:, :half], src[:, half:]
                lev[d] = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
                src = lev[d]
                comps += half
        else:
            z = _trailing_zeros(phase)
            d0 = m - z
            prev = lev[d0 - 1]
            half = n >> d0
            lev[d0] = prev[:, half:] + (1.0 - 2.0 * bbuf[d0].astype(np.float32)) \
                * prev[:, :half]
            sums += half
            src = lev[d0]
            for d in range(d0 + 1, m + 1):
                half = n >> d
                a, b = src[:, :half], src[:, half:]
                lev[d] = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
                src = lev[d]
                comps += half
        lam = lev[m][:, 0]
        comps += 1  # hard-decision sign check
        r = int(phase_row[phase])
        if r >= 0:
            bits = packed_bit(acc, r) ^ schedule.offsets[r]
            mism = (lam < 0).astype(np.uint8) != bits
            metric += np.where(mism, np.abs(lam), 0.0)
            extra += int(mism.sum())
        else:
            bits = (lam < 0).astype(np.uint8)
            comps += 2  # rank the two extensions
            extra += int((lam != 0).sum())
        u_hat[:, phase] = bits
        walk(phase, bits)
        mask = col_masks[phase]
        if mask.any():
            acc = acc ^ mask[None, :] * bits[:, None].astype(np.uint64)
    return u_hat, x_hat.copy(), metric, sums * batch + extra, comps * batch


def expected_metric_bias(p_err: np.ndarray, p_eff: float) -> np.ndarray:
    """Cumulative expected path-metric growth along the true path.

    ``bias[t]`` approximates the metric a correct path accumulates over
    its first ``t`` decisions, using per-position error rates from a
    reliability profile and the LLR magnitude of the working channel.
    """
    if not 0.0 < p_eff < 0.5:
        raise ValueError("crossover probability must lie in (0, 0.5)")
    p_err = np.asarray(p_err, dtype=np.float64)
    level = log((1.0 - p_eff) / p_eff)
    return np.concatenate([[0.0], np.cumsum(p_err) * level])


class _SeqPath:
    __slots__ = ("lev", "bbuf", "acc", "u_hat", "metric", "phase", "x_hat")

    def __init__(self, lev, bbuf, acc, u_hat, metric, phase):
        self.lev = lev
        self.bbuf = bbuf
        self.acc = acc
        self.u_hat = u_hat
        self.metric = metric
        self.phase = phase
        self.x_hat = None

    def fork(self) -> "_SeqPath":
        # Level arrays are rebound, never mutated, so children may share them.
        return _SeqPath(list(self.lev), list(self.bbuf), self.acc,
                        self.u_hat.copy(), self.metric, self.phase)


class SequentialDecoder:
    """Best-first stack decoder with a bounded priority queue.

    Paths are ranked by metric minus an expected-growth bias, so deep
    paths compete fairly with shallow ones.  At most ``list_size`` paths
    are extended through any unfrozen position and at most
    ``queue_size`` paths are queued; when the queue overflows the worst
    entry is dropped.  If the queue empties before a full-length path is
    popped, the deepest partial path is extended greedily and the
    outcome is flagged as degraded.
    """

    def __init__(self, schedule: FrozenSchedule, list_size: int = 8,
                 queue_size: int = 1024, bias: np.ndarray | None = None):
        if list_size < 1:
            raise ValueError("list size must be positive")
        if queue_size < 1:
            raise ValueError("queue size must be positive")
        self.schedule = schedule
        self.L = int(list_size)
        self.D = int(queue_size)
        n = schedule.n
        if n < 2 or n & (n - 1):
            raise ValueError("block length must be a power of two, at least 2")
        self.n = n
        self.m = n.bit_length() - 1
        if bias is None:
            bias = np.zeros(n + 1)
        bias = np.asarray(bias, dtype=np.float64)
        if len(bias) != n + 1:
            raise ValueError("bias must have n + 1 cumulative entries")
        self.bias = bias
        self.phase_row = np.full(n, -1, dtype=np.int64)
        for r, piv in enumerate(schedule.pivots):
            self.phase_row[piv] = r
        n_rows = len(schedule.pivots)
        self.col_masks = pack_rows(schedule.coeffs.T) if n_rows else \
            np.zeros((n, 1), dtype=np.uint64)

    def decode(self, llrs) -> DecodeOutcome:
        n, m = self.n, self.m
        llrs = np.asarray(llrs, dtype=np.float64)
        if llrs.shape != (n,):
            raise ValueError(f"expected a single LLR vector of length {n}")
        self.sums = 0.0
        self.comps = 0.0
        root = _SeqPath(lev=[llrs.astype(np.float32)] + [None] * m,
                        bbuf=[None] * (m + 1), acc=np.zeros(self.col_masks.shape[1],
                        dtype=np.uint64), u_hat=np.zeros(n, dtype=np.uint8),
                        metric=0.0, phase=0)
        heap: list[tuple[float, int, _SeqPath]] = []
        shadow: list[tuple[float, int]] = []
        alive: dict[int, float] = {}
        counter = 0
        visits = np.zeros(n, dtype=np.int64)
        deepest = root

        def heap_charge(size):
            self.comps += ceil(log2(size + 1))

        def push(path):
            nonlocal counter
            score = path.metric - self.bias[path.phase]
            if len(alive) >= self.D:
                # Drop the worst queued path (or the newcomer if it is worse).
                while shadow:
                    neg, wid = shadow[0]
                    if wid in alive and alive[wid] == -neg:
                        break
                    heapq.heappop(shadow)
                worst_score = -shadow[0][0]
                if score >= worst_score:
                    return
                wid = shadow[0][1]
                heapq.heappop(shadow)
                heap_charge(len(alive))
                del alive[wid]
            heapq.heappush(heap, (score, counter, path))
            heapq.heappush(shadow, (-score, counter))
            alive[counter] = score
            heap_charge(len(alive))
            counter += 1

        push(root)
        while heap:
            score, ident, path = heapq.heappop(heap)
            heap_charge(len(alive))
            if ident not in alive or alive[ident] != score:
                continue
            del alive[ident]
            if path.phase > deepest.phase or (path.phase == deepest.phase
                                              and path.metric < deepest.metric):
                deepest = path
            if path.phase == n:
                return self._finish(path, degraded=False)
            stopped = self._run(path, visits)
            if stopped is None:
                continue
            if stopped.phase == n:
                push(stopped)
                continue
            lam = self._decision_llr(stopped)
            zero, one = stopped, stopped.fork()
            self._advance(zero, 0, max(-lam, 0.0))
            self._advance(one, 1, max(lam, 0.0))
            push(zero)
            push(one)
        return self._finish(self._greedy(deepest, visits=None), degraded=True)

    def _run(self, path, visits):
        """Extend through frozen positions; stop at an unfrozen one or the end.

        Returns None when the next unfrozen position has exhausted its
        visit budget.
        """
        n = self.n
        while path.phase < n:
            r = int(self.phase_row[path.phase])
            if r < 0:
                if visits is not None:
                    if visits[path.phase] >= self.L:
                        return None
                    visits[path.phase] += 1
                return path
            lam = self._decision_llr(path)
            bit = int(packed_bit(path.acc[None, :], r)[0]) ^ int(self.schedule.offsets[r])
            pen = abs(lam) if (lam < 0) != bool(bit) else 0.0
            self._advance(path, bit, pen)
        return path

    def _decision_llr(self, path) -> float:
        n, m = self.n, self.m
        phase = path.phase
        lev = path.lev
        if phase == 0:
            lo = 1
        else:
            z = _trailing_zeros(phase)
            d0 = m - z
            prev = lev[d0 - 1]
            half = n >> d0
            sign = 1.0 - 2.0 * path.bbuf[d0].astype(np.float32)
            lev[d0] = prev[half:] + sign * prev[:half]
            self.sums += half
            lo = d0 + 1
        for d in range(lo, m + 1):
            prev = lev[d - 1]
            half = n >> d
            a, b = prev[:half], prev[half:]
            lev[d] = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
            self.comps += half
        self.comps += 1  # hard-decision sign check
        return float(lev[m][0])

    def _advance(self, path, bit, penalty):
        phase = path.phase
        path.metric += penalty
        if penalty > 0.0:
            self.sums += 1
        path.u_hat[phase] = bit
        cur = np.array([bit], dtype=np.uint8)
        d, ph = self.m, phase
        while d > 0 and (ph & 1):
            cur = np.concatenate([path.bbuf[d] ^ cur, cur])
            ph >>= 1
            d -= 1
        if d > 0:
            path.bbuf[d] = cur
        else:
            path.x_hat = cur
        mask = self.col_masks[phase]
        if bit and mask.any():
            path.acc = path.acc ^ mask
        path.phase = phase + 1

    def _greedy(self, path, visits):
        """Single-path completion used when the queue runs dry."""
        path = path.fork()
        while path.phase < self.n:
            path = self._run(path, visits)
            if path.phase < self.n:
                lam = self._decision_llr(path)
                bit = 1 if lam < 0 else 0
                self._advance(path, bit, 0.0)
        return path

    def _finish(self, path, degraded):
        return DecodeOutcome(u_hat=path.u_hat, x_hat=path.x_hat.copy(),
                             metric=path.metric, sum_count=self.sums,
                             comp_count=self.comps, degraded=degraded)


def sequential_decode(schedule: FrozenSchedule, llrs, list_size: int = 8,
                      queue_size: int = 1024,
                      bias: np.ndarray | None = None) -> DecodeOutcome:
    """Decode one block with the bounded best-first decoder."""
    return SequentialDecoder(schedule, list_size, queue_size, bias).decode(llrs)


@dataclass
class QuantizeResult:
    """Nearest-codeword quantisation of one source word."""

    x_q: np.ndarray
    u_q: np.ndarray
    distortion: int
    sum_count: float
    comp_count: float


def quantizer_schedule(pair: NestedCodePair) -> FrozenSchedule:
    return FrozenSchedule.from_code(pair.quantizer)


def quantize_with_schedule(x, schedule: FrozenSchedule, design_p1: float,
                           list_size: int = 8):
    """Quantise source words onto a frozen schedule's code by list search.

    Each word is list-decoded against its own observation LLRs at the
    quantiser design crossover; the final candidate with the smallest
    Hamming distance wins, lower list index first on ties.  Returns the
    codewords, their transform inputs, per-word distortions, and counter
    totals.
    """
    x = as_bit_array(x)
    flat = x.reshape(-1, schedule.n)
    llr = channel_llrs(flat, design_p1)
    result = SclBatchDecoder(schedule, list_size).decode(llr)
    dist = (result.x_hat != flat[:, None, :]).sum(axis=2)
    best = np.argmin(dist, axis=1)
    rows = np.arange(len(flat))
    x_q = result.x_hat[rows, best]
    u_q = result.u_hat[rows, best]
    return (x_q.reshape(x.shape), u_q.reshape(x.shape),
            dist[rows, best], result.sum_count, result.comp_count)


def quantize_batch(x, pair: NestedCodePair, design_p1: float, list_size: int = 8):
    """Quantise source words onto the high-rate code of a nested pair."""
    return quantize_with_schedule(x, quantizer_schedule(pair), design_p1,
                                  list_size)


def quantize(x, pair: NestedCodePair, design_p1: float,
             list_size: int = 8) -> QuantizeResult:
    """Quantise a single source word; see :func:`quantize_batch`."""
    x_q, u_q, dist, sums, comps = quantize_batch(x, pair, design_p1, list_size)
    return QuantizeResult(x_q=x_q, u_q=u_q, distortion=int(dist[0]),
                          sum_count=sums, comp_count=comps)
