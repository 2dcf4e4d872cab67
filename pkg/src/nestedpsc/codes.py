"""Randomized polar subcode construction and the nested code pair.

A code is described by a constraint matrix over the transform input
``u``: each row has a pivot (its last nonzero column) and forces

    u[pivot] = offset + sum_{s < pivot} coeffs[s] * u[s]   (mod 2)

with offset 0 for codewords.  Static frozen symbols (``SFS``) are unit
rows, dynamically frozen symbols carry randomized coefficients.  Type-B
rows sit on moderately unreliable pivots and mainly help list decoding;
type-A rows sit on low binary-weight pivots and repair the minimum
distance.  The nested pair stacks the high-rate quantizer's unit rows on
top of the low-rate code's remaining rows, so one matrix serves both the
quantizer and the decoder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gf2 import as_bit_array, bits_to_hex, hex_to_bits, pack_rows, packed_bit, polar_transform
from .reliability import ReliabilityProfile

KIND_STATIC = "SFS"
KIND_DYNAMIC_A = "DFS_A"
KIND_DYNAMIC_B = "DFS_B"
ROW_KINDS = (KIND_STATIC, KIND_DYNAMIC_A, KIND_DYNAMIC_B)

_TYPE_AB_BUDGET = 64  # combined dynamic-row budget matched to list-32 decoding


@dataclass
class ConstraintRow:
    """One frozen-symbol constraint: kind, pivot column, full coefficient row."""

    kind: str
    pivot: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.kind not in ROW_KINDS:
            raise ValueError(f"unknown row kind {self.kind!r}")
        self.pivot = int(self.pivot)
        self.coeffs = as_bit_array(self.coeffs)
        if self.coeffs.ndim != 1:
            raise ValueError("coefficient row must be 1-D")
        n = len(self.coeffs)
        if not 0 <= self.pivot < n:
            raise ValueError(f"pivot {self.pivot} outside word length {n}")
        if self.coeffs[self.pivot] != 1:
            raise ValueError("coefficient row must have a 1 at its pivot")
        if self.coeffs[self.pivot + 1 :].any():
            raise ValueError("coefficient row must vanish beyond its pivot")
        if self.kind == KIND_STATIC and self.coeffs.sum() != 1:
            raise ValueError("static rows must be unit vectors")

    def __eq__(self, other):
        if not isinstance(other, ConstraintRow):
            return NotImplemented
        return (self.kind == other.kind and self.pivot == other.pivot
                and np.array_equal(self.coeffs, other.coeffs))


@dataclass
class ConstraintMatrix:
    """A set of constraint rows with pairwise distinct pivots."""

    n: int
    rows: list[ConstraintRow]

    def __post_init__(self):
        self.n = int(self.n)
        if self.n < 1 or self.n & (self.n - 1):
            raise ValueError("word length must be a power of two")
        pivots = [row.pivot for row in self.rows]
        if len(set(pivots)) != len(pivots):
            raise ValueError("constraint pivots must be distinct")
        for row in self.rows:
            if len(row.coeffs) != self.n:
                raise ValueError("row length does not match the word length")

    @property
    def pivots(self) -> np.ndarray:
        return np.array([row.pivot for row in self.rows], dtype=np.int64)

    def pivot_set(self) -> np.ndarray:
        return np.sort(self.pivots)

    def satisfied(self, u) -> bool:
        """True when every row's inner product with ``u`` vanishes."""
        u = as_bit_array(u, self.n)
        return all(int(np.bitwise_and(row.coeffs, u).sum() & 1) == 0 for row in self.rows)


@dataclass
class PolarSubcode:
    """A length-n code with n - k frozen-symbol constraints."""

    n: int
    k: int
    matrix: ConstraintMatrix
    design_p: float | None = None
    t_a: int = 0
    t_b: int = 0
    seed: int | None = None

    def __post_init__(self):
        if self.matrix.n != self.n:
            raise ValueError("matrix word length does not match the code")
        if not 0 <= self.k <= self.n:
            raise ValueError("dimension must lie in [0, n]")
        if len(self.matrix.rows) != self.n - self.k:
            raise ValueError(f"expected {self.n - self.k} constraint rows, "
                             f"got {len(self.matrix.rows)}")

    @property
    def m(self) -> int:
        return self.n.bit_length() - 1

    def frozen_set(self) -> np.ndarray:
        return self.matrix.pivot_set()

    def info_set(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.matrix.pivots] = False
        return np.nonzero(mask)[0]


def default_ta_tb(n: int, k: int) -> tuple[int, int]:
    """Default dynamic-row counts for a length-n, dimension-k subcode.

    Type-A rows are capped by the number of polarisation stages; type-B
    rows fill the remaining dynamic budget without exceeding the total
    number of frozen symbols.
    """
    n = int(n)
    k = int(k)
    if n < 2 or n & (n - 1):
        raise ValueError("n must be a power of two, at least 2")
    if not 0 <= k <= n:
        raise ValueError("k must lie in [0, n]")
    m = n.bit_length() - 1
    t_a = min(m, n - k)
    t_b = max(0, min(_TYPE_AB_BUDGET - t_a, n - k - t_a))
    return t_a, t_b


def _random_dfs_row(kind: str, pivot: int, n: int, seed: int) -> ConstraintRow:
    """Randomized constraint row keyed by (seed, pivot) for reproducibility."""
    rng = np.random.Generator(np.random.Philox(key=[seed, pivot]))
    coeffs = np.zeros(n, dtype=np.uint8)
    if pivot:
        coeffs[:pivot] = rng.integers(0, 2, size=pivot, dtype=np.uint8)
    coeffs[pivot] = 1
    return ConstraintRow(kind, pivot, coeffs)


def _unit_row(pivot: int, n: int) -> ConstraintRow:
    coeffs = np.zeros(n, dtype=np.uint8)
    coeffs[pivot] = 1
    return ConstraintRow(KIND_STATIC, pivot, coeffs)


def build_randomized_psc(
    n: int,
    k: int,
    profile: ReliabilityProfile,
    t_a: int | None = None,
    t_b: int | None = None,
    seed: int = 0,
) -> PolarSubcode:
    """Construct a randomized polar subcode from a reliability profile.

    The n - k - t_a - t_b least reliable subchannels become static frozen
    symbols and the next t_b become type-B dynamic rows.  Type-A pivots
    are the t_a smallest-binary-weight indices among the remaining
    positions, preferring larger indices on equal weight; their selection
    depends only on the pivot set already taken, not on the profile.
    With ``t_a = t_b = 0`` the construction reduces to a plain polar code.
    """
    n = int(n)
    k = int(k)
    if n < 2 or n & (n - 1):
        raise ValueError("n must be a power of two, at least 2")
    if profile.n != n:
        raise ValueError("profile length does not match n")
    if not 0 <= k <= n:
        raise ValueError("k must lie in [0, n]")
    if t_a is None or t_b is None:
        d_a, d_b = default_ta_tb(n, k)
        t_a = d_a if t_a is None else int(t_a)
        t_b = d_b if t_b is None else int(t_b)
    t_a = int(t_a)
    t_b = int(t_b)
    if t_a < 0 or t_b < 0 or t_a + t_b > n - k:
        raise ValueError("dynamic row counts must be nonnegative with "
                         "t_a + t_b <= n - k")
    base = profile.least_reliable(n - k - t_a)
    sfs = sorted(int(i) for i in base[: n - k - t_a - t_b])
    dfs_b = sorted(int(i) for i in base[n - k - t_a - t_b :])
    taken = set(sfs) | set(dfs_b)
    free = [i for i in range(n) if i not in taken]
    free.sort(key=lambda i: (bin(i).count("1"), -i))
    dfs_a = sorted(free[:t_a])
    rows = [_unit_row(i, n) for i in sfs]
    rows += [_random_dfs_row(KIND_DYNAMIC_B, i, n, seed) for i in dfs_b]
    rows += [_random_dfs_row(KIND_DYNAMIC_A, i, n, seed) for i in dfs_a]
    rows.sort(key=lambda row: row.pivot)
    matrix = ConstraintMatrix(n, rows)
    return PolarSubcode(n, k, matrix, design_p=profile.design_p,
                        t_a=t_a, t_b=t_b, seed=seed)


@dataclass
class NestedCodePair:
    """High-rate quantizer nested around a low-rate decoding code.

    The low-rate code's matrix is ordered so its first ``m1`` rows are
    exactly the quantizer's unit rows; the remaining ``m2`` rows define
    the helper-data syndrome.  Key bits live on the positions frozen in
    neither code.
    """

    quantizer: PolarSubcode
    code: PolarSubcode
    p_a: float | None = None
    m1: int = field(init=False)
    m2: int = field(init=False)

    def __post_init__(self):
        if self.quantizer.n != self.code.n:
            raise ValueError("quantizer and code must share the word length")
        self.m1 = self.code.n - self.quantizer.k
        self.m2 = (self.code.n - self.code.k) - self.m1
        if self.m2 < 0:
            raise ValueError("quantizer must not have more constraints than the code")
        head = self.code.matrix.rows[: self.m1]
        for mine, theirs in zip(self.quantizer.matrix.rows, head):
            if mine.kind != KIND_STATIC or theirs.pivot != mine.pivot \
                    or not np.array_equal(mine.coeffs, theirs.coeffs):
                raise ValueError("the code's leading rows must replicate the quantizer")

    @property
    def n(self) -> int:
        return self.code.n

    def f1_set(self) -> np.ndarray:
        return self.quantizer.frozen_set()

    def helper_rows(self) -> list[ConstraintRow]:
        return self.code.matrix.rows[self.m1 :]

    def key_indices(self) -> np.ndarray:
        return self.code.info_set()


def stack_nested(f1, code: PolarSubcode) -> NestedCodePair:
    """Stack the quantizer frozen set ``f1`` on top of a low-rate subcode.

    ``f1`` must be a subset of the code's static pivots.  Rows are
    reordered as: unit rows on f1, remaining unit rows, type-B rows,
    type-A rows (each group by ascending pivot).
    """
    f1 = sorted(int(i) for i in np.asarray(f1, dtype=np.int64).ravel())
    if len(set(f1)) != len(f1):
        raise ValueError("f1 indices must be distinct")
    by_kind = {KIND_STATIC: [], KIND_DYNAMIC_B: [], KIND_DYNAMIC_A: []}
    for row in code.matrix.rows:
        by_kind[row.kind].append(row)
    static_pivots = {row.pivot for row in by_kind[KIND_STATIC]}
    missing = [i for i in f1 if i not in static_pivots]
    if missing:
        raise ValueError(f"f1 must be a subset of the static pivots; {missing} are not")
    chosen = set(f1)
    s_prime = [row for row in by_kind[KIND_STATIC] if row.pivot in chosen]
    s_rest = [row for row in by_kind[KIND_STATIC] if row.pivot not in chosen]
    ordered = s_prime + s_rest + by_kind[KIND_DYNAMIC_B] + by_kind[KIND_DYNAMIC_A]
    low = PolarSubcode(code.n, code.k, ConstraintMatrix(code.n, ordered),
                       design_p=code.design_p, t_a=code.t_a, t_b=code.t_b,
                       seed=code.seed)
    quant = PolarSubcode(code.n, code.n - len(f1),
                         ConstraintMatrix(code.n, [_unit_row(i, code.n) for i in f1]),
                         design_p=None, t_a=0, t_b=0, seed=code.seed)
    return NestedCodePair(quantizer=quant, code=low)


def expand_info(code: PolarSubcode, info: np.ndarray) -> np.ndarray:
    """Fill transform inputs from info bits, honouring every constraint row.

    ``info`` has shape (batch, k); info bit j lands on the j-th unfrozen
    position.  Returns the (batch, n) input words.
    """
    info = as_bit_array(info)
    if info.ndim == 1:
        info = info[None, :]
    if info.shape[1] != code.k:
        raise ValueError(f"expected {code.k} info bits per word")
    n = code.n
    batch = info.shape[0]
    n_rows = n - code.k
    coeff_mat = np.zeros((max(n_rows, 1), n), dtype=np.uint8)
    pivot_row = np.full(n, -1, dtype=np.int64)
    for r, row in enumerate(code.matrix.rows):
        coeff_mat[r] = row.coeffs
        pivot_row[row.pivot] = r
    col_masks = pack_rows(coeff_mat.T)  # (n, words) over row index
    acc = np.zeros((batch, col_masks.shape[1]), dtype=np.uint64)
    u = np.empty((batch, n), dtype=np.uint8)
    next_info = 0
    for i in range(n):
        r = pivot_row[i]
        if r < 0:
            b = info[:, next_info]
            next_info += 1
        else:
            b = packed_bit(acc, int(r))
        u[:, i] = b
        mask = col_masks[i]
        if mask.any():
            acc ^= mask[None, :] * b[:, None].astype(np.uint64)
    return u


def sample_codewords(code: PolarSubcode, count: int, seed: int):
    """Draw uniform codewords; returns transform inputs U and codewords X."""
    count = int(count)
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    info = rng.integers(0, 2, size=(count, code.k), dtype=np.uint8)
    u = expand_info(code, info)
    return u, polar_transform(u)


_HEADER_FIELDS = ("n", "k", "m1", "m2", "pA", "design_p", "seed", "tA", "tB")


def save_code_file(pair: NestedCodePair, path) -> None:
    """Write a nested pair as headers plus one ``kind pivot hex`` line per row."""
    code = pair.code
    if pair.p_a is None or code.design_p is None or code.seed is None:
        raise ValueError("saving requires p_a, design_p, and seed to be set")
    lines = [
        f"n={code.n}",
        f"k={code.k}",
        f"m1={pair.m1}",
        f"m2={pair.m2}",
        f"pA={pair.p_a!r}",
        f"design_p={code.design_p!r}",
        f"seed={code.seed}",
        f"tA={code.t_a}",
        f"tB={code.t_b}",
    ]
    for row in code.matrix.rows:
        lines.append(f"{row.kind} {row.pivot} {bits_to_hex(row.coeffs)}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_code_file(path) -> NestedCodePair:
    """Parse a code file written by :func:`save_code_file`."""
    with open(path, "r", encoding="ascii") as fh:
        raw = [line.strip() for line in fh if line.strip()]
    header: dict[str, str] = {}
    body_start = 0
    for line in raw:
        if "=" not in line:
            break
        key, _, value = line.partition("=")
        header[key] = value
        body_start += 1
    missing = [f for f in _HEADER_FIELDS if f not in header]
    if missing:
        raise ValueError(f"code file is missing header fields {missing}")
    n = int(header["n"])
    k = int(header["k"])
    m1 = int(header["m1"])
    m2 = int(header["m2"])
    rows = []
    for line in raw[body_start:]:
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"malformed constraint line: {line!r}")
        kind, pivot_text, payload = parts
        rows.append(ConstraintRow(kind, int(pivot_text), hex_to_bits(payload, n)))
    if len(rows) != n - k:
        raise ValueError(f"expected {n - k} constraint rows, found {len(rows)}")
    if m1 + m2 != n - k:
        raise ValueError("header counts are inconsistent: m1 + m2 != n - k")
    for row in rows[:m1]:
        if row.kind != KIND_STATIC:
            raise ValueError("the first m1 rows must be static quantizer rows")
    code = PolarSubcode(n, k, ConstraintMatrix(n, rows),
                        design_p=float(header["design_p"]),
                        t_a=int(header["tA"]), t_b=int(header["tB"]),
                        seed=int(header["seed"]))
    quant = PolarSubcode(n, n - m1,
                         ConstraintMatrix(n, [_unit_row(r.pivot, n) for r in rows[:m1]]),
                         design_p=None, t_a=0, t_b=0, seed=int(header["seed"]))
    return NestedCodePair(quantizer=quant, code=code, p_a=float(header["pA"]))
