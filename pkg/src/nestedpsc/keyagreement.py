"""Key enrollment and reconstruction over the nested pair.

Enrollment quantizes a measured word onto the high-rate code, keeps the
unfrozen transform bits as the secret key, and publishes the helper-row
syndromes.  Reconstruction decodes a fresh noisy measurement on the
low-rate code with those syndromes as frozen offsets.  The module also
computes the storage-key rate region these schemes live in.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import nan

import numpy as np

from .codes import NestedCodePair
from .decoding import (
    DecodeOutcome,
    FrozenSchedule,
    channel_llrs,
    expected_metric_bias,
    quantize_batch,
    scl_decode,
    sequential_decode,
)
from .gf2 import (
    as_bit_array,
    binary_entropy,
    bits_to_hex,
    hex_to_bits,
    star,
)
from .reliability import density_evolution_minsum


@dataclass
class EnrollmentRecord:
    """Everything produced by enrolling one measured word."""

    x: np.ndarray
    x_q: np.ndarray
    u: np.ndarray
    key: np.ndarray
    helper: np.ndarray
    distortion: int


def _helper_matrix(pair: NestedCodePair) -> np.ndarray:
    rows = pair.helper_rows()
    if not rows:
        return np.zeros((0, pair.n), dtype=np.uint8)
    return np.stack([row.coeffs for row in rows])


def enroll_batch(x, pair: NestedCodePair, design_p1: float,
                 list_size: int = 8) -> list[EnrollmentRecord]:
    """Enroll a batch of measured words; see :func:`enroll`."""
    x = as_bit_array(x)
    if x.ndim == 1:
        x = x[None, :]
    x_q, u, dist, _, _ = quantize_batch(x, pair, design_p1, list_size)
    helper = (u.astype(np.int64) @ _helper_matrix(pair).T.astype(np.int64)) % 2
    helper = helper.astype(np.uint8)
    keys = u[:, pair.key_indices()]
    return [EnrollmentRecord(x=x[i], x_q=x_q[i], u=u[i], key=keys[i],
                             helper=helper[i], distortion=int(dist[i]))
            for i in range(len(x))]


def enroll(x, pair: NestedCodePair, design_p1: float,
           list_size: int = 8) -> EnrollmentRecord:
    """Quantize one measured word and derive its key and helper data.

    The key is the quantized word's transform input restricted to the
    unfrozen positions of the low-rate code; helper bit i is the i-th
    helper row evaluated on that input, which for unit rows reduces to
    the plain frozen bit.
    """
    return enroll_batch(x, pair, design_p1, list_size)[0]


def reconstruction_schedule(pair: NestedCodePair, helper) -> FrozenSchedule:
    """Frozen schedule of the low-rate code with helper offsets applied.

    Quantizer rows keep offset zero; helper row i is frozen to the
    published syndrome bit.
    """
    helper = as_bit_array(helper)
    if helper.shape != (pair.m2,):
        raise ValueError(f"expected {pair.m2} helper bits")
    offsets = np.concatenate([np.zeros(pair.m1, dtype=np.uint8), helper])
    return FrozenSchedule.from_code(pair.code, offsets=offsets)


@dataclass
class ReconstructionResult:
    """Reconstructed key plus the decode it came from."""

    key: np.ndarray
    outcome: DecodeOutcome

    @property
    def degraded(self) -> bool:
        return self.outcome.degraded


def reconstruct(
    y,
    helper,
    pair: NestedCodePair,
    p_eff: float,
    decoder: str = "scl",
    list_size: int = 8,
    queue_size: int = 1024,
    bias: np.ndarray | None = None,
) -> ReconstructionResult:
    """Recover the key from a fresh noisy measurement and helper data.

    ``p_eff`` is the effective crossover seen from the quantized word:
    the cascade of quantization distortion and measurement noise.
    """
    y = as_bit_array(y)
    if y.shape != (pair.n,):
        raise ValueError(f"expected a measurement of length {pair.n}")
    if not 0.0 < p_eff < 0.5:
        raise ValueError("p_eff must lie in (0, 0.5)")
    schedule = reconstruction_schedule(pair, helper)
    llrs = channel_llrs(y, p_eff)
    if decoder == "scl":
        outcome = scl_decode(schedule, llrs, list_size)
    elif decoder == "seq":
        if bias is None:
            if pair.code.design_p is None:
                raise ValueError(
                    "sequential decoding needs a bias or a code with design_p")
            profile = density_evolution_minsum(pair.code.design_p,
                                               pair.code.m)
            bias = expected_metric_bias(profile.p_err, p_eff)
        outcome = sequential_decode(schedule, llrs, list_size, queue_size,
                                    bias)
    else:
        raise ValueError("decoder must be 'scl' or 'seq'")
    return ReconstructionResult(key=outcome.u_hat[pair.key_indices()],
                                outcome=outcome)


@dataclass
class CsHelper:
    """Helper data for a chosen key: syndromes plus a one-time-pad mask."""

    helper: np.ndarray
    mask: np.ndarray


def cs_wrap(s_prime, record: EnrollmentRecord) -> CsHelper:
    """Embed a chosen key by masking it with the enrolled one."""
    s_prime = as_bit_array(s_prime)
    if s_prime.shape != record.key.shape:
        raise ValueError("chosen key must match the enrolled key length")
    return CsHelper(helper=record.helper.copy(), mask=record.key ^ s_prime)


def cs_unwrap(s_hat, cs: CsHelper) -> np.ndarray:
    """Recover the chosen key from a reconstructed generated key."""
    s_hat = as_bit_array(s_hat)
    if s_hat.shape != cs.mask.shape:
        raise ValueError("reconstructed key must match the mask length")
    return s_hat ^ cs.mask


@dataclass
class RatePoint:
    """Storage-key rate coordinates at one distortion level."""

    r_s: float
    r_ell: float
    r_w: float
    q: float
    p_a: float


def region_boundary(p_a: float, q: float) -> RatePoint:
    """Boundary point of the achievable region at distortion ``q``.

    The key rate is the source entropy not explained by the effective
    channel; leakage and storage rates coincide on the boundary.
    """
    for name, v in (("p_a", p_a), ("q", q)):
        if not 0.0 <= v <= 0.5:
            raise ValueError(f"{name} must lie in [0, 0.5]")
    r = star(q, p_a)
    h_r = float(binary_entropy(r))
    h_q = float(binary_entropy(q))
    return RatePoint(r_s=1.0 - h_r, r_ell=h_r - h_q, r_w=h_r - h_q,
                     q=float(q), p_a=float(p_a))


def boundary_sweep(p_a: float, count: int = 101) -> list[RatePoint]:
    """Sample the region boundary over ``count`` distortion levels."""
    if count < 2:
        raise ValueError("count must be at least 2")
    return [region_boundary(p_a, q) for q in np.linspace(0.0, 0.5, count)]


def rate_point_from_counts(n: int, key_len: int, m2: int,
                           p_a: float = nan,
                           q: float = nan) -> tuple[RatePoint, float]:
    """Operating rates of a nested pair given its bit counts."""
    if n < 1 or key_len < 0 or m2 < 0:
        raise ValueError("counts must be nonnegative with n >= 1")
    if m2 == 0:
        raise ValueError("m2 = 0: the pair stores no helper data")
    point = RatePoint(r_s=key_len / n, r_ell=m2 / n, r_w=m2 / n,
                      q=q, p_a=p_a)
    return point, key_len / m2


def code_rate_point(pair: NestedCodePair,
                    q: float = nan) -> tuple[RatePoint, float]:
    """Operating rates and key-to-storage ratio of a nested pair."""
    p_a = nan if pair.p_a is None else pair.p_a
    return rate_point_from_counts(pair.n, pair.code.k, pair.m2, p_a, q)


def save_records(records, path) -> None:
    """Write enrollment records as hex text blocks."""
    lines = []
    for rec in records:
        lines.append(f"x={bits_to_hex(rec.x)}")
        lines.append(f"xq={bits_to_hex(rec.x_q)}")
        lines.append(f"u={bits_to_hex(rec.u)}")
        lines.append(f"S={bits_to_hex(rec.key)}")
        lines.append(f"W={bits_to_hex(rec.helper)}")
        lines.append(f"dist={rec.distortion}")
        lines.append("")
    with open(path, "w") as fh:
        fh.write("\n".join(lines))


def load_records(path, pair: NestedCodePair) -> list[EnrollmentRecord]:
    """Read enrollment records written by :func:`save_records`."""
    with open(path) as fh:
        text = fh.read()
    n = pair.n
    key_len = len(pair.key_indices())
    records = []
    for block in text.split("\n\n"):
        block = block.strip()
        if not block:
            continue
        fields = {}
        for line in block.splitlines():
            name, _, value = line.partition("=")
            fields[name.strip()] = value.strip()
        missing = {"x", "xq", "u", "S", "W", "dist"} - set(fields)
        if missing:
            raise ValueError(f"record block is missing {sorted(missing)}")
        records.append(EnrollmentRecord(
            x=hex_to_bits(fields["x"], n),
            x_q=hex_to_bits(fields["xq"], n),
            u=hex_to_bits(fields["u"], n),
            key=hex_to_bits(fields["S"], key_len),
            helper=hex_to_bits(fields["W"], pair.m2),
            distortion=int(fields["dist"])))
    return records
