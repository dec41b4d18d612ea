"""Binary64 helpers: the ordinal map, ULP distance and IEEE evaluation of ops."""

from __future__ import annotations

import math
import struct

import numpy as np

# Number of distinct ordinals, used to cap distances involving NaN.
ORDINAL_SPAN = 2 ** 64


def ordinal(x: float) -> int:
    """Position of ``x`` in the total order of doubles; both zeros map to 0."""
    bits = struct.unpack("<q", struct.pack("<d", x))[0]
    if bits < 0:
        return -(bits & 0x7FFF_FFFF_FFFF_FFFF)
    return bits


def from_ordinal(n: int) -> float:
    if n < 0:
        bits = (-n) | (1 << 63)
        return struct.unpack("<d", struct.pack("<Q", bits))[0]
    return struct.unpack("<d", struct.pack("<q", n))[0]


def ulp_distance(a: float, b: float) -> float:
    """How many doubles one must step over to get from ``a`` to ``b``.

    Counts through zero across signs. Any NaN gives infinity.
    """
    if math.isnan(a) or math.isnan(b):
        return math.inf
    return float(abs(ordinal(a) - ordinal(b)))


def ordinals(x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`ordinal` as int64 (NaNs give garbage; mask them first)."""
    bits = np.asarray(x, dtype=np.float64).view(np.int64)
    return np.where(bits < 0, -(bits & np.int64(0x7FFF_FFFF_FFFF_FFFF)), bits)


def ulp_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized :func:`ulp_distance`, as float64 with NaN pairs mapped to inf."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    oa, ob = ordinals(a), ordinals(b)
    # Opposite signs far from zero would overflow int64, so add magnitudes as floats there.
    wide = ((oa < 0) != (ob < 0)) & ((np.abs(oa) >= 2 ** 62) | (np.abs(ob) >= 2 ** 62))
    with np.errstate(over="ignore"):
        exact = np.abs(np.where(wide, 0, oa - ob)).astype(np.float64)
    far = np.abs(oa).astype(np.float64) + np.abs(ob).astype(np.float64)
    d = np.where(wide, far, exact)
    return np.where(np.isnan(a) | np.isnan(b), np.inf, d)


F64_OPS = {
    "arith.addf": np.add,
    "arith.subf": np.subtract,
    "arith.mulf": np.multiply,
    "arith.divf": np.divide,
    "arith.negf": np.negative,
    "math.sqrt": np.sqrt,
    "math.powf": np.power,
    "math.log": np.log,
    "math.exp": np.exp,
    "math.sin": np.sin,
    "math.cos": np.cos,
    "math.absf": np.abs,
}


def eval_f64(name: str, operands) -> np.ndarray:
    """Apply op ``name`` elementwise in binary64 with IEEE special values, no warnings."""
    fn = F64_OPS.get(name)
    if fn is None:
        raise KeyError(f"no binary64 semantics for {name}")
    with np.errstate(all="ignore"):
        return np.asarray(fn(*[np.asarray(o, dtype=np.float64) for o in operands]),
                          dtype=np.float64)
