"""Counter-based random numbers: Philox4x64-10 and site encoding.

Every random quantity in the simulator is a pure function of
``(seed, site code, block index, purpose, draw index)``.  The generator is
the Philox4x64 block cipher with 10 rounds, bit-compatible with
``numpy.random.Philox`` (which is used as the reference in the tests).

Counter layout for one call::

    ctr = (site code, block index as two's complement, purpose << 32 | call index, 0)
    key = (seed, KEY_TAG)

Each call yields four 64-bit words; a uniform is the top 53 bits of a word.
"""

from __future__ import annotations

import numpy as np
from llvmlite import ir
from numba import njit, types, uint64
from numba.extending import intrinsic

KEY_TAG = 0x69716E6574  # fixed second key word

PHILOX_M0 = 0xD2E7470EE14C6C93
PHILOX_M1 = 0xCA5A826395121157
PHILOX_W0 = 0x9E3779B97F4A7C15
PHILOX_W1 = 0xBB67AE8584CAA73B

# purposes
P_DRIVING = 0
P_INITIAL = 1

TWO_M53 = 2.0 ** -53


@intrinsic
def mulhilo64(typingctx, a, b):
    """Full 128-bit product of two uint64 values, as (hi, lo)."""
    sig = types.UniTuple(types.uint64, 2)(types.uint64, types.uint64)

    def codegen(context, builder, signature, args):
        i128 = ir.IntType(128)
        p = builder.mul(builder.zext(args[0], i128), builder.zext(args[1], i128))
        lo = builder.trunc(p, ir.IntType(64))
        hi = builder.trunc(builder.lshr(p, ir.Constant(i128, 64)), ir.IntType(64))
        return context.make_tuple(builder, signature.return_type, (hi, lo))

    return sig, codegen


@njit(cache=True)
def philox4x64(c0, c1, c2, c3, k0, k1):
    m0 = uint64(PHILOX_M0)
    m1 = uint64(PHILOX_M1)
    w0 = uint64(PHILOX_W0)
    w1 = uint64(PHILOX_W1)
    for r in range(10):
        if r > 0:
            k0 = k0 + w0
            k1 = k1 + w1
        hi0, lo0 = mulhilo64(m0, c0)
        hi1, lo1 = mulhilo64(m1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@njit(cache=True, inline="always")
def top53(w):
    return w >> uint64(11)


@njit(cache=True)
def draw_call(k0, code, m, purpose, idx):
    """One Philox call for (site code, block m, purpose, call index)."""
    c1 = uint64(m)  # two's complement for negative blocks
    c2 = (uint64(purpose) << uint64(32)) | uint64(idx)
    return philox4x64(code, c1, c2, uint64(0), k0, uint64(KEY_TAG))


def seed_key(seed: int) -> np.uint64:
    """Map a user seed (any int) to the first Philox key word."""
    return np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)


def zigzag(z: int) -> int:
    return 2 * z if z >= 0 else -2 * z - 1


def unzigzag(u: int) -> int:
    return u // 2 if u % 2 == 0 else -(u + 1) // 2


def _szudzik(a: int, b: int) -> int:
    return a * a + a + b if a >= b else b * b + a


def site_code(site) -> int:
    """Injective encoding of a site of Z^d into a non-negative integer.

    d = 1 uses zigzag; higher dimensions fold the zigzagged coordinates
    left to right with Szudzik's pairing.  Codes must fit in 64 bits.
    """
    coords = (site,) if isinstance(site, (int, np.integer)) else tuple(site)
    code = zigzag(int(coords[0]))
    for c in coords[1:]:
        code = _szudzik(code, zigzag(int(c)))
    if code >= 1 << 64:
        raise OverflowError(f"site {site} is too far from the origin to encode")
    return code


def site_codes(sites: np.ndarray) -> np.ndarray:
    return np.array([site_code(tuple(s)) for s in sites], dtype=np.uint64)
