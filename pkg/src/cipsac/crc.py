"""CRC encoding and checking.

The remainder convention is fixed to the simplest one: message processed
MSB-first, register initialized to zero, no input/output reflection, no
final XOR. Encode is systematic: the codeword is the message followed by
the remainder of ``message * x^degree``.

Polynomials are given as integer bit masks including the leading term,
e.g. ``x^11 + x^10 + x^9 + x^5 + 1`` is ``0xE21``.
"""

import numpy as np

from .exceptions import InvalidInputError

__all__ = [
    "CrcPolynomial",
    "CRC11",
    "CRC8",
    "CRC6",
    "crc_encode",
    "crc_check",
    "crc_check_batch",
]


class CrcPolynomial:
    """Generator polynomial with leading and constant coefficients 1."""

    def __init__(self, mask: int):
        if mask <= 1:
            raise InvalidInputError(f"polynomial mask {mask:#x} has no degree")
        if not mask & 1:
            raise InvalidInputError(
                f"polynomial mask {mask:#x} must have constant term 1"
            )
        self.mask = int(mask)
        self.degree = mask.bit_length() - 1
        # Coefficient bits of x^degree ... x^0, as a uint8 vector for the
        # vectorized long division below.
        self.bits = np.array(
            [(mask >> k) & 1 for k in range(self.degree, -1, -1)], dtype=np.uint8
        )

    def __repr__(self):
        return f"CrcPolynomial({self.mask:#x})"

    def __eq__(self, other):
        return isinstance(other, CrcPolynomial) and other.mask == self.mask

    def __hash__(self):
        return hash(self.mask)


#: 11-bit polynomial x^11 + x^10 + x^9 + x^5 + 1.
CRC11 = CrcPolynomial(0xE21)
#: 8-bit polynomial x^8 + x^2 + x + 1.
CRC8 = CrcPolynomial(0x107)
#: 6-bit polynomial x^6 + x^5 + 1.
CRC6 = CrcPolynomial(0x61)


def _as_bit_rows(bits):
    """Coerce to a 2-D uint8 0/1 array (rows are messages)."""
    arr = np.asarray(bits)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InvalidInputError(f"bit array must be 1-D or 2-D, got {arr.ndim}-D")
    arr = arr.astype(np.uint8, copy=True)
    if arr.size and arr.max(initial=0) > 1:
        raise InvalidInputError("bit array entries must be 0 or 1")
    return arr


def _remainder_rows(rows, poly):
    """Polynomial remainder of each row (rows already include the x^degree
    shift, i.e. have ``degree`` zero bits appended)."""
    deg = poly.degree
    work = rows.copy()
    n = work.shape[1] - deg
    for i in range(n):
        hit = work[:, i] == 1
        if hit.any():
            work[hit, i : i + deg + 1] ^= poly.bits
    return work[:, -deg:]


def crc_encode(b, poly: CrcPolynomial):
    """Append the CRC remainder to bit sequence ``b`` (systematic)."""
    rows = _as_bit_rows(b)
    if rows.shape[1] < 1:
        raise InvalidInputError("message must contain at least one bit")
    padded = np.concatenate(
        [rows, np.zeros((rows.shape[0], poly.degree), dtype=np.uint8)], axis=1
    )
    rem = _remainder_rows(padded, poly)
    out = np.concatenate([rows, rem], axis=1)
    return out if np.asarray(b).ndim == 2 else out[0]


def crc_check_batch(c, poly: CrcPolynomial):
    """Boolean pass flag per row of a 2-D codeword array."""
    rows = _as_bit_rows(c)
    if rows.shape[1] <= poly.degree:
        raise InvalidInputError(
            f"codeword length {rows.shape[1]} must exceed CRC degree {poly.degree}"
        )
    rem = _remainder_rows(rows, poly)
    return ~rem.any(axis=1)


def crc_check(c, poly: CrcPolynomial) -> bool:
    """True iff the codeword's CRC remainder is zero."""
    if np.asarray(c).ndim != 1:
        raise InvalidInputError("crc_check expects a single 1-D bit sequence")
    return bool(crc_check_batch(c, poly)[0])
