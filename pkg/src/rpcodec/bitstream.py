"""MSB-first bit reader/writer and exp-Golomb codes."""

from __future__ import annotations

from .core import BitstreamError

_PAD = bytes(9)


class BitWriter:
    def __init__(self):
        self._buf = bytearray()
        self._acc = 0
        self._nacc = 0
        self.bits_written = 0

    def write_bits(self, value: int, nbits: int) -> None:
        if not 0 <= nbits <= 32:
            raise ValueError(f"nbits must be in [0, 32], got {nbits}")
        if value < 0 or value >> nbits:
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        self._acc = (self._acc << nbits) | value
        self._nacc += nbits
        self.bits_written += nbits
        while self._nacc >= 8:
            self._nacc -= 8
            self._buf.append((self._acc >> self._nacc) & 0xFF)
        self._acc &= (1 << self._nacc) - 1

    def write_bit(self, bit: int) -> None:
        self.write_bits(1 if bit else 0, 1)

    def ue(self, value: int) -> None:
        ue_encode(self, value)

    def se(self, value: int) -> None:
        se_encode(self, value)

    @property
    def padding_bits(self) -> int:
        return (8 - self._nacc) % 8

    def getvalue(self) -> bytes:
        """Return the buffer zero-padded to a byte boundary."""
        out = bytes(self._buf)
        if self._nacc:
            out += bytes([(self._acc << (8 - self._nacc)) & 0xFF])
        return out


class BitReader:
    def __init__(self, data: bytes, start_bit: int = 0):
        self._data = bytes(data) + _PAD
        self.nbits = 8 * len(data)
        if not 0 <= start_bit <= self.nbits:
            raise ValueError("start position outside the buffer")
        self.pos = start_bit

    @property
    def remaining(self) -> int:
        return self.nbits - self.pos

    def read_bits(self, nbits: int) -> int:
        if not 0 <= nbits <= 32:
            raise ValueError(f"nbits must be in [0, 32], got {nbits}")
        pos = self.pos
        if pos + nbits > self.nbits:
            raise BitstreamError(
                f"end of stream: need {nbits} bits at {pos}, have {self.nbits - pos}")
        i = pos >> 3
        window = int.from_bytes(self._data[i:i + 5], "big")
        self.pos = pos + nbits
        return (window >> (40 - (pos & 7) - nbits)) & ((1 << nbits) - 1)

    def read_bit(self) -> int:
        return self.read_bits(1)

    def ue(self) -> int:
        return ue_decode(self)

    def se(self) -> int:
        return se_decode(self)


def ue_encode(w: BitWriter, value: int) -> None:
    if not 0 <= value < 1 << 31:
        raise ValueError(f"ue value out of range: {value}")
    v = value + 1
    n = v.bit_length() - 1
    if n:
        w.write_bits(0, n)
    w.write_bits(v, n + 1)


def ue_decode(r: BitReader) -> int:
    pos = r.pos
    i = pos >> 3
    # 72-bit window covers the longest legal code (31 zeros + 32 bits) from any bit offset
    avail = 72 - (pos & 7)
    window = int.from_bytes(r._data[i:i + 9], "big") & ((1 << avail) - 1)
    zeros = avail - window.bit_length()
    if zeros >= 32:
        if pos + 32 > r.nbits:
            raise BitstreamError(f"end of stream inside exp-Golomb prefix at bit {pos}")
        raise BitstreamError(f"malformed exp-Golomb prefix at bit {pos}")
    total = 2 * zeros + 1
    if pos + total > r.nbits:
        raise BitstreamError(f"end of stream inside exp-Golomb code at bit {pos}")
    r.pos = pos + total
    return (window >> (avail - total)) - 1


def ue_length(value: int) -> int:
    """Bit length of the exp-Golomb code for ``value``."""
    return 2 * (value + 1).bit_length() - 1


def se_map(value: int) -> int:
    return 2 * value - 1 if value > 0 else -2 * value


def se_encode(w: BitWriter, value: int) -> None:
    ue_encode(w, se_map(value))


def se_decode(r: BitReader) -> int:
    k = ue_decode(r)
    return (k + 1) >> 1 if k & 1 else -(k >> 1)
