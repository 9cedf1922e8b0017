"""Seeded random-binning codebooks with nested single-bit embedding layers.

A codebook is a uniformly random bijection between all 2^n words and
index tuples (bin_index, embed_bits, leaf_index).  The embed bits are
layered one per label: fixing a bin and the first k consumed embed bits
selects a cell of exactly 2^(n - bin_bits - k) words, and each further
bit halves the cell.  ``order`` controls whether labels are consumed in
listing order (FORWARD) or exactly reversed (REVERSE).

Index packing: (bin_index || embed-bits-in-consumption-order || leaf_index)
packs into one n-bit integer that a sampled permutation maps to the
codeword, so encode/decode are O(1) table lookups and every cell is a
contiguous slice of the permutation table.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BitString
from .errors import BlocklengthTooLarge, WidthMismatch

FORWARD = "forward"
REVERSE = "reverse"

MAX_TABLE_BITS = 24


@dataclass(frozen=True)
class EmbedSpec:
    """Shape of a codebook: outer bin width, embedding labels, leaf width.

    ``embed_labels`` lists the single-bit layers in listing order; with
    ``order=REVERSE`` they are consumed (i.e. mapped to nesting depth)
    in exactly reversed listing order.
    """

    bin_bits: int
    embed_labels: tuple
    leaf_bits: int
    order: str = FORWARD

    def __post_init__(self):
        if self.order not in (FORWARD, REVERSE):
            raise ValueError(f"unknown order {self.order!r}")
        if self.bin_bits < 0 or self.leaf_bits < 0:
            raise ValueError("negative width in embed spec")
        if len(set(self.embed_labels)) != len(self.embed_labels):
            raise ValueError("duplicate embed labels")

    @property
    def embed_bits(self) -> int:
        return len(self.embed_labels)

    @property
    def total_bits(self) -> int:
        return self.bin_bits + self.embed_bits + self.leaf_bits

    def consumption_labels(self) -> tuple:
        """Labels in the order they are consumed, depth 1 first."""
        if self.order == FORWARD:
            return tuple(self.embed_labels)
        return tuple(reversed(self.embed_labels))

    def depth_of(self, label: str) -> int:
        """1-indexed nesting depth at which ``label`` is consumed."""
        return self.consumption_labels().index(label) + 1


def bit_reverse(value, width: int):
    """Reverse the low ``width`` bits of an int or integer array."""
    out = value & 0 if not isinstance(value, int) else 0
    for i in range(width):
        out = out | (((value >> i) & 1) << (width - 1 - i))
    return out


def interleave(a, b, width: int):
    """Zip two ``width``-bit values bitwise, ``a`` taking the higher slot.

    MSB-first the result reads a_1 b_1 a_2 b_2 ... a_w b_w.  Works on
    ints and on integer arrays alike.
    """
    out = (a & 0) | (b & 0) if not isinstance(a, int) else 0
    for i in range(width):
        out = out | (((a >> i) & 1) << (2 * i + 1)) | (((b >> i) & 1) << (2 * i))
    return out


def deinterleave(v, width: int):
    """Inverse of interleave: returns (a, b) of ``width`` bits each."""
    a = v & 0 if not isinstance(v, int) else 0
    b = a
    for i in range(width):
        a = a | (((v >> (2 * i + 1)) & 1) << i)
        b = b | (((v >> (2 * i)) & 1) << i)
    return a, b


class EmbeddedCodebook:
    """Explicit-table realization of one random labeled partition.

    ``word_of`` maps packed index tuples to codewords, ``index_of`` is
    its inverse.  Both are immutable after construction.
    """

    def __init__(self, n: int, spec: EmbedSpec, seed: int):
        if n > MAX_TABLE_BITS:
            raise BlocklengthTooLarge(f"n={n} exceeds explicit-table limit {MAX_TABLE_BITS}")
        if spec.total_bits != n:
            raise WidthMismatch(
                f"spec widths {spec.bin_bits}+{spec.embed_bits}+{spec.leaf_bits} != n={n}"
            )
        self.n = n
        self.spec = spec
        self.seed = seed
        rng = np.random.Generator(np.random.PCG64(seed))
        self.word_of = rng.permutation(1 << n).astype(np.uint32)
        inv = np.empty(1 << n, dtype=np.uint32)
        inv[self.word_of] = np.arange(1 << n, dtype=np.uint32)
        self.index_of = inv

    # -- integer-level interface (also accepts integer numpy arrays) --

    def pack(self, bin_index, embed_listing, leaf_index):
        """Pack (bin, embed in listing order, leaf) into one n-bit index."""
        s = self.spec
        consumed = embed_listing if s.order == FORWARD else bit_reverse(embed_listing, s.embed_bits)
        return (((bin_index << s.embed_bits) | consumed) << s.leaf_bits) | leaf_index

    def unpack(self, packed):
        s = self.spec
        leaf = packed & ((1 << s.leaf_bits) - 1)
        rest = packed >> s.leaf_bits
        consumed = rest & ((1 << s.embed_bits) - 1)
        bin_index = rest >> s.embed_bits
        listing = consumed if s.order == FORWARD else bit_reverse(consumed, s.embed_bits)
        return bin_index, listing, leaf

    def encode_index(self, bin_index, embed_listing, leaf_index):
        packed = self.pack(bin_index, embed_listing, leaf_index)
        word = self.word_of[packed]
        return int(word) if isinstance(packed, int) else word

    def decode_index(self, word):
        packed = self.index_of[word]
        if not isinstance(word, np.ndarray):
            packed = int(packed)
        return self.unpack(packed)

    # -- BitString-level interface --

    def _check_width(self, value: BitString, width: int, what: str):
        if value.length != width:
            raise WidthMismatch(f"{what}: got {value.length} bits, expected {width}")

    def encode(self, bin_index: BitString, embed_bits: BitString, leaf_index: BitString) -> BitString:
        s = self.spec
        self._check_width(bin_index, s.bin_bits, "bin index")
        self._check_width(embed_bits, s.embed_bits, "embed bits")
        self._check_width(leaf_index, s.leaf_bits, "leaf index")
        return BitString(self.encode_index(bin_index.value, embed_bits.value, leaf_index.value), self.n)

    def decode(self, codeword: BitString):
        s = self.spec
        self._check_width(codeword, self.n, "codeword")
        b, e, l = self.decode_index(codeword.value)
        return BitString(b, s.bin_bits), BitString(e, s.embed_bits), BitString(l, s.leaf_bits)

    def cell(self, bin_index: BitString, embed_prefix: BitString) -> set:
        """All codewords matching a bin and a consumption-order embed prefix."""
        s = self.spec
        self._check_width(bin_index, s.bin_bits, "bin index")
        k = embed_prefix.length
        if k > s.embed_bits:
            raise WidthMismatch(f"prefix of {k} bits exceeds {s.embed_bits} embed labels")
        lo = ((bin_index.value << s.embed_bits) | (embed_prefix.value << (s.embed_bits - k)))
        lo <<= s.leaf_bits
        size = 1 << (s.embed_bits - k + s.leaf_bits)
        return {int(w) for w in self.word_of[lo : lo + size]}


def build_codebook(n: int, spec: EmbedSpec, seed: int) -> EmbeddedCodebook:
    """Build the deterministic codebook for (n, spec, seed)."""
    return EmbeddedCodebook(n, spec, seed)


def dump_codebook(cb: EmbeddedCodebook, fh) -> None:
    """Write `<codeword> <bin_index> <embed_bits> <leaf_index>` per word.

    Zero-width components are written as '-' so every line has four
    columns.  Lines are ordered by codeword value.
    """
    s = cb.spec

    def fmt(v: int, w: int) -> str:
        return format(v, f"0{w}b") if w else "-"

    for word in range(1 << cb.n):
        b, e, l = cb.decode_index(word)
        fh.write(f"{fmt(word, cb.n)} {fmt(b, s.bin_bits)} {fmt(e, s.embed_bits)} {fmt(l, s.leaf_bits)}\n")
