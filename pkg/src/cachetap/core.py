"""Core domain types: bit strings, configurations, libraries, keys, caches.

Bit strings are MSB-first: position 1 is the leftmost (most significant)
bit of the serialized '0'/'1' string.  All sizes are exact bit counts;
nothing in this package is approximate at the combinatorial level.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional

from .errors import (
    ConfigError,
    ConfigViolation,
    LayoutMismatch,
    LengthMismatch,
)


class SchemeId(str, Enum):
    """Identifiers for the runnable coding schemes."""

    SETTING1 = "SETTING1"
    SETTING2 = "SETTING2"
    SETTING3_C1 = "SETTING3_C1"
    SETTING3_C2 = "SETTING3_C2"
    SETTING4 = "SETTING4"
    GENERAL_D2_LOW = "GENERAL_D2_LOW"
    GENERAL_HIGH = "GENERAL_HIGH"
    GENERAL_DGT2_LOW = "GENERAL_DGT2_LOW"
    CHAIN_DGT2_LOW = "CHAIN_DGT2_LOW"


@dataclass(frozen=True)
class BitString:
    """An immutable bit string of fixed length backed by an integer.

    Attributes
    ----------
    value : int
        Integer whose binary expansion (MSB-first, zero padded to
        ``length``) is the bit string.
    length : int
        Number of bits; may be zero.
    """

    value: int
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ValueError(f"negative length {self.length}")
        if not 0 <= self.value < (1 << self.length):
            raise ValueError(f"value {self.value} does not fit in {self.length} bits")

    @classmethod
    def from_str(cls, bits: str) -> "BitString":
        if bits and set(bits) - {"0", "1"}:
            raise ValueError(f"non-binary characters in {bits!r}")
        return cls(int(bits, 2) if bits else 0, len(bits))

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls(0, length)

    @classmethod
    def random(cls, rng, length: int) -> "BitString":
        """Draw a uniform bit string of the given length from ``rng``."""
        if length == 0:
            return cls(0, 0)
        value = 0
        # numpy integers() tops out below 2**64; draw in 32-bit chunks.
        for lo in range(0, length, 32):
            w = min(32, length - lo)
            value |= int(rng.integers(0, 1 << w)) << lo
        return cls(value, length)

    def __str__(self) -> str:
        return format(self.value, f"0{self.length}b") if self.length else ""

    def __len__(self) -> int:
        return self.length

    def __xor__(self, other: "BitString") -> "BitString":
        if self.length != other.length:
            raise LengthMismatch(f"xor of {self.length}-bit and {other.length}-bit strings")
        return BitString(self.value ^ other.value, self.length)

    def concat(self, other: "BitString") -> "BitString":
        return BitString((self.value << other.length) | other.value, self.length + other.length)

    def __add__(self, other: "BitString") -> "BitString":
        return self.concat(other)

    def bit(self, position: int) -> int:
        """Bit at 1-indexed position; position 1 is the MSB."""
        if not 1 <= position <= self.length:
            raise LayoutMismatch(f"position {position} outside [1, {self.length}]")
        return (self.value >> (self.length - position)) & 1

    def take(self, offset: int, width: int) -> "BitString":
        """Sub-string of ``width`` bits starting ``offset`` bits from the MSB."""
        if offset < 0 or width < 0 or offset + width > self.length:
            raise LayoutMismatch(
                f"slice [{offset}, {offset + width}) outside {self.length}-bit string"
            )
        return BitString((self.value >> (self.length - offset - width)) & ((1 << width) - 1), width)


def xor_all(parts) -> BitString:
    """XOR an iterable of equal-length bit strings (must be non-empty)."""
    parts = list(parts)
    out = parts[0]
    for p in parts[1:]:
        out = out ^ p
    return out


def concat_all(parts) -> BitString:
    out = BitString(0, 0)
    for p in parts:
        out = out + p
    return out


def derive_seed(master_seed: int, label: str) -> int:
    """Derive an independent child seed from a master seed and a label.

    Hash-based so that streams for distinct labels are statistically
    independent and reproducible across runs and platforms.
    """
    digest = hashlib.sha256(f"{master_seed}|{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class SubfileLayout:
    """Named partition of a file into contiguous MSB-first segments.

    ``segments`` is an ordered tuple of (name, width) pairs; the file is
    the concatenation of the segments in listing order.
    """

    segments: tuple

    @property
    def file_bits(self) -> int:
        return sum(w for _, w in self.segments)

    def offsets(self) -> dict:
        out = {}
        pos = 0
        for name, w in self.segments:
            out[name] = (pos, w)
            pos += w
        return out

    def width(self, name: str) -> int:
        for seg, w in self.segments:
            if seg == name:
                return w
        raise LayoutMismatch(f"no segment named {name}")


def split_file(layout: SubfileLayout, file: BitString) -> dict:
    """Split a file into its named subfiles according to ``layout``."""
    if file.length != layout.file_bits:
        raise LayoutMismatch(
            f"file has {file.length} bits, layout expects {layout.file_bits}"
        )
    return {name: file.take(off, w) for name, (off, w) in layout.offsets().items()}


def join_file(layout: SubfileLayout, parts: dict) -> BitString:
    """Inverse of split_file; parts must cover every segment exactly."""
    out = BitString(0, 0)
    for name, w in layout.segments:
        p = parts[name]
        if p.length != w:
            raise LayoutMismatch(f"segment {name}: got {p.length} bits, expected {w}")
        out = out + p
    return out


@dataclass(frozen=True)
class SchemeConfig:
    """A complete run configuration.

    ``mu`` is the total tap budget over both transmission phases;
    ``mu1``/``mu2`` optionally pin the per-phase split where a scheme
    needs it.  ``eps_bits`` is the integer slack knob: all secured sizes
    use the effective budget ``mu + 2 * eps_bits``.
    """

    n: int
    D: int
    mu: int
    scheme: SchemeId
    mu1: Optional[int] = None
    mu2: Optional[int] = None
    eps_bits: int = 0
    seed: int = 0

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.mu, self.n)

    @property
    def mu_eff(self) -> int:
        return self.mu + 2 * self.eps_bits

    @property
    def alpha_eff(self) -> Fraction:
        return Fraction(self.mu_eff, self.n)

    @property
    def cache_bits(self) -> int:
        return self.n // 2

    def with_seed(self, seed: int) -> "SchemeConfig":
        return SchemeConfig(
            self.n, self.D, self.mu, self.scheme, self.mu1, self.mu2, self.eps_bits, seed
        )


@dataclass(frozen=True)
class FileLibrary:
    """The D equal-length files, indexed 1..D externally."""

    files: tuple

    @property
    def D(self) -> int:
        return len(self.files)

    @property
    def file_bits(self) -> int:
        return self.files[0].length

    def file(self, index: int) -> BitString:
        if not 1 <= index <= self.D:
            raise LayoutMismatch(f"file index {index} outside [1, {self.D}]")
        return self.files[index - 1]


@dataclass(frozen=True)
class KeyMaterial:
    """Shared randomness held by the transmitter, independent of the library.

    ``k1``/``k2`` are the per-receiver one-time-pad keys (where the
    scheme uses them).  ``wtilde`` is fresh delivery-phase randomization
    and ``wtilde_k`` fresh placement-phase randomization; either may be
    absent for a given scheme.
    """

    k1: Optional[BitString] = None
    k2: Optional[BitString] = None
    wtilde: Optional[BitString] = None
    wtilde_k: Optional[BitString] = None

    def key(self, j: int) -> BitString:
        return self.k1 if j == 1 else self.k2


@dataclass(frozen=True)
class DemandVector:
    """The two receivers' file requests (1-indexed)."""

    d1: int
    d2: int

    def request(self, j: int) -> int:
        return self.d1 if j == 1 else self.d2

    def validate(self, D: int):
        for d in (self.d1, self.d2):
            if not 1 <= d <= D:
                raise LayoutMismatch(f"demand {d} outside [1, {D}]")


@dataclass(frozen=True)
class CacheContent:
    """Named segments stored by one receiver after the placement phase."""

    segments: dict

    @property
    def total_bits(self) -> int:
        return sum(v.length for v in self.segments.values())

    def get(self, name: str) -> BitString:
        return self.segments[name]


@dataclass(frozen=True)
class PhaseMessages:
    """Labeled message bundles for both phases.

    ``mc``/``md`` are the secured payload components of the placement
    and delivery phases; ``mtc``/``mtd`` are the per-phase
    randomization components (keys, pads, fresh randomness).
    """

    mc: dict
    mtc: dict
    md: dict
    mtd: dict


@dataclass(frozen=True)
class TranscriptRecord:
    """Everything produced by one encode/decode round."""

    config: SchemeConfig
    demand: DemandVector
    x_c: BitString
    x_d: BitString
    caches: tuple
    decoded: tuple

    def to_dict(self) -> dict:
        return {
            "scheme": self.config.scheme.value,
            "n": self.config.n,
            "D": self.config.D,
            "mu": self.config.mu,
            "demand": [self.demand.d1, self.demand.d2],
            "x_c": str(self.x_c),
            "x_d": str(self.x_d),
            "cache_1": {k: str(v) for k, v in self.caches[0].segments.items()},
            "cache_2": {k: str(v) for k, v in self.caches[1].segments.items()},
            "decoded_1": str(self.decoded[0]),
            "decoded_2": str(self.decoded[1]),
        }


def validate_config(cfg: SchemeConfig) -> SchemeConfig:
    """Check a configuration against its scheme's constraints.

    Returns the configuration unchanged if valid, otherwise raises
    ConfigError carrying the full list of violations.
    """
    from .schemes import layout_violations

    violations = layout_violations(cfg)
    if violations:
        raise ConfigError(violations)
    return cfg
