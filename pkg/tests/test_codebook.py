"""Codebook structure tests: bijection, partition, halving, mirroring."""
import io

import pytest
from hypothesis import given, strategies as st

from cachetap.codebook import (
    FORWARD,
    REVERSE,
    EmbedSpec,
    bit_reverse,
    build_codebook,
    deinterleave,
    dump_codebook,
    interleave,
)
from cachetap.core import BitString
from cachetap.errors import BlocklengthTooLarge, WidthMismatch

SPEC8 = EmbedSpec(3, ("K1[1]", "K2[1]", "K1[2]"), 2, FORWARD)


def test_spec_validation():
    with pytest.raises(ValueError):
        EmbedSpec(2, ("a", "a"), 0, FORWARD)
    with pytest.raises(ValueError):
        EmbedSpec(-1, (), 0, FORWARD)
    with pytest.raises(ValueError):
        EmbedSpec(1, (), 0, "sideways")


def test_consumption_order_and_depth():
    fwd = EmbedSpec(0, ("a", "b", "c"), 0, FORWARD)
    rev = EmbedSpec(0, ("a", "b", "c"), 0, REVERSE)
    assert fwd.consumption_labels() == ("a", "b", "c")
    assert rev.consumption_labels() == ("c", "b", "a")
    for label in "abc":
        assert rev.depth_of(label) == 4 - fwd.depth_of(label)


def test_build_rejects_bad_shapes():
    with pytest.raises(WidthMismatch):
        build_codebook(8, EmbedSpec(3, ("x",), 2, FORWARD), 0)
    with pytest.raises(BlocklengthTooLarge):
        build_codebook(25, EmbedSpec(25, (), 0, FORWARD), 0)


@given(st.integers(0, 1023), st.integers(0, 10))
def test_bit_reverse_involution(v, w):
    v &= (1 << w) - 1
    assert bit_reverse(bit_reverse(v, w), w) == v


@given(st.integers(0, 255), st.integers(0, 255))
def test_interleave_roundtrip(a, b):
    v = interleave(a, b, 8)
    assert deinterleave(v, 8) == (a, b)


def test_interleave_reads_alternating_msb_first():
    a = BitString.from_str("10")
    b = BitString.from_str("01")
    v = BitString(interleave(a.value, b.value, 2), 4)
    # MSB-first: a1 b1 a2 b2
    assert str(v) == "1001"


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("order", [FORWARD, REVERSE])
def test_bijection_exhaustive(seed, order):
    spec = EmbedSpec(3, ("K1[1]", "K2[1]", "K1[2]", "K2[2]"), 3, order)
    cb = build_codebook(10, spec, seed)
    seen = set()
    for word in range(1 << 10):
        b, e, l = cb.decode_index(word)
        assert cb.encode_index(b, e, l) == word
        seen.add((b, e, l))
    assert len(seen) == 1 << 10


@pytest.mark.parametrize("seed", range(5))
def test_partition_and_halving(seed):
    cb = build_codebook(8, SPEC8, seed)
    all_words = set(range(1 << 8))
    union = set()
    for b in range(1 << 3):
        top = cb.cell(BitString(b, 3), BitString(0, 0))
        assert len(top) == 1 << 5
        assert not (union & top)
        union |= top
        # each embed bit halves the enclosing cell
        for k in range(1, 4):
            for prefix in range(1 << k):
                cell = cb.cell(BitString(b, 3), BitString(prefix, k))
                assert len(cell) == 1 << (5 - k)
                parent = cb.cell(BitString(b, 3), BitString(prefix >> 1, k - 1))
                assert cell <= parent
    assert union == all_words


@pytest.mark.parametrize("seed", range(5))
def test_forward_reverse_mirror(seed):
    """Same seed, mirrored order: identical words at bit-reversed embeds."""
    labels = ("K1[1]", "K2[1]", "K1[2]", "K2[2]")
    fwd = build_codebook(9, EmbedSpec(3, labels, 2, FORWARD), seed)
    rev = build_codebook(9, EmbedSpec(3, labels, 2, REVERSE), seed)
    for b in range(1 << 3):
        for e in range(1 << 4):
            for l in range(1 << 2):
                assert rev.encode_index(b, e, l) == fwd.encode_index(b, bit_reverse(e, 4), l)


def test_cell_membership_matches_decode():
    cb = build_codebook(8, SPEC8, 3)
    cell = cb.cell(BitString(5, 3), BitString(1, 1))
    for word in cell:
        b, e, _ = cb.decode_index(word)
        assert b == 5
        assert (e >> 2) & 1 == 1  # first consumed embed bit


def test_determinism_and_seed_separation():
    a = build_codebook(8, SPEC8, 11)
    b = build_codebook(8, SPEC8, 11)
    c = build_codebook(8, SPEC8, 12)
    assert (a.word_of == b.word_of).all()
    assert not (a.word_of == c.word_of).all()


def test_encode_rejects_wrong_widths():
    cb = build_codebook(8, SPEC8, 0)
    with pytest.raises(WidthMismatch):
        cb.encode(BitString(0, 2), BitString(0, 3), BitString(0, 2))
    with pytest.raises(WidthMismatch):
        cb.decode(BitString(0, 7))


def test_dump_format():
    cb = build_codebook(8, SPEC8, 0)
    buf = io.StringIO()
    dump_codebook(cb, buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 256
    for line in lines[:16]:
        word, b, e, l = line.split()
        bb, ee, ll = cb.decode_index(int(word, 2))
        assert (int(b, 2), int(e, 2), int(l, 2)) == (bb, ee, ll)

    # zero-width components dump as '-'
    cb2 = build_codebook(6, EmbedSpec(6, (), 0, FORWARD), 0)
    buf2 = io.StringIO()
    dump_codebook(cb2, buf2)
    first = buf2.getvalue().splitlines()[0].split()
    assert first[2] == "-" and first[3] == "-"
