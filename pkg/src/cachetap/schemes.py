"""Scheme registry: layouts, placement/delivery encoding, and decoding.

Every scheme follows the same two-phase shape.  Placement broadcasts an
n-bit word from which each receiver fills its n/2-bit cache before
demands are known; delivery broadcasts a second n-bit word from which
both receivers, using their caches, recover their demanded files
exactly.  Schemes differ in how files are sliced, whether a phase is
wiretap-coded through an embedded codebook or sent as plain bits, and
what protects the payload (one-time-pad keys, embedding layers, or
fresh randomization).

All message arithmetic lives in helpers that operate on plain integers
or on integer numpy arrays interchangeably, so the scalar round API and
the vectorized leakage enumeration share one implementation.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .codebook import (
    FORWARD,
    REVERSE,
    EmbeddedCodebook,
    EmbedSpec,
    build_codebook,
    deinterleave,
    interleave,
)
from .core import (
    BitString,
    CacheContent,
    DemandVector,
    FileLibrary,
    KeyMaterial,
    PhaseMessages,
    SchemeConfig,
    SchemeId,
    SubfileLayout,
    TranscriptRecord,
    derive_seed,
    validate_config,
)
from .errors import ConfigError, ConfigViolation, InconsistentTranscript

D2_SETTINGS = (
    SchemeId.SETTING1,
    SchemeId.SETTING2,
    SchemeId.SETTING3_C1,
    SchemeId.SETTING3_C2,
    SchemeId.SETTING4,
)
EMBED_SCHEMES = (
    SchemeId.GENERAL_D2_LOW,
    SchemeId.GENERAL_DGT2_LOW,
    SchemeId.CHAIN_DGT2_LOW,
)


@dataclass(frozen=True)
class SchemeLayout:
    """All derived sizes and codebook shapes for one configuration."""

    scheme: SchemeId
    n: int
    D: int
    mu: int
    mu1: Optional[int]
    mu2: Optional[int]
    eps_bits: int
    subfiles: SubfileLayout
    key_bits: int
    wt_bits: int
    wtk_bits: int
    placement_spec: Optional[EmbedSpec]
    delivery_spec: Optional[EmbedSpec]
    mc_bits: int
    md_bits: int
    cache_segments: tuple

    @property
    def file_bits(self) -> int:
        return self.subfiles.file_bits

    @property
    def rate(self) -> Fraction:
        return Fraction(self.file_bits, self.n)

    @property
    def cache_bits(self) -> int:
        return sum(w for _, w in self.cache_segments)

    @property
    def has_keys(self) -> bool:
        return self.key_bits > 0


def _pair_labels(stream1: str, stream2: str, levels: int) -> tuple:
    out = []
    for i in range(1, levels + 1):
        out.append(f"{stream1}[{i}]")
        out.append(f"{stream2}[{i}]")
    return tuple(out)


def layout_violations(cfg: SchemeConfig) -> list:
    """All constraint violations for cfg; empty list means valid."""
    v = []
    n, D, mu, eps = cfg.n, cfg.D, cfg.mu, cfg.eps_bits
    scheme = cfg.scheme

    if n <= 0 or n % 2:
        v.append(ConfigViolation(
            ConfigViolation.NON_INTEGRAL_SIZE, f"cache size n/2 must be a positive integer (n={n})"
        ))
        return v
    if eps < 0:
        v.append(ConfigViolation(ConfigViolation.NON_INTEGRAL_SIZE, f"eps_bits={eps} < 0"))
        return v
    if not 0 < mu <= 2 * n:
        v.append(ConfigViolation(
            ConfigViolation.ALPHA_OUT_OF_RANGE, f"mu={mu} outside (0, 2n] for n={n}"
        ))
        return v

    mu1, mu2 = cfg.mu1, cfg.mu2
    if (mu1 is None) != (mu2 is None):
        v.append(ConfigViolation(ConfigViolation.BAD_MU_SPLIT, "mu1 and mu2 must be given together"))
        return v
    if mu1 is not None:
        if mu1 + mu2 != mu or not (0 <= mu1 <= n) or not (0 <= mu2 <= n):
            v.append(ConfigViolation(
                ConfigViolation.BAD_MU_SPLIT,
                f"(mu1, mu2)=({mu1}, {mu2}) must be non-negative, phase-bounded, and sum to mu={mu}",
            ))
            return v

    if scheme == SchemeId.SETTING1:
        if (mu1, mu2) not in ((None, None), (mu, 0)):
            v.append(ConfigViolation(
                ConfigViolation.BAD_MU_SPLIT, "SETTING1 taps placement only: (mu1, mu2) = (mu, 0)"
            ))
    elif scheme == SchemeId.SETTING2:
        if (mu1, mu2) not in ((None, None), (0, mu)):
            v.append(ConfigViolation(
                ConfigViolation.BAD_MU_SPLIT, "SETTING2 taps delivery only: (mu1, mu2) = (0, mu)"
            ))
    elif scheme == SchemeId.SETTING3_C1:
        if mu1 is None or not mu1 >= mu2 >= 1:
            v.append(ConfigViolation(
                ConfigViolation.BAD_MU_SPLIT, "SETTING3_C1 requires known split with mu1 >= mu2 >= 1"
            ))
    elif scheme == SchemeId.SETTING3_C2:
        if mu1 is None or not 1 <= mu1 < mu2:
            v.append(ConfigViolation(
                ConfigViolation.BAD_MU_SPLIT, "SETTING3_C2 requires known split with 1 <= mu1 < mu2"
            ))
    elif scheme == SchemeId.SETTING4:
        if mu1 is not None and set((mu1, mu2)) != {0, mu}:
            v.append(ConfigViolation(
                ConfigViolation.BAD_MU_SPLIT, "SETTING4 taps exactly one phase: split must be (mu, 0) or (0, mu)"
            ))
    if v:
        return v

    if scheme == SchemeId.GENERAL_HIGH:
        if not n <= mu <= 2 * n:
            v.append(ConfigViolation(
                ConfigViolation.ALPHA_OUT_OF_RANGE, f"{scheme.value} requires alpha in [1, 2] (mu={mu}, n={n})"
            ))
    else:
        if not mu < n:
            v.append(ConfigViolation(
                ConfigViolation.ALPHA_OUT_OF_RANGE, f"{scheme.value} requires alpha in (0, 1) (mu={mu}, n={n})"
            ))
    if scheme in D2_SETTINGS or scheme == SchemeId.GENERAL_D2_LOW:
        if D != 2:
            v.append(ConfigViolation("BadD", f"{scheme.value} is defined for exactly 2 files (D={D})"))
    elif scheme == SchemeId.GENERAL_HIGH:
        if D < 2:
            v.append(ConfigViolation("BadD", f"D={D} < 2"))
    else:
        if D < 3:
            v.append(ConfigViolation("BadD", f"{scheme.value} requires more than 2 files (D={D})"))
    if v:
        return v

    def whole(x, what) -> Optional[int]:
        fx = Fraction(x)
        if fx < 0 or fx.denominator != 1:
            v.append(ConfigViolation(
                ConfigViolation.NON_INTEGRAL_SIZE, f"{what} = {fx} is not a non-negative integer"
            ))
            return None
        return int(fx)

    me = mu + 2 * eps
    if scheme == SchemeId.GENERAL_D2_LOW:
        whole(Fraction(n - me, 2), "secured subfile pair width")
        whole(Fraction(me, 2), "key width")
    elif scheme == SchemeId.GENERAL_HIGH:
        whole(Fraction(2 * n - me, 2), "file width")
        whole(me - n, "within-leaf randomization width")
    elif scheme == SchemeId.GENERAL_DGT2_LOW:
        whole(Fraction(n - me, 2 * D), "per-file cached subfile width")
        whole(Fraction((2 * D - 1) * (n - me), 4 * D), "delivery-only subfile width")
        whole(Fraction(me, 2), "key width")
    elif scheme == SchemeId.CHAIN_DGT2_LOW:
        whole(Fraction(n - me, 2 * (D - 1)), "per-file cached subfile width")
        whole(Fraction((D - 2) * (n - me), 2 * (D - 1)), "delivery-only subfile width")
        whole(Fraction(me, 2), "key width")
    elif scheme in (SchemeId.SETTING1, SchemeId.SETTING2, SchemeId.SETTING4):
        whole(Fraction(n - mu - eps, 2), "cached subfile width")
        whole(Fraction(mu + eps, 2), "encrypted subfile width")
    elif scheme == SchemeId.SETTING3_C1:
        whole(Fraction(n - mu1 - eps, 2), "cached subfile width")
        whole(Fraction(mu1 - mu2, 2), "encrypted subfile width")
    elif scheme == SchemeId.SETTING3_C2:
        whole(Fraction(n - mu2 - eps, 2), "cached subfile width")
        whole(Fraction(mu2 - mu1, 2), "encrypted subfile width")
    if v:
        return v

    lay = _build_layout(cfg)
    if lay.cache_bits > n // 2:
        v.append(ConfigViolation(
            ConfigViolation.CACHE_OVERFLOW,
            f"cache content of {lay.cache_bits} bits exceeds capacity {n // 2}",
        ))
    return v


def _build_layout(cfg: SchemeConfig) -> SchemeLayout:
    """Assemble the layout; all divisibility checks have already passed."""
    n, D, mu, eps = cfg.n, cfg.D, cfg.mu, cfg.eps_bits
    scheme = cfg.scheme
    me = mu + 2 * eps
    mu1, mu2 = cfg.mu1, cfg.mu2
    if scheme == SchemeId.SETTING1:
        mu1, mu2 = mu, 0
    elif scheme == SchemeId.SETTING2:
        mu1, mu2 = 0, mu

    if scheme == SchemeId.GENERAL_D2_LOW:
        b, k = (n - me) // 2, me // 2
        return SchemeLayout(
            scheme, n, D, mu, mu1, mu2, eps,
            subfiles=SubfileLayout((("w1", b), ("w2", b), ("ws", k))),
            key_bits=k, wt_bits=0, wtk_bits=0,
            placement_spec=EmbedSpec(2 * b, _pair_labels("K1", "K2", k), 0, FORWARD),
            delivery_spec=EmbedSpec(2 * b, _pair_labels("P1", "P2", k), 0, REVERSE),
            mc_bits=2 * b, md_bits=2 * b,
            cache_segments=(("Mc", b), ("K", k)),
        )
    if scheme == SchemeId.GENERAL_HIGH:
        t, r = (2 * n - me) // 2, me - n
        return SchemeLayout(
            scheme, n, D, mu, mu1, mu2, eps,
            subfiles=SubfileLayout((("w", t),)),
            key_bits=t, wt_bits=r, wtk_bits=r,
            placement_spec=EmbedSpec(0, _pair_labels("K1", "K2", t), r, FORWARD),
            delivery_spec=EmbedSpec(0, _pair_labels("M1", "M2", t), r, REVERSE),
            mc_bits=2 * t, md_bits=2 * t,
            cache_segments=(("K", t),),
        )
    if scheme == SchemeId.GENERAL_DGT2_LOW:
        b = (n - me) // (2 * D)
        t = (2 * D - 1) * (n - me) // (4 * D)
        k = me // 2
        return SchemeLayout(
            scheme, n, D, mu, mu1, mu2, eps,
            subfiles=SubfileLayout((("w1", b), ("w2", b), ("wt", t), ("ws", k))),
            key_bits=k, wt_bits=0, wtk_bits=0,
            placement_spec=EmbedSpec(2 * D * b, _pair_labels("K1", "K2", k), 0, FORWARD),
            delivery_spec=EmbedSpec(b + 2 * t, _pair_labels("P1", "P2", k), 0, REVERSE),
            mc_bits=2 * D * b, md_bits=b + 2 * t,
            cache_segments=(("Mc", D * b), ("K", k)),
        )
    if scheme == SchemeId.CHAIN_DGT2_LOW:
        b = (n - me) // (2 * (D - 1))
        t = (D - 2) * (n - me) // (2 * (D - 1))
        k = me // 2
        return SchemeLayout(
            scheme, n, D, mu, mu1, mu2, eps,
            subfiles=SubfileLayout((("w1", b), ("w2", b), ("wt", t), ("ws", k))),
            key_bits=k, wt_bits=0, wtk_bits=0,
            placement_spec=EmbedSpec(2 * (D - 1) * b, _pair_labels("K1", "K2", k), 0, FORWARD),
            delivery_spec=EmbedSpec(2 * b + 2 * t, _pair_labels("P1", "P2", k), 0, REVERSE),
            mc_bits=2 * (D - 1) * b, md_bits=2 * b + 2 * t,
            cache_segments=(("Mc", (D - 1) * b), ("K", k)),
        )
    if scheme == SchemeId.SETTING1:
        b, s = (n - mu - eps) // 2, (mu + eps) // 2
        return SchemeLayout(
            scheme, n, D, mu, mu1, mu2, eps,
            subfiles=SubfileLayout((("w1", b), ("w2", b), ("ws", s))),
            key_bits=0, wt_bits=0, wtk_bits=mu + eps,
            placement_spec=EmbedSpec(2 * b, (), mu + eps, FORWARD),
            delivery_spec=None,
            mc_bits=2 * b, md_bits=n,
            cache_segments=(("Mc", b),),
        )
    if scheme == SchemeId.SETTING2:
        b, s = (n - mu - eps) // 2, (mu + eps) // 2
        return SchemeLayout(
            scheme, n, D, mu, mu1, mu2, eps,
            subfiles=SubfileLayout((("w1", b), ("w2", b), ("ws", s))),
            key_bits=s, wt_bits=0, wtk_bits=0,
            placement_spec=None,
            delivery_spec=EmbedSpec(2 * b, (), mu + eps, REVERSE),
            mc_bits=n, md_bits=2 * b,
            cache_segments=(("Mc", b), ("K", s)),
        )
    if scheme == SchemeId.SETTING3_C1:
        b, s = (n - mu1 - eps) // 2, (mu1 - mu2) // 2
        return SchemeLayout(
            scheme, n, D, mu, mu1, mu2, eps,
            subfiles=SubfileLayout((("w1", b), ("w2", b), ("ws", s))),
            key_bits=0, wt_bits=mu2 + eps, wtk_bits=mu1 + eps,
            placement_spec=EmbedSpec(2 * b, (), mu1 + eps, FORWARD),
            delivery_spec=EmbedSpec(2 * b + 2 * s, (), mu2 + eps, REVERSE),
            mc_bits=2 * b, md_bits=2 * b + 2 * s,
            cache_segments=(("Mc", b),),
        )
    if scheme == SchemeId.SETTING3_C2:
        b, s = (n - mu2 - eps) // 2, (mu2 - mu1) // 2
        return SchemeLayout(
            scheme, n, D, mu, mu1, mu2, eps,
            subfiles=SubfileLayout((("w1", b), ("w2", b), ("ws", s))),
            key_bits=s, wt_bits=mu1 + eps, wtk_bits=mu1 + eps,
            placement_spec=EmbedSpec(2 * b + 2 * s, (), mu1 + eps, FORWARD),
            delivery_spec=EmbedSpec(2 * b, (), mu2 + eps, REVERSE),
            mc_bits=2 * b + 2 * s, md_bits=2 * b,
            cache_segments=(("Mc", b), ("K", s)),
        )
    if scheme == SchemeId.SETTING4:
        b, s = (n - mu - eps) // 2, (mu + eps) // 2
        return SchemeLayout(
            scheme, n, D, mu, mu1, mu2, eps,
            subfiles=SubfileLayout((("w1", b), ("w2", b), ("ws", s))),
            key_bits=s, wt_bits=0, wtk_bits=0,
            placement_spec=EmbedSpec(2 * b, (), mu + eps, FORWARD),
            delivery_spec=EmbedSpec(2 * b, (), mu + eps, REVERSE),
            mc_bits=2 * b, md_bits=2 * b,
            cache_segments=(("Mc", b), ("K", s)),
        )
    raise ValueError(f"unknown scheme {scheme}")


def layout_for(scheme: SchemeId, cfg: SchemeConfig) -> SchemeLayout:
    """Validated layout for cfg (cfg.scheme must equal scheme)."""
    if cfg.scheme != scheme:
        raise ValueError("scheme argument disagrees with config")
    violations = layout_violations(cfg)
    if violations:
        raise ConfigError(violations)
    return _build_layout(cfg)


# ---------------------------------------------------------------------------
# Message formation.  All helpers below take a dict of integer field values
# ("W1".."WD", "K1", "K2", "WT", "WTK") that may be ints or numpy arrays.
# ---------------------------------------------------------------------------


def input_fields(lay: SchemeLayout) -> tuple:
    """Ordered (name, width) inputs that fully determine both codewords."""
    fields = [(f"W{l}", lay.file_bits) for l in range(1, lay.D + 1)]
    if lay.key_bits:
        fields += [("K1", lay.key_bits), ("K2", lay.key_bits)]
    if lay.wtk_bits:
        fields.append(("WTK", lay.wtk_bits))
    if lay.wt_bits:
        fields.append(("WT", lay.wt_bits))
    return tuple(fields)


def _subfile_vals(sub: SubfileLayout, value):
    fb = sub.file_bits
    return {
        name: (value >> (fb - off - w)) & ((1 << w) - 1)
        for name, (off, w) in sub.offsets().items()
    }


def _cat(*parts):
    """Concatenate (value, width) pairs MSB-first; returns (value, width)."""
    v, w = 0, 0
    for pv, pw in parts:
        v = (v << pw) | pv
        w += pw
    return v, w


def _placement_parts(lay: SchemeLayout, f):
    """Secured and randomization placement components, in listing order."""
    s = lay.scheme
    if s == SchemeId.GENERAL_HIGH:
        return [("Mc1", f["K1"], lay.key_bits), ("Mc2", f["K2"], lay.key_bits)], [
            ("WtildeK", f.get("WTK", 0), lay.wtk_bits)
        ]
    sub = lay.subfiles
    W = [_subfile_vals(sub, f[f"W{l}"]) for l in range(1, lay.D + 1)]
    b = sub.width("w1")
    if s == SchemeId.GENERAL_DGT2_LOW:
        mc1, w1 = _cat(*[(W[l]["w1"], b) for l in range(lay.D)])
        mc2, w2 = _cat(*[(W[l]["w2"], b) for l in range(lay.D)])
    elif s == SchemeId.CHAIN_DGT2_LOW:
        mc1, w1 = _cat(*[(W[l]["w1"] ^ W[l + 1]["w1"], b) for l in range(lay.D - 1)])
        mc2, w2 = _cat(*[(W[l]["w2"] ^ W[l + 1]["w2"], b) for l in range(lay.D - 1)])
    else:
        mc1, w1 = W[0]["w1"] ^ W[1]["w1"], b
        mc2, w2 = W[0]["w2"] ^ W[1]["w2"], b
    if s in (SchemeId.SETTING2, SchemeId.SETTING3_C2):
        mc1, w1 = _cat((mc1, w1), (f["K1"], lay.key_bits))
        mc2, w2 = _cat((mc2, w2), (f["K2"], lay.key_bits))
    mc = [("Mc1", mc1, w1), ("Mc2", mc2, w2)]
    if s in EMBED_SCHEMES or s == SchemeId.SETTING4:
        mtc = [("K1", f["K1"], lay.key_bits), ("K2", f["K2"], lay.key_bits)]
    elif lay.wtk_bits:
        mtc = [("WtildeK", f["WTK"], lay.wtk_bits)]
    else:
        mtc = []
    return mc, mtc


def _delivery_parts(lay: SchemeLayout, demand: DemandVector, f):
    """Secured and randomization delivery components, in listing order."""
    s = lay.scheme
    d1, d2 = demand.d1, demand.d2
    if s == SchemeId.GENERAL_HIGH:
        md = [
            ("Md1", f[f"W{d1}"] ^ f["K1"], lay.key_bits),
            ("Md2", f[f"W{d2}"] ^ f["K2"], lay.key_bits),
        ]
        return md, [("Wtilde", f.get("WT", 0), lay.wt_bits)]
    sub = lay.subfiles
    Wd1 = _subfile_vals(sub, f[f"W{d1}"])
    Wd2 = _subfile_vals(sub, f[f"W{d2}"])
    b = sub.width("w1")
    sw = sub.width("ws")
    if s == SchemeId.GENERAL_DGT2_LOW:
        tw = sub.width("wt")
        md = [
            ("Xor", Wd2["w1"] ^ Wd1["w2"], b),
            ("T1", Wd1["wt"], tw),
            ("T2", Wd2["wt"], tw),
        ]
    elif s == SchemeId.CHAIN_DGT2_LOW:
        tw = sub.width("wt")
        md = [
            ("Md1", Wd2["w1"], b),
            ("Md2", Wd1["w2"], b),
            ("T1", Wd1["wt"], tw),
            ("T2", Wd2["wt"], tw),
        ]
    else:
        md = [("Md1", Wd1["w2"], b), ("Md2", Wd2["w1"], b)]
        if s in (SchemeId.SETTING1, SchemeId.SETTING3_C1):
            md += [("S1", Wd1["ws"], sw), ("S2", Wd2["ws"], sw)]
    mtd = []
    if s in EMBED_SCHEMES or s in (SchemeId.SETTING2, SchemeId.SETTING3_C2, SchemeId.SETTING4):
        mtd += [
            ("P1", Wd1["ws"] ^ f["K1"], sw),
            ("P2", Wd2["ws"] ^ f["K2"], sw),
        ]
    if s in (SchemeId.SETTING3_C1, SchemeId.SETTING3_C2):
        mtd.append(("Wtilde", f["WT"], lay.wt_bits))
    return md, mtd


def _placement_index(lay: SchemeLayout, mc: dict, mtc: dict):
    """(bin, embed-listing, leaf) values for the placement codebook.

    For plain-broadcast placement (no codebook) returns the full n-bit
    value under key "plain".
    """
    s = lay.scheme
    if s == SchemeId.SETTING2:
        v, w = _cat(mc["Mc1"], mc["Mc2"])
        return {"plain": v}
    if s == SchemeId.GENERAL_HIGH:
        embed = interleave(mc["Mc1"][0], mc["Mc2"][0], lay.key_bits)
        return {"bin": 0, "embed": embed, "leaf": mtc["WtildeK"][0]}
    bin_v, _ = _cat(mc["Mc1"], mc["Mc2"])
    if s in EMBED_SCHEMES:
        return {"bin": bin_v, "embed": interleave(mtc["K1"][0], mtc["K2"][0], lay.key_bits), "leaf": 0}
    if s == SchemeId.SETTING4:
        leaf, _ = _cat(mtc["K1"], mtc["K2"])
        return {"bin": bin_v, "embed": 0, "leaf": leaf}
    leaf = mtc["WtildeK"][0] if lay.wtk_bits else 0
    return {"bin": bin_v, "embed": 0, "leaf": leaf}


def _delivery_index(lay: SchemeLayout, md: dict, mtd: dict):
    s = lay.scheme
    if s == SchemeId.SETTING1:
        v, _ = _cat(md["Md1"], md["Md2"], md["S1"], md["S2"])
        return {"plain": v}
    if s == SchemeId.GENERAL_HIGH:
        embed = interleave(md["Md1"][0], md["Md2"][0], lay.key_bits)
        return {"bin": 0, "embed": embed, "leaf": mtd["Wtilde"][0]}
    order = [md[name] for name in ("Xor", "Md1", "Md2", "T1", "T2", "S1", "S2") if name in md]
    bin_v, _ = _cat(*order)
    if s in EMBED_SCHEMES:
        sw = lay.subfiles.width("ws")
        return {"bin": bin_v, "embed": interleave(mtd["P1"][0], mtd["P2"][0], sw), "leaf": 0}
    leaf, _ = _cat(*[mtd[name] for name in ("P1", "P2", "Wtilde") if name in mtd])
    return {"bin": bin_v, "embed": 0, "leaf": leaf}


def _encode_phase(lay, spec_cb, index):
    if "plain" in index:
        return index["plain"]
    return spec_cb.encode_index(index["bin"], index["embed"], index["leaf"])


def encode_round(lay: SchemeLayout, cb_c, cb_d, demand: DemandVector, f):
    """Both phase codewords from raw field values (ints or arrays)."""
    mc, mtc = _placement_parts(lay, f)
    md, mtd = _delivery_parts(lay, demand, f)
    to_map = lambda parts: {name: (v, w) for name, v, w in parts}
    xc = _encode_phase(lay, cb_c, _placement_index(lay, to_map(mc), to_map(mtc)))
    xd = _encode_phase(lay, cb_d, _delivery_index(lay, to_map(md), to_map(mtd)))
    return xc, xd


# ---------------------------------------------------------------------------
# Scalar round API.
# ---------------------------------------------------------------------------


def field_values(lay: SchemeLayout, library: FileLibrary, keys: KeyMaterial) -> dict:
    """Raw integer inputs for encode_round from typed library/key material."""
    f = {f"W{l}": library.file(l).value for l in range(1, lay.D + 1)}
    if lay.key_bits:
        f["K1"], f["K2"] = keys.k1.value, keys.k2.value
    if lay.wtk_bits:
        f["WTK"] = keys.wtilde_k.value
    if lay.wt_bits:
        f["WT"] = keys.wtilde.value
    return f


def form_phase_messages(
    lay: SchemeLayout, library: FileLibrary, keys: KeyMaterial, demand: DemandVector
) -> PhaseMessages:
    """Labeled message bundles for both phases.

    The placement bundles are computed before the demand is read, which
    makes demand-independence of placement structural.
    """
    f = field_values(lay, library, keys)
    mc, mtc = _placement_parts(lay, f)
    demand.validate(lay.D)
    md, mtd = _delivery_parts(lay, demand, f)
    wrap = lambda parts: {name: BitString(v, w) for name, v, w in parts}
    return PhaseMessages(mc=wrap(mc), mtc=wrap(mtc), md=wrap(md), mtd=wrap(mtd))


def _as_pairs(bundle: dict) -> dict:
    return {name: (bs.value, bs.length) for name, bs in bundle.items()}


def run_placement(lay: SchemeLayout, messages: PhaseMessages, cb_c):
    """Placement codeword plus both receivers' cache contents."""
    index = _placement_index(lay, _as_pairs(messages.mc), _as_pairs(messages.mtc))
    x_c = BitString(_encode_phase(lay, cb_c, index), lay.n)
    caches = _caches_from_xc(lay, x_c, cb_c)
    return x_c, caches[0], caches[1]


def _caches_from_xc(lay: SchemeLayout, x_c: BitString, cb_c) -> tuple:
    """What each receiver recovers from x_c and stores, per the scheme."""
    s = lay.scheme
    if s == SchemeId.SETTING2:
        bin_v = x_c.value
        bin_w = lay.n
    else:
        bin_v, embed_v, leaf_v = cb_c.decode_index(x_c.value)
        bin_w = lay.placement_spec.bin_bits
    k = lay.key_bits

    def seg(value, width, off, w):
        return BitString((value >> (width - off - w)) & ((1 << w) - 1), w)

    if s == SchemeId.GENERAL_HIGH:
        k1, k2 = deinterleave(embed_v, k)
        return (
            CacheContent({"K": BitString(k1, k)}),
            CacheContent({"K": BitString(k2, k)}),
        )
    mc_w = dict(lay.cache_segments)["Mc"]
    if s in (SchemeId.SETTING2, SchemeId.SETTING3_C2):
        # bin carries Mc1 || K1 || Mc2 || K2
        half = mc_w + k
        c1 = CacheContent({"Mc": seg(bin_v, bin_w, 0, mc_w), "K": seg(bin_v, bin_w, mc_w, k)})
        c2 = CacheContent({"Mc": seg(bin_v, bin_w, half, mc_w), "K": seg(bin_v, bin_w, half + mc_w, k)})
        return (c1, c2)
    c1 = {"Mc": seg(bin_v, bin_w, 0, mc_w)}
    c2 = {"Mc": seg(bin_v, bin_w, mc_w, mc_w)}
    if s in EMBED_SCHEMES:
        k1, k2 = deinterleave(embed_v, k)
        c1["K"], c2["K"] = BitString(k1, k), BitString(k2, k)
    elif s == SchemeId.SETTING4:
        c1["K"] = seg(leaf_v, 2 * k, 0, k)
        c2["K"] = seg(leaf_v, 2 * k, k, k)
    return (CacheContent(c1), CacheContent(c2))


def run_delivery(lay: SchemeLayout, messages: PhaseMessages, cb_d) -> BitString:
    index = _delivery_index(lay, _as_pairs(messages.md), _as_pairs(messages.mtd))
    return BitString(_encode_phase(lay, cb_d, index), lay.n)


def _delivery_view(lay: SchemeLayout, x_d: BitString, cb_d) -> dict:
    """Re-split x_d into the named delivery components every receiver sees."""
    s = lay.scheme
    if s == SchemeId.SETTING1:
        bin_v, bin_w = x_d.value, lay.n
        embed_v = leaf_v = 0
    else:
        bin_v, embed_v, leaf_v = cb_d.decode_index(x_d.value)
        bin_w = lay.delivery_spec.bin_bits
    sub = lay.subfiles
    out = {}
    pos = 0

    def take(width):
        nonlocal pos
        v = (bin_v >> (bin_w - pos - width)) & ((1 << width) - 1)
        pos += width
        return v

    if s == SchemeId.GENERAL_HIGH:
        m1, m2 = deinterleave(embed_v, lay.key_bits)
        out["Md1"], out["Md2"] = m1, m2
        return out
    b = sub.width("w1")
    sw = sub.width("ws")
    if s == SchemeId.GENERAL_DGT2_LOW:
        tw = sub.width("wt")
        out["Xor"], out["T1"], out["T2"] = take(b), take(tw), take(tw)
        out["P1"], out["P2"] = deinterleave(embed_v, sw)
        return out
    if s == SchemeId.CHAIN_DGT2_LOW:
        tw = sub.width("wt")
        out["Md1"], out["Md2"], out["T1"], out["T2"] = take(b), take(b), take(tw), take(tw)
        out["P1"], out["P2"] = deinterleave(embed_v, sw)
        return out
    out["Md1"], out["Md2"] = take(b), take(b)
    if s == SchemeId.GENERAL_D2_LOW:
        out["P1"], out["P2"] = deinterleave(embed_v, sw)
    elif s in (SchemeId.SETTING1, SchemeId.SETTING3_C1):
        out["S1"], out["S2"] = take(sw), take(sw)
    else:
        # pads travel in the leaf: P1 || P2 (|| fresh randomization)
        lw = lay.delivery_spec.leaf_bits
        out["P1"] = (leaf_v >> (lw - sw)) & ((1 << sw) - 1)
        out["P2"] = (leaf_v >> (lw - 2 * sw)) & ((1 << sw) - 1)
    return out


def receiver_decode(
    lay: SchemeLayout,
    j: int,
    cache_j: CacheContent,
    x_d: BitString,
    cb_d,
    demand: DemandVector,
) -> BitString:
    """Exact reconstruction of receiver j's demanded file."""
    if j not in (1, 2):
        raise InconsistentTranscript(f"receiver index {j}")
    demand.validate(lay.D)
    s = lay.scheme
    view = _delivery_view(lay, x_d, cb_d)
    d_own = demand.request(j)
    d_other = demand.request(3 - j)

    if s == SchemeId.GENERAL_HIGH:
        m = view["Md1"] if j == 1 else view["Md2"]
        return BitString(m ^ cache_j.get("K").value, lay.file_bits)

    sub = lay.subfiles
    b = sub.width("w1")
    sw = sub.width("ws")
    own_layer = "w1" if j == 1 else "w2"

    if s == SchemeId.GENERAL_DGT2_LOW:
        mc = cache_j.get("Mc")
        cached = {l: mc.take((l - 1) * b, b).value for l in range(1, lay.D + 1)}
        own = cached[d_own]
        other = view["Xor"] ^ cached[d_other]
        wt = view["T1"] if j == 1 else view["T2"]
        ws = (view["P1"] if j == 1 else view["P2"]) ^ cache_j.get("K").value
        parts = {own_layer: own, ("w2" if j == 1 else "w1"): other, "wt": wt, "ws": ws}
        v, _ = _cat(*[(parts[name], w) for name, w in sub.segments])
        return BitString(v, lay.file_bits)

    if s == SchemeId.CHAIN_DGT2_LOW:
        direct = view["Md1"] if j == 1 else view["Md2"]  # W_{d_other}^{(j)} when j=1 gets Md1
        # Md1 = W_{d2}^{(1)}, Md2 = W_{d1}^{(2)}: the directly sent piece is
        # the other receiver's demand in this receiver's cached layer.
        if d_own == d_other:
            own = direct
        else:
            mc = cache_j.get("Mc")
            lo, hi = min(d_own, d_other), max(d_own, d_other)
            acc = 0
            for i in range(lo, hi):
                acc ^= mc.take((i - 1) * b, b).value
            own = acc ^ direct
        other = view["Md2"] if j == 1 else view["Md1"]
        wt = view["T1"] if j == 1 else view["T2"]
        ws = (view["P1"] if j == 1 else view["P2"]) ^ cache_j.get("K").value
        parts = {own_layer: own, ("w2" if j == 1 else "w1"): other, "wt": wt, "ws": ws}
        v, _ = _cat(*[(parts[name], w) for name, w in sub.segments])
        return BitString(v, lay.file_bits)

    # D=2 family: Md1 = W_{d1}^{(2)}, Md2 = W_{d2}^{(1)}
    if j == 1:
        other_layer_piece = view["Md1"]  # W_{d1}^{(2)}
        cross_piece = view["Md2"]  # W_{d2}^{(1)}
    else:
        other_layer_piece = view["Md2"]  # W_{d2}^{(1)}
        cross_piece = view["Md1"]  # W_{d1}^{(2)}
    if d_own == d_other:
        own_piece = cross_piece
    else:
        own_piece = cache_j.get("Mc").value ^ cross_piece
    if s in (SchemeId.SETTING1, SchemeId.SETTING3_C1):
        ws = view["S1"] if j == 1 else view["S2"]
    else:
        ws = (view["P1"] if j == 1 else view["P2"]) ^ cache_j.get("K").value
    parts = {own_layer: own_piece, ("w2" if j == 1 else "w1"): other_layer_piece, "ws": ws}
    v, _ = _cat(*[(parts[name], w) for name, w in sub.segments])
    return BitString(v, lay.file_bits)


# ---------------------------------------------------------------------------
# Seeded generation and full rounds.
# ---------------------------------------------------------------------------


def generate_library(lay: SchemeLayout, seed: int) -> FileLibrary:
    rng = np.random.Generator(np.random.PCG64(seed))
    return FileLibrary(tuple(BitString.random(rng, lay.file_bits) for _ in range(lay.D)))


def generate_keys(lay: SchemeLayout, key_seed: int, aux_seed: int) -> KeyMaterial:
    krng = np.random.Generator(np.random.PCG64(key_seed))
    arng = np.random.Generator(np.random.PCG64(aux_seed))
    k1 = k2 = wt = wtk = None
    if lay.key_bits:
        k1 = BitString.random(krng, lay.key_bits)
        k2 = BitString.random(krng, lay.key_bits)
    if lay.wtk_bits:
        wtk = BitString.random(arng, lay.wtk_bits)
    if lay.wt_bits:
        wt = BitString.random(arng, lay.wt_bits)
    return KeyMaterial(k1=k1, k2=k2, wtilde=wt, wtilde_k=wtk)


class SchemeRunner:
    """One validated configuration with its codebooks built once.

    Rounds for different library/key draws and demands share the
    immutable codebooks, which dominate construction cost.
    """

    def __init__(self, cfg: SchemeConfig):
        validate_config(cfg)
        self.cfg = cfg
        self.layout = _build_layout(cfg)
        self.cb_c = self.cb_d = None
        if self.layout.placement_spec is not None:
            self.cb_c = build_codebook(
                cfg.n, self.layout.placement_spec, derive_seed(cfg.seed, "placement-codebook")
            )
        if self.layout.delivery_spec is not None:
            self.cb_d = build_codebook(
                cfg.n, self.layout.delivery_spec, derive_seed(cfg.seed, "delivery-codebook")
            )

    def draw(self, label: str = "") -> tuple:
        """Deterministic (library, keys) draw; vary ``label`` for fresh draws."""
        suffix = f"-{label}" if label else ""
        library = generate_library(self.layout, derive_seed(self.cfg.seed, f"library{suffix}"))
        keys = generate_keys(
            self.layout,
            derive_seed(self.cfg.seed, f"keys{suffix}"),
            derive_seed(self.cfg.seed, f"aux{suffix}"),
        )
        return library, keys

    def round(self, library: FileLibrary, keys: KeyMaterial, demand: DemandVector) -> TranscriptRecord:
        lay = self.layout
        messages = form_phase_messages(lay, library, keys, demand)
        x_c, cache_1, cache_2 = run_placement(lay, messages, self.cb_c)
        x_d = run_delivery(lay, messages, self.cb_d)
        decoded = tuple(
            receiver_decode(lay, j, cache, x_d, self.cb_d, demand)
            for j, cache in ((1, cache_1), (2, cache_2))
        )
        return TranscriptRecord(self.cfg, demand, x_c, x_d, (cache_1, cache_2), decoded)


def run_round(cfg: SchemeConfig, demand: DemandVector) -> TranscriptRecord:
    """Convenience: build, draw from the master seed, and run one round."""
    runner = SchemeRunner(cfg)
    library, keys = runner.draw()
    return runner.round(library, keys, demand)


# ---------------------------------------------------------------------------
# Embedding-exposure index sets (what a split tap budget can reveal).
# ---------------------------------------------------------------------------


def placement_exposed_key_labels(lay: SchemeLayout, mu1: int) -> set:
    """Key labels resolvable from mu1 tapped placement symbols.

    With forward consumption, a tap budget of mu1 exposes the deepest
    mu1 embedding layers, i.e. the last mu1 labels in consumption order.
    """
    spec = lay.placement_spec
    cons = spec.consumption_labels()
    return set(cons[len(cons) - mu1 :]) if mu1 else set()


def delivery_exposed_key_labels(lay: SchemeLayout, mu2: int) -> set:
    """Key labels protecting the pad bits that mu2 delivery taps expose."""
    spec = lay.delivery_spec
    cons = spec.consumption_labels()
    exposed = cons[len(cons) - mu2 :] if mu2 else ()
    return {label.replace("P", "K", 1) for label in exposed}
