"""CRC-assisted sparse superposition coding over the SIMO-OFDM channel.

A codeword is the sum of V sub-codewords, one picked per layer from a
D-entry dictionary. Decoding is a breadth-first K-best search over the
layered tree, followed by optional refinement sweeps that revisit each
layer, and finally CRC-based selection among the K survivors.
"""

import struct
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .crc import CrcPolynomial, crc_check_batch
from .exceptions import CodebookFormatError, ConfigError, DimensionError

_MAGIC = b"CIPSACCB"
_VERSION = 1


@dataclass(frozen=True)
class Codebook:
    """V x D x N complex dictionary; entries[v, d] is one sub-codeword."""

    entries: np.ndarray
    provenance: str = "unknown"

    @property
    def n_layers(self) -> int:
        return self.entries.shape[0]

    @property
    def layer_size(self) -> int:
        return self.entries.shape[1]

    @property
    def codeword_len(self) -> int:
        return self.entries.shape[2]

    @property
    def bits_per_layer(self) -> int:
        return self.layer_size.bit_length() - 1


@dataclass(frozen=True)
class CsiCodebook:
    """Channel-weighted codebook: entries[v, d] lives in C^(N_r*N), stacked
    antenna-major to match ``vec(Y) = Y.reshape(-1)``."""

    entries: np.ndarray


@dataclass(frozen=True)
class Candidate:
    """One surviving leaf of the K-best search.

    ``indices`` follow the decoding order of the layers, ``cumulative`` is
    the running sum of the selected channel-weighted sub-codewords, and
    ``score`` equals ``||y - cumulative||^2 - ||y||^2``.
    """

    indices: tuple
    cumulative: np.ndarray
    score: float


def make_random_codebook(n_layers: int, layer_size: int, codeword_len: int,
                         seed: int) -> Codebook:
    """i.i.d. CN(0, 1/V) codebook so that codewords have mean energy N."""
    if layer_size < 2 or layer_size & (layer_size - 1):
        raise ConfigError(f"layer_size must be a power of two, got {layer_size}")
    if n_layers < 1 or codeword_len < 1:
        raise ConfigError("n_layers and codeword_len must be >= 1")
    rng = np.random.default_rng(seed)
    scale = np.sqrt(1.0 / (2.0 * n_layers))
    shape = (n_layers, layer_size, codeword_len)
    entries = rng.normal(0.0, scale, shape) + 1j * rng.normal(0.0, scale, shape)
    return Codebook(entries=entries, provenance=f"random-gaussian(seed={seed})")


def save_codebook(codebook: Codebook, path) -> None:
    v, d, n = codebook.entries.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIII", _VERSION, v, d, n))
        fh.write(np.ascontiguousarray(codebook.entries, dtype="<c16").tobytes())


def load_codebook(path, config=None) -> Codebook:
    """Read a codebook file, optionally validating it against a config."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != _MAGIC:
        raise CodebookFormatError(
            f"bad magic {blob[:8]!r}, expected {_MAGIC!r}", offset=0)
    if len(blob) < 24:
        raise CodebookFormatError("truncated header", offset=len(blob))
    version, v, d, n = struct.unpack("<IIII", blob[8:24])
    if version != _VERSION:
        raise CodebookFormatError(f"unsupported version {version}", offset=8)
    if v < 1 or d < 2 or n < 1 or d & (d - 1):
        raise CodebookFormatError(f"bad dimensions V={v} D={d} N={n}", offset=12)
    expect = 24 + v * d * n * 16
    if len(blob) != expect:
        raise CodebookFormatError(
            f"payload has {len(blob) - 24} bytes, expected {expect - 24}",
            offset=min(len(blob), expect))
    entries = np.frombuffer(blob[24:], dtype="<c16").astype(np.complex128)
    cb = Codebook(entries=entries.reshape(v, d, n), provenance=f"loaded({path})")
    if config is not None:
        if (v, d, n) != (config.n_layers, config.layer_size, config.n_subcarriers):
            raise ConfigError(
                f"codebook dims (V={v}, D={d}, N={n}) do not match config "
                f"(V={config.n_layers}, D={config.layer_size}, "
                f"N={config.n_subcarriers})")
        if v * cb.bits_per_layer != config.n_coded_bits:
            raise ConfigError(
                f"codebook carries {v * cb.bits_per_layer} bits, config needs "
                f"{config.n_coded_bits}")
    return cb


def bits_to_indices(bits, n_layers: int, bits_per_layer: int) -> np.ndarray:
    """Split a coded bit sequence into per-layer big-endian indices."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape != (n_layers * bits_per_layer,):
        raise DimensionError(
            f"expected {n_layers * bits_per_layer} bits, got shape {bits.shape}")
    weights = 1 << np.arange(bits_per_layer - 1, -1, -1)
    return bits.reshape(n_layers, bits_per_layer) @ weights


def indices_to_bits(indices, bits_per_layer: int) -> np.ndarray:
    """Inverse of :func:`bits_to_indices`; accepts (V,) or (K, V) arrays."""
    idx = np.asarray(indices, dtype=np.int64)
    shifts = np.arange(bits_per_layer - 1, -1, -1)
    bits = (idx[..., None] >> shifts) & 1
    return bits.reshape(*idx.shape[:-1], idx.shape[-1] * bits_per_layer).astype(np.uint8)


def sparc_encode(bits, codebook: Codebook) -> np.ndarray:
    """Map coded bits to the superposition of the selected sub-codewords."""
    idx = bits_to_indices(bits, codebook.n_layers, codebook.bits_per_layer)
    return codebook.entries[np.arange(codebook.n_layers), idx].sum(axis=0)


def update_codebook_csi(codebook: Codebook, h) -> CsiCodebook:
    """Weight every sub-codeword by the per-antenna channel response.

    ``h`` is N_r x N; output entry (v, d) holds H[r, n] * C[v, d, n] at
    position r*N + n.
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim == 1:
        h = h[None, :]
    v, d, n = codebook.entries.shape
    if h.ndim != 2 or h.shape[1] != n:
        raise DimensionError(f"H shape {h.shape} does not match codeword length {n}")
    weighted = h[None, None, :, :] * codebook.entries[:, :, None, :]
    return CsiCodebook(entries=weighted.reshape(v, d, h.shape[0] * n))


def _layer_stats(entries, y):
    """Per-(layer, index) energies and matched-filter inner products."""
    cnorm2 = np.einsum("vdq,vdq->vd", entries.conj(), entries).real
    cy = np.einsum("vdq,q->vd", entries.conj(), y).real
    return cnorm2, cy


def choose_layer_order(csi: CsiCodebook, y) -> np.ndarray:
    """Decode layers with the largest single-layer score margin first.

    The margin of a layer is the gap between its two smallest standalone
    scores ``||c||^2 - 2 Re(c^H y)``; a big gap means the layer's best index
    is unambiguous and decoding it early limits error propagation. Ties
    keep ascending layer order.
    """
    y = np.asarray(y, dtype=np.complex128)
    cnorm2, cy = _layer_stats(csi.entries, y)
    scores = cnorm2 - 2.0 * cy
    if scores.shape[1] < 2:
        gaps = np.zeros(scores.shape[0])
    else:
        part = np.partition(scores, 1, axis=1)
        gaps = part[:, 1] - part[:, 0]
    return np.argsort(-gaps, kind="stable")


def _select_smallest(scores_flat, k):
    """Indices of the k smallest scores, ordered by (score, index)."""
    if scores_flat.size <= k:
        return np.argsort(scores_flat, kind="stable")
    part = np.argpartition(scores_flat, k - 1)[:k]
    return part[np.lexsort((part, scores_flat[part]))]


def _kbest_arrays(entries, entries_conj, k, order, cnorm2, cy):
    n_layers = entries.shape[0]
    d = entries.shape[1]
    layer0 = order[0]
    child = cnorm2[layer0] - 2.0 * cy[layer0]
    sel = _select_smallest(child, k)
    scores = child[sel]
    cum = entries[layer0][sel].copy()
    idx = sel[:, None].astype(np.int64)
    for pos in range(1, n_layers):
        layer = order[pos]
        cu = (cum @ entries_conj[layer].T).real
        child = scores[:, None] + cnorm2[layer][None, :] + 2.0 * (cu - cy[layer][None, :])
        sel = _select_smallest(child.ravel(), k)
        anc, dnew = sel // d, sel % d
        scores = child.ravel()[sel]
        cum = cum[anc] + entries[layer][dnew]
        idx = np.concatenate([idx[anc], dnew[:, None]], axis=1)
    return idx, cum, scores


def kbest_decode(y, csi: CsiCodebook, k: int, order) -> list:
    """Breadth-first layered search keeping the K best partial sums.

    Returns at most K candidates sorted by ascending score; candidate
    indices follow ``order``.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    y = np.asarray(y, dtype=np.complex128)
    order = np.asarray(order, dtype=np.int64)
    cnorm2, cy = _layer_stats(csi.entries, y)
    idx, cum, scores = _kbest_arrays(csi.entries, csi.entries.conj(), k, order,
                                     cnorm2, cy)
    return [Candidate(tuple(int(x) for x in idx[i]), cum[i], float(scores[i]))
            for i in range(idx.shape[0])]


def _distinct_smallest(flat, idx, pos, d, k):
    """(ancestor, index) pairs of the k smallest distinct child tuples.

    A child tuple is its parent's row with position ``pos`` replaced, so
    two children coincide only when their parents agree everywhere else.
    Each tuple thus appears at most n_parents times and the k smallest
    distinct ones are guaranteed to sit among the k*n_parents smallest
    children, which keeps the partition short.
    """
    n_parents = idx.shape[0]
    cap = min(flat.size, k * n_parents)
    if cap < flat.size:
        cand = np.argpartition(flat, cap - 1)[:cap]
    else:
        cand = np.arange(flat.size)
    cand = cand[np.lexsort((cand, flat[cand]))]
    anc, dnew = cand // d, cand % d
    if idx.shape[1] > 1:
        stripped = np.delete(idx, pos, axis=1)
        _, gid = np.unique(stripped, axis=0, return_inverse=True)
    else:
        gid = np.zeros(n_parents, dtype=np.int64)
    keys = gid[anc] * d + dnew
    _, first = np.unique(keys, return_index=True)
    first.sort()
    first = first[:k]
    return anc[first], dnew[first]


def _looped_arrays(entries, entries_conj, order, n_sweeps, k, idx, cum, scores,
                   cnorm2, cy):
    d = entries.shape[1]
    for _ in range(n_sweeps):
        for pos in range(order.shape[0]):
            layer = order[pos]
            d_old = idx[:, pos]
            c_old = entries[layer][d_old]
            stripped = cum - c_old
            dots = np.einsum("kq,kq->k", c_old.conj(), stripped).real
            base = scores - cnorm2[layer][d_old] - 2.0 * (dots - cy[layer][d_old])
            cu = (stripped @ entries_conj[layer].T).real
            child = base[:, None] + cnorm2[layer][None, :] + 2.0 * (cu - cy[layer][None, :])
            anc, dnew = _distinct_smallest(child.ravel(), idx, pos, d, k)
            scores = child[anc, dnew]
            cum = stripped[anc] + entries[layer][dnew]
            idx = idx[anc]
            idx[:, pos] = dnew
    return idx, cum, scores


def looped_kbest(candidates: Sequence[Candidate], y, csi: CsiCodebook, order,
                 n_sweeps: int) -> list:
    """Refine K-best survivors by re-deciding one layer at a time.

    Each sweep revisits the layers in decode order; for every candidate the
    visited layer's contribution is subtracted and all D replacements are
    scored, then the K best distinct index tuples over all candidates
    survive. Every candidate is its own re-expansion with the original
    index, so the best score never increases.
    """
    if n_sweeps == 0 or not candidates:
        return list(candidates)
    y = np.asarray(y, dtype=np.complex128)
    order = np.asarray(order, dtype=np.int64)
    cnorm2, cy = _layer_stats(csi.entries, y)
    idx = np.asarray([c.indices for c in candidates], dtype=np.int64)
    cum = np.asarray([c.cumulative for c in candidates])
    scores = np.asarray([c.score for c in candidates])
    k = len(candidates)
    idx, cum, scores = _looped_arrays(csi.entries, csi.entries.conj(), order,
                                      n_sweeps, k, idx, cum, scores, cnorm2, cy)
    sort = np.argsort(scores, kind="stable")
    return [Candidate(tuple(int(x) for x in idx[i]), cum[i], float(scores[i]))
            for i in sort]


def _candidate_bits(idx, order, bits_per_layer):
    """Bit rows for candidate index matrix ``idx`` given the decode order."""
    inv = np.argsort(order)
    natural = idx[:, inv]
    return indices_to_bits(natural, bits_per_layer)


def crc_select(candidates: Sequence[Candidate], order, poly: CrcPolynomial,
               bits_per_layer: int):
    """First candidate (by ascending score) whose bits pass the CRC.

    Returns ``(flag, bits)``; on total CRC failure the flag is 0 and the
    best-scoring candidate's bits are returned anyway.
    """
    order = np.asarray(order, dtype=np.int64)
    idx = np.asarray([c.indices for c in candidates], dtype=np.int64)
    rows = _candidate_bits(idx, order, bits_per_layer)
    passed = crc_check_batch(rows, poly)
    hits = np.flatnonzero(passed)
    if hits.size:
        return 1, rows[hits[0]]
    return 0, rows[0]


def decode_packet(y_grid, h_grid, codebook: Codebook, k: int, n_sweeps: int,
                  poly: CrcPolynomial):
    """Full per-packet pipeline: CSI weighting, layer ordering, K-best search,
    refinement sweeps, CRC selection."""
    y_grid = np.asarray(y_grid, dtype=np.complex128)
    h_grid = np.asarray(h_grid, dtype=np.complex128)
    if y_grid.shape != h_grid.shape:
        raise DimensionError(
            f"Y {y_grid.shape} and H {h_grid.shape} shapes differ")
    y = y_grid.reshape(-1)
    csi = update_codebook_csi(codebook, h_grid)
    order = choose_layer_order(csi, y)
    entries = csi.entries
    entries_conj = entries.conj()
    cnorm2, cy = _layer_stats(entries, y)
    idx, cum, scores = _kbest_arrays(entries, entries_conj, k, order, cnorm2, cy)
    if n_sweeps > 0:
        idx, cum, scores = _looped_arrays(entries, entries_conj, order, n_sweeps,
                                          k, idx, cum, scores, cnorm2, cy)
        sort = np.argsort(scores, kind="stable")
        idx = idx[sort]
    rows = _candidate_bits(idx, order, codebook.bits_per_layer)
    passed = crc_check_batch(rows, poly)
    hits = np.flatnonzero(passed)
    if hits.size:
        return 1, rows[hits[0]]
    return 0, rows[0]
