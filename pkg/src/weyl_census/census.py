"""Exhaustive census of a Schottky group up to a word-length bound.

The table is column-oriented: one numpy array per field, one row per
reduced word, rows in length-then-lexicographic order.  Every counter and
estimator in :mod:`weyl_census.growth` is a read-only function of it.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import freegroup as fg
from .errors import BudgetExceeded, FingerprintMismatch, Overflow, ParseError
from .schottky import OVERFLOW_LIMIT, RESCALE_EVERY, SchottkySystem, unit_det, ensure_validated
from .symspace import cartan_projection, jordan_projection

DEFAULT_BUDGET = 10**8
THREADS_ENV = "WEYL_CENSUS_THREADS"


@dataclass
class CensusTable:
    """Per-word records of a census.

    Only ``distance`` is mandatory, so synthetic tables can be assembled
    directly for testing the estimators.  ``class_id`` is -1 for the
    identity; class-level data lives in the ``class_*`` arrays.
    """

    distance: np.ndarray
    length: np.ndarray | None = None
    words: np.ndarray | None = None
    word_len: np.ndarray | None = None
    very_reduced: np.ndarray | None = None
    primitive: np.ndarray | None = None
    class_id: np.ndarray | None = None
    cartan: np.ndarray | None = None
    jordan: np.ndarray | None = None
    flags: np.ndarray | None = None
    inv_flags: np.ndarray | None = None
    flag_defined: np.ndarray | None = None
    class_words: list = field(default_factory=list)
    class_power: np.ndarray | None = None
    class_length: np.ndarray | None = None
    num_generators: int = 0
    dim: int = 2
    max_len: int = 0
    horizon_R: float = np.inf
    horizon_t: float = np.inf
    max_displacement: float = np.nan
    fingerprint: str = ""
    config: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.distance)

    @property
    def rank(self) -> int:
        return self.dim - 1

    def word(self, i: int) -> tuple:
        n = int(self.word_len[i])
        return tuple(int(c) for c in self.words[i, :n])

    def word_string(self, i: int) -> str:
        return fg.format_word(self.word(i), self.num_generators)

    def class_key(self, cid: int) -> str:
        return fg.format_word(self.class_words[cid], self.num_generators)

    def index_of(self, w) -> int:
        """Row index of a reduced word (length-lexicographic rank)."""
        return int(word_rank(np.asarray([w], dtype=np.int64).reshape(1, len(w)),
                             self.num_generators)[0])

    def cartan_dir(self) -> np.ndarray:
        """Unit Cartan directions; NaN rows where the distance is below 1e-9."""
        with np.errstate(invalid="ignore", divide="ignore"):
            out = self.cartan / self.distance[:, None]
        out[self.distance < 1e-9] = np.nan
        return out


def level_offset(l: int, k) -> np.ndarray:
    """Row index of the first word of length k (number of words shorter than k)."""
    k = np.asarray(k, dtype=np.int64)
    if l == 1:
        return np.where(k == 0, 0, 2 * k - 1)
    q = 2 * l - 1
    # 1 + 2l (q^(k-1) - 1)/(q - 1) for k >= 1
    return np.where(k == 0, 0, 1 + (2 * l * (q ** np.maximum(k - 1, 0) - 1)) // (q - 1))


def word_rank(codes: np.ndarray, l: int, lengths: np.ndarray | None = None) -> np.ndarray:
    """Length-lexicographic rank of reduced words given as rows of ``codes``.

    Rows may be right-padded; ``lengths`` gives the true lengths (default:
    full width).
    """
    codes = np.asarray(codes, dtype=np.int64)
    if lengths is None:
        lengths = np.full(len(codes), codes.shape[1], dtype=np.int64)
    return level_offset(l, lengths) + _lex_rank(codes, lengths, l)


def _lex_rank(codes: np.ndarray, lengths: np.ndarray, l: int) -> np.ndarray:
    q = 2 * l - 1
    n, width = codes.shape
    rank = np.zeros(n, dtype=np.int64)
    for i in range(width):
        active = i < lengths
        c = codes[:, i]
        if i == 0:
            digit = c
        else:
            digit = c - (c > (codes[:, i - 1] ^ 1))
        rank = np.where(active, rank * q + digit if i else digit, rank)
    return rank


def projected_count(l: int, max_len: int) -> int:
    return fg.count_words(l, max_len)


def system_fingerprint(sys: SchottkySystem) -> str:
    payload = json.dumps({"config": sys.config(), "version": __version__},
                         sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else 1
    return max(1, int(threads))


@dataclass
class _Level:
    codes: np.ndarray
    cartan: np.ndarray
    jordan_vr: np.ndarray
    vr: np.ndarray
    frames: np.ndarray | None
    inv_frames: np.ndarray | None
    regular: np.ndarray | None


def _process_level(codes, mats, invs, sys: SchottkySystem, with_flags: bool) -> _Level:
    if not (np.all(np.abs(mats) <= OVERFLOW_LIMIT) and np.all(np.abs(invs) <= OVERFLOW_LIMIT)):
        raise Overflow(f"matrix entries exceed {OVERFLOW_LIMIT:g} at word length {codes.shape[1]}")
    h = cartan_projection(mats, invs)
    vr = codes[:, -1] != (codes[:, 0] ^ 1)
    jord = np.full_like(h, np.nan)
    if vr.any():
        jord[vr] = jordan_projection(mats[vr], invs[vr])
    frames = inv_frames = regular = None
    if with_flags:
        regular = np.all(-np.diff(h, axis=-1) > sys.tolerances.gap, axis=-1)
        frames = np.linalg.svd(mats)[0]
        inv_frames = np.linalg.svd(invs)[0]
    return _Level(codes.astype(np.int8), h, jord, vr, frames, inv_frames, regular)


def _subtree(sys: SchottkySystem, first: int, max_len: int, with_flags: bool) -> list[_Level]:
    n_letters = 2 * sys.num_generators
    codes = np.array([[first]], dtype=np.int64)
    mats = sys.letters[first][None].copy()
    invs = sys.letter_inverses[first][None].copy()
    levels = [_process_level(codes, mats, invs, sys, with_flags)]
    for k in range(2, max_len + 1):
        last = codes[:, -1]
        cand = np.arange(n_letters)
        allowed = cand[None, :] != (last[:, None] ^ 1)
        parent, child = np.nonzero(allowed)
        codes = np.concatenate([codes[parent], child[:, None]], axis=1)
        mats = mats[parent] @ sys.letters[child]
        invs = sys.letter_inverses[child] @ invs[parent]
        if k % RESCALE_EVERY == 0:
            mats, invs = unit_det(mats, invs)
        levels.append(_process_level(codes, mats, invs, sys, with_flags))
    return levels


def build_census(sys: SchottkySystem, max_len: int, *, with_flags: bool = True,
                 threads: int | None = None, budget: int = DEFAULT_BUDGET) -> CensusTable:
    """Sweep every reduced word of length <= max_len.

    The word tree is split by first letter; subtrees run on a thread pool
    and are merged in letter order, so the result does not depend on the
    number of workers.
    """
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    l = sys.num_generators
    total = projected_count(l, max_len)
    if total > budget:
        raise BudgetExceeded(f"census of {total} words exceeds the budget of {budget}")
    sys = ensure_validated(sys)
    d = sys.dim
    n_letters = 2 * l

    workers = resolve_threads(threads)
    if max_len >= 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            subtrees = list(pool.map(lambda c: _subtree(sys, c, max_len, with_flags),
                                     range(n_letters)))
    else:
        subtrees = []

    words = np.full((total, max(max_len, 1)), -1, dtype=np.int8)
    word_len = np.zeros(total, dtype=np.int8)
    cartan = np.zeros((total, d))
    jordan = np.zeros((total, d))
    vr = np.zeros(total, dtype=bool)
    if with_flags:
        flags = np.zeros((total, d, d))
        inv_flags = np.zeros((total, d, d))
        flags[0] = inv_flags[0] = np.eye(d)
        regular = np.zeros(total, dtype=bool)
    row = 1
    for k in range(1, max_len + 1):
        for c in range(n_letters):
            lev = subtrees[c][k - 1]
            n = len(lev.codes)
            sl = slice(row, row + n)
            words[sl, :k] = lev.codes
            word_len[sl] = k
            cartan[sl] = lev.cartan
            jordan[sl] = lev.jordan_vr
            vr[sl] = lev.vr
            if with_flags:
                flags[sl] = lev.frames
                inv_flags[sl] = lev.inv_frames
                regular[sl] = lev.regular
            row += n
    assert row == total
    del subtrees

    distance = np.linalg.norm(cartan, axis=1)

    # cyclic cores: strip matching outer letters
    strip = np.zeros(total, dtype=np.int64)
    still = np.ones(total, dtype=bool)
    wl = word_len.astype(np.int64)
    w64 = words.astype(np.int64)
    for i in range(max(max_len, 1) // 2 + 1):
        j = wl - 1 - i
        ok = still & (i < j)
        jj = np.clip(j, 0, words.shape[1] - 1)
        match = ok & (w64[:, i] == (w64[np.arange(total), jj] ^ 1))
        strip += match
        still = match
    core_len = wl - 2 * strip
    core_idx = np.zeros(total, dtype=np.int64)
    for s in np.unique(strip):
        sel = np.nonzero(strip == s)[0]
        m = core_len[sel]
        width = words.shape[1]
        cols = np.clip(np.arange(width)[None, :] + s, 0, width - 1)
        shifted = np.take_along_axis(w64[sel], np.broadcast_to(cols, (len(sel), width)), axis=1)
        shifted = np.where(np.arange(width)[None, :] < m[:, None], shifted, 0)
        core_idx[sel] = word_rank(shifted, l, m)
    jordan = jordan[core_idx]
    jordan[0] = 0.0
    length = np.linalg.norm(jordan, axis=1)

    # conjugacy classes from the very reduced rows
    class_id = np.full(total, -1, dtype=np.int64)
    vr_primitive = np.zeros(total, dtype=bool)
    class_words: list = []
    class_power = []
    offset = 0
    vr_keys = []
    for m in range(1, max_len + 1):
        lo = int(level_offset(l, m))
        hi = int(level_offset(l, m + 1))
        sel = np.nonzero(vr[lo:hi])[0] + lo
        if not len(sel):
            continue
        keys, period = fg.batch_canonical(w64[sel, :m], l)
        uniq, inverse_ids = np.unique(keys, return_inverse=True)
        class_id[sel] = inverse_ids + offset
        vr_primitive[sel] = period == m
        for key in uniq:
            cw = fg.decode_key(key, m, l)
            class_words.append(cw)
            class_power.append(m // fg.smallest_period(cw))
        offset += len(uniq)
        vr_keys.append(uniq)
    nonid = np.arange(total) > 0
    class_id[nonid] = class_id[core_idx[nonid]]
    primitive = np.zeros(total, dtype=bool)
    primitive[nonid] = vr_primitive[core_idx[nonid]]

    class_power_arr = np.asarray(class_power, dtype=np.int64)
    if class_words:
        cw_len = np.array([len(w) for w in class_words], dtype=np.int64)
        cw_codes = np.zeros((len(class_words), max_len), dtype=np.int64)
        for i, w in enumerate(class_words):
            cw_codes[i, :len(w)] = w
        class_rows = word_rank(cw_codes, l, cw_len)
        class_length = length[class_rows]
    else:
        class_length = np.zeros(0)

    if max_len >= 1:
        top = word_len == max_len
        horizon_R = float(distance[top].min())
        top_vr = top & vr
        horizon_t = float(length[top_vr].min()) if top_vr.any() else float(length[top].min())
    else:
        horizon_R = horizon_t = 0.0

    return CensusTable(
        distance=distance, length=length, words=words, word_len=word_len,
        very_reduced=vr, primitive=primitive, class_id=class_id, cartan=cartan,
        jordan=jordan,
        flags=flags if with_flags else None,
        inv_flags=inv_flags if with_flags else None,
        flag_defined=regular if with_flags else None,
        class_words=class_words, class_power=class_power_arr, class_length=class_length,
        num_generators=l, dim=d, max_len=max_len, horizon_R=horizon_R,
        horizon_t=horizon_t, max_displacement=sys.max_displacement,
        fingerprint=system_fingerprint(sys), config=sys.config(),
    )


# --- persistence ---------------------------------------------------------------

CSV_NAME = "census.csv"
SIDECAR_NAME = "census.json"
CACHE_NAME = "census.npz"


def _fmt(x: float) -> str:
    return repr(float(x))


def csv_header(dim: int) -> list[str]:
    return (["word", "word_len", "distance", "length", "very_reduced", "class_key",
             "primitive"] + [f"H{i + 1}" for i in range(dim)])


def write_csv(table: CensusTable, stream) -> None:
    """One row per record; floats use shortest round-trip formatting."""
    l = table.num_generators
    keys = [table.class_key(i) for i in range(len(table.class_words))]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(csv_header(table.dim))
    dist = table.distance.tolist()
    length = table.length.tolist()
    cartan = table.cartan.tolist()
    vr = table.very_reduced.tolist()
    prim = table.primitive.tolist()
    cid = table.class_id.tolist()
    for i in range(len(table)):
        w = fg.format_word(table.word(i), l) if i else ""
        writer.writerow([w, int(table.word_len[i]), _fmt(dist[i]), _fmt(length[i]),
                         int(vr[i]), keys[cid[i]] if cid[i] >= 0 else "", int(prim[i]),
                         *map(_fmt, cartan[i])])


def sidecar(table: CensusTable) -> dict:
    return {
        "fingerprint": table.fingerprint,
        "version": __version__,
        "max_word_length": table.max_len,
        "records": len(table),
        "num_generators": table.num_generators,
        "dimension": table.dim,
        "horizon_R": table.horizon_R,
        "horizon_t": table.horizon_t,
        "max_displacement": table.max_displacement,
        "classes": len(table.class_words),
        "config": table.config,
    }


def jsonable(obj):
    """Recursively convert numpy scalars/arrays; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    return obj


def dump_json(data, path) -> None:
    text = json.dumps(jsonable(data), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n")


def write_census(table: CensusTable, directory) -> dict:
    """Write the CSV, its JSON sidecar and the binary cache used by reports.

    Returns the written paths by role.  The CSV and JSON are byte-identical
    across reruns with the same configuration.
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / CSV_NAME, "json": out / SIDECAR_NAME, "cache": out / CACHE_NAME}
    with open(paths["csv"], "w", newline="") as fh:
        write_csv(table, fh)
    dump_json(sidecar(table), paths["json"])
    cw_len = np.array([len(w) for w in table.class_words], dtype=np.int64)
    cw = np.full((len(cw_len), max(table.max_len, 1)), -1, dtype=np.int8)
    for i, w in enumerate(table.class_words):
        cw[i, :len(w)] = w
    arrays = dict(
        distance=table.distance, length=table.length, words=table.words,
        word_len=table.word_len, very_reduced=table.very_reduced,
        primitive=table.primitive, class_id=table.class_id, cartan=table.cartan,
        jordan=table.jordan, class_words=cw, class_words_len=cw_len,
        class_power=table.class_power, class_length=table.class_length,
        meta=np.array(json.dumps(jsonable(sidecar(table)), sort_keys=True)),
    )
    if table.flags is not None:
        arrays.update(flags=table.flags, inv_flags=table.inv_flags,
                      flag_defined=table.flag_defined)
    np.savez(paths["cache"], **arrays)
    return paths


def _resolve_cache(path) -> Path:
    p = Path(path)
    if p.is_dir():
        p = p / CACHE_NAME
    elif p.suffix != ".npz":
        p = p.with_suffix(".npz")
    if not p.exists():
        raise FileNotFoundError(f"census cache {p} not found; rerun the census command")
    return p


def load_census(path, expected_fingerprint: str | None = None) -> CensusTable:
    """Load a census written by :func:`write_census`.

    ``path`` may be the output directory, the CSV or the cache file.  With
    ``expected_fingerprint`` the stored system fingerprint must match.
    """
    p = _resolve_cache(path)
    try:
        z = np.load(p, allow_pickle=False)
        meta = json.loads(str(z["meta"]))
    except (OSError, ValueError, KeyError) as exc:
        raise ParseError(f"unreadable census cache {p}: {exc}") from exc
    if expected_fingerprint is not None and meta["fingerprint"] != expected_fingerprint:
        raise FingerprintMismatch(
            f"census {p} was built for fingerprint {meta['fingerprint'][:12]}..., "
            f"configuration has {expected_fingerprint[:12]}...")
    cw_len = z["class_words_len"]
    class_words = [tuple(int(c) for c in row[:n]) for row, n in zip(z["class_words"], cw_len)]
    has_flags = "flags" in z.files
    return CensusTable(
        distance=z["distance"], length=z["length"], words=z["words"],
        word_len=z["word_len"], very_reduced=z["very_reduced"], primitive=z["primitive"],
        class_id=z["class_id"], cartan=z["cartan"], jordan=z["jordan"],
        flags=z["flags"] if has_flags else None,
        inv_flags=z["inv_flags"] if has_flags else None,
        flag_defined=z["flag_defined"] if has_flags else None,
        class_words=class_words, class_power=z["class_power"],
        class_length=z["class_length"], num_generators=meta["num_generators"],
        dim=meta["dimension"], max_len=meta["max_word_length"],
        horizon_R=meta["horizon_R"], horizon_t=meta["horizon_t"],
        max_displacement=meta["max_displacement"], fingerprint=meta["fingerprint"],
        config=meta["config"],
    )
