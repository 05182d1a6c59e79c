"""Masking plans and sample collection.

For subsampler ``c``, shift ``i`` and ``l`` in GF(2)^b the queried mask is
``M_c^T l + p_i`` where ``p_0 = 0`` and ``p_1..p_p`` are the parity rows of the
BCH code. After collection every ``u_{c,i}`` is transformed, giving

    U_{c,i}(j) = sum_{k : M_c k = j} (-1)**<p_i, k> F(k).
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng
from .bch import BchCode, construct_bch
from .gf2 import BinaryMatrix, BinaryVector, n_words, random_binary_matrix, unpack_bits
from .oracle import MaskQuery, mask_strings
from .wht import wht_forward

log = logging.getLogger(__name__)

PLAN_FORMAT = "spex-plan/1"


class CollectionError(RuntimeError):
    def __init__(self, message: str, ids: list[str]):
        super().__init__(message)
        self.ids = ids


@dataclass(frozen=True, eq=False)
class SamplingPlan:
    n: int
    b: int
    t: int
    C: int
    seed: int
    subsamplers: tuple[BinaryMatrix, ...]
    code: BchCode

    @property
    def p(self) -> int:
        return self.code.p

    @property
    def shifts(self) -> BinaryMatrix:
        """``[0, p_1, ..., p_p]`` as a ``(p+1) x n`` matrix."""
        zero = np.zeros((1, n_words(self.n)), dtype=np.uint64)
        return BinaryMatrix(np.vstack([zero, self.code.parity.data]), self.p + 1, self.n)

    @property
    def budget(self) -> int:
        """Number of enumerated masks, ``C (p+1) 2**b`` (an upper bound on distinct ones)."""
        return self.C * (self.p + 1) * (1 << self.b)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SamplingPlan):
            return NotImplemented
        return plan_to_dict(self) == plan_to_dict(other)

    __hash__ = None


def build_plan(n: int, b: int, t: int = 5, C: int = 3, seed: int = 0) -> SamplingPlan:
    if n < 1 or b < 1 or t < 1 or C < 1:
        raise ValueError(f"n, b, t, C must be positive (got n={n}, b={b}, t={t}, C={C})")
    if b > n:
        raise ValueError(f"b={b} exceeds n={n}; use brute_force_spectrum for tiny inputs")
    code = construct_bch(n, t)
    subs = tuple(random_binary_matrix(b, n, rng.stream(seed, "plan", c)) for c in range(C))
    return SamplingPlan(n=n, b=b, t=t, C=C, seed=seed, subsamplers=subs, code=code)


def mask_id(c: int, i: int, l: int) -> str:
    return f"c{c}-i{i}-l{l:x}"


def _span(M: BinaryMatrix) -> np.ndarray:
    # row l = M^T l for every l in GF(2)^b, built by doubling
    out = np.zeros((1 << M.rows, M.data.shape[1]), dtype=np.uint64)
    for r in range(M.rows):
        h = 1 << r
        out[h:2 * h] = out[:h] ^ M.data[r]
    return out


def packed_masks(plan: SamplingPlan) -> np.ndarray:
    """All enumerated masks, packed, shape ``(C, p+1, 2**b, words)``."""
    shifts = plan.shifts.data
    return np.stack([_span(M)[None, :, :] ^ shifts[:, None, :] for M in plan.subsamplers])


def enumerate_masks(plan: SamplingPlan) -> list[MaskQuery]:
    """One query per ``(c, i, l)`` in canonical order, before deduplication."""
    packed = packed_masks(plan)
    out = []
    for c in range(plan.C):
        for i in range(plan.p + 1):
            for l in range(1 << plan.b):
                out.append(MaskQuery(mask_id(c, i, l), BinaryVector(packed[c, i, l], plan.n)))
    return out


def all_ids(plan: SamplingPlan) -> list[str]:
    return [mask_id(c, i, l) for c in range(plan.C) for i in range(plan.p + 1) for l in range(1 << plan.b)]


def distinct_masks(plan: SamplingPlan) -> tuple[np.ndarray, np.ndarray]:
    """Distinct masks in first-occurrence order and the fan-out index.

    Returns ``(unique, inverse)`` with ``unique`` packed ``(U, words)`` and
    ``inverse`` mapping each enumerated query (flattened ``c, i, l``) to a row
    of ``unique``.
    """
    flat = packed_masks(plan).reshape(-1, n_words(plan.n))
    _, first, inverse = np.unique(flat, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return flat[first[order]], rank[inverse.ravel()]


@dataclass(eq=False)
class SampleBank:
    plan: SamplingPlan
    values: np.ndarray   # (C, p+1, 2**b)
    spectra: np.ndarray  # wht_forward of values along the last axis

    @classmethod
    def from_values(cls, plan: SamplingPlan, values) -> SampleBank:
        values = np.asarray(values, dtype=float).reshape(plan.C, plan.p + 1, 1 << plan.b)
        return cls(plan, values, wht_forward(values))


def _query_batches(oracle, masks: np.ndarray, batch_size: int, parallelism: int, ids_for=None):
    batches = [(s, masks[s:s + batch_size]) for s in range(0, masks.shape[0], batch_size)]

    def run(item):
        start, blk = item
        try:
            vals = np.asarray(oracle(blk), dtype=float)
        except Exception as exc:
            ids = ids_for(start, start + blk.shape[0]) if ids_for else []
            raise CollectionError(f"oracle failed on batch starting at mask id {ids[0] if ids else start}: {exc}",
                                  ids) from exc
        if vals.shape != (blk.shape[0],):
            raise CollectionError(f"oracle returned shape {vals.shape} for {blk.shape[0]} masks", [])
        return start, vals

    if parallelism <= 1 or len(batches) <= 1:
        yield from map(run, batches)
    else:
        with ThreadPoolExecutor(parallelism) as pool:
            yield from pool.map(run, batches)


def collect(plan: SamplingPlan, oracle, parallelism: int = 1, batch_size: int = 4096) -> SampleBank:
    """Query every distinct mask once, fan values out, and transform."""
    unique, inverse = distinct_masks(plan)
    bits = unpack_bits(unique, plan.n)
    ids = all_ids(plan)
    first_id = {}
    for q, u in enumerate(inverse):
        first_id.setdefault(int(u), ids[q])

    def ids_for(a, b):
        return [first_id[u] for u in range(a, b)]

    vals = np.empty(unique.shape[0])
    for start, v in _query_batches(oracle, bits, batch_size, parallelism, ids_for):
        vals[start:start + v.size] = v
    log.info("collected %d distinct masks (%d enumerated)", unique.shape[0], plan.budget)
    return SampleBank.from_values(plan, vals[inverse])


# --- serialization -----------------------------------------------------------

def plan_to_dict(plan: SamplingPlan) -> dict:
    code = plan.code
    return {
        "format": PLAN_FORMAT,
        "rng": rng.RNG_NAME,
        "n": plan.n, "b": plan.b, "t": plan.t, "C": plan.C, "seed": plan.seed,
        "budget": plan.budget,
        "code": {
            "m": code.m, "n_c": code.n_c, "k_c": code.k_c, "t": code.t, "p": code.p,
            "generator": format(code.generator, "x"),
            "parity_rows": code.parity.to_strings(),
        },
        "subsamplers": [M.to_strings() for M in plan.subsamplers],
        "shifts": plan.shifts.to_strings(),
    }


def plan_from_dict(obj: dict) -> SamplingPlan:
    if obj.get("format") != PLAN_FORMAT:
        raise ValueError(f"unsupported plan format {obj.get('format')!r}")
    n, b, t, C = (int(obj[k]) for k in ("n", "b", "t", "C"))
    code = construct_bch(n, t)
    if code.parity.to_strings() != obj["code"]["parity_rows"]:
        raise ValueError("plan parity rows do not match the BCH construction for (n, t)")
    subs = tuple(BinaryMatrix.from_strings(rows) for rows in obj["subsamplers"])
    if len(subs) != C or any(M.shape != (b, n) for M in subs):
        raise ValueError("subsampler matrices do not match (C, b, n)")
    return SamplingPlan(n=n, b=b, t=t, C=C, seed=int(obj["seed"]), subsamplers=subs, code=code)


def plan_json(plan: SamplingPlan) -> str:
    return json.dumps(plan_to_dict(plan), indent=1, sort_keys=True) + "\n"


def plan_hash(plan: SamplingPlan) -> str:
    return hashlib.sha256(plan_json(plan).encode()).hexdigest()


def save_plan(plan: SamplingPlan, path) -> None:
    Path(path).write_text(plan_json(plan))


def load_plan(path) -> SamplingPlan:
    return plan_from_dict(json.loads(Path(path).read_text()))


def bank_header(plan: SamplingPlan) -> dict:
    return {"header": True, "plan_hash": plan_hash(plan), "n": plan.n, "b": plan.b, "p": plan.p, "C": plan.C}


def write_bank(bank: SampleBank, path) -> None:
    """JSON-lines: a header row, then ``{"id", "mask", "value"}`` per enumerated query."""
    plan = bank.plan
    masks = unpack_bits(packed_masks(plan).reshape(-1, n_words(plan.n)), plan.n)
    with Path(path).open("w") as fh:
        fh.write(json.dumps(bank_header(plan)) + "\n")
        for qid, s, v in zip(all_ids(plan), mask_strings(masks), bank.values.ravel()):
            fh.write(json.dumps({"id": qid, "mask": s, "value": float(v)}) + "\n")


def read_bank_rows(path) -> tuple[dict | None, dict[str, tuple[str, float]]]:
    header = None
    rows: dict[str, tuple[str, float]] = {}
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                break  # torn final line from an interrupted write
            if obj.get("header"):
                header = obj
            else:
                rows[obj["id"]] = (obj["mask"], float(obj["value"]))
    return header, rows


def read_bank(path, plan: SamplingPlan) -> SampleBank:
    header, rows = read_bank_rows(path)
    if header is None:
        raise ValueError(f"{path}: missing header row")
    if header["plan_hash"] != plan_hash(plan):
        raise ValueError(f"{path}: bank was collected for a different plan")
    ids = all_ids(plan)
    missing = [i for i in ids if i not in rows]
    if missing:
        raise ValueError(f"{path}: bank incomplete, {len(missing)} ids missing (first: {missing[0]})")
    return SampleBank.from_values(plan, [rows[i][1] for i in ids])


def collect_resumable(plan: SamplingPlan, oracle, path, parallelism: int = 1, batch_size: int = 4096) -> SampleBank:
    """Collect into a bank file, appending as batches finish.

    Ids already present in ``path`` are not queried again. On success the file
    is rewritten in canonical order so reruns are byte-identical.
    """
    path = Path(path)
    done: dict[str, tuple[str, float]] = {}
    if path.exists():
        header, done = read_bank_rows(path)
        if header is not None and header["plan_hash"] != plan_hash(plan):
            raise ValueError(f"{path}: existing bank belongs to a different plan")
    ids = all_ids(plan)
    unique, inverse = distinct_masks(plan)
    members: dict[int, list[int]] = {}
    for q, u in enumerate(inverse):
        members.setdefault(int(u), []).append(q)
    todo = [u for u in range(unique.shape[0]) if not all(ids[q] in done for q in members[u])]
    log.info("%d distinct masks, %d still to query", unique.shape[0], len(todo))

    # rewrite whatever survived so a torn trailing line is dropped
    with path.open("w") as fh:
        fh.write(json.dumps(bank_header(plan)) + "\n")
        for qid, (s, v) in done.items():
            fh.write(json.dumps({"id": qid, "mask": s, "value": v}) + "\n")

    if todo:
        bits = unpack_bits(unique[todo], plan.n)
        strings = mask_strings(bits)

        def ids_for(a, b):
            return [ids[members[todo[r]][0]] for r in range(a, b)]

        with path.open("a") as fh:
            for start, vals in _query_batches(oracle, bits, batch_size, parallelism, ids_for):
                for r, v in enumerate(vals, start):
                    for q in members[todo[r]]:
                        done[ids[q]] = (strings[r], float(v))
                        fh.write(json.dumps({"id": ids[q], "mask": strings[r], "value": float(v)}) + "\n")
                fh.flush()

    bank = SampleBank.from_values(plan, [done[i][1] for i in ids])
    write_bank(bank, path)
    return bank

