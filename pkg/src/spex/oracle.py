"""Value functions over masking patterns.

A value function is any callable taking a ``(N, n)`` array of 0/1 masks and
returning ``N`` floats. Mask bit 1 means the feature is present (unmasked),
bit 0 means it is masked out; ``f(ones)`` is the unmasked model output.

Three sources are provided: planted sparse Fourier functions for testing,
JSON-lines replay files, and a batched HTTP client for an external model
server.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from .gf2 import BinaryVector
from .rng import stream

log = logging.getLogger(__name__)

TOKEN_ENV = "SPEX_ORACLE_TOKEN"


class OracleError(RuntimeError):
    """Base class for failures while querying a value function."""


class MissingMaskError(OracleError, KeyError):
    def __init__(self, mask: str):
        super().__init__(f"mask {mask} not present in replay file")
        self.mask = mask

    def __str__(self) -> str:
        return self.args[0]


class TransportError(OracleError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class ProtocolError(OracleError):
    pass


@dataclass(frozen=True)
class MaskQuery:
    id: str
    mask: BinaryVector


def mask_strings(masks: np.ndarray) -> list[str]:
    masks = np.asarray(masks, dtype=np.uint8)
    text = (masks + ord("0")).astype(np.uint8)
    return [row.tobytes().decode("ascii") for row in text]


def masks_from_strings(rows: list[str]) -> np.ndarray:
    if not rows:
        return np.zeros((0, 0), dtype=np.uint8)
    buf = np.frombuffer("".join(rows).encode("ascii"), dtype=np.uint8)
    return (buf.reshape(len(rows), -1) - ord("0")).astype(np.uint8)


@dataclass
class PlantedFunction:
    """Ground-truth sparse Fourier function ``f = sum_k F(k) (-1)**<m,k> + noise``."""

    n: int
    coefficients: dict[BinaryVector, float]
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for k, v in self.coefficients.items():
            if k.length != self.n:
                raise ValueError(f"coefficient key {k} has length {k.length}, expected {self.n}")
            if not np.isfinite(v):
                raise ValueError(f"non-finite coefficient for {k}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
            "coefficients": [{"k": str(k), "value": float(v)} for k, v in sorted(self.coefficients.items())],
        }

    @classmethod
    def from_json(cls, obj: dict) -> PlantedFunction:
        coefs = {BinaryVector.from_string(e["k"]): float(e["value"]) for e in obj["coefficients"]}
        return cls(int(obj["n"]), coefs, float(obj.get("noise_sigma", 0.0)), int(obj.get("seed", 0)))


def random_planted(n: int, s: int, max_degree: int, seed: int, low: float = 0.5, high: float = 2.0,
                   random_sign: bool = False, noise_sigma: float = 0.0, min_degree: int = 1) -> PlantedFunction:
    """``s`` distinct interactions with degree in ``[min_degree, max_degree]`` and
    magnitudes uniform in ``[low, high]``."""
    rng = stream(seed, "planted")
    coefs: dict[BinaryVector, float] = {}
    while len(coefs) < s:
        d = int(rng.integers(min_degree, max_degree + 1))
        k = BinaryVector.from_indices(n, rng.choice(n, size=d, replace=False))
        if k in coefs:
            continue
        v = float(rng.uniform(low, high))
        if random_sign and rng.random() < 0.5:
            v = -v
        coefs[k] = v
    return PlantedFunction(n, coefs, noise_sigma, seed)


class SyntheticOracle:
    """Vectorized evaluation of a :class:`PlantedFunction`.

    Noise for a mask is drawn from a generator seeded by ``(seed, mask)``, so
    values never depend on query order or batching.
    """

    chunk = 4096

    def __init__(self, spec: PlantedFunction):
        self.spec = spec
        self.n = spec.n
        keys = list(spec.coefficients)
        self._K = np.array([k.to_bits() for k in keys], dtype=np.float32).reshape(len(keys), spec.n).T
        self._v = np.array([spec.coefficients[k] for k in keys], dtype=float)

    def clean(self, masks) -> np.ndarray:
        masks = np.atleast_2d(np.asarray(masks))
        if masks.shape[1] != self.n:
            raise ValueError(f"masks have {masks.shape[1]} features, oracle expects {self.n}")
        out = np.empty(masks.shape[0])
        for start in range(0, masks.shape[0], self.chunk):
            blk = masks[start:start + self.chunk].astype(np.float32)
            par = np.rint(blk @ self._K).astype(np.int64) & 1
            out[start:start + self.chunk] = (1.0 - 2.0 * par) @ self._v
        return out

    def noise(self, masks) -> np.ndarray:
        sigma = self.spec.noise_sigma
        masks = np.atleast_2d(np.asarray(masks, dtype=np.uint8))
        if sigma == 0:
            return np.zeros(masks.shape[0])
        packed = np.packbits(masks, axis=1, bitorder="little")
        out = np.empty(masks.shape[0])
        for i, row in enumerate(packed):
            key = int.from_bytes(row.tobytes(), "little")
            ss = np.random.SeedSequence([self.spec.seed, self.n, key])
            out[i] = np.random.Generator(np.random.PCG64(ss)).standard_normal()
        return sigma * out

    def __call__(self, masks) -> np.ndarray:
        return self.clean(masks) + self.noise(masks)


def synthetic_oracle(spec: PlantedFunction) -> SyntheticOracle:
    return SyntheticOracle(spec)


class ReplayOracle:
    """Serves values recorded in a JSON-lines file of ``{"mask", "value"}`` rows."""

    def __init__(self, path):
        self.path = Path(path)
        self.table: dict[str, float] = {}
        with self.path.open() as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                if "mask" not in row or "value" not in row:
                    raise ValueError(f"{self.path}:{lineno}: expected 'mask' and 'value'")
                self.table[row["mask"]] = float(row["value"])
        self.n = len(next(iter(self.table))) if self.table else None

    def __call__(self, masks) -> np.ndarray:
        out = []
        for s in mask_strings(np.atleast_2d(masks)):
            try:
                out.append(self.table[s])
            except KeyError:
                raise MissingMaskError(s) from None
        return np.array(out, dtype=float)


def replay_oracle(path) -> ReplayOracle:
    return ReplayOracle(path)


def write_replay(path, masks, values) -> None:
    """Record ``(mask, value)`` pairs in the replay format."""
    with Path(path).open("w") as fh:
        for s, v in zip(mask_strings(masks), np.asarray(values, dtype=float)):
            fh.write(json.dumps({"mask": s, "value": float(v)}) + "\n")


class RemoteOracle:
    """Batched client for the JSON mask-query protocol.

    Request: ``{"queries": [{"id", "mask"}]}``; response:
    ``{"values": [{"id", "value"}]}``. Transient failures (connection errors,
    HTTP 429 and 5xx) are retried ``retries`` times with exponential backoff.
    """

    def __init__(self, endpoint: str, batch_size: int = 256, retries: int = 3, backoff: float = 0.5,
                 timeout: float = 60.0, max_in_flight: int = 1, token: str | None = None,
                 session: requests.Session | None = None):
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.endpoint = endpoint
        self.batch_size = batch_size
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self.max_in_flight = max(1, max_in_flight)
        self.token = token if token is not None else os.environ.get(TOKEN_ENV)
        self.session = session or requests.Session()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return headers

    def _post(self, batch: list[MaskQuery]) -> dict[str, float]:
        body = {"queries": [{"id": q.id, "mask": str(q.mask)} for q in batch]}
        last = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self.session.post(self.endpoint, json=body, headers=self._headers(), timeout=self.timeout)
            except requests.RequestException as exc:
                last = TransportError(f"transport failure: {exc}")
                log.warning("oracle request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = TransportError(f"server returned HTTP {resp.status_code}", resp.status_code)
                log.warning("oracle returned %d (attempt %d)", resp.status_code, attempt + 1)
                continue
            if resp.status_code != 200:
                raise TransportError(f"server returned HTTP {resp.status_code}", resp.status_code)
            return self._parse(resp, batch)
        raise TransportError(f"gave up after {self.retries + 1} attempts: {last}", getattr(last, "status", None))

    @staticmethod
    def _parse(resp, batch: list[MaskQuery]) -> dict[str, float]:
        try:
            payload = resp.json()
            got = {str(e["id"]): float(e["value"]) for e in payload["values"]}
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed response: {exc}") from exc
        for q in batch:
            if q.id not in got:
                raise ProtocolError(f"response is missing id {q.id}")
        return {q.id: got[q.id] for q in batch}

    def query(self, queries: list[MaskQuery]) -> dict[str, float]:
        """Values keyed by id, in request order."""
        ids = [q.id for q in queries]
        if len(set(ids)) != len(ids):
            raise ValueError("query ids must be unique within a call")
        batches = [queries[i:i + self.batch_size] for i in range(0, len(queries), self.batch_size)]
        out: dict[str, float] = {}
        if self.max_in_flight == 1 or len(batches) <= 1:
            results = map(self._post, batches)
            for r in results:
                out.update(r)
        else:
            with ThreadPoolExecutor(self.max_in_flight) as pool:
                for r in pool.map(self._post, batches):
                    out.update(r)
        return {i: out[i] for i in ids}

    def __call__(self, masks) -> np.ndarray:
        masks = np.atleast_2d(np.asarray(masks, dtype=np.uint8))
        queries = [MaskQuery(f"q{i}", BinaryVector.from_bits(row)) for i, row in enumerate(masks)]
        values = self.query(queries)
        return np.array([values[q.id] for q in queries], dtype=float)


def remote_oracle(endpoint: str, batch_size: int = 256, retries: int = 3, **kwargs) -> RemoteOracle:
    return RemoteOracle(endpoint, batch_size=batch_size, retries=retries, **kwargs)
