"""Binary dataset ingestion, synthetic generation, and optional fetching.

The canonical on-disk format is three plain-text files per dataset
directory (train.txt, valid.txt, test.txt), one example per line,
whitespace-separated 0/1 tokens. Synthetic generators return the exact
distribution parameters alongside the data so tests can compute analytic
conditionals and entropies.
"""

from __future__ import annotations

import math
import os
import tempfile
import urllib.request
from dataclasses import dataclass

import numpy as np

from .validation import as_rng

SPLIT_FILES = ("train.txt", "valid.txt", "test.txt")


class DatasetFormatError(ValueError):
    """A split file failed to parse; the message names the offending line."""


class FetchError(RuntimeError):
    """A download or its verification failed; no partial files are left behind."""


@dataclass
class BinaryDataset:
    name: str
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        widths = {m.shape[1] for m in (self.train, self.valid, self.test) if m.size}
        if len(widths) > 1:
            raise DatasetFormatError(f"splits disagree on dimensionality: {sorted(widths)}")
        if self.train.shape[0] == 0:
            raise DatasetFormatError("train split is empty")

    @property
    def D(self) -> int:
        return self.train.shape[1]

    def split(self, name: str) -> np.ndarray:
        try:
            return {"train": self.train, "valid": self.valid, "test": self.test}[name]
        except KeyError:
            raise ValueError(f"unknown split {name!r}") from None


def _parse_split(path) -> np.ndarray:
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            toks = line.split()
            if not toks:
                continue
            bits = []
            for t in toks:
                if t == "0":
                    bits.append(0.0)
                elif t == "1":
                    bits.append(1.0)
                else:
                    raise DatasetFormatError(f"{path}:{lineno}: non-binary token {t!r}")
            if width is None:
                width = len(bits)
            elif len(bits) != width:
                raise DatasetFormatError(
                    f"{path}:{lineno}: expected {width} tokens, found {len(bits)}"
                )
            rows.append(bits)
    if not rows:
        return np.zeros((0, width or 0))
    return np.array(rows, dtype=np.float64)


def load_dataset(directory) -> BinaryDataset:
    """Read train/valid/test split files from a dataset directory."""
    paths = [os.path.join(directory, f) for f in SPLIT_FILES]
    for p in paths:
        if not os.path.exists(p):
            raise FileNotFoundError(f"missing split file: {p}")
    train, valid, test = (_parse_split(p) for p in paths)
    return BinaryDataset(name=os.path.basename(os.path.normpath(directory)),
                         train=train, valid=valid, test=test)


def save_dataset(dataset: BinaryDataset, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    for fname, split in zip(SPLIT_FILES, (dataset.train, dataset.valid, dataset.test)):
        with open(os.path.join(directory, fname), "w") as fh:
            for row in split:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")


# --- synthetic distributions -------------------------------------------------


@dataclass(frozen=True)
class IndependentBernoulli:
    """Independent bits: p(x) = prod_i p_i^x_i (1-p_i)^(1-x_i)."""

    p: tuple[float, ...]

    def __post_init__(self):
        if not all(0.0 < v < 1.0 for v in self.p):
            raise ValueError("probabilities must lie strictly inside (0, 1)")

    @property
    def D(self) -> int:
        return len(self.p)

    def sample(self, n: int, rng) -> np.ndarray:
        rng = as_rng(rng)
        return (rng.random((n, self.D)) < np.array(self.p)).astype(np.float64)

    def log_prob(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        p = np.array(self.p)
        return float(np.sum(x * np.log(p) + (1.0 - x) * np.log1p(-p)))

    def conditional_log_prob(self, x, obs) -> float:
        """log p(x_missing | x_obs); independence makes obs irrelevant."""
        x = np.asarray(x, dtype=np.float64)
        p = np.array(self.p)
        missing = [i for i in range(self.D) if i not in set(obs.members)]
        return float(
            np.sum(x[missing] * np.log(p[missing]) + (1.0 - x[missing]) * np.log1p(-p[missing]))
        )

    def entropy_of_missing(self, obs) -> float:
        """Sum of per-variable Bernoulli entropies over the missing set (nats)."""
        total = 0.0
        for i in range(self.D):
            if i in set(obs.members):
                continue
            pi = self.p[i]
            total += -(pi * math.log(pi) + (1.0 - pi) * math.log(1.0 - pi))
        return total


@dataclass(frozen=True)
class MixtureOfProducts:
    """Mixture of independent-Bernoulli components."""

    weights: tuple[float, ...]
    p: tuple[tuple[float, ...], ...]  # (components, D)

    def __post_init__(self):
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")
        if any(w <= 0 for w in self.weights):
            raise ValueError("mixture weights must be positive")
        if len({len(row) for row in self.p}) != 1 or len(self.p) != len(self.weights):
            raise ValueError("need one probability row per component, equal lengths")
        for row in self.p:
            if not all(0.0 < v < 1.0 for v in row):
                raise ValueError("probabilities must lie strictly inside (0, 1)")

    @property
    def D(self) -> int:
        return len(self.p[0])

    def sample(self, n: int, rng) -> np.ndarray:
        rng = as_rng(rng)
        comps = rng.choice(len(self.weights), size=n, p=np.array(self.weights))
        P = np.array(self.p)
        return (rng.random((n, self.D)) < P[comps]).astype(np.float64)

    def _component_log_prob(self, x, idx_subset) -> np.ndarray:
        """log prob of x restricted to idx_subset, per component."""
        x = np.asarray(x, dtype=np.float64)
        P = np.array(self.p)[:, idx_subset]
        xs = x[idx_subset]
        return np.sum(xs * np.log(P) + (1.0 - xs) * np.log1p(-P), axis=1)

    def log_prob(self, x) -> float:
        lp = self._component_log_prob(x, list(range(self.D)))
        lw = np.log(np.array(self.weights))
        m = np.max(lw + lp)
        return float(m + np.log(np.sum(np.exp(lw + lp - m))))

    def marginal_log_prob(self, x, idx_subset) -> float:
        if len(idx_subset) == 0:
            return 0.0
        lp = self._component_log_prob(x, list(idx_subset))
        lw = np.log(np.array(self.weights))
        m = np.max(lw + lp)
        return float(m + np.log(np.sum(np.exp(lw + lp - m))))

    def conditional_log_prob(self, x, obs) -> float:
        """log p(x_missing | x_obs) = log p(x) - log p(x_obs)."""
        return self.log_prob(x) - self.marginal_log_prob(x, list(obs.members))


def make_synthetic(kind, n_per_split, seed: int, name: str = "synthetic") -> BinaryDataset:
    """Sample train/valid/test splits from an exact synthetic distribution.

    n_per_split is either one count for all three splits or a
    (train, valid, test) triple. The distribution object itself carries the
    oracle machinery (log_prob, conditional_log_prob, ...).
    """
    if isinstance(n_per_split, int):
        counts = (n_per_split, n_per_split, n_per_split)
    else:
        counts = tuple(n_per_split)
        if len(counts) != 3:
            raise ValueError("n_per_split must be an int or a (train, valid, test) triple")
    rng = as_rng(seed)
    train, valid, test = (kind.sample(c, rng) for c in counts)
    return BinaryDataset(name=name, train=train, valid=valid, test=test)


# --- optional network fetch ---------------------------------------------------


def fetch_dataset(name: str, url_base: str, directory, expected_lines=None, timeout: float = 30.0) -> list[str]:
    """Download <url_base>/<name>/{train,valid,test}.txt into a directory.

    All three files are fetched to temporaries and renamed only after every
    download (and the optional line-count verification) succeeds, so a
    failure leaves no partial dataset behind. Nothing in the package
    requires this; all tests run on local or synthetic data.
    """
    if not url_base:
        raise FetchError("no URL configured; pass url_base")
    os.makedirs(directory, exist_ok=True)
    staged = []
    try:
        for fname in SPLIT_FILES:
            url = f"{url_base.rstrip('/')}/{name}/{fname}"
            fd, tmp = tempfile.mkstemp(dir=directory, suffix=".part")
            os.close(fd)
            staged.append((tmp, os.path.join(directory, fname)))
            try:
                with urllib.request.urlopen(url, timeout=timeout) as resp, open(tmp, "wb") as out:
                    out.write(resp.read())
            except Exception as exc:
                raise FetchError(f"failed to download {url}: {exc}") from exc
        if expected_lines is not None:
            for (tmp, final), expect in zip(staged, expected_lines):
                with open(tmp) as fh:
                    got = sum(1 for line in fh if line.strip())
                if got != expect:
                    raise FetchError(
                        f"{os.path.basename(final)}: expected {expect} lines, found {got}"
                    )
        for tmp, final in staged:
            os.replace(tmp, final)
        return [final for _, final in staged]
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
