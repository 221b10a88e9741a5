"""Alphabets, histories, base-2 log-probability arithmetic and the process-measure protocol.

Every measure is driven through a small batched filtering protocol::

    state = m.initial_state(batch)
    lp = m.step_logprobs(state, t)          # (batch, |X|) log2 conditionals
    state = m.advance(state, symbols, t)    # returns a new state

``t`` is the number of symbols already observed.  States are nested tuples of
numpy arrays with a leading batch axis and are never mutated in place, which
keeps every measure pure and shareable across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

LOG2_ZERO = -math.inf
DEFAULT_BUDGET = 24  # log2 of the largest enumeration allowed


class InputError(ValueError):
    """Malformed user input: unknown symbol, bad parameter, bad spec."""


class BudgetExceededError(RuntimeError):
    """An exhaustive enumeration would exceed the configured state budget."""


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]

    def __post_init__(self):
        if len(self.symbols) < 2:
            raise InputError("an alphabet needs at least two symbols")
        if len(set(self.symbols)) != len(self.symbols):
            raise InputError(f"duplicate symbols in alphabet {self.symbols!r}")

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def size(self) -> int:
        return len(self.symbols)

    @classmethod
    def of_size(cls, m: int) -> "Alphabet":
        if m == 2:
            return BINARY
        return cls(tuple(str(i) for i in range(m)))

    def index(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise InputError(f"symbol {symbol!r} not in alphabet {self.symbols!r}") from None

    def encode(self, text: str) -> tuple[int, ...]:
        """Map a string of single-character symbols to indices."""
        return tuple(self.index(c) for c in text)

    def decode(self, indices: Iterable[int]) -> str:
        return "".join(self.symbols[i] for i in indices)

    def to_list(self) -> list[str]:
        return list(self.symbols)


BINARY = Alphabet(("0", "1"))
TERNARY = Alphabet(("a", "0", "1"))


@dataclass(frozen=True)
class History:
    """A finite observed prefix x_1..x_n stored as symbol indices."""

    alphabet: Alphabet
    symbols: tuple[int, ...] = ()

    def __post_init__(self):
        m = len(self.alphabet)
        for s in self.symbols:
            if not 0 <= s < m:
                raise InputError(f"symbol index {s} out of range for alphabet of size {m}")

    @classmethod
    def parse(cls, alphabet: Alphabet, text: str) -> "History":
        return cls(alphabet, alphabet.encode(text))

    def __len__(self) -> int:
        return len(self.symbols)

    def __str__(self) -> str:
        return self.alphabet.decode(self.symbols)


HistoryLike = Union[History, str, Sequence[int], np.ndarray]


def log2p(p):
    """Elementwise log2 with log2(0) = -inf and no warnings."""
    with np.errstate(divide="ignore"):
        return np.log2(p)


def lse2(a, axis=None):
    """log2(sum(2**a)) along ``axis``; all -inf input gives -inf."""
    a = np.asarray(a, dtype=float)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log2(np.sum(np.exp2(a - m), axis=axis, keepdims=True)) + m
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


def take_state(state, idx):
    """Index every array of a (nested tuple) state along the batch axis."""
    if isinstance(state, tuple):
        return tuple(take_state(s, idx) for s in state)
    return state[idx]


def state_batch(state) -> int:
    if isinstance(state, tuple):
        for s in state:
            b = state_batch(s)
            if b >= 0:
                return b
        return -1
    return state.shape[0]


@dataclass(frozen=True)
class ConditionalDistribution:
    alphabet: Alphabet
    log_probs: np.ndarray

    @property
    def probs(self) -> np.ndarray:
        return np.exp2(self.log_probs)

    def __getitem__(self, symbol: Union[int, str]) -> float:
        if isinstance(symbol, str):
            symbol = self.alphabet.index(symbol)
        return float(self.log_probs[symbol])


class ProcessMeasure:
    """A probability law on one-way infinite sequences over a finite alphabet.

    Subclasses implement ``initial_state``, ``step_logprobs`` and ``advance``;
    everything else (chain-rule evaluation, sampling) is derived here.
    """

    alphabet: Alphabet = BINARY

    # -- protocol -------------------------------------------------------
    def initial_state(self, batch: int):
        raise NotImplementedError

    def step_logprobs(self, state, t: int) -> np.ndarray:
        raise NotImplementedError

    def advance(self, state, symbols: np.ndarray, t: int):
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError(f"{type(self).__name__} has no JSON description")

    # -- derived --------------------------------------------------------
    def _coerce(self, history: HistoryLike) -> np.ndarray:
        if isinstance(history, History):
            if history.alphabet != self.alphabet:
                raise InputError("history alphabet differs from measure alphabet")
            seq = history.symbols
        elif isinstance(history, str):
            seq = self.alphabet.encode(history)
        else:
            seq = history
        arr = np.asarray(seq, dtype=np.int64).reshape(-1)
        if arr.size and (arr.min() < 0 or arr.max() >= len(self.alphabet)):
            raise InputError(f"history {seq!r} has symbols outside {self.alphabet.symbols!r}")
        return arr

    def state_after(self, history: HistoryLike):
        x = self._coerce(history)
        state = self.initial_state(1)
        for t, a in enumerate(x):
            state = self.advance(state, np.array([a]), t)
        return state

    def conditional_next(self, history: HistoryLike = ()) -> ConditionalDistribution:
        x = self._coerce(history)
        state = self.state_after(x)
        lp = np.array(self.step_logprobs(state, len(x))[0], dtype=float)
        return ConditionalDistribution(self.alphabet, lp)

    def log_prob(self, history: HistoryLike) -> float:
        """log2 of the cylinder probability, by the chain rule."""
        x = self._coerce(history)
        state = self.initial_state(1)
        total = 0.0
        for t, a in enumerate(x):
            total += float(self.step_logprobs(state, t)[0, a])
            state = self.advance(state, np.array([a]), t)
        return total

    def log_prob_batch(self, paths: np.ndarray) -> np.ndarray:
        """log2 probabilities of each row of an integer (batch, n) array."""
        paths = np.asarray(paths, dtype=np.int64)
        b, n = paths.shape
        state = self.initial_state(b)
        total = np.zeros(b)
        rows = np.arange(b)
        for t in range(n):
            total = total + self.step_logprobs(state, t)[rows, paths[:, t]]
            state = self.advance(state, paths[:, t], t)
        return total

    def sample(self, n: int, seed: int) -> History:
        if n < 0:
            raise InputError("n must be non-negative")
        paths = sample_paths(self, n, 1, seed)
        return History(self.alphabet, tuple(int(a) for a in paths[0]))


def log_prob(measure: ProcessMeasure, history: HistoryLike) -> float:
    return measure.log_prob(history)


def sample(measure: ProcessMeasure, n: int, seed: int) -> History:
    return measure.sample(n, seed)


def trajectory_uniforms(seed: int, indices: Sequence[int], n: int) -> np.ndarray:
    """Uniform draws for trajectories ``indices``; row i depends only on (seed, i)."""
    out = np.empty((len(indices), n))
    for row, i in enumerate(indices):
        out[row] = np.random.default_rng([int(seed), int(i)]).random(n)
    return out


def draw_symbols(logprobs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw; never returns a zero-probability symbol."""
    cdf = np.cumsum(np.exp2(logprobs), axis=1)
    cdf = cdf / cdf[:, -1:]
    return np.sum(cdf <= u[:, None], axis=1)


def sample_paths(measure: ProcessMeasure, n: int, batch: int, seed: int,
                 start: int = 0) -> np.ndarray:
    """Sample ``batch`` trajectories numbered ``start..start+batch-1``."""
    u = trajectory_uniforms(seed, range(start, start + batch), n)
    paths = np.zeros((batch, n), dtype=np.int64)
    state = measure.initial_state(batch)
    for t in range(n):
        a = draw_symbols(measure.step_logprobs(state, t), u[:, t])
        paths[:, t] = a
        state = measure.advance(state, a, t)
    return paths


def check_budget(count: int, budget: int, what: str = "enumeration") -> None:
    if count > 2 ** budget:
        raise BudgetExceededError(
            f"{what} needs {count} states > 2^{budget}; use the Monte-Carlo variant "
            f"or raise the budget")


def enumerate_prefixes(measures: Sequence[ProcessMeasure], n: int,
                       budget: int = DEFAULT_BUDGET):
    """Yield, for t = 0..n, log2 probabilities of every x in X^t for each measure.

    Prefixes are in lexicographic order (first symbol most significant), so
    index i at level t is the base-|X| number spelled by the prefix.  Each
    yielded item is ``(t, logp)`` with ``logp`` of shape (len(measures), |X|^t).
    """
    m = len(measures[0].alphabet)
    check_budget(m ** n, budget)
    states = [mu.initial_state(1) for mu in measures]
    logp = np.zeros((len(measures), 1))
    yield 0, logp
    for t in range(n):
        b = logp.shape[1]
        steps = [mu.step_logprobs(s, t) for mu, s in zip(measures, states)]
        parent = np.repeat(np.arange(b), m)
        sym = np.tile(np.arange(m), b)
        logp = np.stack([logp[i][parent] + np.broadcast_to(st, (b, m)).reshape(-1)
                         for i, st in enumerate(steps)])
        states = [mu.advance(take_state(s, parent), sym, t) for mu, s in zip(measures, states)]
        yield t + 1, logp


def all_sequences(m: int, n: int) -> np.ndarray:
    """Every x in X^n as rows, lexicographic order."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((m,) * n).reshape(n, -1).T
    return grids.astype(np.int64)
