"""Concrete process-measure families.

i.i.d. and k-order Markov measures, degenerate (deterministic) measures, the
two sequence-biased families used to separate the prediction problems, the
hidden-chain stationary family and the 1/n-zeros predictor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
from scipy.sparse.csgraph import connected_components

from .core import (
    BINARY,
    TERNARY,
    Alphabet,
    InputError,
    ProcessMeasure,
    log2p,
)

Number = Union[float, int, str, Fraction]


def as_prob(x: Number) -> float:
    """Parse a probability given as float, int or a 'p/q' string."""
    try:
        v = float(Fraction(x)) if isinstance(x, (str, Fraction)) else float(x)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"not a probability: {x!r}") from None
    if not 0.0 <= v <= 1.0 or math.isnan(v):
        raise InputError(f"probability out of range: {x!r}")
    return v


def _jsonable(x: Number):
    return str(x) if isinstance(x, Fraction) else x


# ---------------------------------------------------------------------------
# target sequences


@dataclass(frozen=True)
class TargetSequence:
    """A finitely described infinite sequence t_1, t_2, ... of symbol indices.

    kinds: ``const`` (symbol), ``periodic`` (pattern), ``squares`` (zeros at
    positions scale*m^2 + shift for m >= 1, ones elsewhere), ``random`` (fair
    bits from a seed), ``prefix`` (explicit prefix then a fill symbol).
    """

    kind: str
    params: tuple = ()
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("const", "periodic", "squares", "random", "prefix"):
            raise InputError(f"unknown target sequence kind {self.kind!r}")

    @classmethod
    def const(cls, symbol: int = 0) -> "TargetSequence":
        return cls("const", (int(symbol),))

    @classmethod
    def periodic(cls, pattern: Sequence[int]) -> "TargetSequence":
        if not len(pattern):
            raise InputError("empty periodic pattern")
        return cls("periodic", tuple(int(a) for a in pattern))

    @classmethod
    def squares(cls, shift: int = 0, scale: int = 1) -> "TargetSequence":
        return cls("squares", (int(shift), int(scale)))

    @classmethod
    def random(cls, seed: int) -> "TargetSequence":
        return cls("random", (int(seed),))

    @classmethod
    def prefix(cls, symbols: Sequence[int], fill: int = 0) -> "TargetSequence":
        return cls("prefix", (tuple(int(a) for a in symbols), int(fill)))

    @classmethod
    def parse(cls, text: str) -> "TargetSequence":
        """Parse 'const:1', 'periodic:0110', 'squares[:shift[:scale]]', 'random:7', 'prefix:0101[:fill]'."""
        kind, _, rest = text.partition(":")
        args = rest.split(":") if rest else []
        try:
            if kind == "const":
                return cls.const(int(args[0]) if args else 0)
            if kind == "periodic":
                return cls.periodic([int(c) for c in args[0]])
            if kind == "squares":
                return cls.squares(*(int(a) for a in args))
            if kind == "random":
                return cls.random(int(args[0]))
            if kind == "prefix":
                return cls.prefix([int(c) for c in args[0]], int(args[1]) if len(args) > 1 else 0)
        except (IndexError, ValueError):
            raise InputError(f"bad target sequence {text!r}") from None
        raise InputError(f"unknown target sequence kind {kind!r}")

    def to_spec(self) -> str:
        if self.kind == "prefix":
            body, fill = self.params
            return f"prefix:{''.join(map(str, body))}:{fill}"
        if self.kind == "periodic":
            return "periodic:" + "".join(map(str, self.params))
        return ":".join([self.kind, *map(str, self.params)])

    def _generate(self, n: int) -> np.ndarray:
        pos = np.arange(1, n + 1)
        if self.kind == "const":
            return np.full(n, self.params[0], dtype=np.int64)
        if self.kind == "periodic":
            pat = np.array(self.params, dtype=np.int64)
            return pat[(pos - 1) % len(pat)]
        if self.kind == "squares":
            shift, scale = self.params
            out = np.ones(n, dtype=np.int64)
            m = 1
            while scale * m * m + shift <= n:
                if scale * m * m + shift >= 1:
                    out[scale * m * m + shift - 1] = 0
                m += 1
            return out
        if self.kind == "random":
            # fixed 4096-bit blocks keep every prefix stable under extension
            rng = np.random.default_rng(self.params[0])
            blocks = -(-n // 4096)
            bits = np.concatenate([rng.integers(0, 2, 4096) for _ in range(max(blocks, 1))])
            return bits[:n].astype(np.int64)
        body, fill = self.params
        out = np.full(n, fill, dtype=np.int64)
        k = min(n, len(body))
        out[:k] = body[:k]
        return out

    def first(self, n: int) -> np.ndarray:
        """t_1..t_n as an array (cached; results never change)."""
        arr = self._cache.get("arr")
        if arr is None or len(arr) < n:
            size = max(n, 2 * len(arr) if arr is not None else 64)
            arr = self._generate(size)
            arr.setflags(write=False)
            self._cache["arr"] = arr
        return arr[:n]

    def at(self, i: int) -> int:
        """t_i, 1-based."""
        return int(self.first(i)[i - 1])


# ---------------------------------------------------------------------------
# i.i.d. and Markov


class IIDMeasure(ProcessMeasure):
    def __init__(self, probs: Sequence[Number], alphabet: Optional[Alphabet] = None):
        self._raw = [_jsonable(p) for p in probs]
        p = np.array([as_prob(x) for x in probs])
        if abs(p.sum() - 1.0) > 1e-12:
            raise InputError(f"i.i.d. probabilities sum to {p.sum()!r}, not 1")
        self.alphabet = alphabet or Alphabet.of_size(len(p))
        if len(self.alphabet) != len(p):
            raise InputError("probability vector does not match alphabet size")
        self.probs = p
        self.order = 0
        self.log_table = log2p(p)[None, :]
        self.init_logconds: list[np.ndarray] = []

    def __repr__(self):
        return f"IIDMeasure({self._raw})"

    def initial_state(self, batch):
        return (np.zeros(batch, dtype=np.int64),)

    def step_logprobs(self, state, t):
        return np.broadcast_to(self.log_table, (state[0].shape[0], len(self.alphabet))).copy()

    def advance(self, state, symbols, t):
        return state

    def log_prob_batch(self, paths):
        paths = np.asarray(paths, dtype=np.int64)
        m = len(self.alphabet)
        counts = np.stack([(paths == a).sum(axis=1) for a in range(m)], axis=1)
        return _counts_dot(counts, self.log_table[0])

    def to_spec(self):
        if len(self.probs) == 2 and self.alphabet == BINARY \
                and bernoulli(self._raw[0])._raw == self._raw:
            return {"family": "bernoulli", "p": self._raw[0]}
        return {"family": "iid", "probs": list(self._raw), "alphabet": self.alphabet.to_list()}


def _counts_dot(counts: np.ndarray, logs: np.ndarray) -> np.ndarray:
    """counts @ logs with 0 * -inf := 0 and count * -inf = -inf."""
    finite = np.where(np.isfinite(logs), logs, 0.0)
    out = counts @ finite
    hits = counts @ (~np.isfinite(logs)).astype(float)
    return np.where(hits > 0, -np.inf, out)


def bernoulli(p: Number) -> IIDMeasure:
    """i.i.d. binary measure with P(x_i = 0) = p."""
    if isinstance(p, (str, Fraction)):
        as_prob(p)  # validates before Fraction sees it
        return IIDMeasure([_jsonable(p), str(1 - Fraction(p))])
    return IIDMeasure([p, 1.0 - as_prob(p)])


def uniform(m: int = 2) -> IIDMeasure:
    alphabet = BINARY if m == 2 else (TERNARY if m == 3 else Alphabet.of_size(m))
    return IIDMeasure([f"1/{m}"] * m, alphabet)


class MarkovError(InputError):
    pass


class MarkovMeasure(ProcessMeasure):
    """k-order Markov measure.

    ``table[c]`` is the conditional distribution after context ``c``, where a
    context x_{n-k+1..n} is encoded base |X| with the oldest symbol most
    significant.  ``initial`` is one of:

    * ``"stationary"``: the unique stationary k-block law (error if the chain
      has several closed classes);
    * ``"stationary-mixed"``: uniform average of the stationary laws of each
      closed class (always stationary, used for grid components);
    * a length |X|^k vector: explicit law of x_{1..k};
    * ``{"start": ctx}``: a virtual context preceding x_1.
    """

    def __init__(self, order: int, table, initial="stationary",
                 alphabet: Optional[Alphabet] = None):
        if order < 0:
            raise InputError("order must be >= 0")
        self._raw_table = [[_jsonable(p) for p in row] for row in table]
        T = np.array([[as_prob(p) for p in row] for row in table], dtype=float)
        m = T.shape[1]
        self.alphabet = alphabet or Alphabet.of_size(m)
        if len(self.alphabet) != m or T.shape[0] != m ** order:
            raise InputError(f"table must have shape ({m ** order}, {m}), got {T.shape}")
        for c, row in enumerate(T):
            if abs(row.sum() - 1.0) > 1e-12:
                raise InputError(f"row for context {self._ctx_name(c, order)} sums to {row.sum()!r}")
        self.order = order
        self.table = T
        self.log_table = log2p(T)
        self._raw_initial = initial
        self.block = self._initial_blocks(initial)
        self.init_logconds = self._prefix_conditionals()

    def __repr__(self):
        return f"MarkovMeasure(order={self.order}, table={self._raw_table})"

    def _ctx_name(self, c: int, k: Optional[int] = None) -> str:
        k = self.order if k is None else k
        m = len(self.alphabet) if hasattr(self, "alphabet") else 2
        digits = []
        for _ in range(k):
            digits.append(c % m)
            c //= m
        return "".join(self.alphabet.symbols[d] for d in reversed(digits)) or "<empty>"

    def block_transition(self) -> np.ndarray:
        """Transition matrix of the chain on k-blocks."""
        m, k = len(self.alphabet), self.order
        C = m ** k
        P = np.zeros((C, C))
        for c in range(C):
            for a in range(m):
                P[c, (c * m + a) % C] += self.table[c, a]
        return P

    def _initial_blocks(self, initial) -> Optional[np.ndarray]:
        m, k = len(self.alphabet), self.order
        if isinstance(initial, dict):
            start = initial.get("start", "")
            code = 0
            for s in start:
                code = code * m + self.alphabet.index(s)
            if len(start) != k:
                raise InputError(f"start context must have length {k}")
            self.start_code = code
            return None
        self.start_code = None
        if k == 0:
            return np.ones(1)
        if isinstance(initial, str):
            if initial not in ("stationary", "stationary-mixed"):
                raise InputError(f"unknown initial rule {initial!r}")
            return stationary_blocks(self, strict=(initial == "stationary"))
        v = np.array([as_prob(p) for p in initial])
        if v.shape != (m ** k,) or abs(v.sum() - 1) > 1e-12:
            raise InputError("initial block distribution must be normalized over X^k")
        return v

    def _prefix_conditionals(self) -> list[np.ndarray]:
        """For t < k: log2 P(x_{t+1} | x_1..x_t) as (|X|^t, |X|) tables."""
        m, k = len(self.alphabet), self.order
        out = []
        for t in range(k):
            if self.block is None:
                codes = np.arange(m ** t)
                ctx = (self.start_code * m ** t + codes) % (m ** k)
                out.append(self.log_table[ctx])
                continue
            # marginal law of x_1..x_{t+1}
            marg = self.block.reshape(m ** (t + 1), m ** (k - t - 1)).sum(axis=1)
            marg = marg.reshape(m ** t, m)
            tot = marg.sum(axis=1, keepdims=True)
            cond = np.where(tot > 0, marg / np.where(tot > 0, tot, 1.0), 1.0 / m)
            out.append(log2p(cond))
        return out

    def initial_state(self, batch):
        start = 0 if self.start_code is None else self.start_code
        # with a start context the state is a full context from the beginning
        return (np.full(batch, start, dtype=np.int64),)

    def _uses_prefix(self, t: int) -> bool:
        return t < self.order and self.block is not None

    def step_logprobs(self, state, t):
        code = state[0]
        if self._uses_prefix(t):
            return self.init_logconds[t][code]
        return self.log_table[code]

    def advance(self, state, symbols, t):
        m = len(self.alphabet)
        # a prefix code of length t+1 <= k is already below |X|^k
        return ((state[0] * m + symbols) % (m ** self.order),)

    def to_spec(self):
        initial = self._raw_initial
        if not isinstance(initial, (str, dict)):
            initial = [_jsonable(p) for p in initial]
        return {"family": "markov", "order": self.order, "table": self._raw_table,
                "initial": initial, "alphabet": self.alphabet.to_list()}


def stationary_blocks(mu: MarkovMeasure, strict: bool = True) -> np.ndarray:
    """Stationary law of the k-block chain, by a dense linear solve.

    The fixed point is unique iff the chain has exactly one closed
    communicating class.  With several, ``strict`` raises naming a context of
    the second class; otherwise the per-class stationary laws are averaged.
    """
    P = mu.block_transition()
    C = P.shape[0]
    ncomp, labels = connected_components(P > 0, directed=True, connection="strong")
    closed = []
    for c in range(ncomp):
        members = np.flatnonzero(labels == c)
        outside = np.setdiff1d(np.flatnonzero(P[members].sum(axis=0) > 0), members)
        if outside.size == 0:
            closed.append(members)
    if strict and len(closed) > 1:
        name = mu._ctx_name(int(closed[1][0]))
        raise MarkovError(
            f"no unique stationary distribution: context {name!r} lies in a second "
            f"closed class ({len(closed)} closed classes)")
    laws = []
    for members in closed:
        sub = P[np.ix_(members, members)]
        A = np.vstack([sub.T - np.eye(len(members)), np.ones(len(members))])
        b = np.zeros(len(members) + 1)
        b[-1] = 1.0
        sol = np.linalg.lstsq(A, b, rcond=None)[0]
        full = np.zeros(C)
        full[members] = np.clip(sol, 0.0, None)
        laws.append(full / full.sum())
    return np.mean(laws, axis=0)


def make_markov(order: int, table, stationary: bool = True, initial=None,
                alphabet: Optional[Alphabet] = None) -> MarkovMeasure:
    if initial is None:
        initial = "stationary" if stationary else {"start": (alphabet or BINARY).symbols[0] * order}
    return MarkovMeasure(order, table, initial, alphabet)


# ---------------------------------------------------------------------------
# deterministic and sequence-biased measures


class DeterministicMeasure(ProcessMeasure):
    """Unit mass on a single sequence t."""

    def __init__(self, target: TargetSequence, alphabet: Alphabet = BINARY):
        self.target = target
        self.alphabet = alphabet

    def __repr__(self):
        return f"DeterministicMeasure({self.target.to_spec()!r})"

    def initial_state(self, batch):
        return (np.zeros(batch, dtype=np.int8),)

    def step_logprobs(self, state, t):
        out = np.full((state[0].shape[0], len(self.alphabet)), -np.inf)
        out[:, self.target.at(t + 1)] = 0.0
        return out

    def advance(self, state, symbols, t):
        return state

    def log_prob_batch(self, paths):
        paths = np.asarray(paths, dtype=np.int64)
        t = self.target.first(paths.shape[1])
        return np.where((paths == t).all(axis=1), 0.0, -np.inf)

    def to_spec(self):
        return {"family": "deterministic", "target": self.target.to_spec(),
                "alphabet": self.alphabet.to_list()}


class _TargetBiased(ProcessMeasure):
    """Binary measure putting extra mass on t while the history follows t."""

    family = ""

    def __init__(self, target: TargetSequence):
        self.target = target
        self.alphabet = BINARY

    def __repr__(self):
        return f"{type(self).__name__}({self.target.to_spec()!r})"

    def on_target_logs(self, n: int) -> tuple[float, float]:
        """(log2 P(t_n | t_<n), log2 P(other | t_<n)) at step n (1-based)."""
        raise NotImplementedError

    def initial_state(self, batch):
        return (np.ones(batch, dtype=bool),)

    def step_logprobs(self, state, t):
        on = state[0]
        out = np.full((on.shape[0], 2), -1.0)
        hit, miss = self.on_target_logs(t + 1)
        s = self.target.at(t + 1)
        out[on, s] = hit
        out[on, 1 - s] = miss
        return out

    def advance(self, state, symbols, t):
        return (state[0] & (symbols == self.target.at(t + 1)),)

    def to_spec(self):
        return {"family": self.family, "target": self.target.to_spec()}


class BiasedToSequenceMeasure(_TargetBiased):
    """On-target conditional 1 - 1/(n+1); so the measure of t_1..t_n is 1/(n+1)."""

    family = "gammat"

    def on_target_logs(self, n):
        return math.log2(n) - math.log2(n + 1), -math.log2(n + 1)


class StrongBiasMeasure(_TargetBiased):
    """On-target conditional 2/3 at every step."""

    family = "gammaprime"

    def on_target_logs(self, n):
        return math.log2(2 / 3), math.log2(1 / 3)


def make_gamma_t(t: TargetSequence) -> BiasedToSequenceMeasure:
    return BiasedToSequenceMeasure(t)


def make_gamma_prime_t(t: TargetSequence) -> StrongBiasMeasure:
    return StrongBiasMeasure(t)


# ---------------------------------------------------------------------------
# hidden-chain stationary family


class HiddenChainMeasure(ProcessMeasure):
    """Function of the renewal chain k -> k+1 (2/3), k -> 0 (1/3), started stationary.

    State 0 emits 'a'; state k > 0 emits the bit t_k.  Once an 'a' has been
    seen the latent state is known exactly.  Before that, the posterior is over
    the initial latent state k in 1..s_max (prior proportional to (2/3)^k),
    pruned to the shifts consistent with the observed bits.  The probability
    of 'a' is 1/3 given any history.
    """

    def __init__(self, target: TargetSequence, s_max: int = 80):
        if s_max < 1:
            raise InputError("s_max must be >= 1")
        self.target = target
        self.s_max = int(s_max)
        self.alphabet = TERNARY
        k = np.arange(1, self.s_max + 1)
        prior = (2.0 / 3.0) ** k
        self._prior = prior / prior.sum()

    def __repr__(self):
        return f"HiddenChainMeasure({self.target.to_spec()!r}, s_max={self.s_max})"

    @staticmethod
    def stationary_law(states: int) -> np.ndarray:
        """pi_k = (1/3)(2/3)^k for k = 0..states-1."""
        return (1.0 / 3.0) * (2.0 / 3.0) ** np.arange(states)

    def initial_state(self, batch):
        return (np.full(batch, -1, dtype=np.int64),
                np.broadcast_to(self._prior, (batch, self.s_max)).copy())

    def _bits_ahead(self, n: int) -> np.ndarray:
        """t_{k+n} for k = 1..s_max."""
        return self.target.first(n + self.s_max)[n:n + self.s_max]

    def step_logprobs(self, state, t):
        d, w = state
        b = d.shape[0]
        p1 = np.empty(b)
        p0 = np.empty(b)
        known = d >= 0
        if known.any():
            tk = self.target.first(int(d[known].max()) + 1)
            p1[known] = tk[d[known]]
            p0[known] = 1 - p1[known]
        free = ~known
        if free.any():
            bits = self._bits_ahead(t)
            # separate sums keep an impossible bit at exactly zero
            p1[free] = w[free] @ (bits == 1).astype(float)
            p0[free] = w[free] @ (bits == 0).astype(float)
        tot = p0 + p1
        dead = tot <= 0
        p1 = np.where(dead, 0.5, p1 / np.where(dead, 1.0, tot))
        p0 = np.where(dead, 0.5, p0 / np.where(dead, 1.0, tot))
        probs = np.stack([np.full(b, 1.0 / 3.0), (2.0 / 3.0) * p0, (2.0 / 3.0) * p1], axis=1)
        return log2p(probs)

    def advance(self, state, symbols, t):
        d, w = state
        is_a = symbols == 0
        new_d = np.where(is_a, 0, np.where(d >= 0, d + 1, -1))
        free = (d < 0) & ~is_a
        if free.any():
            bits = self._bits_ahead(t)
            match = bits[None, :] == (symbols[free, None] - 1)
            w = w.copy()
            w[free] = w[free] * match
        return (new_d, w)

    def to_spec(self):
        return {"family": "hidden", "target": self.target.to_spec(), "s_max": self.s_max}


def make_hidden_chain(t: TargetSequence, s_max: int = 80) -> HiddenChainMeasure:
    return HiddenChainMeasure(t, s_max)


# ---------------------------------------------------------------------------


class SparseZerosPredictor(ProcessMeasure):
    """Independent symbols with P(x_n = 0) = 1/n (so x_1 = 0 surely)."""

    def __init__(self):
        self.alphabet = BINARY

    def __repr__(self):
        return "SparseZerosPredictor()"

    def initial_state(self, batch):
        return (np.zeros(batch, dtype=np.int8),)

    def step_logprobs(self, state, t):
        n = t + 1
        row = np.array([-math.log2(n), (math.log2(n - 1) - math.log2(n)) if n > 1 else -math.inf])
        return np.broadcast_to(row, (state[0].shape[0], 2)).copy()

    def advance(self, state, symbols, t):
        return state

    def to_spec(self):
        return {"family": "sqrtzeros"}
