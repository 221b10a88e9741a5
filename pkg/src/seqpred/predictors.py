"""Predictor constructions.

Countable Bayes mixtures (with a stacked fast path for Markov components),
rational-grid finite-memory mixtures, the worst-case adversary, and the
finite-horizon greedy cover construction together with its regularizer
replacement.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    DEFAULT_BUDGET,
    Alphabet,
    BudgetExceededError,
    InputError,
    ProcessMeasure,
    enumerate_prefixes,
    lse2,
)
from .measures import (
    DeterministicMeasure,
    MarkovMeasure,
    TargetSequence,
    _counts_dot,
    uniform,
)

INVERSE_SQUARE_NORMALIZER = 6.0 / math.pi ** 2


def _markov_like(mu: ProcessMeasure) -> bool:
    return hasattr(mu, "log_table") and hasattr(mu, "init_logconds") and hasattr(mu, "order")


class _MarkovStack:
    """K Markov-like components of one order evaluated together."""

    def __init__(self, comps: Sequence[ProcessMeasure]):
        self.order = comps[0].order
        self.m = len(comps[0].alphabet)
        self.K = len(comps)
        self.log_table = np.stack([c.log_table for c in comps])  # (K, C, X)
        self.init = [np.stack([c.init_logconds[t] for c in comps]) for t in range(self.order)]

    def initial_state(self, batch):
        return (np.zeros(batch, dtype=np.int64),)

    def step(self, state, t):
        code = state[0]
        tab = self.init[t] if t < self.order else self.log_table
        return np.transpose(tab[:, code, :], (1, 0, 2))  # (B, K, X)

    def picked(self, state, symbols, t):
        code = state[0]
        tab = self.init[t] if t < self.order else self.log_table
        return tab[:, code, symbols].T  # (B, K)

    def advance(self, state, symbols, t):
        return ((state[0] * self.m + symbols) % (self.m ** self.order),)

    def log_prob_batch(self, paths):
        b, n = paths.shape
        m, k, C = self.m, self.order, self.m ** self.order
        joint = np.zeros((b, self.K))
        code = np.zeros(b, dtype=np.int64)
        flat = []
        for t in range(n):
            a = paths[:, t]
            if t < k:
                joint += self.init[t][:, code, a].T
            else:
                flat.append(code * m + a)
            code = (code * m + a) % C
        if flat:
            idx = np.stack(flat, axis=1)
            rows = np.repeat(np.arange(b), idx.shape[1])
            counts = np.zeros((b, C * m))
            np.add.at(counts, (rows, idx.reshape(-1)), 1.0)
            joint += _counts_dot(counts, self.log_table.reshape(self.K, C * m).T)
        return joint


class _Single:
    def __init__(self, mu: ProcessMeasure):
        self.mu = mu
        self.K = 1

    def initial_state(self, batch):
        return self.mu.initial_state(batch)

    def step(self, state, t):
        return self.mu.step_logprobs(state, t)[:, None, :]

    def picked(self, state, symbols, t):
        lp = self.mu.step_logprobs(state, t)
        return lp[np.arange(lp.shape[0]), symbols][:, None]

    def advance(self, state, symbols, t):
        return self.mu.advance(state, symbols, t)

    def log_prob_batch(self, paths):
        return self.mu.log_prob_batch(paths)[:, None]


class MixturePredictor(ProcessMeasure):
    """nu = sum_k w_k mu_k, evaluated in log space.

    The state carries the unnormalized joint log-weights
    log2 w_k + log2 mu_k(x_1..x_t); the conditional is their posterior average.
    Given a nu-null history the conditional falls back to uniform.
    """

    def __init__(self, components: Sequence[ProcessMeasure], weights: Sequence[float],
                 spec: Optional[dict] = None, audit: Optional[dict] = None):
        if len(components) == 0:
            raise InputError("a mixture needs at least one component")
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(components),):
            raise InputError("one weight per component required")
        if np.any(~(w > 0)):
            raise InputError("mixture weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InputError(f"mixture weights sum to {w.sum()!r}, not 1")
        self.alphabet = components[0].alphabet
        if any(c.alphabet != self.alphabet for c in components):
            raise InputError("mixture components must share an alphabet")
        self.components = list(components)
        self.weights = w
        self._spec = spec
        self.audit = audit or {}

        groups, order = [], []
        stacks: dict[int, list[int]] = {}
        for i, c in enumerate(self.components):
            if _markov_like(c):
                stacks.setdefault(c.order, []).append(i)
        for k in sorted(stacks):
            idx = stacks[k]
            groups.append(_MarkovStack([self.components[i] for i in idx]))
            order.extend(idx)
        for i, c in enumerate(self.components):
            if not _markov_like(c):
                groups.append(_Single(c))
                order.append(i)
        self._groups = groups
        self._perm = np.array(order)
        with np.errstate(divide="ignore"):
            self._logw = np.log2(w[self._perm])

    def __repr__(self):
        return f"MixturePredictor({len(self.components)} components)"

    def __len__(self):
        return len(self.components)

    @property
    def log_weights(self) -> np.ndarray:
        return np.log2(self.weights)

    def initial_state(self, batch):
        joint = np.broadcast_to(self._logw, (batch, len(self._logw))).copy()
        return (joint, tuple(g.initial_state(batch) for g in self._groups))

    def _comp(self, gstates, t):
        return np.concatenate([g.step(s, t) for g, s in zip(self._groups, gstates)], axis=1)

    def step_logprobs(self, state, t):
        joint, gstates = state
        comp = self._comp(gstates, t)
        den = lse2(joint, axis=1)
        num = lse2(joint[:, :, None] + comp, axis=1)
        m = len(self.alphabet)
        dead = ~np.isfinite(den)
        cond = num - np.where(dead, 0.0, den)[:, None]
        if dead.any():
            cond[dead] = -math.log2(m)
        return cond

    def advance(self, state, symbols, t):
        joint, gstates = state
        picked = np.concatenate([g.picked(s, symbols, t) for g, s in zip(self._groups, gstates)],
                                axis=1)
        new_states = tuple(g.advance(s, symbols, t) for g, s in zip(self._groups, gstates))
        return (joint + picked, new_states)

    def component_log_probs(self, paths: np.ndarray) -> np.ndarray:
        """log2 mu_k(x) for every row of ``paths``, shape (batch, K), original order."""
        paths = np.asarray(paths, dtype=np.int64)
        internal = np.concatenate([g.log_prob_batch(paths) for g in self._groups], axis=1)
        out = np.empty_like(internal)
        out[:, self._perm] = internal
        return out

    def log_prob_batch(self, paths):
        return lse2(self.component_log_probs(paths) + self.log_weights[None, :], axis=1)

    def to_spec(self):
        if self._spec is not None:
            return dict(self._spec)
        return {"family": "mixture", "components": [c.to_spec() for c in self.components],
                "weights": [float(w) for w in self.weights]}


def mixture(components: Sequence[ProcessMeasure], weights: Optional[Sequence[float]] = None
            ) -> MixturePredictor:
    if weights is None:
        weights = [1.0 / len(components)] * len(components) if components else []
    return MixturePredictor(components, weights)


# ---------------------------------------------------------------------------
# rational grids


def simplex_grid(m: int, d: int) -> list[tuple[Fraction, ...]]:
    """All distributions on m symbols with entries in {0, 1/d, ..., 1}."""
    out = []
    for cut in itertools.combinations(range(d + m - 1), m - 1):
        parts, prev = [], -1
        for c in cut:
            parts.append(c - prev - 1)
            prev = c
        parts.append(d + m - 2 - prev)
        out.append(tuple(Fraction(p, d) for p in reversed(parts)))
    return sorted(out)


def grid_size(order: int, denominator: int, alphabet_size: int = 2) -> int:
    per_context = math.comb(denominator + alphabet_size - 1, alphabet_size - 1)
    return per_context ** (alphabet_size ** order)


def grid_components(order: int, denominator: int, alphabet: Alphabet,
                    max_components: int = 2 ** 16) -> list[MarkovMeasure]:
    m = len(alphabet)
    size = grid_size(order, denominator, m)
    if size > max_components:
        raise BudgetExceededError(
            f"grid (order={order}, d={denominator}, |X|={m}) has {size} components "
            f"> budget {max_components}")
    points = simplex_grid(m, denominator)
    comps = []
    for rows in itertools.product(points, repeat=m ** order):
        table = [[str(p) for p in row] for row in rows]
        comps.append(MarkovMeasure(order, table, "stationary-mixed", alphabet))
    return comps


def rational_markov_grid(order: int, denominator: int, alphabet: Optional[Alphabet] = None,
                         max_components: int = 2 ** 16) -> MixturePredictor:
    """Uniform mixture over order-k Markov measures with parameters on the 1/d grid.

    Components are stationary; chains with several closed classes start from
    the average of their per-class stationary laws.
    """
    if order < 0 or denominator < 1:
        raise InputError("need order >= 0 and denominator >= 1")
    alphabet = alphabet or Alphabet.of_size(2)
    comps = grid_components(order, denominator, alphabet, max_components)
    spec = {"family": "grid", "order": order, "denominator": denominator,
            "alphabet": alphabet.to_list()}
    mix = MixturePredictor(comps, [1.0 / len(comps)] * len(comps), spec=spec)
    mix.grid_size = len(comps)
    return mix


def order_weights(max_order: int) -> np.ndarray:
    """(6/pi^2)(k+1)^-2 for k = 0..max_order, renormalized over the truncation."""
    w = INVERSE_SQUARE_NORMALIZER / np.arange(1, max_order + 2) ** 2.0
    return w / w.sum()


def finite_memory_grid(max_order: int, denominator: int, alphabet: Optional[Alphabet] = None,
                       max_components: int = 2 ** 16) -> MixturePredictor:
    """Grids of orders 0..max_order, uniform within an order, inverse-square across orders."""
    alphabet = alphabet or Alphabet.of_size(2)
    ow = order_weights(max_order)
    comps, weights, sizes = [], [], []
    for k in range(max_order + 1):
        ck = grid_components(k, denominator, alphabet, max_components)
        comps.extend(ck)
        weights.extend([ow[k] / len(ck)] * len(ck))
        sizes.append(len(ck))
    weights = np.array(weights)
    weights /= weights.sum()
    spec = {"family": "grid", "order": list(range(max_order + 1)), "denominator": denominator,
            "alphabet": alphabet.to_list()}
    mix = MixturePredictor(comps, weights, spec=spec)
    mix.grid_size = len(comps)
    mix.order_sizes = sizes
    return mix


# ---------------------------------------------------------------------------
# adversary


@dataclass
class AdversarySequence:
    """The sequence that always takes a least-likely next symbol under rho."""

    rho: ProcessMeasure
    symbols: np.ndarray
    logprobs: np.ndarray  # realized log2 rho(x_t | x_<t)

    @property
    def alphabet(self) -> Alphabet:
        return self.rho.alphabet

    def __len__(self):
        return len(self.symbols)

    def dn(self) -> np.ndarray:
        """d_m(t, rho) for m = 1..n."""
        return -np.cumsum(self.logprobs)

    def as_target(self, fill: int = 0) -> TargetSequence:
        return TargetSequence.prefix(self.symbols.tolist(), fill)

    def as_measure(self) -> DeterministicMeasure:
        return DeterministicMeasure(self.as_target(), self.alphabet)

    def text(self) -> str:
        return self.alphabet.decode(self.symbols)


def adversary_sequence(rho: ProcessMeasure, n: int,
                       allowed: Optional[Sequence[int]] = None) -> AdversarySequence:
    """Greedy worst case for rho; ties go to the smallest symbol index.

    ``allowed`` restricts the choice to a subset of symbols; with the full
    alphabet every realized conditional is at most 1/|X|.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    allowed = np.arange(len(rho.alphabet)) if allowed is None else np.asarray(sorted(allowed))
    state = rho.initial_state(1)
    symbols = np.empty(n, dtype=np.int64)
    logs = np.empty(n)
    for t in range(n):
        lp = rho.step_logprobs(state, t)[0]
        a = int(allowed[np.argmin(lp[allowed])])
        symbols[t] = a
        logs[t] = lp[a]
        state = rho.advance(state, np.array([a]), t)
    return AdversarySequence(rho, symbols, logs)


# ---------------------------------------------------------------------------
# greedy cover construction


def _inverse_square(k):
    return math.log2(INVERSE_SQUARE_NORMALIZER) - 2.0 * math.log2(k)


def _geometric(k):
    return -float(k)


WEIGHT_SCHEMES: dict[str, Callable[[float], float]] = {
    # log2 w_k as a function of k >= 1
    "inverse-square": _inverse_square,
    "geometric": _geometric,
}


def default_delta(n: int, running_dn: float) -> float:
    """sqrt(n * max(1, max_{m<=n} d_m(mu, p(mu))))."""
    return math.sqrt(n * max(1.0, running_dn))


@dataclass
class CoverStep:
    n: int
    delta: np.ndarray            # per pool entry
    d_parent: np.ndarray         # d_n(mu, p(mu)); inf if p(mu) misses mu's support
    U: np.ndarray                # (pool, |X|^n) bool
    V: np.ndarray
    T: np.ndarray
    selected: list[int]          # pool indices mu^n_1..mu^n_K
    masses: list[float]          # m^n_k
    covered_by: np.ndarray       # 1-based k of first covering selection, 0 if none
    log_nu_n: np.ndarray         # log2 nu_n(x) for every x in X^n
    log_rho: np.ndarray
    log_mu: np.ndarray           # (pool, |X|^n)
    log_parent: np.ndarray       # (pool, |X|^n)

    @property
    def K(self) -> int:
        return len(self.selected)


@dataclass
class CoverConstruction:
    pool: list[tuple[ProcessMeasure, ProcessMeasure]]
    rho: ProcessMeasure
    horizon: int
    scheme: str
    steps: list[CoverStep]
    predictor: MixturePredictor
    truncation_deficit: float
    parents: list[ProcessMeasure] = field(default_factory=list)

    def log_weight(self, k) -> float:
        return WEIGHT_SCHEMES[self.scheme](k)

    def audit(self) -> dict:
        """JSON-ready record of every per-n artifact except the raw probability tables."""
        rows = []
        for st in self.steps:
            rows.append({
                "n": st.n,
                "U_size": st.U.sum(axis=1).tolist(),
                "V_size": st.V.sum(axis=1).tolist(),
                "T_size": st.T.sum(axis=1).tolist(),
                "selected": list(st.selected),
                "masses": [float(m) for m in st.masses],
                "K": st.K,
                "delta": [float(d) for d in st.delta],
                "d_parent": [float(d) for d in st.d_parent],
            })
        return {
            "horizon": self.horizon,
            "scheme": self.scheme,
            "pool": [{"measure": _spec_or_repr(mu), "parent": _spec_or_repr(p)}
                     for mu, p in self.pool],
            "rho": _spec_or_repr(self.rho),
            "steps": rows,
            "predictor_weights": [float(w) for w in self.predictor.weights],
            "truncation_deficit": float(self.truncation_deficit),
        }


def _spec_or_repr(mu):
    try:
        return mu.to_spec()
    except NotImplementedError:
        return repr(mu)


def _distinct(measures):
    out, index = [], {}
    for mu in measures:
        if id(mu) not in index:
            index[id(mu)] = len(out)
            out.append(mu)
    return out, index


def build_cover_construction(pool, rho: ProcessMeasure, horizon: int,
                             delta_rule: Callable[[int, float], float] = default_delta,
                             scheme: str = "inverse-square",
                             budget: int = DEFAULT_BUDGET) -> CoverConstruction:
    """Run the greedy cover at every n <= horizon and assemble the predictor.

    ``pool`` holds (mu, parent) pairs or bare measures (their own parents).
    The final predictor is 1/2 uniform + 1/2 sum_n w_n nu_n, with the sum
    truncated at the horizon and renormalized; ``truncation_deficit`` is the
    mass removed by that renormalization.
    """
    if not pool:
        raise InputError("empty pool")
    if scheme not in WEIGHT_SCHEMES:
        raise InputError(f"unknown weight scheme {scheme!r}")
    pairs = [(p, p) if isinstance(p, ProcessMeasure) else tuple(p) for p in pool]
    alphabet = rho.alphabet
    if any(mu.alphabet != alphabet or par.alphabet != alphabet for mu, par in pairs):
        raise InputError("pool and reference must share an alphabet")
    logw = WEIGHT_SCHEMES[scheme]

    measures, index = _distinct([rho] + [mu for mu, _ in pairs] + [p for _, p in pairs])
    mu_idx = [index[id(mu)] for mu, _ in pairs]
    par_idx = [index[id(p)] for _, p in pairs]
    parents, parent_of = _distinct([p for _, p in pairs])

    running = np.zeros(len(pairs))
    steps: list[CoverStep] = []
    for n, logp in enumerate_prefixes(measures, horizon, budget):
        if n == 0:
            continue
        lrho = logp[0]
        lmu = logp[mu_idx]
        lpar = logp[par_idx]
        pmu = np.exp2(lmu)
        charged = pmu > 0
        with np.errstate(invalid="ignore"):
            terms = np.where(charged, pmu * (lmu - lpar), 0.0)
        dpar = terms.sum(axis=1)
        finite = np.isfinite(dpar)
        running = np.where(finite, np.maximum(running, np.where(finite, dpar, 0.0)), running)
        delta = np.array([delta_rule(n, r) for r in running])

        U = lmu >= lrho[None, :] - math.log2(n)
        V = lpar >= lmu - delta[:, None]
        T = U & V

        prho = np.exp2(lrho)
        covered = np.zeros(lrho.shape, dtype=bool)
        covered_by = np.zeros(lrho.shape, dtype=np.int64)
        selected, masses = [], []
        while True:
            gains = np.array([prho[T[j] & ~covered].sum() for j in range(len(pairs))])
            j = int(np.argmax(gains))
            if not gains[j] > 0.0:
                break
            selected.append(j)
            masses.append(float(gains[j]))
            fresh = T[j] & ~covered
            covered_by[fresh] = len(selected)
            covered |= T[j]
        if selected:
            terms_nu = np.stack([logw(k) + lpar[j] for k, j in enumerate(selected, start=1)])
            log_nu_n = lse2(terms_nu, axis=0)
        else:
            log_nu_n = np.full(lrho.shape, -np.inf)
        steps.append(CoverStep(n, delta, dpar, U, V, T, selected, masses, covered_by,
                               log_nu_n, lrho, lmu, lpar))

    # nu = 1/2 gamma + 1/2 sum_n w_n nu_n / Z
    pw = np.zeros(len(parents))
    for st in steps:
        for k, j in enumerate(st.selected, start=1):
            pw[parent_of[id(pairs[j][1])]] += 2.0 ** (logw(st.n) + logw(k))
    Z = float(pw.sum())
    gamma = uniform(len(alphabet))
    if Z > 0:
        keep = pw > 0
        comps = [gamma] + [p for p, k in zip(parents, keep) if k]
        weights = np.concatenate([[0.5], 0.5 * pw[keep] / Z])
    else:
        comps, weights = [gamma], np.array([1.0])
    predictor = MixturePredictor(comps, weights / weights.sum())
    return CoverConstruction(pairs, rho, horizon, scheme, steps, predictor, 1.0 - Z, parents)


# audits --------------------------------------------------------------------

JENSEN_SLACK = math.log2(math.e) / math.e  # max of -p log2 p


def check_markov_mass(cc: CoverConstruction) -> list[dict]:
    """mu(X^n \\ U^n_mu) <= 1/n for every pool entry and n."""
    rows = []
    for st in cc.steps:
        for j in range(len(cc.pool)):
            mass = float(np.exp2(st.log_mu[j][~st.U[j]]).sum())
            rows.append({"n": st.n, "pool": j, "mass": mass, "bound": 1.0 / st.n,
                         "ok": mass <= 1.0 / st.n})
    return rows


def check_v_mass(cc: CoverConstruction) -> list[dict]:
    """mu(X^n \\ V^n_mu) <= (d_n(mu, p(mu)) + log2(e)/e) / delta_n(mu)."""
    rows = []
    for st in cc.steps:
        for j in range(len(cc.pool)):
            mass = float(np.exp2(st.log_mu[j][~st.V[j]]).sum())
            bound = (st.d_parent[j] + JENSEN_SLACK) / st.delta[j]
            rows.append({"n": st.n, "pool": j, "mass": mass, "bound": float(bound),
                         "ok": bool(mass <= bound)})
    return rows


def check_ext(cc: CoverConstruction, tol: float = 1e-9) -> list[dict]:
    """nu_n(x) >= w_k (1/n) 2^-delta_n(mu^n_k) rho(x) for x first covered at step k.

    Later k only weaken the bound (w_k decreases), so the first covering step
    is the binding one.  Returns one row per n with the worst log2 margin.
    """
    rows = []
    for st in cc.steps:
        k = st.covered_by
        hit = k > 0
        if not hit.any():
            rows.append({"n": st.n, "covered": 0, "min_margin": math.inf, "ok": True})
            continue
        sel = np.array(st.selected)[k[hit] - 1]
        lw = np.array([cc.log_weight(int(kk)) for kk in k[hit]])
        bound = lw - math.log2(st.n) - st.delta[sel] + st.log_rho[hit]
        margin = st.log_nu_n[hit] - bound
        worst = float(margin.min())
        rows.append({"n": st.n, "covered": int(hit.sum()), "min_margin": worst,
                     "ok": worst >= -tol})
    return rows


def check_greedy(cc: CoverConstruction) -> list[dict]:
    """Residual masses are non-increasing and m^n_k <= 1/k."""
    rows = []
    for st in cc.steps:
        m = np.array(st.masses)
        mono = bool(np.all(np.diff(m) <= 1e-15)) if len(m) > 1 else True
        harmonic = bool(np.all(m <= 1.0 / np.arange(1, len(m) + 1) + 1e-15)) if len(m) else True
        rows.append({"n": st.n, "masses": m.tolist(), "non_increasing": mono,
                     "le_one_over_k": harmonic, "ok": mono and harmonic})
    return rows


def diagnostic_constant(n: int, delta: float, scheme: str = "inverse-square") -> float:
    """c(n) = 1 + log2 n - log2 w_n - log2 w_j + delta with j = 1/eps, eps = 2^-sqrt(n).

    For the inverse-square weights this is 1 + 3 log2 n - 2 log2 eps - 2 log2 w + delta.
    """
    root = math.sqrt(n)
    if scheme == "inverse-square":
        log_wj = math.log2(INVERSE_SQUARE_NORMALIZER) - 2.0 * root
    elif scheme == "geometric":
        log_wj = -(2.0 ** root)
    else:
        raise InputError(f"unknown weight scheme {scheme!r}")
    return 1.0 + math.log2(n) - WEIGHT_SCHEMES[scheme](n) - log_wj + delta


def check_prediction_bound(cc: CoverConstruction, dn_nu: np.ndarray) -> list[dict]:
    """(1/n) d_n(mu, nu) <= (1/n) d_n(mu, p(mu)) + c(n)/n.

    ``dn_nu[j, n-1]`` must hold d_n(mu_j, nu) for the construction's predictor.
    """
    rows = []
    for st in cc.steps:
        for j in range(len(cc.pool)):
            c = diagnostic_constant(st.n, float(st.delta[j]), cc.scheme)
            lhs = float(dn_nu[j, st.n - 1]) / st.n
            rhs = (float(st.d_parent[j]) + c) / st.n
            rows.append({"n": st.n, "pool": j, "lhs": lhs, "rhs": rhs, "c": c,
                         "ok": bool(lhs <= rhs)})
    return rows


def replace_regularizer(cc: CoverConstruction,
                        pool: Optional[Sequence[ProcessMeasure]] = None,
                        scheme: Optional[str] = None,
                        budget: int = DEFAULT_BUDGET) -> MixturePredictor:
    """Swap the uniform regularizer for gamma' = sum_n w_n gamma'_n built from the pool.

    gamma'_n averages, over the sequences x with positive pool probability,
    a pool measure attaining the pool maximum at x.  The returned mixture
    carries ``regularizer`` (gamma') and an ``audit`` of the lower bound
    gamma'(x_1..n) >= (1/2) w_n |X|^-n mu(x_1..n).
    """
    pool = list(pool) if pool is not None else list(cc.parents)
    if not pool:
        raise InputError("empty pool")
    scheme = scheme or cc.scheme
    logw = WEIGHT_SCHEMES[scheme]
    m = len(cc.rho.alphabet)
    levels = [lp for n, lp in enumerate_prefixes(pool, cc.horizon, budget) if n > 0]
    counts = np.zeros(len(pool))
    for n, lp in enumerate(levels, start=1):
        in_a = np.isfinite(lp).any(axis=0)
        if not in_a.any():
            raise InputError(f"pool assigns zero mass to every sequence of length {n}")
        best = np.argmax(lp[:, in_a], axis=0)
        counts += 2.0 ** logw(n) * np.bincount(best, minlength=len(pool)) / in_a.sum()
    keep = counts > 0
    reg_comps = [p for p, k in zip(pool, keep) if k]
    reg = MixturePredictor(reg_comps, counts[keep] / counts[keep].sum())

    # lower-bound audit against the exact prefix probabilities of gamma'
    worst = math.inf
    for n, lg in enumerate_prefixes([reg], cc.horizon, budget):
        if n == 0:
            continue
        lp = levels[n - 1]
        bound = -1.0 + logw(n) - n * math.log2(m) + lp
        with np.errstate(invalid="ignore"):
            margin = np.where(np.isfinite(lp), lg[0][None, :] - bound, np.inf)
        worst = min(worst, float(margin.min()))

    old = cc.predictor
    comps, weights = [], []
    seen = {}
    for c, w in [(c, 0.5 * w) for c, w in zip(reg.components, reg.weights)] + \
                [(c, w) for c, w in zip(old.components[1:], old.weights[1:])]:
        if id(c) in seen:
            weights[seen[id(c)]] += w
        else:
            seen[id(c)] = len(comps)
            comps.append(c)
            weights.append(w)
    weights = np.array(weights)
    out = MixturePredictor(comps, weights / weights.sum(),
                           audit={"lower_bound_min_margin": worst,
                                  "lower_bound_ok": worst >= -1e-9})
    out.regularizer = reg
    return out
