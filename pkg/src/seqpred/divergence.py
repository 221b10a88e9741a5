"""Prediction-quality functionals.

Expected cumulative KL divergence d_n (exact, in both the conditional-sum and
the product form, and by Monte Carlo), conditional total variation over
h-step cylinders with the 0/1 dichotomy simulator, the d_inf distance with
Markov bounds, and the finite-horizon proxy for the asymptotic KL loss.

Exact evaluators walk the prefix tree and drop prefixes that cannot
contribute (mu-null for d_n, null under both measures for d_inf), so the
enumeration budget applies to the number of live prefixes, not to |X|^n.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import binomtest

from .core import (
    DEFAULT_BUDGET,
    BudgetExceededError,
    HistoryLike,
    InputError,
    ProcessMeasure,
    check_budget,
    draw_symbols,
    enumerate_prefixes,
    lse2,
    take_state,
    trajectory_uniforms,
)
from .measures import IIDMeasure, _counts_dot
from .predictors import MixturePredictor

CSV_COLUMNS = ("n", "value", "value_over_n", "stderr", "mode", "seed")


# ---------------------------------------------------------------------------
# result containers


@dataclass
class DivergenceSeries:
    horizons: list[int]
    values: list[float]
    mode: str  # "exact" or "monte-carlo"
    stderr: Optional[list[float]] = None
    samples: Optional[int] = None
    seed: Optional[int] = None
    witness: Optional[str] = None  # prefix charged by mu but null under rho
    label: str = ""

    def __post_init__(self):
        if self.mode not in ("exact", "monte-carlo"):
            raise InputError(f"unknown mode {self.mode!r}")
        if (self.stderr is not None) != (self.mode == "monte-carlo"):
            raise InputError("stderr is present exactly for monte-carlo series")
        if len(self.values) != len(self.horizons):
            raise InputError("one value per horizon")

    def value_over_n(self) -> list[float]:
        return [v / n for n, v in zip(self.horizons, self.values)]

    def at(self, n: int) -> float:
        return self.values[self.horizons.index(n)]

    def rows(self) -> list[dict]:
        out = []
        for i, (n, v) in enumerate(zip(self.horizons, self.values)):
            out.append({"n": n, "value": v, "value_over_n": v / n,
                        "stderr": "" if self.stderr is None else self.stderr[i],
                        "mode": self.mode, "seed": "" if self.seed is None else self.seed})
        return out

    def to_csv(self) -> str:
        return rows_to_csv(self.rows())

    def to_dict(self) -> dict:
        return _finite_json(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "DivergenceSeries":
        d = _restore_inf(dict(d))
        return cls(**d)


@dataclass
class TVSeries:
    horizons: list[int]
    values: list[float]
    h: int
    seed: Optional[int] = None
    mode: str = "exact"
    label: str = ""

    def __post_init__(self):
        if any(not (0.0 <= v <= 1.0 + 1e-12) for v in self.values):
            raise InputError("total variation values must lie in [0, 1]")

    def rows(self) -> list[dict]:
        return [{"n": n, "value": v, "value_over_n": v / n if n else "", "stderr": "",
                 "mode": self.mode, "seed": "" if self.seed is None else self.seed}
                for n, v in zip(self.horizons, self.values)]

    def to_csv(self) -> str:
        return rows_to_csv(self.rows())

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MCEstimate:
    estimate: float
    stderr: float
    samples: int
    seed: int
    estimator: str
    witness: Optional[str] = None


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r[k]) for k in CSV_COLUMNS})
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return x


def _finite_json(obj):
    """Replace infinities by strings so the output is strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _finite_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_json(v) for v in obj]
    return obj


def _restore_inf(obj):
    if obj in ("inf", "-inf", "nan"):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _restore_inf(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_restore_inf(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# pruned prefix-tree walk


class _Walk:
    """Level-by-level expansion of live prefixes for several measures at once.

    ``keep(children_logp)`` decides which children stay live.  The walk keeps
    parent pointers so any live prefix can be spelled out as a witness.
    """

    def __init__(self, measures: Sequence[ProcessMeasure], budget: int):
        self.measures = measures
        self.m = len(measures[0].alphabet)
        self.alphabet = measures[0].alphabet
        self.budget = budget
        self.states = [mu.initial_state(1) for mu in measures]
        self.logp = np.zeros((len(measures), 1))
        self.trace: list[tuple[np.ndarray, np.ndarray]] = []
        self.t = 0

    @property
    def live(self) -> int:
        return self.logp.shape[1]

    def steps(self) -> np.ndarray:
        """Conditionals at the live prefixes, shape (K, L, |X|)."""
        return np.stack([mu.step_logprobs(s, self.t) for mu, s in zip(self.measures, self.states)])

    def expand(self, steps: np.ndarray, keep) -> np.ndarray:
        L, m = self.live, self.m
        check_budget(L * m, self.budget, "exact evaluation")
        children = (self.logp[:, :, None] + steps).reshape(len(self.measures), L * m)
        mask = keep(children)
        idx = np.flatnonzero(mask)
        parent, sym = idx // m, idx % m
        self.states = [mu.advance(take_state(s, parent), sym, self.t)
                       for mu, s in zip(self.measures, self.states)]
        self.logp = children[:, idx]
        self.trace.append((parent, sym))
        self.t += 1
        return children

    def spell_parent(self, i: int) -> str:
        """The current live prefix with index i."""
        out = []
        for parent, sym in reversed(self.trace):
            out.append(int(sym[i]))
            i = int(parent[i])
        return self.alphabet.decode(reversed(out))

    def spell_child(self, j: int) -> str:
        return self.spell_parent(j // self.m) + self.alphabet.symbols[j % self.m]


def _kl_rows(lm: np.ndarray, lr: np.ndarray) -> np.ndarray:
    """KL(mu(.|x) || rho(.|x)) per row, base 2; +inf if rho misses mu's support."""
    charged = np.isfinite(lm)
    with np.errstate(invalid="ignore"):
        terms = np.where(charged, np.exp2(lm) * (lm - lr), 0.0)
    return terms.sum(axis=-1)


def exact_dn_series(mu: ProcessMeasure, rho: ProcessMeasure, horizons: Sequence[int],
                    form: str = "product", budget: int = DEFAULT_BUDGET) -> DivergenceSeries:
    """Exact d_n at each requested horizon.

    ``form="conditional"`` sums expected per-step KL divergences;
    ``form="product"`` evaluates KL between the length-n marginals.
    """
    if form not in ("product", "conditional"):
        raise InputError(f"unknown form {form!r}")
    if mu.alphabet != rho.alphabet:
        raise InputError("measures must share an alphabet")
    horizons = sorted(set(int(n) for n in horizons))
    if not horizons or horizons[0] < 1:
        raise InputError("horizons must be >= 1")
    N = horizons[-1]
    walk = _Walk([mu, rho], budget)
    wanted = set(horizons)
    values, witness = {}, None
    cum = 0.0
    for t in range(N):
        steps = walk.steps()
        parents_lm = walk.logp[0]
        try:
            walk.expand(steps, lambda c: np.isfinite(c[0]))
        except BudgetExceededError as e:
            raise BudgetExceededError(f"{e}; exact d_{N} is out of reach, use mc_dn") from None
        if form == "conditional":
            kl = _kl_rows(steps[0], steps[1])
            bad = ~np.isfinite(kl)
            if bad.any():
                lm, lr = steps[0], steps[1]
                i = int(np.flatnonzero(bad)[0])
                a = int(np.flatnonzero(np.isfinite(lm[i]) & ~np.isfinite(lr[i]))[0])
                # steps were taken at the parents, before expansion
                witness = _parent_witness(walk, i, a)
                break
            cum += float(np.sum(np.exp2(parents_lm) * kl))
            value = cum
        else:
            lm, lr = walk.logp
            if np.any(~np.isfinite(lr)):
                i = int(np.flatnonzero(~np.isfinite(lr))[0])
                witness = walk.spell_parent(i)
                break
            value = float(np.sum(np.exp2(lm) * (lm - lr)))
        if t + 1 in wanted:
            values[t + 1] = max(value, 0.0) if form == "product" else value
    out = [values.get(n, math.inf) for n in horizons]
    return DivergenceSeries(horizons, out, "exact", witness=witness)


def _parent_witness(walk: _Walk, i: int, a: int) -> str:
    # expand() already appended this level, so spell the parent from the levels before it
    prefix = []
    idx = i
    for par, s in reversed(walk.trace[:-1]):
        prefix.append(int(s[idx]))
        idx = int(par[idx])
    return walk.alphabet.decode(reversed(prefix)) + walk.alphabet.symbols[a]


def exact_dn(mu: ProcessMeasure, rho: ProcessMeasure, n: int, form: str = "product",
             budget: int = DEFAULT_BUDGET) -> float:
    """d_n(mu, rho) in bits; +inf when mu charges a rho-null sequence."""
    if n < 1:
        raise InputError("n must be >= 1")
    return exact_dn_series(mu, rho, [n], form, budget).values[0]


# ---------------------------------------------------------------------------
# Monte Carlo


def _mc_chunk(mu, rho, horizons, seed, start, batch, estimator):
    """Per-trajectory cumulative divergences at ``horizons`` and the first bad step."""
    n = horizons[-1]
    u = trajectory_uniforms(seed, range(start, start + batch), n)
    out = np.zeros((batch, len(horizons)))
    col = {h: j for j, h in enumerate(horizons)}
    sm = mu.initial_state(batch)
    sr = rho.initial_state(batch) if estimator == "conditional" else None
    paths = np.zeros((batch, n), dtype=np.int64)
    cum = np.zeros(batch)
    bad_step = np.full(batch, -1)
    for t in range(n):
        lm = mu.step_logprobs(sm, t)
        if estimator == "conditional":
            lr = rho.step_logprobs(sr, t)
            kl = _kl_rows(lm, lr)
            newly = ~np.isfinite(kl) & (bad_step < 0)
            bad_step[newly] = t
            cum = cum + kl
        a = draw_symbols(lm, u[:, t])
        paths[:, t] = a
        sm = mu.advance(sm, a, t)
        if estimator == "conditional":
            sr = rho.advance(sr, a, t)
            if t + 1 in col:
                out[:, col[t + 1]] = cum
    if estimator == "joint":
        for h, j in col.items():
            lmu = mu.log_prob_batch(paths[:, :h])
            lrho = rho.log_prob_batch(paths[:, :h])
            with np.errstate(invalid="ignore"):
                out[:, j] = np.where(np.isfinite(lrho), lmu - lrho, np.inf)
            newly = ~np.isfinite(lrho) & (bad_step < 0)
            bad_step[newly] = h - 1
    return out, paths, bad_step


def mc_dn_series(mu: ProcessMeasure, rho: ProcessMeasure, horizons: Sequence[int],
                 samples: int, seed: int, estimator: str = "conditional",
                 chunk: int = 1000, jobs: int = 1) -> DivergenceSeries:
    """Monte-Carlo d_n at each horizon from ``samples`` trajectories of mu.

    ``conditional`` averages the per-step KL sums along each path;
    ``joint`` averages log2 mu(x_1..n) - log2 rho(x_1..n).  Trajectory i uses
    the stream seeded by (seed, i), so the result does not depend on ``chunk``
    or ``jobs``.
    """
    if samples < 2:
        raise InputError("need at least 2 samples")
    if estimator not in ("conditional", "joint"):
        raise InputError(f"unknown estimator {estimator!r}")
    if mu.alphabet != rho.alphabet:
        raise InputError("measures must share an alphabet")
    horizons = sorted(set(int(n) for n in horizons))
    if not horizons or horizons[0] < 1:
        raise InputError("horizons must be >= 1")
    starts = list(range(0, samples, chunk))
    work = [(s, min(chunk, samples - s)) for s in starts]

    def run(item):
        return _mc_chunk(mu, rho, horizons, seed, item[0], item[1], estimator)

    if jobs > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(run, work))
    else:
        parts = [run(w) for w in work]
    vals = np.concatenate([p[0] for p in parts])
    bad = np.concatenate([p[2] for p in parts])
    witness = None
    if (bad >= 0).any():
        i = int(np.flatnonzero(bad >= 0)[0])
        ci, off = divmod(i, chunk)
        path = parts[ci][1][off]
        witness = mu.alphabet.decode(path[: bad[i] + 1])
    means, errs = [], []
    for j in range(len(horizons)):
        col = vals[:, j]
        if not np.all(np.isfinite(col)):
            means.append(math.inf)
            errs.append(math.inf)
            continue
        means.append(float(col.mean()))
        errs.append(float(col.std(ddof=1) / math.sqrt(samples)))
    return DivergenceSeries(horizons, means, "monte-carlo", stderr=errs, samples=samples,
                            seed=seed, witness=witness, label=estimator)


def mc_dn(mu: ProcessMeasure, rho: ProcessMeasure, n: int, samples: int, seed: int,
          estimator: str = "conditional", chunk: int = 1000, jobs: int = 1) -> MCEstimate:
    s = mc_dn_series(mu, rho, [n], samples, seed, estimator, chunk, jobs)
    return MCEstimate(s.values[0], s.stderr[0], samples, seed, estimator, s.witness)


# ---------------------------------------------------------------------------
# total variation


def _future_logs(measures, states, t0, h, budget):
    """log2 probabilities of every y in X^h given the states, shape (K, B, |X|^h)."""
    m = len(measures[0].alphabet)
    b = next(iter(_leaves(states[0]))).shape[0]
    check_budget(b * m ** h, budget, "lookahead enumeration")
    logp = np.zeros((len(measures), b, 1))
    for j in range(h):
        width = logp.shape[2]
        steps = np.stack([mu.step_logprobs(s, t0 + j) for mu, s in zip(measures, states)])
        steps = steps.reshape(len(measures), b, width, m)
        logp = (logp[:, :, :, None] + steps).reshape(len(measures), b, width * m)
        if j + 1 < h:
            rows = np.repeat(np.arange(b * width), m)
            sym = np.tile(np.arange(m), b * width)
            states = [mu.advance(take_state(s, rows), sym, t0 + j)
                      for mu, s in zip(measures, states)]
    return logp


def _leaves(state):
    if isinstance(state, tuple):
        for s in state:
            yield from _leaves(s)
    else:
        yield state


def _tv_from_states(mu, rho, states, t0, h, budget):
    logp = _future_logs([mu, rho], states, t0, h, budget)
    return 0.5 * np.abs(np.exp2(logp[0]) - np.exp2(logp[1])).sum(axis=1)


def tv_conditional(mu: ProcessMeasure, rho: ProcessMeasure, history: HistoryLike = (),
                   h: int = 8, budget: int = DEFAULT_BUDGET) -> float:
    """(1/2) sum_{y in X^h} |mu(y | history) - rho(y | history)|.

    A lower bound on the conditional total variation, non-decreasing in h.
    Returns 1 when either measure gives the history probability zero.
    """
    if h < 0:
        raise InputError("h must be >= 0")
    x = mu._coerce(history)
    if not np.isfinite(mu.log_prob(x)) or not np.isfinite(rho.log_prob(x)):
        return 1.0
    states = [mu.state_after(x), rho.state_after(x)]
    v = float(_tv_from_states(mu, rho, states, len(x), h, budget)[0])
    return min(max(v, 0.0), 1.0)


def tv_series(mu: ProcessMeasure, rho: ProcessMeasure, history: HistoryLike,
              horizons: Sequence[int], h: int = 8, budget: int = DEFAULT_BUDGET) -> TVSeries:
    """Conditional TV after each prefix x_1..x_n of ``history`` for n in ``horizons``."""
    x = mu._coerce(history)
    vals = [tv_conditional(mu, rho, x[:n], h, budget) for n in horizons]
    return TVSeries(list(horizons), vals, h)


def _iid_posterior(measure: ProcessMeasure, counts: np.ndarray):
    """(log posterior weights (B, K), P(0) per component (K,)) for binary i.i.d. mixtures."""
    comps = measure.components if isinstance(measure, MixturePredictor) else [measure]
    weights = measure.weights if isinstance(measure, MixturePredictor) else np.ones(1)
    if len(measure.alphabet) != 2 or not all(isinstance(c, IIDMeasure) for c in comps):
        raise InputError("exchangeable lookahead needs binary i.i.d. measures or mixtures of them")
    logs = np.stack([c.log_table[0] for c in comps])  # (K, 2)
    joint = np.log2(weights)[None, :] + _counts_dot(counts, logs.T)
    return joint, np.array([c.probs[0] for c in comps])


def _tv_exchangeable(mu, rho, counts, h):
    """Cylinder TV at depth h for binary i.i.d. mixtures, lumped by the number of zeros."""
    j = np.arange(h + 1)
    log_binom = (gammaln(h + 1) - gammaln(j + 1) - gammaln(h - j + 1)) / math.log(2)
    laws = []
    for meas in (mu, rho):
        joint, p0 = _iid_posterior(meas, counts)
        post = joint - lse2(joint, axis=1)[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            lz = np.where(j[None, :] > 0, j[None, :] * np.log2(p0)[:, None], 0.0)
            lo = np.where(h - j[None, :] > 0, (h - j)[None, :] * np.log2(1 - p0)[:, None], 0.0)
        comp = log_binom[None, :] + lz + lo  # (K, h+1)
        laws.append(np.exp2(lse2(post[:, :, None] + comp[None, :, :], axis=1)))
    return 0.5 * np.abs(laws[0] - laws[1]).sum(axis=1)


@dataclass
class DichotomyResult:
    horizons: list[int]
    tv: np.ndarray                # (trajectories, len(horizons))
    final: np.ndarray
    labels: list[str]             # "to 0", "to 1", "undecided"
    fraction_to_0: float
    fraction_to_1: float
    fraction_undecided: float
    ci_to_1: tuple[float, float]  # l'_tv estimate interval
    h: int
    seed: int
    thresholds: tuple[float, float]

    def series(self, i: int) -> TVSeries:
        return TVSeries(self.horizons, [float(v) for v in self.tv[i]], self.h, self.seed,
                        label=f"trajectory {i}")

    def to_dict(self) -> dict:
        return {"horizons": self.horizons, "final": self.final.tolist(), "labels": self.labels,
                "fraction_to_0": self.fraction_to_0, "fraction_to_1": self.fraction_to_1,
                "fraction_undecided": self.fraction_undecided, "ci_to_1": list(self.ci_to_1),
                "h": self.h, "seed": self.seed, "thresholds": list(self.thresholds)}


def tv_dichotomy_trajectories(mu: ProcessMeasure, rho: ProcessMeasure, n: int, h: int = 8,
                              trajectories: int = 200, seed: int = 0,
                              checkpoints: Optional[Sequence[int]] = None,
                              low: float = 0.1, high: float = 0.9,
                              budget: int = DEFAULT_BUDGET,
                              lookahead: str = "cylinder") -> DichotomyResult:
    """Follow conditional TV along sampled paths of mu and classify the final value.

    The fraction classified "to 1" estimates the probability that rho fails
    to predict mu in total variation; its 95% Clopper-Pearson interval is
    returned with it.  ``lookahead="exchangeable"`` evaluates the same
    depth-h cylinder TV for binary i.i.d. mixtures by lumping continuations
    with equal symbol counts, which makes large h affordable.
    """
    if lookahead not in ("cylinder", "exchangeable"):
        raise InputError(f"unknown lookahead {lookahead!r}")
    if trajectories < 1 or n < 0:
        raise InputError("need n >= 0 and at least one trajectory")
    if checkpoints is None:
        checkpoints = sorted({0, *[2 ** j for j in range(int(math.log2(max(n, 1))) + 1)], n})
    checkpoints = sorted(set(int(c) for c in checkpoints if c <= n) | {n})
    u = trajectory_uniforms(seed, range(trajectories), n)
    sm, sr = mu.initial_state(trajectories), rho.initial_state(trajectories)
    lr_hist = np.zeros(trajectories)
    counts = np.zeros((trajectories, len(mu.alphabet)))
    tv = np.zeros((trajectories, len(checkpoints)))
    col = {c: j for j, c in enumerate(checkpoints)}
    for t in range(n + 1):
        if t in col:
            vals = np.ones(trajectories)
            ok = np.isfinite(lr_hist)
            if ok.any():
                idx = np.flatnonzero(ok)
                if lookahead == "exchangeable":
                    v = _tv_exchangeable(mu, rho, counts[idx], h)
                else:
                    v = _tv_from_states(mu, rho, [take_state(sm, idx), take_state(sr, idx)],
                                        t, h, budget)
                vals[idx] = np.clip(v, 0.0, 1.0)
            tv[:, col[t]] = vals
        if t == n:
            break
        lm = mu.step_logprobs(sm, t)
        lr = rho.step_logprobs(sr, t)
        a = draw_symbols(lm, u[:, t])
        lr_hist = lr_hist + lr[np.arange(trajectories), a]
        counts[np.arange(trajectories), a] += 1
        sm = mu.advance(sm, a, t)
        sr = rho.advance(sr, a, t)
    final = tv[:, -1]
    labels = ["to 0" if v <= low else "to 1" if v >= high else "undecided" for v in final]
    k1 = labels.count("to 1")
    ci = binomtest(k1, trajectories).proportion_ci(0.95, method="exact")
    return DichotomyResult(checkpoints, tv, final, labels,
                           labels.count("to 0") / trajectories, k1 / trajectories,
                           labels.count("undecided") / trajectories,
                           (float(ci.low), float(ci.high)), h, seed, (low, high))


# ---------------------------------------------------------------------------
# d_inf


def _ratio_abs(l1: np.ndarray, l2: np.ndarray) -> np.ndarray:
    """|log2 mu1/mu2| with 0/0 := 0 (log 0/0 = 0) and +inf for one-sided zeros."""
    f1, f2 = np.isfinite(l1), np.isfinite(l2)
    with np.errstate(invalid="ignore"):
        d = np.abs(l1 - l2)
    return np.where(f1 & f2, d, np.where(f1 | f2, np.inf, 0.0))


def d_inf_series(mu1: ProcessMeasure, mu2: ProcessMeasure, n: int,
                 budget: int = DEFAULT_BUDGET) -> tuple[list[float], Optional[str]]:
    """sup_{x in X^m} (1/m)|log2 mu1(x)/mu2(x)| for m = 1..n, and an infinite witness."""
    if n < 1:
        raise InputError("n must be >= 1")
    if mu1.alphabet != mu2.alphabet:
        raise InputError("measures must share an alphabet")
    walk = _Walk([mu1, mu2], budget)
    out: list[float] = []
    witness = None
    for t in range(n):
        walk.expand(walk.steps(), lambda c: np.isfinite(c[0]) | np.isfinite(c[1]))
        r = _ratio_abs(walk.logp[0], walk.logp[1])
        if not np.all(np.isfinite(r)):
            witness = walk.spell_parent(int(np.flatnonzero(~np.isfinite(r))[0]))
            out.extend([math.inf] * (n - t))
            break
        out.append(float(r.max()) / (t + 1) if r.size else 0.0)
    return out, witness


def d_inf(mu1: ProcessMeasure, mu2: ProcessMeasure, n: int,
          budget: int = DEFAULT_BUDGET) -> float:
    """Finite-n d_inf: sup over x_1..x_n of (1/n)|log2 mu1(x)/mu2(x)|."""
    return d_inf_series(mu1, mu2, n, budget)[0][-1]


def _require_same_order(mu1, mu2):
    for mu in (mu1, mu2):
        if not hasattr(mu, "order") or not hasattr(mu, "log_table"):
            raise InputError("Markov bound needs Markov (or i.i.d.) measures")
    if mu1.order != mu2.order:
        raise InputError(f"Markov bound needs equal orders, got {mu1.order} and {mu2.order}")
    if mu1.alphabet != mu2.alphabet:
        raise InputError("measures must share an alphabet")


def d_inf_markov_bound(mu1: ProcessMeasure, mu2: ProcessMeasure) -> float:
    """sup over (k+1)-blocks of (1/(k+1))|log2 mu1(x_1..k+1)/mu2(x_1..k+1)|.

    Exact for i.i.d. pairs.  For k >= 1 this block quantity does not bound
    the finite-n sup in general; ``d_inf_markov_envelope`` gives a valid
    bound.
    """
    _require_same_order(mu1, mu2)
    k = mu1.order
    logp = None
    for t, lp in enumerate_prefixes([mu1, mu2], k + 1):
        logp = lp
    return float(_ratio_abs(logp[0], logp[1]).max()) / (k + 1)


def d_inf_markov_envelope(mu1: ProcessMeasure, mu2: ProcessMeasure,
                          n: Optional[int] = None) -> float:
    """A valid upper bound on the finite-n d_inf of two same-order Markov measures.

    With I the worst log-ratio over the first min(n, k) symbols and tau the
    worst per-transition log-ratio, every x_1..x_n has
    |log2 mu1(x)/mu2(x)| <= I + (n - k) tau.  With ``n=None`` the limit
    n -> inf, which is tau, is returned.
    """
    _require_same_order(mu1, mu2)
    k = mu1.order
    tau = float(_ratio_abs(mu1.log_table, mu2.log_table).max())
    if n is None:
        return tau
    if n < 1:
        raise InputError("n must be >= 1")
    j = min(n, k)
    init = 0.0
    if j > 0:
        for t, lp in enumerate_prefixes([mu1, mu2], j):
            pass
        init = float(_ratio_abs(lp[0], lp[1]).max())
    total = init + (n - j) * tau if (n - j) > 0 else init
    return total / n


# ---------------------------------------------------------------------------
# asymptotic loss proxy


@dataclass
class KLLossEstimate:
    """Finite-horizon proxy for limsup (1/n) d_n; an estimate, not the limit."""

    value: float
    tail_horizons: list[int]
    tail_values: list[float]
    horizons: list[int]
    values_over_n: list[float]
    label: str = "finite-horizon proxy: max of d_n/n over the last tenth of horizons"


def kl_loss_estimate(series: DivergenceSeries) -> KLLossEstimate:
    if len(series.horizons) < 3:
        raise InputError("need at least 3 horizons")
    per = series.value_over_n()
    tail = max(1, math.ceil(len(per) / 10))
    return KLLossEstimate(float(max(per[-tail:])), series.horizons[-tail:], per[-tail:],
                          list(series.horizons), per)
