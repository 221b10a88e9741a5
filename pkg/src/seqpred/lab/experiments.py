"""Named, seeded experiments.

Each experiment is a ``compute(spec) -> payload`` function and a pure
``judge(payload) -> verdicts`` function.  Payloads hold only JSON-ready
series and tables, so every verdict can be recomputed from the emitted files.
"""

from __future__ import annotations

import math
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..core import TERNARY, enumerate_prefixes
from ..divergence import (
    DivergenceSeries,
    d_inf_series,
    exact_dn_series,
    mc_dn_series,
)
from ..measures import (
    DeterministicMeasure,
    SparseZerosPredictor,
    TargetSequence,
    bernoulli,
    make_gamma_prime_t,
    make_gamma_t,
    make_hidden_chain,
    make_markov,
    uniform,
)
from ..predictors import (
    adversary_sequence,
    build_cover_construction,
    check_ext,
    check_greedy,
    check_markov_mass,
    check_prediction_bound,
    check_v_mass,
    finite_memory_grid,
    mixture,
    rational_markov_grid,
    replace_regularizer,
)

LOG2_3_2 = math.log2(1.5)
POW2_HORIZONS = [2 ** j for j in range(4, 13)]


@dataclass
class ExperimentSpec:
    name: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    budget: int = 24
    jobs: int = 1

    def to_dict(self) -> dict:
        return {"name": self.name, "seed": self.seed, "params": self.params,
                "budget": self.budget, "jobs": self.jobs}

    def derived_seed(self, key: str) -> int:
        """Seed for one series; independent of scheduling and of the other series."""
        return (self.seed * 1_000_003 + zlib.crc32(key.encode())) % (2 ** 31)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    payload: dict
    verdicts: list[dict]
    seconds: float
    scope: str = ""

    @property
    def passed(self) -> bool:
        return all(v["holds"] for v in self.verdicts if not v.get("informational"))

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "scope": self.scope, "passed": self.passed,
                "verdicts": self.verdicts, "payload": self.payload,
                "wall_clock_seconds": self.seconds}


def verdict(claim: str, holds: bool, n=None, lhs=None, rhs=None, informational=False) -> dict:
    return {"claim": claim, "n": n, "holds": bool(holds), "lhs": _num(lhs), "rhs": _num(rhs),
            "informational": informational}


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _f(x) -> float:
    # payload numbers may be the strings "inf" / "-inf"
    return float(x)


def _series(s: DivergenceSeries, **extra) -> dict:
    d = {"kind": "divergence", **s.to_dict()}
    d.update(extra)
    return d


def _table(rows: list[dict], **extra) -> dict:
    return {"kind": "table", "rows": rows, **extra}


def _run_tasks(spec: ExperimentSpec, tasks: dict[str, Callable[[], dict]]) -> dict:
    names = list(tasks)
    if spec.jobs > 1:
        with ThreadPoolExecutor(max_workers=spec.jobs) as ex:
            done = list(ex.map(lambda k: tasks[k](), names))
    else:
        done = [tasks[k]() for k in names]
    return dict(zip(names, done))


def _adversary_series(rho, n_max, horizons, allowed=None) -> DivergenceSeries:
    adv = adversary_sequence(rho, n_max, allowed)
    dn = adv.dn()
    s = DivergenceSeries(list(horizons), [float(dn[n - 1]) for n in horizons], "exact")
    s.label = "adversary"
    return s, adv


def _adversary_entry(rho, n_max, horizons, allowed=None) -> dict:
    s, adv = _adversary_series(rho, n_max, horizons, allowed)
    max_cond = float(np.exp2(adv.logprobs.max()))
    return _series(s, max_conditional=max_cond, alphabet_size=len(rho.alphabet),
                   allowed_size=len(rho.alphabet) if allowed is None else len(allowed))


# ---------------------------------------------------------------------------
# closed forms used as oracles


def dn_gammat_uniform_closed_form(n: int) -> float:
    """d_n(gamma_t, uniform): first deviation at step i has probability 1/(i(i+1))."""
    total = 0.0
    for i in range(1, n + 1):
        total += (i - math.log2(i * (i + 1))) / (i * (i + 1))
    return total + (n - math.log2(n + 1)) / (n + 1)


def dn_sqrt_zeros_closed_form(target: TargetSequence, n: int) -> float:
    """-log2 of the 1/n-zeros predictor along t_1..t_n."""
    t = target.first(n)
    total = 0.0
    for i in range(1, n + 1):
        if t[i - 1] == 0:
            total += math.log2(i)
        else:
            total += math.log2(i / (i - 1)) if i > 1 else math.inf
    return total


def bernoulli_kl(p: float, q: float) -> float:
    """KL(B(p) || B(q)) in bits, P(0) parameterization."""
    out = 0.0
    for a, b in ((p, q), (1 - p, 1 - q)):
        if a > 0:
            out += math.inf if b == 0 else a * math.log2(a / b)
    return out


# ---------------------------------------------------------------------------
# theorem3_c1


C1_DEFAULTS = {"horizons": POW2_HORIZONS, "exact_max": 12, "samples": 2000,
               "target": "random:7"}


def c1_candidates(target: TargetSequence):
    other = TargetSequence.const(1)
    return {
        "uniform": uniform(2),
        "grid_k1_d4": rational_markov_grid(1, 4),
        "gammat_other": make_gamma_t(other),
        "uniform_plus_gammat": mixture([uniform(2), make_gamma_t(target)]),
    }


def compute_theorem3_c1(spec: ExperimentSpec) -> dict:
    p = {**C1_DEFAULTS, **spec.params}
    t = TargetSequence.parse(p["target"])
    g_t, gamma, det = make_gamma_t(t), uniform(2), DeterministicMeasure(t)
    horizons = list(p["horizons"])
    small = list(range(1, p["exact_max"] + 1))
    big = [n for n in horizons if n > p["exact_max"]]
    tasks = {
        "dn_gammat_uniform_exact": lambda: _series(
            exact_dn_series(g_t, gamma, small, budget=spec.budget)),
        "dn_gammat_uniform_closed_form": lambda: _series(DivergenceSeries(
            small + big, [dn_gammat_uniform_closed_form(n) for n in small + big], "exact")),
        "dn_t_gammat": lambda: _series(exact_dn_series(det, g_t, horizons, budget=spec.budget)),
    }
    if big:
        seed = spec.derived_seed("dn_gammat_uniform_mc")
        tasks["dn_gammat_uniform_mc"] = lambda: _series(
            mc_dn_series(g_t, gamma, big, p["samples"], seed))
    for name, rho in c1_candidates(t).items():
        tasks[f"adversary_{name}"] = (lambda r=rho: _adversary_entry(r, max(horizons), horizons))
    return _run_tasks(spec, tasks)


def judge_theorem3_c1(payload: dict) -> list[dict]:
    out = []
    ex = payload["dn_gammat_uniform_exact"]
    for n, v in zip(ex["horizons"], ex["values"]):
        out.append(verdict("d_n(gamma_t, uniform) <= 1 (exact)", _f(v) <= 1.0 + 1e-12, n, v, 1.0))
    cf = payload["dn_gammat_uniform_closed_form"]
    cf_map = dict(zip(cf["horizons"], cf["values"]))
    for n, v in zip(ex["horizons"], ex["values"]):
        out.append(verdict("exact d_n(gamma_t, uniform) equals the closed form",
                           abs(_f(v) - cf_map[n]) <= 1e-9, n, v, cf_map[n]))
    if "dn_gammat_uniform_mc" in payload:
        mc = payload["dn_gammat_uniform_mc"]
        prev = math.inf
        for n, v, se in zip(mc["horizons"], mc["values"], mc["stderr"]):
            out.append(verdict("Monte-Carlo d_n(gamma_t, uniform) within 4 stderr of closed form",
                               abs(_f(v) - cf_map[n]) <= 4 * _f(se) + 1e-12, n, v, cf_map[n]))
            out.append(verdict("d_n(gamma_t, uniform)/n decreasing", _f(v) / n < prev, n,
                               _f(v) / n, prev))
            prev = _f(v) / n
            out.append(verdict("d_n(gamma_t, uniform) <= 1 beyond the exact range", _f(v) <= 1.0,
                               n, v, 1.0, informational=True))
    s = payload["dn_t_gammat"]
    for n, v in zip(s["horizons"], s["values"]):
        out.append(verdict("d_n(t, gamma_t) = log2(n+1)", abs(_f(v) - math.log2(n + 1)) <= 1e-9,
                           n, v, math.log2(n + 1)))
    out.extend(_judge_adversaries(payload, per_step=1.0))
    return out


def _judge_adversaries(payload: dict, per_step: float, key: str = "adversary_") -> list[dict]:
    out = []
    for name, entry in payload.items():
        if not name.startswith(key):
            continue
        m = entry["allowed_size"]
        out.append(verdict(f"{name}: every realized conditional <= 1/{m}",
                           entry["max_conditional"] <= 1.0 / m + 1e-12, None,
                           entry["max_conditional"], 1.0 / m))
        for n, v in zip(entry["horizons"], entry["values"]):
            out.append(verdict(f"{name}: d_n(t, rho) >= {per_step:.6g} n",
                               _f(v) >= per_step * n - 1e-9 * n, n, v, per_step * n))
    return out


# ---------------------------------------------------------------------------
# theorem3_c2


C2_DEFAULTS = {"horizons": POW2_HORIZONS, "target": "random:11"}


def compute_theorem3_c2(spec: ExperimentSpec) -> dict:
    p = {**C2_DEFAULTS, **spec.params}
    t = TargetSequence.parse(p["target"])
    gp, det = make_gamma_prime_t(t), DeterministicMeasure(t)
    horizons = list(p["horizons"])
    small = [n for n in range(1, 11)]
    candidates = {
        "uniform": uniform(2),
        "grid_k0_d4": rational_markov_grid(0, 4),
        "grid_k1_d2": rational_markov_grid(1, 2),
        "finite_memory_k2_d2": finite_memory_grid(2, 2),
    }
    tasks = {
        "dn_t_gammaprime": lambda: _series(exact_dn_series(det, gp, horizons, budget=spec.budget)),
        "dn_gammaprime_self": lambda: _series(exact_dn_series(gp, gp, small, budget=spec.budget)),
    }
    for name, rho in candidates.items():
        tasks[f"adversary_{name}"] = (lambda r=rho: _adversary_entry(r, max(horizons), horizons))
    return _run_tasks(spec, tasks)


def judge_theorem3_c2(payload: dict) -> list[dict]:
    out = []
    s = payload["dn_t_gammaprime"]
    for n, v in zip(s["horizons"], s["values"]):
        out.append(verdict("d_n(t, gamma'_t) = n log2(3/2)",
                           abs(_f(v) - n * LOG2_3_2) <= 1e-9, n, v, n * LOG2_3_2))
    s = payload["dn_gammaprime_self"]
    for n, v in zip(s["horizons"], s["values"]):
        out.append(verdict("d_n(gamma'_t, gamma'_t) = 0", _f(v) == 0.0, n, v, 0.0))
    out.extend(_judge_adversaries(payload, per_step=1.0))
    gaps = 0
    for name, entry in payload.items():
        if name.startswith("adversary_"):
            n, v = entry["horizons"][-1], _f(entry["values"][-1])
            gaps += v / n >= 1.0 > LOG2_3_2
    out.append(verdict("adversary gap 1 > log2(3/2) exhibited for >= 2 candidates",
                       gaps >= 2, None, gaps, 2))
    return out


# ---------------------------------------------------------------------------
# finite_memory


FM_DEFAULTS = {"max_order": 2, "denominator": 8, "exact_max": 8, "mc_n": 4096,
               "mc_samples": 400, "off_grid_p": 1 / math.pi,
               "on_grid": [
                   {"family": "bernoulli", "p": "3/8"},
                   {"family": "markov", "order": 1, "table": [["5/8", "3/8"], ["1/4", "3/4"]]},
                   {"family": "markov", "order": 2,
                    "table": [["7/8", "1/8"], ["1/2", "1/2"], ["1/4", "3/4"], ["3/8", "5/8"]]},
               ]}


def _component_log_weight(nu, spec: dict) -> float:
    for c, w in zip(nu.components, nu.weights):
        s = c.to_spec()
        if s["order"] == spec.get("order", 0) and s["table"] == spec.get("table"):
            return math.log2(w)
    raise KeyError("source is not a grid component")


def compute_finite_memory(spec: ExperimentSpec) -> dict:
    from ..specs import from_spec

    p = {**FM_DEFAULTS, **spec.params}
    k, d = int(p["max_order"]), int(p["denominator"])
    nu = finite_memory_grid(k, d)
    payload = {"grid": _table([{"order": j, "components": s} for j, s in enumerate(nu.order_sizes)],
                              total=len(nu))}
    small = list(range(1, int(p["exact_max"]) + 1))
    tasks = {}
    for i, src in enumerate(p["on_grid"]):
        mu = from_spec(src)
        desc = mu.to_spec()
        if "table" not in desc:
            desc = {"order": 0, "table": [[str(x) for x in mu._raw]]}
        lw = _component_log_weight(nu, desc)
        tasks[f"on_grid_{i}"] = (lambda m=mu, lw=lw, s=src: _series(
            exact_dn_series(m, nu, small, budget=spec.budget), bound=-lw, source=s))

    q = float(p["off_grid_p"])
    order0 = [(c, w) for c, w in zip(nu.components, nu.weights) if c.order == 0]
    costs = [(bernoulli_kl(q, float(c.table[0, 0])), -math.log2(w), c.to_spec()["table"])
             for c, w in order0]
    n = int(p["mc_n"])
    kl, wcost, nearest = min(costs, key=lambda c: n * c[0] + c[1])
    seed = spec.derived_seed("off_grid")
    horizons = [h for h in POW2_HORIZONS if h <= n] or [n]
    tasks["off_grid"] = lambda: _series(
        mc_dn_series(bernoulli(q), nu, horizons, int(p["mc_samples"]), seed, estimator="joint"),
        kl_nearest=kl, weight_cost=wcost, nearest=nearest, p=q)
    tiny = rational_markov_grid(0, 1)
    tasks["tiny_k0_d1"] = lambda: _series(exact_dn_series(bernoulli(1), tiny, small,
                                                          budget=spec.budget))
    payload.update(_run_tasks(spec, tasks))
    return payload


def judge_finite_memory(payload: dict) -> list[dict]:
    out = []
    for name, e in payload.items():
        if name.startswith("on_grid_"):
            for n, v in zip(e["horizons"], e["values"]):
                out.append(verdict(f"{name}: d_n(mu, nu) <= -log2 w", _f(v) <= e["bound"] + 1e-9,
                                   n, v, e["bound"]))
    e = payload["off_grid"]
    for n, v, se in zip(e["horizons"], e["values"], e["stderr"]):
        rhs = e["kl_nearest"] + e["weight_cost"] / n
        out.append(verdict("off-grid d_n/n <= KL to nearest grid point + weight cost / n",
                           _f(v) / n <= rhs + 3 * _f(se) / n, n, _f(v) / n, rhs))
    e = payload["tiny_k0_d1"]
    for n, v in zip(e["horizons"], e["values"]):
        out.append(verdict("k=0, d=1 grid: d_n(B(1), nu) = 1", abs(_f(v) - 1.0) <= 1e-12, n, v, 1))
    return out


# ---------------------------------------------------------------------------
# stationary_impossibility


SI_DEFAULTS = {"horizons": POW2_HORIZONS, "marginal_n": 6, "cover_horizon": 5,
               "mc_samples": 2}


def si_candidates(spec: ExperimentSpec, horizon: int):
    pool = [make_hidden_chain(TargetSequence.parse(s), 40)
            for s in ("const:0", "const:1", "periodic:01")]
    cc = build_cover_construction(pool, mixture(pool), horizon, budget=spec.budget)
    return {
        "uniform": uniform(3),
        "grid_k0_d3": rational_markov_grid(0, 3, TERNARY),
        "grid_k1_d2": rational_markov_grid(1, 2, TERNARY),
        "cover_hidden_pool": cc.predictor,
    }


def compute_stationary_impossibility(spec: ExperimentSpec) -> dict:
    p = {**SI_DEFAULTS, **spec.params}
    horizons = list(p["horizons"])
    N = max(horizons)
    tasks = {}
    for name, rho in si_candidates(spec, int(p["cover_horizon"])).items():
        tasks[f"adversary_{name}"] = (lambda r=rho: _adversary_entry(r, N, horizons))

        def binary_case(r=rho, name=name):
            s, adv = _adversary_series(r, N, horizons, allowed=[1, 2])
            bits = (adv.symbols - 1).tolist()
            t = TargetSequence.prefix(bits, 0)
            det = DeterministicMeasure(TargetSequence.prefix(adv.symbols.tolist(), 1), TERNARY)
            mu_t = make_hidden_chain(t)
            ex = exact_dn_series(det, mu_t, horizons, budget=spec.budget)
            mc = mc_dn_series(det, mu_t, horizons, int(p["mc_samples"]),
                              spec.derived_seed(f"mu_t_{name}"))
            return {"binary_adversary": _series(s, max_conditional=float(
                        np.exp2(adv.logprobs.max())), alphabet_size=3, allowed_size=2),
                    "dn_t_mu_t_exact": _series(ex), "dn_t_mu_t_mc": _series(mc)}

        tasks[f"binary_{name}"] = binary_case
    res = _run_tasks(spec, tasks)
    payload = {}
    for k, v in res.items():
        if k.startswith("binary_"):
            for sub, entry in v.items():
                payload[f"{sub}_{k[len('binary_'):]}"] = entry
        else:
            payload[k] = v
    mu = make_hidden_chain(TargetSequence.parse("random:3"))
    rows = []
    for n, lp in enumerate_prefixes([mu], int(p["marginal_n"]), spec.budget):
        if n == 0:
            continue
        # x_n = 'a' is index 0, the least significant digit
        idx = np.arange(lp.shape[1])
        pa = float(np.exp2(lp[0][idx % 3 == 0]).sum())
        rows.append({"n": n, "p_a": pa})
    payload["a_marginal"] = _table(rows)
    return payload


def judge_stationary_impossibility(payload: dict) -> list[dict]:
    out = _judge_adversaries(payload, per_step=math.log2(3))
    for name, entry in payload.items():
        if name.startswith("binary_adversary_"):
            for n, v in zip(entry["horizons"], entry["values"]):
                out.append(verdict(f"{name}: d_n(t, rho)/n >= 1", _f(v) >= n - 1e-9 * n,
                                   n, _f(v) / n, 1.0))
            out.append(verdict(f"{name}: realized conditionals <= 1/2 on {{0,1}}",
                               entry["max_conditional"] <= 0.5 + 1e-12, None,
                               entry["max_conditional"], 0.5))
        if name.startswith("dn_t_mu_t_mc_"):
            ex = payload["dn_t_mu_t_exact_" + name[len("dn_t_mu_t_mc_"):]]
            prev = math.inf
            for n, v, se, xv in zip(entry["horizons"], entry["values"], entry["stderr"],
                                    ex["values"]):
                slope = _f(v) / n
                corr = slope - LOG2_3_2
                out.append(verdict(f"{name}: Monte-Carlo agrees with exact",
                                   abs(_f(v) - _f(xv)) <= 4 * _f(se) + 1e-9, n, v, xv))
                out.append(verdict(f"{name}: correction d_n/n - log2(3/2) >= 0",
                                   corr >= -1e-12, n, corr, 0.0))
                out.append(verdict(f"{name}: correction shrinking", corr <= prev, n, corr, prev,
                                   informational=True))
                prev = corr
            n, v = entry["horizons"][-1], _f(entry["values"][-1])
            out.append(verdict(f"{name}: |d_n/n - log2(3/2)| <= 0.02 at the largest horizon",
                               abs(v / n - LOG2_3_2) <= 0.02, n, v / n, LOG2_3_2))
    for r in payload["a_marginal"]["rows"]:
        out.append(verdict("P(x_n = a) = 1/3", abs(r["p_a"] - 1 / 3) <= 1e-9, r["n"], r["p_a"],
                           1 / 3))
    return out


# ---------------------------------------------------------------------------
# sqrt_zeros


SZ_DEFAULTS = {"horizons": POW2_HORIZONS, "targets": ["squares:0:1", "squares:-1:2"],
               "dinf_n": 1024}


def compute_sqrt_zeros(spec: ExperimentSpec) -> dict:
    p = {**SZ_DEFAULTS, **spec.params}
    nu = SparseZerosPredictor()
    horizons = list(p["horizons"])
    tasks = {}
    targets = [TargetSequence.parse(s) for s in p["targets"]]
    for i, t in enumerate(targets):
        det = DeterministicMeasure(t)
        tasks[f"dn_member_{i}"] = (lambda d=det, t=t: _series(
            exact_dn_series(d, nu, horizons, budget=spec.budget), target=t.to_spec(),
            closed_form=[dn_sqrt_zeros_closed_form(t, n) for n in horizons]))

    def dinf():
        vals, witness = d_inf_series(DeterministicMeasure(targets[0]),
                                     DeterministicMeasure(targets[1]), int(p["dinf_n"]),
                                     spec.budget)
        return _table([{"n": int(p["dinf_n"]), "d_inf": _num(vals[-1]), "witness": witness}])

    tasks["dinf_members"] = dinf
    tasks["dn_empty"] = lambda: _table([{"n": 0, "value": 0.0}])
    return _run_tasks(spec, tasks)


def judge_sqrt_zeros(payload: dict) -> list[dict]:
    out = []
    for name, e in payload.items():
        if not name.startswith("dn_member_"):
            continue
        prev = math.inf
        for n, v, cf in zip(e["horizons"], e["values"], e["closed_form"]):
            out.append(verdict(f"{name}: d_n matches the closed-form sum",
                               abs(_f(v) - cf) <= 1e-9 * max(1.0, cf), n, v, cf))
            env = (math.sqrt(n) + 2) * math.log2(n) / n
            out.append(verdict(f"{name}: d_n/n <= (sqrt(n) + 2) log2(n) / n", _f(v) / n <= env,
                               n, _f(v) / n, env))
            out.append(verdict(f"{name}: d_n/n decreasing", _f(v) / n < prev, n, _f(v) / n, prev,
                               informational=True))
            prev = _f(v) / n
    row = payload["dinf_members"]["rows"][0]
    out.append(verdict("distinct members: finite-n d_inf is infinite",
                       row["d_inf"] == "inf", row["n"], row["d_inf"], "inf"))
    return out


# ---------------------------------------------------------------------------
# cover_construction


def cover_pool():
    return [
        bernoulli("1/4"),
        bernoulli("3/4"),
        make_markov(1, [["9/10", "1/10"], ["1/5", "4/5"]]),
        make_markov(1, [["1/2", "1/2"], ["1/10", "9/10"]]),
        make_gamma_t(TargetSequence.const(0)),
        make_gamma_prime_t(TargetSequence.periodic([0, 1])),
    ]


CC_DEFAULTS = {"horizon": 10}


def compute_cover_construction(spec: ExperimentSpec) -> dict:
    p = {**CC_DEFAULTS, **spec.params}
    pool = cover_pool()
    N = int(p["horizon"])
    rho = mixture(pool)
    payload = {}
    for scheme in ("inverse-square", "geometric"):
        cc = build_cover_construction(pool, rho, N, scheme=scheme, budget=spec.budget)
        dn = np.array([exact_dn_series(mu, cc.predictor, range(1, N + 1), budget=spec.budget
                                       ).values for mu in pool])
        tag = "" if scheme == "inverse-square" else "_geometric"
        payload[f"prediction_bound{tag}"] = _table(check_prediction_bound(cc, dn))
        if scheme != "inverse-square":
            continue
        payload["audit"] = {"kind": "audit", **cc.audit()}
        payload["markov_mass"] = _table(check_markov_mass(cc))
        payload["v_mass"] = _table(check_v_mass(cc))
        payload["ext"] = _table(check_ext(cc))
        payload["greedy"] = _table(check_greedy(cc))
        rows = []
        for st in cc.steps:
            for j in range(len(pool)):
                rows.append({"n": st.n, "pool": j,
                             "mass_outside_T": float(np.exp2(st.log_mu[j][~st.T[j]]).sum())})
        payload["outside_T"] = _table(rows)
        for i, mu in enumerate(pool):
            payload[f"dn_pool_{i}"] = _series(DivergenceSeries(
                list(range(1, N + 1)), [float(v) for v in dn[i]], "exact"))
        reg = replace_regularizer(cc, budget=spec.budget)
        payload["regularizer"] = _table([reg.audit])
    return payload


def judge_cover_construction(payload: dict) -> list[dict]:
    out = []
    for key, claim in (("markov_mass", "mu(X^n \\ U) <= 1/n"),
                       ("v_mass", "mu(X^n \\ V) <= (d_n(mu, p(mu)) + log2(e)/e) / delta_n"),
                       ("prediction_bound",
                        "(1/n) d_n(mu, nu) <= (1/n) d_n(mu, p(mu)) + c(n)/n")):
        for r in payload[key]["rows"]:
            lhs = r.get("mass", r.get("lhs"))
            rhs = r.get("bound", r.get("rhs"))
            out.append(verdict(f"{claim} [pool {r['pool']}]", _f(lhs) <= _f(rhs), r["n"], lhs,
                               rhs))
    for r in payload["ext"]["rows"]:
        out.append(verdict("nu_n >= w_k (1/n) 2^-delta rho on covered sequences",
                           _f(r["min_margin"]) >= -1e-9, r["n"], r["min_margin"], 0.0))
    for r in payload["greedy"]["rows"]:
        out.append(verdict("greedy masses non-increasing and m_k <= 1/k",
                           r["non_increasing"] and r["le_one_over_k"], r["n"]))
    for r in payload["prediction_bound_geometric"]["rows"]:
        out.append(verdict(f"geometric weights: prediction bound [pool {r['pool']}]",
                           r["lhs"] <= r["rhs"], r["n"], r["lhs"], r["rhs"], informational=True))
    reg = payload["regularizer"]["rows"][0]
    out.append(verdict("regularizer lower bound gamma' >= (1/2) w_n |X|^-n mu",
                       reg["lower_bound_ok"], None, reg["lower_bound_min_margin"], 0.0))
    by_pool: dict[int, list[float]] = {}
    for r in payload["outside_T"]["rows"]:
        by_pool.setdefault(r["pool"], []).append(r["mass_outside_T"])
    for j, masses in by_pool.items():
        out.append(verdict(f"mu(X^n \\ T) trend decreasing [pool {j}]",
                           masses[-1] <= masses[0], None, masses[-1], masses[0],
                           informational=True))
    return out


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class Experiment:
    name: str
    summary: str
    compute: Callable[[ExperimentSpec], dict]
    judge: Callable[[dict], list[dict]]
    scope: str = ""


REGISTRY: dict[str, Experiment] = {e.name: e for e in [
    Experiment("theorem3_c1",
               "sequence-biased family: realizable case solved by uniform, adversary defeats all",
               compute_theorem3_c1, judge_theorem3_c1),
    Experiment("theorem3_c2",
               "strongly biased family: d_n(t, gamma'_t)/n = log2(3/2) vs adversary slope >= 1",
               compute_theorem3_c2, judge_theorem3_c2),
    Experiment("finite_memory",
               "rational-grid Markov mixture predicts on-grid and off-grid finite-memory sources",
               compute_finite_memory, judge_finite_memory),
    Experiment("stationary_impossibility",
               "hidden-chain family beats every supplied predictor on its adversarial sequence",
               compute_stationary_impossibility, judge_stationary_impossibility,
               scope="only the supplied candidate predictors are refuted, not every predictor"),
    Experiment("sqrt_zeros",
               "1/n-zeros predictor: vanishing KL loss on a pool with infinite mutual d_inf",
               compute_sqrt_zeros, judge_sqrt_zeros),
    Experiment("cover_construction",
               "greedy cover predictor on a six-measure pool with full audit",
               compute_cover_construction, judge_cover_construction),
]}


def run_experiment(name: str, seed: int = 0, params: dict | None = None, budget: int = 24,
                   jobs: int = 1) -> ExperimentResult:
    if name not in REGISTRY:
        from ..core import InputError
        raise InputError(f"unknown experiment {name!r}; available: {', '.join(REGISTRY)}")
    exp = REGISTRY[name]
    spec = ExperimentSpec(name, seed, dict(params or {}), budget, jobs)
    start = time.perf_counter()
    payload = exp.compute(spec)
    verdicts = exp.judge(payload)
    return ExperimentResult(spec, payload, verdicts, time.perf_counter() - start, exp.scope)
