"""Minimum-power operating points and the energy lower bound.

The access-link problems are nonconvex (phases of jointly encoded codewords,
interference terms), so every inner problem is solved from several starts:
a coherent start with each codeword beamformed onto its weakest decoder, and
randomised starts around it.  Each start is refined with SLSQP on the real and
imaginary parts of the admissible mixing entries (plus the free rate-split
fractions, kept on the simplex), then repaired onto the feasible set by
scaling the mixing matrix up, which never lowers any rate bound.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .cgras import Cgras, ensure_valid, canonical_schemes, enumerate_closed_sets, prune_zero_rate
from .gaussian import LN2, MixingMatrix, relay_link_power, snr_for_rate
from .model import (MessageAllocation, NetworkConfig, PowerReport, complex_to_doc,
                    dump_config, enumerate_allocations)

log = logging.getLogger(__name__)

BINDING_BITS = 1e-5
REPAIR_BITS = 1e-12


@dataclass(frozen=True)
class OptimizerSettings:
    """Solver knobs.

    ``grid_resolution`` g gives split fractions ``k/(g+1)``, k = 1..g;
    ``step_init`` is the log-magnitude spread of randomised restarts.
    """

    grid_resolution: int = 1
    max_restarts: int = 4
    step_init: float = 0.5
    tolerance_feas: float = 1e-6
    tolerance_power: float = 1e-6
    scheme_cap: int = 16
    seed: int = 0
    max_iter: int = 400
    refine_split: bool = True

    def __post_init__(self):
        for name in ("grid_resolution", "max_restarts", "scheme_cap", "max_iter"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("step_init", "tolerance_feas", "tolerance_power"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.tolerance_feas >= 1 or self.tolerance_power >= 1:
            raise ValueError("tolerances must be below 1")

    @property
    def split_grid(self) -> list[float]:
        g = self.grid_resolution
        return [k / (g + 1) for k in range(1, g + 1)]


# -- generic multi-start driver -------------------------------------------------

class _Problem:
    """Interface for the two access-link problems.

    Variables are ``x = [Re a, Im a, extra]`` where ``a`` lists the admissible
    complex mixing entries; the objective is ``sum |a|^2``.
    """

    n_entries: int
    n_extra: int = 0
    bounds = None

    def rate_slack(self, x) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def equalities(self):
        return []

    def project(self, x):
        return x

    def row_powers(self, x) -> np.ndarray:
        raise NotImplementedError

    def cap_slack(self, x):
        return self.caps - self.row_powers(x)

    def cap_jac(self, x):
        raise NotImplementedError

    def power(self, x) -> float:
        a = x[:2 * self.n_entries]
        return float(a @ a)


def _scale(prob: _Problem, x, t):
    y = x.copy()
    y[:2 * prob.n_entries] *= t
    return y


def _repair(prob: _Problem, x, tol_bits: float):
    """Scale the mixing part up until every rate constraint holds."""
    x = prob.project(x)
    s, _ = prob.rate_slack(x)
    if s.size == 0 or s.min() >= -REPAIR_BITS:
        return x
    finite = np.isfinite(prob.caps)
    lo, hi = 1.0, 1.0
    for _ in range(80):
        hi *= 2.0
        if prob.rate_slack(_scale(prob, x, hi))[0].min() >= -REPAIR_BITS:
            break
    else:
        return x if s.min() >= -tol_bits else None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if prob.rate_slack(_scale(prob, x, mid))[0].min() >= -REPAIR_BITS:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * hi:
            break
    y = _scale(prob, x, hi)
    if np.any(prob.row_powers(y)[finite] > prob.caps[finite] * (1 + 1e-12)):
        # scaling would break a relay cap; fall back to the unscaled point
        return x if s.min() >= -tol_bits else None
    return y


def _solve(prob: _Problem, starts, settings: OptimizerSettings):
    """Return (best feasible x or None, best infeasible iterate)."""
    cons = [{"type": "ineq", "fun": lambda x: prob.rate_slack(x)[0],
             "jac": lambda x: prob.rate_slack(x)[1]}]
    if np.any(np.isfinite(prob.caps)):
        finite = np.flatnonzero(np.isfinite(prob.caps))
        cons.append({"type": "ineq", "fun": lambda x: prob.cap_slack(x)[finite],
                     "jac": lambda x: prob.cap_jac(x)[finite]})
    cons.extend(prob.equalities())

    def objective(x):
        g = np.zeros_like(x)
        m = 2 * prob.n_entries
        g[:m] = 2 * x[:m]
        return prob.power(x), g

    best, best_p = None, math.inf
    fallback, fallback_viol = None, math.inf
    for x0 in starts:
        with np.errstate(all="ignore"):
            res = minimize(objective, x0, jac=True, method="SLSQP", bounds=prob.bounds,
                           constraints=cons,
                           options={"maxiter": settings.max_iter, "ftol": 1e-14})
        x = res.x if np.all(np.isfinite(res.x)) else x0
        cand = _repair(prob, x, settings.tolerance_feas)
        if cand is not None:
            caps_ok = np.all(prob.cap_slack(cand) >= -1e-9 * np.maximum(1, prob.caps))
            slack = prob.rate_slack(cand)[0]
            if caps_ok and (slack.size == 0 or slack.min() >= -settings.tolerance_feas):
                p = prob.power(cand)
                if p < best_p - 1e-15:
                    best, best_p = cand, p
                continue
        viol = -prob.rate_slack(prob.project(x))[0].min()
        if viol < fallback_viol:
            fallback, fallback_viol = prob.project(x), viol
    return best, (best if best is not None else fallback)


# -- achievable scheme problem -------------------------------------------------------

class _SchemeProblem(_Problem):
    def __init__(self, config: NetworkConfig, cgras: Cgras, refine: bool):
        self.config = config
        self.cgras = cgras
        self.H = config.access_gains
        self.R = config.target_rates
        self.caps = config.relay_power_caps.astype(float)
        nv = cgras.n_vertices
        n_rn = config.n_relays
        self.entries = [(j, v) for v in range(nv) for j in sorted(cgras.vertices[v].encoders)
                        if j < n_rn]
        self.ej = np.array([e[0] for e in self.entries], dtype=int)
        self.ev = np.array([e[1] for e in self.entries], dtype=int)
        self.n_entries = len(self.entries)

        self.gamma0 = np.array(cgras.gamma, dtype=float)
        self.free: list[tuple[int, int]] = []
        self.free_rows: dict[int, list[int]] = {}
        if refine:
            for z in range(self.gamma0.shape[0]):
                support = [v for v in range(nv) if self.gamma0[z, v] > 0]
                if self.R[z] > 0 and len(support) >= 2:
                    self.free_rows[z] = list(range(len(self.free), len(self.free) + len(support)))
                    self.free.extend((z, v) for v in support)
        self.n_extra = len(self.free)
        self.bounds = ([(None, None)] * (2 * self.n_entries) + [(0.0, 1.0)] * self.n_extra
                       if self.n_extra else None)

        zk, fm, om, labels = [], [], [], []
        for z in range(config.n_receivers):
            decoded = set(cgras.decoded_by(z))
            for F in enumerate_closed_sets(cgras, z):
                zk.append(z)
                fm.append([v in F.members for v in range(nv)])
                om.append([v not in decoded for v in range(nv)])
                labels.append(f"rx{z}:{F.label()}")
        self.zk = np.array(zk, dtype=int)
        self.fm = np.array(fm, dtype=float).reshape(len(zk), nv)
        self.om = np.array(om, dtype=float).reshape(len(zk), nv)
        self.labels = labels

    def unpack(self, x):
        m = self.n_entries
        a = np.zeros((self.config.n_relays, self.cgras.n_vertices), dtype=complex)
        a[self.ej, self.ev] = x[:m] + 1j * x[m:2 * m]
        g = self.gamma0.copy()
        for k, (z, v) in enumerate(self.free):
            g[z, v] = x[2 * m + k]
        return a, g

    def pack(self, a, gamma=None):
        gamma = self.gamma0 if gamma is None else gamma
        vals = a[self.ej, self.ev]
        extra = [gamma[z, v] for z, v in self.free]
        return np.concatenate([vals.real, vals.imag, np.array(extra, dtype=float)])

    def rate_slack(self, x):
        a, g = self.unpack(x)
        c = self.H @ a
        G = np.abs(c) ** 2
        Gk = G[self.zk]
        S = np.sum(Gk * self.fm, axis=1)
        I = np.sum(Gk * self.om, axis=1)
        bound = (np.log1p(S + I) - np.log1p(I)) / (2 * LN2)
        sub = self.R @ g
        slack = bound - self.fm @ sub

        coef_f = 1.0 / (2 * LN2 * (1 + S + I))
        coef_o = coef_f - 1.0 / (2 * LN2 * (1 + I))
        W = self.fm * coef_f[:, None] + self.om * coef_o[:, None]
        # d slack / d a[j, v] for every admissible (j, v)
        gc = 2 * W[:, self.ev] * np.conj(self.H[self.zk][:, self.ej]) * c[self.zk][:, self.ev]
        jac = np.zeros((len(self.zk), 2 * self.n_entries + self.n_extra))
        jac[:, :self.n_entries] = gc.real
        jac[:, self.n_entries:2 * self.n_entries] = gc.imag
        for k, (z, v) in enumerate(self.free):
            jac[:, 2 * self.n_entries + k] = -self.R[z] * self.fm[:, v]
        return slack, jac

    def row_powers(self, x):
        m = self.n_entries
        p = x[:m] ** 2 + x[m:2 * m] ** 2
        return np.bincount(self.ej, weights=p, minlength=self.config.n_relays)

    def cap_jac(self, x):
        m = self.n_entries
        jac = np.zeros((self.config.n_relays, len(x)))
        jac[self.ej, np.arange(m)] = -2 * x[:m]
        jac[self.ej, m + np.arange(m)] = -2 * x[m:2 * m]
        return jac

    def equalities(self):
        out = []
        base = 2 * self.n_entries
        for z, idx in self.free_rows.items():
            def fun(x, idx=idx):
                return np.array([x[base + np.array(idx)].sum() - 1.0])

            def jac(x, idx=idx):
                j = np.zeros((1, len(x)))
                j[0, base + np.array(idx)] = 1.0
                return j
            out.append({"type": "eq", "fun": fun, "jac": jac})
        return out

    def project(self, x):
        if not self.free_rows:
            return x
        x = x.copy()
        base = 2 * self.n_entries
        for idx in self.free_rows.values():
            pos = base + np.array(idx)
            x[pos] = _simplex_projection(x[pos])
        return x

    def structurally_infeasible(self) -> bool:
        """Some constraint needs rate but none of its codewords can reach the receiver."""
        sub = self.R @ self.gamma0 if not self.free else self.R @ np.where(self.gamma0 > 0, 1.0, 0.0)
        for k, z in enumerate(self.zk):
            cols = np.flatnonzero(self.fm[k])
            if sub[cols].sum() <= 0:
                continue
            reach = any(np.any(self.H[z, sorted(self.cgras.vertices[v].encoders)] != 0) for v in cols)
            if not reach:
                return True
        return False

    def coherent(self, gamma=None):
        """Each column matched to the conjugate channel of its weakest decoder."""
        gamma = self.gamma0 if gamma is None else gamma
        sub = self.R @ gamma
        a = np.zeros((self.config.n_relays, self.cgras.n_vertices), dtype=complex)
        for v, vert in enumerate(self.cgras.vertices):
            enc = sorted(vert.encoders)
            need = snr_for_rate(max(sub[v], 1e-3))
            best = None
            for z in sorted(vert.decoders):
                h = self.H[z, enc]
                gain = float(np.sum(np.abs(h) ** 2))
                if gain == 0:
                    continue
                p = need / gain
                if best is None or p > best[0]:
                    best = (p, h, gain)
            if best is None:
                continue
            p, h, gain = best
            a[enc, v] = np.conj(h) / math.sqrt(gain) * math.sqrt(p)
        return self.pack(a, gamma)


def _simplex_projection(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, len(y) + 1)
    rho = np.nonzero(u * k > css - 1)[0][-1]
    theta = (css[rho] - 1) / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def _random_starts(base: np.ndarray, n_entries: int, count: int, spread: float, rng):
    out = []
    m = n_entries
    mag = np.hypot(base[:m], base[m:2 * m])
    scale = max(float(mag.max()) if m else 1.0, 1e-3)
    for _ in range(count):
        r = np.where(mag > 0, mag, scale) * np.exp(spread * rng.standard_normal(m))
        phi = rng.uniform(0, 2 * np.pi, m)
        x = base.copy()
        x[:m] = r * np.cos(phi)
        x[m:2 * m] = r * np.sin(phi)
        out.append(x)
    return out


def _binding(prob: _Problem, x, extra=()) -> list[str]:
    out = []
    slack, _ = prob.rate_slack(x)
    labels = getattr(prob, "labels", [])
    for s, lab in zip(slack, labels):
        if s <= BINDING_BITS:
            out.append(lab)
    rp = prob.row_powers(x)
    for j, cap in enumerate(prob.caps):
        if math.isfinite(cap) and rp[j] >= cap - 1e-6 * max(1.0, cap):
            out.append(f"relay_cap:{j}")
    out.extend(extra)
    return out


def _bs_part(config: NetworkConfig, alloc: MessageAllocation):
    bs = relay_link_power(config, alloc)
    binding = []
    if math.isfinite(config.bs_power_cap) and bs.total >= config.bs_power_cap - 1e-6 * max(1.0, config.bs_power_cap):
        binding.append("bs_cap")
    return bs, binding


def min_power_for_scheme(config: NetworkConfig, cgras: Cgras,
                         settings: OptimizerSettings | None = None,
                         warm_start: np.ndarray | None = None,
                         rng: np.random.Generator | None = None) -> PowerReport:
    """Cheapest mixing matrix (and refined split) that supports the target rates.

    Returns a :class:`PowerReport` whose ``mixing``/``gamma`` hold the solution
    for the scheme's vertices; ``feasible`` is False when no start reached the
    rate region within ``tolerance_feas`` bits under the relay caps (the report
    then carries the least-violating iterate).  ``warm_start`` is an optional
    extra starting mixing matrix over the same vertices.
    """
    settings = settings or OptimizerSettings()
    rng = rng if rng is not None else np.random.default_rng(settings.seed)
    ensure_valid(cgras, config.target_rates)
    rates = config.target_rates
    bs, bs_binding = _bs_part(config, cgras.allocation)

    if not np.any(rates > 0):
        zeros = np.zeros(config.n_relays)
        return PowerReport.build(bs.per_relay, zeros, rates, feasible=bs.feasible,
                                 mixing=np.zeros((config.n_relays, cgras.n_vertices), dtype=complex),
                                 gamma=np.array(cgras.gamma))

    keep = [v for v, r in enumerate(cgras.subrates(rates)) if r > 0]
    pruned = prune_zero_rate(cgras, rates)
    prob = _SchemeProblem(config, pruned, settings.refine_split)

    def expand(x):
        a, g = prob.unpack(x)
        full_a = np.zeros((config.n_relays, cgras.n_vertices), dtype=complex)
        full_g = np.array(cgras.gamma, dtype=float)
        full_a[:, keep] = a
        full_g[:, keep] = g
        return full_a, full_g

    if prob.structurally_infeasible():
        a, g = expand(prob.coherent())
        return PowerReport.build(bs.per_relay, np.zeros(config.n_relays), rates,
                                 feasible=False, mixing=a, gamma=g)

    starts = [prob.coherent()]
    if warm_start is not None:
        w = np.asarray(warm_start, dtype=complex)[:, keep]
        starts.append(prob.pack(w))
    starts += _random_starts(starts[0], prob.n_entries, settings.max_restarts - 1,
                             settings.step_init, rng)
    best, iterate = _solve(prob, starts, settings)
    feasible = best is not None and bs.feasible
    x = best if best is not None else iterate
    a, g = expand(x)
    binding = _binding(prob, x, bs_binding) if best is not None else []
    return PowerReport.build(bs.per_relay, prob.row_powers(x), rates, binding,
                             feasible, mixing=a, gamma=g)


def access_mixing(report: PowerReport, cgras: Cgras) -> MixingMatrix:
    return MixingMatrix(report.mixing, cgras.vertices)


# -- outer bound problem ------------------------------------------------------------------

class _OuterProblem(_Problem):
    def __init__(self, config: NetworkConfig, alloc: MessageAllocation):
        self.config = config
        self.alloc = alloc
        self.H = config.access_gains
        self.R = config.target_rates
        self.caps = config.relay_power_caps.astype(float)
        active = config.active_receivers
        self.entries = [(j, z) for z in active for j in sorted(alloc.relays_knowing(z))]
        self.ej = np.array([e[0] for e in self.entries], dtype=int)
        self.ez = np.array([e[1] for e in self.entries], dtype=int)
        self.n_entries = len(self.entries)
        self.cuts = [list(zs) for k in range(1, len(active) + 1)
                     for zs in itertools.combinations(active, k)]
        self.labels = ["cut{" + ",".join(map(str, zs)) + "}" for zs in self.cuts]

    def unpack(self, x):
        m = self.n_entries
        a = np.zeros((self.config.n_relays, self.config.n_receivers), dtype=complex)
        a[self.ej, self.ez] = x[:m] + 1j * x[m:2 * m]
        return a

    def pack(self, a):
        vals = a[self.ej, self.ez]
        return np.concatenate([vals.real, vals.imag])

    def rate_slack(self, x):
        a = self.unpack(x)
        m = self.n_entries
        slack = np.zeros(len(self.cuts))
        jac = np.zeros((len(self.cuts), 2 * m))
        for k, zs in enumerate(self.cuts):
            hz = self.H[zs]
            M = hz @ a[:, zs]
            K = np.eye(len(zs)) + M @ M.conj().T
            chol = np.linalg.cholesky(K)
            bits = float(np.sum(np.log(np.abs(np.diag(chol))))) / LN2
            slack[k] = bits - float(np.sum(self.R[zs]))
            G = np.linalg.solve(K, M)
            grad = hz.conj().T @ G / LN2  # (n_relays, |zs|)
            col = {z: i for i, z in enumerate(zs)}
            for e, (j, z) in enumerate(self.entries):
                if z in col:
                    jac[k, e] = grad[j, col[z]].real
                    jac[k, m + e] = grad[j, col[z]].imag
        return slack, jac

    def row_powers(self, x):
        m = self.n_entries
        p = x[:m] ** 2 + x[m:2 * m] ** 2
        return np.bincount(self.ej, weights=p, minlength=self.config.n_relays)

    def cap_jac(self, x):
        m = self.n_entries
        jac = np.zeros((self.config.n_relays, len(x)))
        jac[self.ej, np.arange(m)] = -2 * x[:m]
        jac[self.ej, m + np.arange(m)] = -2 * x[m:2 * m]
        return jac

    def coherent(self):
        a = np.zeros((self.config.n_relays, self.config.n_receivers), dtype=complex)
        for z in self.config.active_receivers:
            enc = sorted(self.alloc.relays_knowing(z))
            h = self.H[z, enc]
            gain = float(np.sum(np.abs(h) ** 2))
            if gain > 0:
                a[enc, z] = np.conj(h) / math.sqrt(gain) * math.sqrt(snr_for_rate(self.R[z]) / gain)
        return self.pack(a)

    def grid_seed(self, points: int = 9):
        """Coarse magnitude grid with coherent phases, used when SLSQP finds nothing."""
        if self.n_entries > 6:
            return None
        base = self.coherent()
        m = self.n_entries
        phase = np.exp(1j * np.arctan2(base[m:], base[:m]))
        tops = []
        for j in self.ej:
            cap = self.caps[j]
            tops.append(math.sqrt(cap) if math.isfinite(cap) else 2 * max(np.abs(base[:m] + 1j * base[m:]).max(), 1.0))
        best, best_p = None, math.inf
        for mags in itertools.product(*(np.linspace(0, t, points) for t in tops)):
            vals = np.array(mags) * phase
            x = np.concatenate([vals.real, vals.imag])
            if np.all(self.cap_slack(x) >= 0) and self.rate_slack(x)[0].min() >= 0:
                p = self.power(x)
                if p < best_p:
                    best, best_p = x, p
        return best


@dataclass
class LowerBound:
    """Smallest total power any scheme can use, with the certifying point."""

    value: float
    allocation: MessageAllocation | None
    a_ob: np.ndarray | None
    bs_power_per_relay: np.ndarray | None
    relay_powers: np.ndarray | None
    per_allocation: list[tuple[MessageAllocation, float | None]] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.allocation is not None or self.value == 0.0

    def to_dict(self, n_receivers: int) -> dict:
        return {
            "value": self.value if math.isfinite(self.value) else None,
            "allocation": None if self.allocation is None else self.allocation.to_lists(),
            "allocation_bitmask": None if self.allocation is None else self.allocation.bitmask(n_receivers),
            "a_ob": None if self.a_ob is None else [[complex_to_doc(x) for x in row] for row in self.a_ob],
            "bs_power_per_relay": None if self.bs_power_per_relay is None else [float(p) for p in self.bs_power_per_relay],
            "relay_powers": None if self.relay_powers is None else [float(p) for p in self.relay_powers],
            "per_allocation": [{"allocation": al.bitmask(n_receivers), "total_power": v}
                               for al, v in self.per_allocation],
        }


def min_outer_access_power(config: NetworkConfig, alloc: MessageAllocation,
                           settings: OptimizerSettings, rng) -> tuple[float, np.ndarray] | None:
    """Least relay power meeting every cut of the access-link outer bound."""
    prob = _OuterProblem(config, alloc)
    if prob.n_entries == 0:
        return 0.0, np.zeros((config.n_relays, config.n_receivers), dtype=complex)
    base = prob.coherent()
    starts = [base] + _random_starts(base, prob.n_entries, settings.max_restarts - 1,
                                     settings.step_init, rng)
    best, _ = _solve(prob, starts, settings)
    if best is None:
        seed = prob.grid_seed()
        if seed is not None:
            best, _ = _solve(prob, [seed], settings)
            if best is None:
                best = seed
    if best is None:
        return None
    return prob.power(best), prob.unpack(best)


def lower_bound(config: NetworkConfig, settings: OptimizerSettings | None = None) -> LowerBound:
    """Minimum over allocations of backhaul power plus outer-bound access power."""
    settings = settings or OptimizerSettings()
    if not config.active_receivers:
        return LowerBound(0.0, None, None, np.zeros(config.n_relays), np.zeros(config.n_relays))
    best = LowerBound(math.inf, None, None, None, None)
    best_key = None
    records = []
    for i, alloc in enumerate(enumerate_allocations(config)):
        bs = relay_link_power(config, alloc)
        if not bs.feasible:
            records.append((alloc, None))
            continue
        rng = np.random.default_rng([settings.seed, 7, i])
        res = min_outer_access_power(config, alloc, settings, rng)
        if res is None:
            records.append((alloc, None))
            continue
        p_access, a_ob = res
        total = bs.total + p_access
        records.append((alloc, total))
        key = (total, alloc.cognition, i)
        if best_key is None or _better(key, best_key, settings.tolerance_power):
            best_key = key
            rp = np.sum(np.abs(a_ob) ** 2, axis=1)
            best = LowerBound(total, alloc, a_ob, bs.per_relay.copy(), rp)
    best.per_allocation = records
    return best


def _better(key, incumbent, tol) -> bool:
    """Lower power wins; within ``tol``, less cognition then earlier index."""
    if key[0] < incumbent[0] - tol:
        return True
    if key[0] > incumbent[0] + tol:
        return False
    return key[1:] < incumbent[1:]


# -- sweep -----------------------------------------------------------------------------------

@dataclass
class Cell:
    alloc_index: int
    scheme_id: int
    report: PowerReport


@dataclass
class AllocationRecord:
    index: int
    allocation: MessageAllocation
    best_scheme_id: int | None
    report: PowerReport | None
    n_schemes: int
    best_scheme: Cgras | None = None


@dataclass
class SweepResult:
    config: NetworkConfig
    settings: OptimizerSettings
    records: list[AllocationRecord]
    cells: list[Cell]
    best_index: int | None
    bound: LowerBound

    @property
    def global_best(self) -> AllocationRecord | None:
        return None if self.best_index is None else self.records[self.best_index]

    def to_dict(self) -> dict:
        n_rx = self.config.n_receivers
        best = self.global_best
        return {
            "config": dump_config(self.config),
            "settings": {k: getattr(self.settings, k) for k in self.settings.__dataclass_fields__},
            "records": [{
                "index": r.index,
                "allocation": r.allocation.to_lists(),
                "allocation_bitmask": r.allocation.bitmask(n_rx),
                "n_schemes": r.n_schemes,
                "best_scheme_id": r.best_scheme_id,
                "report": None if r.report is None else r.report.to_dict(),
            } for r in self.records],
            "global_best": None if best is None else {
                "index": best.index,
                "allocation": best.allocation.to_lists(),
                "allocation_bitmask": best.allocation.bitmask(n_rx),
                "scheme_id": best.best_scheme_id,
                "total_power": best.report.total_power,
                "total_energy": best.report.total_energy,
            },
            "lower_bound": self.bound.to_dict(n_rx),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["allocation", "scheme_id", "feasible", "bs_power", "relay_powers",
                    "total_power", "total_energy"])
        n_rx = self.config.n_receivers
        for c in self.cells:
            r = c.report
            w.writerow([self.records[c.alloc_index].allocation.bitmask(n_rx), c.scheme_id,
                        int(r.feasible), repr(r.bs_power),
                        ";".join(repr(p) for p in r.relay_powers), repr(r.total_power),
                        "" if r.total_energy is None else repr(r.total_energy)])
        return buf.getvalue()


def sweep(config: NetworkConfig, settings: OptimizerSettings | None = None,
          allocation_limit: int | None = None, with_bound: bool = True) -> SweepResult:
    """Best scheme for every allocation, the overall best and the lower bound."""
    settings = settings or OptimizerSettings()
    records: list[AllocationRecord] = []
    cells: list[Cell] = []
    best_key = None
    best_index = None
    for i, alloc in enumerate(enumerate_allocations(config, allocation_limit)):
        rec = AllocationRecord(i, alloc, None, None, 0)
        bs = relay_link_power(config, alloc)
        rec_key = None
        for s, scheme in enumerate(canonical_schemes(alloc, config, settings.split_grid,
                                                     settings.scheme_cap)):
            rec.n_schemes += 1
            if not bs.feasible:
                report = PowerReport.build(bs.per_relay, np.zeros(config.n_relays),
                                           config.target_rates, feasible=False)
            else:
                rng = np.random.default_rng([settings.seed, i, s])
                report = min_power_for_scheme(config, scheme, settings, rng=rng)
            cells.append(Cell(i, s, report))
            if report.feasible:
                key = (report.total_power, s)
                if rec_key is None or key[0] < rec_key[0] - settings.tolerance_power:
                    rec_key = key
                    rec.best_scheme_id, rec.report, rec.best_scheme = s, report, scheme
        records.append(rec)
        if rec.report is not None:
            key = (rec.report.total_power, alloc.cognition, i)
            if best_key is None or _better(key, best_key, settings.tolerance_power):
                best_key, best_index = key, len(records) - 1
    bound = lower_bound(config, settings) if with_bound else LowerBound(math.nan, None, None, None, None)
    return SweepResult(config, settings, records, cells, best_index, bound)
