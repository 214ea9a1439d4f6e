"""Independent checks: Monte-Carlo mutual information, exhaustive power grids
and brute-force closed-set enumeration.

Nothing here imports the rate or optimisation code; formulas are re-derived
from the channel model directly so that agreement is meaningful.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import MessageAllocation, NetworkConfig


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float

    def agrees(self, exact: float, n_sigma: float = 2.0) -> bool:
        return abs(self.value - exact) <= n_sigma * self.stderr


def _cgauss(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def _residuals(y: np.ndarray, regressors: np.ndarray) -> np.ndarray:
    """Least-squares residuals of every column of ``y`` on ``regressors``."""
    if regressors.shape[1] == 0:
        return y
    gram = regressors.conj().T @ regressors
    coef = np.linalg.solve(gram, regressors.conj().T @ y)
    return y - regressors @ coef


def mc_mutual_information(h, A, F: Sequence[int], decoded: Sequence[int],
                          samples: int = 200_000, seed: int = 0) -> Estimate:
    """Sample estimate of I(Y; U_F | U_{decoded \\ F}) in half-log2 units.

    ``h`` is one receiver row (or several rows for a vector output) and ``A``
    the relay mixing matrix.  Unit complex Gaussian codewords and noise are
    drawn, ``Y = h A U + noise`` is formed, and the conditional entropy gap is
    estimated from sample residual covariances.  The reported value uses the
    same half-log2 convention as the closed-form rates.  The standard error
    comes from the per-sample influence terms of the two log-determinants.
    """
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    A = np.asarray(A, dtype=complex)
    F = sorted(set(F))
    cond = sorted(set(decoded) - set(F))
    if samples < 2:
        raise OracleError("need at least two samples")
    if len(F) == 0 or not np.any(h @ A[:, F]):
        return Estimate(0.0, 0.0)
    rng = np.random.default_rng(seed)
    n_cw = A.shape[1]
    U = _cgauss(rng, (samples, n_cw))
    noise = _cgauss(rng, (samples, h.shape[0]))
    Y = U @ (h @ A).T + noise

    r_cond = _residuals(Y, U[:, cond])
    r_full = _residuals(Y, U[:, cond + F])
    dof_c = samples - len(cond)
    dof_f = samples - len(cond) - len(F)
    K_c = r_cond.T @ r_cond.conj() / dof_c
    K_f = r_full.T @ r_full.conj() / dof_f
    sign_c, ld_c = np.linalg.slogdet(K_c)
    sign_f, ld_f = np.linalg.slogdet(K_f)
    if sign_c.real <= 0 or sign_f.real <= 0:
        raise OracleError("degenerate sample covariance; increase samples")
    value = 0.5 * (ld_c - ld_f) / math.log(2)

    # influence of log det K on each sample: r^H K^-1 r - dim
    q_c = np.einsum("ni,ij,nj->n", r_cond.conj(), np.linalg.inv(K_c), r_cond).real
    q_f = np.einsum("ni,ij,nj->n", r_full.conj(), np.linalg.inv(K_f), r_full).real
    infl = 0.5 * (q_c - q_f) / math.log(2)
    stderr = float(np.std(infl, ddof=1) / math.sqrt(samples))
    return Estimate(float(value), stderr)


# -- closed sets -----------------------------------------------------------------

def brute_closed_sets(vertex_decoders: Sequence[Sequence[int]], edges, receiver: int,
                      max_size: int = 20) -> list[frozenset[int]]:
    """Filter every subset of the receiver's decoded vertices by child-closure.

    ``vertex_decoders[v]`` lists the receivers decoding vertex ``v``.
    """
    vz = [v for v, dec in enumerate(vertex_decoders) if receiver in dec]
    if len(vz) > max_size:
        raise OracleError(f"{len(vz)} decoded vertices exceed the brute-force limit {max_size}")
    inside = set(vz)
    ch = {v: {b for a, b in edges if a == v and b in inside} for v in vz}
    out = []
    for mask in range(1, 2 ** len(vz)):
        s = frozenset(v for i, v in enumerate(vz) if mask >> i & 1)
        if all(ch[v] <= s for v in s):
            out.append(s)
    return sorted(out, key=lambda s: (len(s), sorted(s)))


# -- exhaustive power grids -----------------------------------------------------------

def _half_log2(x):
    return 0.5 * np.log2(x)


def grid_feasible_power(config: NetworkConfig, scheme=None, allocation: MessageAllocation | None = None,
                        resolution: float = 1e-2, p_max: float | None = None,
                        gamma=None, max_dim: int = 6) -> float:
    """Smallest total access power on a grid that meets every rate constraint.

    Pass ``scheme`` (an object with ``vertices``, ``edges``, ``gamma``) for an
    achievable scheme, or ``allocation`` for the cut-set outer bound.  Each
    admissible mixing entry is given a power from ``{0, res, 2 res, ...,
    p_max}`` and the phase that co-phases it with the channel of the column's
    first decoder (the message's own receiver for the outer bound).  The
    result upper-bounds the constrained optimum by the grid spacing; ``inf``
    means no grid point is feasible.  Split fractions are taken as given.
    """
    H = config.access_gains
    R = config.target_rates
    caps = config.relay_power_caps
    if scheme is None and allocation is None:
        raise OracleError("need a scheme or an allocation")

    if scheme is not None:
        cols = [(sorted(v.encoders), min(v.decoders)) for v in scheme.vertices]
        g = np.asarray(scheme.gamma if gamma is None else gamma, dtype=float)
        sub = R @ g
        keep = [v for v in range(len(cols)) if sub[v] > 0]
    else:
        cols = [(sorted(allocation.relays_knowing(z)), z) for z in range(config.n_receivers)]
        keep = [z for z in range(config.n_receivers) if R[z] > 0]
    entries = [(j, c) for c in keep for j in cols[c][0]]
    if len(entries) > max_dim:
        raise OracleError(f"grid dimension {len(entries)} exceeds {max_dim}")
    if not entries:
        return 0.0
    if p_max is None:
        p_max = float(np.min([c for c in caps if np.isfinite(c)], initial=10.0))
    levels = np.arange(0.0, p_max + resolution / 2, resolution)
    phases = np.array([np.exp(-1j * np.angle(H[cols[c][1], j])) for j, c in entries])

    if scheme is not None:
        decoders = [sorted(v.decoders) for v in scheme.vertices]
        checks = [(z, [v for v in range(len(cols)) if z in decoders[v]],
                   brute_closed_sets(decoders, scheme.edges, z)) for z in range(config.n_receivers)]

    # all grid points, last axis vectorised
    best = math.inf
    n_last = len(levels)
    amps_last = np.sqrt(levels)
    for head in itertools.product(range(n_last), repeat=len(entries) - 1):
        p_head = float(sum(levels[i] for i in head))
        if p_head >= best:
            continue
        amps = [math.sqrt(levels[i]) for i in head]
        a = np.zeros((config.n_relays, len(cols), n_last), dtype=complex)
        for (j, c), amp, ph in zip(entries[:-1], amps, phases[:-1]):
            a[j, c, :] = amp * ph
        j, c = entries[-1]
        a[j, c, :] = amps_last * phases[-1]
        row_p = np.sum(np.abs(a) ** 2, axis=1)  # (n_relays, n_last)
        ok = np.all((row_p <= caps[:, None] + 1e-12), axis=0)
        if scheme is not None:
            ok &= _scheme_ok(H, a, checks, sub)
        else:
            ok &= _outer_ok(H, a, R)
        total = p_head + levels
        total = np.where(ok, total, np.inf)
        best = min(best, float(total.min()))
    return best


def _scheme_ok(H, a, checks, sub) -> np.ndarray:
    recv = np.abs(np.einsum("zj,jvn->zvn", H, a)) ** 2  # received power per vertex
    ok = np.ones(a.shape[2], dtype=bool)
    n_cols = a.shape[1]
    for z, dec, closed in checks:
        noise = 1.0 + sum(recv[z, v] for v in range(n_cols) if v not in dec)
        for F in closed:
            sig = sum(recv[z, v] for v in F)
            need = sum(sub[v] for v in F)
            ok &= _half_log2((noise + sig) / noise) >= need - 1e-12
    return ok


def _outer_ok(H, a, R) -> np.ndarray:
    ok = np.ones(a.shape[2], dtype=bool)
    active = [z for z in range(H.shape[0]) if R[z] > 0]
    for k in range(1, len(active) + 1):
        for zs in itertools.combinations(active, k):
            zs = list(zs)
            M = np.einsum("zj,jwn->nzw", H[zs], a[:, zs, :])
            K = np.eye(len(zs))[None] + M @ np.conj(np.transpose(M, (0, 2, 1)))
            det = np.linalg.det(K).real
            ok &= _half_log2(det) >= sum(R[z] for z in zs) - 1e-12
    return ok
