"""Problem instances, message allocations and the energy objective.

Both hops carry unit-variance circularly symmetric complex Gaussian noise, so
every SNR is expressed through the gains and powers stored in
:class:`NetworkConfig`.  Unbounded power caps are stored as ``math.inf`` and
serialised as the string ``"inf"``.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Sequence

import numpy as np

log = logging.getLogger(__name__)

UNBOUNDED = math.inf


class ConfigError(ValueError):
    """A configuration document failed validation.

    ``path`` names the offending field, e.g. ``access_gains[1][0].im``.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class UndefinedObjective(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NetworkConfig:
    """Gains, power caps and target rates of one relay-assisted downlink.

    relay_gains
        Diagonal of the BS-to-relay gain matrix, one complex entry per relay.
    access_gains
        ``(n_receivers, n_relays)`` complex relay-to-receiver gain matrix.
    target_rates
        Requested rate per receiver in bits per channel use.
    """

    relay_gains: np.ndarray
    access_gains: np.ndarray
    target_rates: np.ndarray
    bs_power_cap: float = UNBOUNDED
    relay_power_caps: np.ndarray | None = None

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.relay_gains, dtype=complex)).copy()
        h = np.atleast_2d(np.asarray(self.access_gains, dtype=complex)).copy()
        r = np.atleast_1d(np.asarray(self.target_rates, dtype=float)).copy()
        n_rn = d.shape[0]
        if self.relay_power_caps is None:
            caps = np.full(n_rn, UNBOUNDED)
        else:
            caps = np.atleast_1d(np.asarray(self.relay_power_caps, dtype=float)).copy()
            if caps.shape == (1,) and n_rn != 1:
                caps = np.full(n_rn, caps[0])
        _check_shapes(d, h, r, caps)
        if np.any(d == 0):
            j = int(np.flatnonzero(d == 0)[0])
            raise ConfigError(f"relay_gains[{j}]", "zero gain disconnects the relay")
        if not np.all(np.isfinite(d)) or not np.all(np.isfinite(h)):
            raise ConfigError("gains", "gains must be finite")
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            j = int(np.flatnonzero(~(r >= 0) | ~np.isfinite(r))[0])
            raise ConfigError(f"target_rates[{j}]", "rates must be finite and nonnegative")
        if np.any(caps < 0) or np.any(np.isnan(caps)):
            j = int(np.flatnonzero(~(caps >= 0))[0])
            raise ConfigError(f"relay_power_caps[{j}]", "negative power cap")
        bs_cap = float(self.bs_power_cap)
        if not bs_cap >= 0:
            raise ConfigError("bs_power_cap", "negative power cap")
        object.__setattr__(self, "relay_gains", _frozen(d))
        object.__setattr__(self, "access_gains", _frozen(h))
        object.__setattr__(self, "target_rates", _frozen(r))
        object.__setattr__(self, "relay_power_caps", _frozen(caps))
        object.__setattr__(self, "bs_power_cap", bs_cap)

    @property
    def n_relays(self) -> int:
        return self.relay_gains.shape[0]

    @property
    def n_receivers(self) -> int:
        return self.access_gains.shape[0]

    @property
    def active_receivers(self) -> list[int]:
        """Receivers with a strictly positive target rate."""
        return [z for z in range(self.n_receivers) if self.target_rates[z] > 0]

    def with_rates(self, rates: Sequence[float]) -> "NetworkConfig":
        return NetworkConfig(self.relay_gains, self.access_gains, rates,
                             self.bs_power_cap, self.relay_power_caps)

    def __eq__(self, other):
        if not isinstance(other, NetworkConfig):
            return NotImplemented
        return (np.array_equal(self.relay_gains, other.relay_gains)
                and np.array_equal(self.access_gains, other.access_gains)
                and np.array_equal(self.target_rates, other.target_rates)
                and self.bs_power_cap == other.bs_power_cap
                and np.array_equal(self.relay_power_caps, other.relay_power_caps))

    __hash__ = None


def _check_shapes(d, h, r, caps):
    n_rn = d.shape[0]
    if d.ndim != 1 or n_rn == 0:
        raise ConfigError("relay_gains", "expected a nonempty vector")
    if h.ndim != 2 or h.shape[1] != n_rn:
        raise ConfigError("access_gains", f"expected {n_rn} columns, got shape {h.shape}")
    if h.shape[0] == 0:
        raise ConfigError("access_gains", "need at least one receiver")
    if r.shape != (h.shape[0],):
        raise ConfigError("target_rates",
                          f"expected {h.shape[0]} entries, got {r.shape[0]}")
    if caps.shape != (n_rn,):
        raise ConfigError("relay_power_caps", f"expected {n_rn} entries, got {caps.shape[0]}")


# -- document parsing ---------------------------------------------------------

def _parse_real(value: Any, path: str, allow_inf: bool = False) -> float:
    if isinstance(value, str):
        if allow_inf and value.strip().lower() in ("inf", "infinity", "unbounded"):
            return UNBOUNDED
        raise ConfigError(path, f"malformed number {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"malformed number {value!r}")
    x = float(value)
    if math.isnan(x) or (math.isinf(x) and not allow_inf):
        raise ConfigError(path, f"malformed number {value!r}")
    return x


def _parse_complex(value: Any, path: str) -> complex:
    """Accept ``{re, im}``, ``{mag, phase}`` (radians), ``[re, im]`` or a real."""
    if isinstance(value, dict):
        if "re" in value or "im" in value:
            re = _parse_real(value.get("re", 0.0), f"{path}.re")
            im = _parse_real(value.get("im", 0.0), f"{path}.im")
            return complex(re, im)
        if "mag" in value:
            mag = _parse_real(value["mag"], f"{path}.mag")
            phase = _parse_real(value.get("phase", 0.0), f"{path}.phase")
            return complex(mag * math.cos(phase), mag * math.sin(phase))
        raise ConfigError(path, "expected keys re/im or mag/phase")
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(path, "complex pair must have two entries")
        return complex(_parse_real(value[0], f"{path}[0]"), _parse_real(value[1], f"{path}[1]"))
    return complex(_parse_real(value, path))


def _require(doc: dict, key: str):
    if key not in doc:
        raise ConfigError(key, "missing field")
    return doc[key]


def parse_config(doc: dict) -> NetworkConfig:
    """Build a validated :class:`NetworkConfig` from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected an object")
    n_rn = _require(doc, "n_relays")
    n_rx = _require(doc, "n_receivers")
    for key, n in (("n_relays", n_rn), ("n_receivers", n_rx)):
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ConfigError(key, "expected a positive integer")

    gains = _require(doc, "relay_gains")
    if not isinstance(gains, list):
        raise ConfigError("relay_gains", "expected a list")
    if len(gains) != n_rn:
        raise ConfigError("relay_gains", f"expected {n_rn} entries, got {len(gains)}")
    d = [_parse_complex(g, f"relay_gains[{j}]") for j, g in enumerate(gains)]

    rows = _require(doc, "access_gains")
    if not isinstance(rows, list) or len(rows) != n_rx:
        raise ConfigError("access_gains", f"expected {n_rx} rows")
    h = []
    for z, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n_rn:
            raise ConfigError(f"access_gains[{z}]", f"expected {n_rn} entries")
        h.append([_parse_complex(x, f"access_gains[{z}][{j}]") for j, x in enumerate(row)])

    rates = _require(doc, "target_rates")
    if not isinstance(rates, list):
        raise ConfigError("target_rates", "expected a list")
    if len(rates) != n_rx:
        raise ConfigError("target_rates", f"expected {n_rx} entries, got {len(rates)}")
    r = [_parse_real(x, f"target_rates[{z}]") for z, x in enumerate(rates)]

    bs_cap = _parse_real(doc.get("bs_power_cap", "inf"), "bs_power_cap", allow_inf=True)
    caps_doc = doc.get("relay_power_caps", "inf")
    if isinstance(caps_doc, list):
        if len(caps_doc) != n_rn:
            raise ConfigError("relay_power_caps", f"expected {n_rn} entries, got {len(caps_doc)}")
        caps = [_parse_real(c, f"relay_power_caps[{j}]", allow_inf=True)
                for j, c in enumerate(caps_doc)]
    else:
        caps = [_parse_real(caps_doc, "relay_power_caps", allow_inf=True)] * n_rn
    return NetworkConfig(np.array(d), np.array(h), np.array(r), bs_cap, np.array(caps))


def load_config(source) -> NetworkConfig:
    """Load a config from a path, a JSON string or an already parsed dict."""
    if isinstance(source, dict):
        return parse_config(source)
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text()
    else:
        text = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"invalid JSON: {exc}") from exc
    return parse_config(doc)


def _cap_out(x: float):
    return "inf" if math.isinf(x) else float(x)


def complex_to_doc(x: complex) -> dict:
    return {"re": float(x.real), "im": float(x.imag)}


def dump_config(config: NetworkConfig) -> dict:
    """Inverse of :func:`parse_config`."""
    return {
        "n_relays": config.n_relays,
        "n_receivers": config.n_receivers,
        "relay_gains": [complex_to_doc(x) for x in config.relay_gains],
        "access_gains": [[complex_to_doc(x) for x in row] for row in config.access_gains],
        "bs_power_cap": _cap_out(config.bs_power_cap),
        "relay_power_caps": [_cap_out(c) for c in config.relay_power_caps],
        "target_rates": [float(r) for r in config.target_rates],
    }


# -- message allocations ------------------------------------------------------

@dataclass(frozen=True)
class MessageAllocation:
    """``known[j]`` is the set of receiver indices whose message relay ``j`` decodes."""

    known: tuple[frozenset[int], ...]

    @classmethod
    def from_lists(cls, known: Sequence[Sequence[int]]) -> "MessageAllocation":
        return cls(tuple(frozenset(int(z) for z in k) for k in known))

    @property
    def n_relays(self) -> int:
        return len(self.known)

    def relays_knowing(self, z: int) -> frozenset[int]:
        return frozenset(j for j, k in enumerate(self.known) if z in k)

    @property
    def cognition(self) -> int:
        """Total number of (relay, message) pairs, the tie-break key for sweeps."""
        return sum(len(k) for k in self.known)

    def bitmask(self, n_receivers: int) -> str:
        """Rows are relays, characters are receivers: ``"10/11"``."""
        return "/".join("".join("1" if z in k else "0" for z in range(n_receivers))
                        for k in self.known)

    def to_lists(self) -> list[list[int]]:
        return [sorted(k) for k in self.known]

    def validate(self, config: NetworkConfig) -> None:
        if len(self.known) != config.n_relays:
            raise ConfigError("allocation", f"expected {config.n_relays} relay entries")
        for j, k in enumerate(self.known):
            for z in k:
                if not 0 <= z < config.n_receivers:
                    raise ConfigError(f"allocation[{j}]", f"receiver index {z} out of range")
        for z in config.active_receivers:
            if not self.relays_knowing(z):
                raise ConfigError("allocation", f"message {z} has positive rate but no relay knows it")

    def __str__(self):
        return "[" + ", ".join("{" + ",".join(map(str, sorted(k))) + "}" for k in self.known) + "]"


def enumerate_allocations(config: NetworkConfig, limit: int | None = None) -> Iterator[MessageAllocation]:
    """Yield every allocation in which each positive-rate message is known somewhere.

    The order is lexicographic in the tuple of per-message relay bitmasks
    (message 0 most significant; relay ``j`` is bit ``j``).  Zero-rate messages
    are never allocated.  With ``limit`` the stream is truncated after that
    many items and a warning is logged.
    """
    active = config.active_receivers
    n_rn = config.n_relays
    masks = range(1, 2 ** n_rn)
    for count, combo in enumerate(itertools.product(masks, repeat=len(active))):
        if limit is not None and count >= limit:
            log.warning("allocation stream truncated at %d", limit)
            return
        known = [set() for _ in range(n_rn)]
        for z, mask in zip(active, combo):
            for j in range(n_rn):
                if mask >> j & 1:
                    known[j].add(z)
        yield MessageAllocation(tuple(frozenset(k) for k in known))


def count_allocations(config: NetworkConfig) -> int:
    return (2 ** config.n_relays - 1) ** len(config.active_receivers)


# -- objective ----------------------------------------------------------------

def total_energy(p_tot: float, rates: Sequence[float]) -> float:
    """Total power divided by the total delivered rate (energy per bit)."""
    if p_tot < 0:
        raise ValueError("total power must be nonnegative")
    rates = np.asarray(rates, dtype=float)
    if np.any(rates < 0):
        raise ValueError("rates must be nonnegative")
    s = float(rates.sum())
    if s <= 0:
        raise UndefinedObjective("energy per bit is undefined for a zero total rate")
    return p_tot / s


@dataclass(frozen=True)
class PowerReport:
    """Per-node powers at an operating point.

    ``total_energy`` is ``None`` when the total target rate is zero.  The
    optional ``mixing`` and ``gamma`` hold the access-link solution
    (complex mixing matrix and refined rate-splitting matrix).
    """

    bs_power_per_relay: tuple[float, ...]
    relay_powers: tuple[float, ...]
    total_power: float
    total_energy: float | None
    binding_constraints: tuple[str, ...] = ()
    feasible: bool = True
    mixing: np.ndarray | None = field(default=None, compare=False, repr=False)
    gamma: np.ndarray | None = field(default=None, compare=False, repr=False)

    @classmethod
    def build(cls, bs_powers, relay_powers, rates, binding=(), feasible=True,
              mixing=None, gamma=None) -> "PowerReport":
        bs = tuple(float(p) for p in bs_powers)
        rn = tuple(float(p) for p in relay_powers)
        total = math.fsum(bs) + math.fsum(rn)
        rates = np.asarray(rates, dtype=float)
        energy = total_energy(total, rates) if rates.sum() > 0 else None
        return cls(bs, rn, total, energy, tuple(binding), feasible, mixing, gamma)

    @property
    def bs_power(self) -> float:
        return math.fsum(self.bs_power_per_relay)

    @property
    def relay_power(self) -> float:
        return math.fsum(self.relay_powers)

    def to_dict(self) -> dict:
        out = {
            "feasible": self.feasible,
            "bs_power_per_relay": list(self.bs_power_per_relay),
            "relay_powers": list(self.relay_powers),
            "total_power": self.total_power,
            "total_energy": self.total_energy,
            "binding_constraints": list(self.binding_constraints),
        }
        if self.mixing is not None:
            out["mixing"] = [[complex_to_doc(x) for x in row] for row in self.mixing]
        if self.gamma is not None:
            out["gamma"] = [[float(x) for x in row] for row in self.gamma]
        return out
