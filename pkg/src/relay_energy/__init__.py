"""Energy-efficient relay-assisted downlink: superposition schemes, rate
regions, minimum-power configurations and the cut-set energy bound."""

from .model import (ConfigError, MessageAllocation, NetworkConfig, PowerReport,
                    UndefinedObjective, dump_config, enumerate_allocations, load_config,
                    total_energy)
from .cgras import (Cgras, ClosedSet, InvalidScheme, Vertex, canonical_schemes,
                    enumerate_closed_sets, split_rates, validate)
from .gaussian import (MixingMatrix, RateConstraint, capacity_scalar, outer_bound_constraints,
                       rate_bound, region_constraints, relay_link_power)
from .optimize import OptimizerSettings, SweepResult, lower_bound, min_power_for_scheme, sweep

__version__ = "0.1.0"
