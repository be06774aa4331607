"""Two-stage stochastic planning of QKD services over space-air-ground networks."""

from qkdplan.costs import (CostBreakdown, DeviceCatalog, RangeLimits, edge_channel_cost,
                           entanglement_memory_usage, feasible_modes, on_demand_unit_cost,
                           path_reservation_cost)
from qkdplan.errors import InfeasibleError, InputError, QkdPlanError
from qkdplan.planner import (EvaluatedPlan, PlanningInstance, ProvisioningPlan,
                             brute_force_oracle, evaluate_plan, newsvendor_reservation,
                             recourse_cost, solve_evf, solve_random, solve_sp_exact)
from qkdplan.routing import (Application, CapacityConfig, Route, assign_wavelengths,
                             k_shortest_paths, validate_plan)
from qkdplan.scenarios import (Scenario, ScenarioSet, build_scenarios, cdf_at, expected_demand,
                               poisson_pmf)
from qkdplan.topology import Edge, Node, Topology, build_usnet, euclidean_distance, load_topology

__version__ = "0.1.0"
