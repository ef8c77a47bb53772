"""Stochastic Arrival games: exact values, transformations, hardness
gadgets and seeded simulation."""

from .errors import ArrivalError, CapacityError, ContractError, ModelError, ParseError, SolverError
from .model import ArrivalInstance, GameState, InstanceBuilder, NodeKind, run_play
from .io import CnfFormula, parse_dimacs, parse_instance, read_instance, serialize_instance, write_instance
from .expand import build_game_graph, modified_matrix
from .solve import SolveReport, decide, solve, value, value_denominator_bound
from .normalize import geq_to_strict, prune_dead_edges, swap_target_dead, to_simple_form
from .reductions import dualize_players, player_to_random, random_to_player
from .gadgets import gen_double_exp, gen_majsat_rs, gen_ssat_rs1, gen_ssat_rs2
from .analysis import hopeful_set
from .simulate import estimate_value, traversal_stats

__version__ = "0.1.0"
