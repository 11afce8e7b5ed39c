"""Planning toolkit for multi-agent firefighting on spatial task graphs.

The package models a rescue scenario as an undirected graph of buildings
and roads where fires ignite nearby buildings stochastically.  It provides
an exact joint-MDP solver for small instances, a family of scalable
approximate planners built on task clustering, model reduction and
presence-mass coordination, a step simulator, and a benchmark harness.
"""

from ._kernels import available_backends, backend_name
from .approx import (ClusteredGraph, StaticTaskModel, TaskCluster,
                     build_static_task_model, cluster_tasks, dynamic_horizon,
                     shortest_path_prune)
from .bench import (ExperimentReport, ExperimentSpec, RunRow, ScalingRow,
                    StepStateRow, emit_csv, emit_scaling_csv,
                    fit_power_law_exponent, generate_scenario,
                    load_bundled_map, preset_spec, run_experiment,
                    run_scaling, sample_district)
from .errors import (DimensionMismatch, EmptyPriorityList, EmptyTaskSet,
                     InsufficientBuildings, InvalidAction,
                     NonPositiveTemperature, ParseError, RescueError,
                     StageOutOfRange, StateSpaceTooLarge, UnknownVertex,
                     UnreachableTask, ValidationError)
from .exact import (DEFAULT_STATE_CAP, JointStateCodec, ValueTable,
                    joint_value_iteration, load_value_table, optimal_policy,
                    save_value_table)
from .planner import (DEFAULT_CONFIG, PlanResult, PlannerConfig, PlannerKind,
                      PlannerPolicy, coordinate_targets, greedy_plan,
                      make_policy, random_plan, single_agent_plan,
                      spatap_ext_plan, spatap_plan)
from .presence import (PolicyDistribution, PresenceMass, StageValueTable,
                       best_response_vi, boltzmann_policy, presence_mass,
                       scale_factor, single_agent_vi)
from .simulator import (EpisodeTrace, JointAction, ignition_probability,
                        reward, run_episode, step, trace_to_csv)
from .world import (FireState, RcrsFireLevel, Scenario, ScenarioParams,
                    Vertex, VertexKind, WorldGraph, WorldState,
                    euclidean_distance, hop_distance, induced_subgraph,
                    load_scenario, map_rcrs_fire_level, save_scenario,
                    scenario_from_dict, scenario_to_dict)

__version__ = "0.1.0"

__all__ = [
    "available_backends", "backend_name",
    "ClusteredGraph", "StaticTaskModel", "TaskCluster",
    "build_static_task_model", "cluster_tasks", "dynamic_horizon",
    "shortest_path_prune",
    "ExperimentReport", "ExperimentSpec", "RunRow", "ScalingRow",
    "StepStateRow", "emit_csv", "emit_scaling_csv", "fit_power_law_exponent",
    "generate_scenario", "load_bundled_map", "preset_spec", "run_experiment",
    "run_scaling", "sample_district",
    "DimensionMismatch", "EmptyPriorityList", "EmptyTaskSet",
    "InsufficientBuildings", "InvalidAction", "NonPositiveTemperature",
    "ParseError", "RescueError", "StageOutOfRange", "StateSpaceTooLarge",
    "UnknownVertex", "UnreachableTask", "ValidationError",
    "DEFAULT_STATE_CAP", "JointStateCodec", "ValueTable",
    "joint_value_iteration", "load_value_table", "optimal_policy",
    "save_value_table",
    "DEFAULT_CONFIG", "PlanResult", "PlannerConfig", "PlannerKind",
    "PlannerPolicy", "coordinate_targets", "greedy_plan", "make_policy",
    "random_plan", "single_agent_plan", "spatap_ext_plan", "spatap_plan",
    "PolicyDistribution", "PresenceMass", "StageValueTable",
    "best_response_vi", "boltzmann_policy", "presence_mass", "scale_factor",
    "single_agent_vi",
    "EpisodeTrace", "JointAction", "ignition_probability", "reward",
    "run_episode", "step", "trace_to_csv",
    "FireState", "RcrsFireLevel", "Scenario", "ScenarioParams", "Vertex",
    "VertexKind", "WorldGraph", "WorldState", "euclidean_distance",
    "hop_distance", "induced_subgraph", "load_scenario",
    "map_rcrs_fire_level", "save_scenario", "scenario_from_dict",
    "scenario_to_dict",
    "__version__",
]
