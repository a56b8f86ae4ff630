"""Desk-scale simulator and learner for a hybrid envelope/suction gripper.

The package models a soft four-finger hand whose fingertips carry suction
cups, plans the three grasp primitives (enveloping, sucking, and the
composite envelope-then-suck), and trains small value networks that decide
which primitive to spend each action on in clutter.

Modules
-------
geometry   rotations, poses, rectangle footprints, angular sectors
gripper    finger arc kinematics, sucker placement, opening control
scene      object templates, scene spawning, heightmap rendering
planner    grasp pose construction and orientation selection
env        outcome rules, rewards, episode stepping
learner    value networks, action selection, training loop
eval       oracle policy, efficiency metrics, pe sweeps
config     INI config and object catalog files
cli        command line front end
"""

from .config import ExperimentConfig, load_config, save_config
from .env import Episode, GraspAction, Outcome, step
from .eval import (
    OraclePolicy,
    grasping_efficiency,
    optimal_action_count_oracle,
    run_episode,
    run_sweep,
    success_rate,
    theoretical_efficiency,
)
from .gripper import FingerState, GripperParams, solve_bend_for_opening
from .learner import (
    GreedyPolicy,
    QNets,
    VARIANTS,
    load_checkpoint,
    save_checkpoint,
    select_action,
    train,
)
from .planner import (
    obstacle_field,
    plan_envelope,
    plan_envelope_then_suck,
    plan_suck,
    select_sucking_orientation,
)
from .scene import Scene, SceneObject, load_scene, save_scene, spawn_scene
from .selftest import run_selftest

__version__ = "0.1.0"

__all__ = [
    "Episode",
    "ExperimentConfig",
    "FingerState",
    "GraspAction",
    "GreedyPolicy",
    "GripperParams",
    "OraclePolicy",
    "Outcome",
    "QNets",
    "Scene",
    "SceneObject",
    "VARIANTS",
    "grasping_efficiency",
    "load_checkpoint",
    "load_config",
    "load_scene",
    "obstacle_field",
    "optimal_action_count_oracle",
    "plan_envelope",
    "plan_envelope_then_suck",
    "plan_suck",
    "run_episode",
    "run_selftest",
    "run_sweep",
    "save_checkpoint",
    "save_config",
    "save_scene",
    "select_action",
    "select_sucking_orientation",
    "solve_bend_for_opening",
    "spawn_scene",
    "step",
    "success_rate",
    "theoretical_efficiency",
    "train",
    "__version__",
]
