"""layoutforge: constraint-based 3D scene layout engine.

Builds scene layouts by simulated annealing over soft spatial-relation
scores and hard constraints, generates bounding-box-anchored camera and
object trajectories, and runs a generator/critic verification loop that
grows a persistent manual of accepted asset programs.
"""

from .scene import (
    Domain,
    Extent,
    Layout,
    ObjectNode,
    Pose,
    SceneError,
    TiltedObjectError,
    compose_pose,
    validate_tree,
    vertical_interval,
    world_footprint,
)
from .relations import (
    Comparator,
    Hard,
    RelationKind,
    RelationTerm,
    Soft,
    evaluate_term,
    measure_alignment,
    measure_collision,
    measure_containment,
    measure_distance,
    measure_overlap,
    measure_proximity,
    measure_rel_orientation,
    measure_symmetry,
)
from .problem import AssembleConfig, AutoRules, Breakdown, LayoutProblem, assemble, evaluate, is_feasible
from .solver import (
    AnnealConfig,
    MoveProbs,
    Solution,
    anneal,
    init_layout,
    metropolis_accept,
    propose_move,
    solve_hierarchical,
    world_poses,
)
from .grid import GridSpec
from .oracle import mc_polygon_area, oracle_solve

__version__ = "0.1.0"
