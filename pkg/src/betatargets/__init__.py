"""Shrinking-target problems for beta-transformations: cylinder combinatorics,
hit sets, dimension-function order, series classification, covers, the
divergence-side construction and Lebesgue-measure estimates."""

from .beta_core import (
    Beta,
    BetaVector,
    Cylinder,
    DigitSeq,
    beta_digits,
    count_cylinders,
    cylinder,
    enumerate_cylinders,
    enumerate_full,
    full_cover_check,
    is_full,
    li_lower_bound,
    quasi_greedy_one,
    renyi_bounds,
)
from .covering import (
    BallCover,
    brute_force_fcover,
    cover_count,
    hyperboloid_cover,
    hyperboloid_s_volume,
    scaling_slope,
)
from .dimension import DimensionFunction, OrderVerdict, compare, compare_monomial, eval_f
from .divergence import (
    BlockStructure,
    DivergenceFrame,
    MuMeasure,
    RectFamily,
    ball_bound,
    block_structure,
    build_rect_family,
    frame,
    in_P,
    mu_ball,
    sweep_frames,
)
from .errors import (
    BetaTargetsError,
    DomainError,
    IndeterminateError,
    PlanError,
    PreconditionError,
    ResourceError,
    UnsupportedError,
)
from .hitset import HitRegion, LipschitzMap, build_hit_region, hit_enclosures, hit_interval, solve_anchor
from .intervals import IntervalUnion
from .measure import (
    MeasureEstimate,
    TailSpec,
    chung_erdos_lattice,
    chung_erdos_lower,
    exact_union_measure,
    fcontent_upper,
    mc_lebesgue,
    mdp_lower,
)
from .series import (
    ApproxFunction,
    AsymptoticForm,
    DichotomyVerdict,
    decide_series,
    multiplicative_verdict,
    rectangle_verdict,
    series_asymptotics,
    sn_breakdown,
    w2star_verdict,
)

__version__ = "0.1.0"
