"""Ground-truth oracles: does an object group satisfy an instruction?

The determiner side is count- and proximity-based; the preposition side is
geometric. Predicates are total over group sizes so the combined environment
(instructions like "a red cube above many black cubes") evaluates with the
same code path as the single-relation environment.

Conventions: y is up; the room's depth axis is z with the reference man at
low z, so "in front of" means nearer the reference man (smaller z).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .core import (
    Determiner,
    DInstruction,
    DPInstruction,
    GroupSpec,
    Instruction,
    MULTI_INSTANCE_PREPOSITIONS,
    ObjectPhrase,
    PInstruction,
    Preposition,
    PROXIMITY_DETERMINERS,
    QUANTITY_DETERMINERS,
    Vec3,
)

#: Object-count range realizing each determiner (inclusive).
DET_COUNT_RANGES: dict[Determiner, tuple[int, int]] = {
    Determiner.A: (1, 1),
    Determiner.FEW: (2, 3),
    Determiner.SOME: (4, 6),
    Determiner.MANY: (7, 9),
    Determiner.THIS: (1, 1),
    Determiner.THAT: (1, 1),
    Determiner.THESE: (2, 9),
    Determiner.THOSE: (2, 9),
}

#: Determiners meaning "near the reference man".
NEAR_DETERMINERS = frozenset({Determiner.THIS, Determiner.THESE})
FAR_DETERMINERS = frozenset({Determiner.THAT, Determiner.THOSE})

#: Reference-group count in the plain preposition environment: a single
#: instance for the first six relations, the two endpoints for "between", a
#: surrounding set for "among" (three or more keeps it geometrically distinct
#: from "between").
PREP_B_COUNT_RANGES: dict[Preposition, tuple[int, int]] = {
    **{p: (1, 1) for p in Preposition if p not in MULTI_INSTANCE_PREPOSITIONS},
    Preposition.BETWEEN: (2, 2),
    Preposition.AMONG: (3, 9),
}

#: Hard geometric arity per preposition when the reference count is free to
#: vary (combined environment, where determiner B sets the count): only
#: "between" and "among" constrain it.
PREP_B_ARITY_LIMITS: dict[Preposition, tuple[int, int]] = {
    **{p: (1, 9) for p in Preposition if p not in MULTI_INSTANCE_PREPOSITIONS},
    Preposition.BETWEEN: (2, 2),
    Preposition.AMONG: (3, 9),
}


def compatible_det_b(prep: Preposition) -> tuple[Determiner, ...]:
    """Determiners whose count range can realize `prep`'s reference arity."""
    lo, hi = PREP_B_ARITY_LIMITS[prep]
    out = []
    for det in Determiner:
        dlo, dhi = DET_COUNT_RANGES[det]
        if max(lo, dlo) <= min(hi, dhi):
            out.append(det)
    return tuple(out)


def compatible_det_pair(det_a: Determiner, det_b: Determiner) -> bool:
    """Both groups share one location block, so near/far demands must agree."""
    if det_a in NEAR_DETERMINERS and det_b in FAR_DETERMINERS:
        return False
    if det_a in FAR_DETERMINERS and det_b in NEAR_DETERMINERS:
        return False
    return True


class SemanticsError(ValueError):
    pass


@dataclass(frozen=True)
class SpatialParams:
    """Numeric knobs behind every geometric predicate.

    All values are meters and strictly positive. These are artifact choices;
    they are logged into every generated scene for reproducibility.
    """

    horizontal_tolerance: float = 0.5
    contact_epsilon: float = 0.02
    beside_max_gap: float = 1.0
    near_far_threshold: float = 8.0
    between_collinearity_tolerance: float = 0.3
    among_hull_margin: float = 0.2
    # Vertical centroid band for the same-height relations (beside, in front
    # of, behind); a scaled-up contact epsilon so multi-object groups whose
    # members sit on different grid layers still compare sensibly.
    group_height_band: float = 0.75
    object_radius: float = 0.25

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if value <= 0:
                raise ValueError(f"{name} must be strictly positive")


def quantity_class(count: int) -> Determiner:
    """Map an object count to its quantity determiner; partitions 1..9."""
    if count == 1:
        return Determiner.A
    if 2 <= count <= 3:
        return Determiner.FEW
    if 4 <= count <= 6:
        return Determiner.SOME
    if 7 <= count <= 9:
        return Determiner.MANY
    raise SemanticsError(f"count out of range 1..9: {count}")


def _centroid_xz(placements: list[Vec3]) -> tuple[float, float]:
    n = len(placements)
    return (sum(p[0] for p in placements) / n, sum(p[2] for p in placements) / n)


def _centroid_y(placements: list[Vec3]) -> float:
    return sum(p[1] for p in placements) / len(placements)


def group_distance_to(placements: list[Vec3], point: Vec3) -> float:
    """Ground-plane distance from the group centroid to a reference point."""
    cx, cz = _centroid_xz(placements)
    return math.hypot(cx - point[0], cz - point[2])


def satisfies_determiner(
    group: GroupSpec,
    det: Determiner,
    reference_man_pos: Vec3,
    params: SpatialParams,
) -> bool:
    n = group.count
    if det in QUANTITY_DETERMINERS:
        return quantity_class(n) == det
    lo, hi = DET_COUNT_RANGES[det]
    if not lo <= n <= hi:
        return False
    near = group_distance_to(group.placements, reference_man_pos) <= params.near_far_threshold
    return near if det in NEAR_DETERMINERS else not near


# ---------------------------------------------------------------------------
# Spatial predicates. Group A is the subject, group B the reference.


def satisfies_preposition(
    group_a: list[Vec3],
    prep: Preposition,
    group_b: list[Vec3],
    params: SpatialParams,
) -> bool:
    if not group_a or not group_b:
        raise SemanticsError("empty group in preposition check")
    r = params.object_radius
    eps = params.contact_epsilon
    tol = params.horizontal_tolerance

    ax, az = _centroid_xz(group_a)
    bx, bz = _centroid_xz(group_b)
    horiz = math.hypot(ax - bx, az - bz)

    if prep is Preposition.ABOVE:
        top_b = max(p[1] for p in group_b) + r
        return min(p[1] for p in group_a) > top_b + eps and horiz <= tol
    if prep is Preposition.BELOW:
        bottom_b = min(p[1] for p in group_b) - r
        return max(p[1] for p in group_a) < bottom_b - eps and horiz <= tol
    if prep is Preposition.ON:
        bottom_a = min(p[1] for p in group_a) - r
        top_b = max(p[1] for p in group_b) + r
        return abs(bottom_a - top_b) <= eps and horiz <= tol
    if prep in (Preposition.IN_FRONT_OF, Preposition.BEHIND):
        dy = abs(_centroid_y(group_a) - _centroid_y(group_b))
        if abs(ax - bx) > tol or dy > params.group_height_band:
            return False
        if prep is Preposition.IN_FRONT_OF:
            return az < bz - eps
        return az > bz + eps
    if prep is Preposition.BESIDE:
        dy = abs(_centroid_y(group_a) - _centroid_y(group_b))
        gap = horiz - 2.0 * r
        return dy <= params.group_height_band and 0.0 < gap <= params.beside_max_gap
    if prep is Preposition.BETWEEN:
        if len(group_b) != 2:
            return False
        return _near_segment_interior(
            (ax, az),
            _ground(group_b[0]),
            _ground(group_b[1]),
            params.between_collinearity_tolerance,
        )
    if prep is Preposition.AMONG:
        if len(group_b) < 2:
            return False
        pts = [_ground(p) for p in group_b]
        return _distance_to_hull((ax, az), pts) <= params.among_hull_margin
    raise SemanticsError(f"unknown preposition: {prep!r}")


def _ground(p: Vec3) -> tuple[float, float]:
    return (p[0], p[2])


def _near_segment_interior(
    pt: tuple[float, float],
    a: tuple[float, float],
    b: tuple[float, float],
    tolerance: float,
) -> bool:
    """Point within `tolerance` of segment a-b, projecting strictly inside it."""
    abx, aby = b[0] - a[0], b[1] - a[1]
    seg_len_sq = abx * abx + aby * aby
    if seg_len_sq == 0.0:
        return False
    t = ((pt[0] - a[0]) * abx + (pt[1] - a[1]) * aby) / seg_len_sq
    if not 0.0 < t < 1.0:
        return False
    px, py = a[0] + t * abx, a[1] + t * aby
    return math.hypot(pt[0] - px, pt[1] - py) <= tolerance


def _convex_hull(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Monotone-chain hull; returns CCW vertices (2 points for degenerate sets)."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _dist_to_segment(
    pt: tuple[float, float], a: tuple[float, float], b: tuple[float, float]
) -> float:
    abx, aby = b[0] - a[0], b[1] - a[1]
    seg_len_sq = abx * abx + aby * aby
    if seg_len_sq == 0.0:
        return math.hypot(pt[0] - a[0], pt[1] - a[1])
    t = ((pt[0] - a[0]) * abx + (pt[1] - a[1]) * aby) / seg_len_sq
    t = min(1.0, max(0.0, t))
    return math.hypot(pt[0] - (a[0] + t * abx), pt[1] - (a[1] + t * aby))


def _distance_to_hull(pt: tuple[float, float], points: list[tuple[float, float]]) -> float:
    """Distance from a point to the convex hull of `points`; <= 0 when inside."""
    hull = _convex_hull(points)
    if len(hull) == 1:
        return math.hypot(pt[0] - hull[0][0], pt[1] - hull[0][1])
    if len(hull) == 2:
        return _dist_to_segment(pt, hull[0], hull[1])
    inside = True
    boundary = math.inf
    for i in range(len(hull)):
        a, b = hull[i], hull[(i + 1) % len(hull)]
        cross = (b[0] - a[0]) * (pt[1] - a[1]) - (b[1] - a[1]) * (pt[0] - a[0])
        if cross < 0:
            inside = False
        boundary = min(boundary, _dist_to_segment(pt, a, b))
    return -boundary if inside else boundary


# ---------------------------------------------------------------------------
# Composite oracle.


def satisfies(
    instruction: Instruction,
    group: GroupSpec,
    reference_man_pos: Vec3,
    params: SpatialParams,
) -> bool:
    """True iff `group` (with its anchor, when relational) matches `instruction`."""
    if isinstance(instruction, DInstruction):
        return group.phrase == instruction.obj and satisfies_determiner(
            group, instruction.det, reference_man_pos, params
        )
    if isinstance(instruction, PInstruction):
        if group.anchor is None:
            raise SemanticsError("relational instruction needs an anchor group")
        return (
            group.phrase == instruction.obj_a
            and group.anchor.phrase == instruction.obj_b
            and satisfies_preposition(
                group.placements, instruction.prep, group.anchor.placements, params
            )
        )
    if isinstance(instruction, DPInstruction):
        if group.anchor is None:
            raise SemanticsError("relational instruction needs an anchor group")
        return (
            group.phrase == instruction.obj_a
            and group.anchor.phrase == instruction.obj_b
            and satisfies_determiner(group, instruction.det_a, reference_man_pos, params)
            and satisfies_determiner(
                group.anchor, instruction.det_b, reference_man_pos, params
            )
            and satisfies_preposition(
                group.placements, instruction.prep, group.anchor.placements, params
            )
        )
    raise SemanticsError(f"not an instruction: {instruction!r}")


# ---------------------------------------------------------------------------
# Distractor recipes. Each recipe is itself an instruction of the same kind;
# the scene builder realizes it and re-checks geometrically that the realized
# group fails the real instruction, resampling here on conflict.

RECIPE_BUDGET = 200


def make_distractors(instruction: Instruction, rng, n: int = 3) -> list[Instruction]:
    """Draw `n` non-target descriptions following the per-environment recipes.

    Recipe kinds rotate across the n slots. A recipe identical to the
    instruction is redrawn; deeper (geometric) conflicts are the scene
    builder's job.
    """
    if isinstance(instruction, DInstruction):
        kinds = [_d_same_det, _d_same_obj, _d_random]
    elif isinstance(instruction, PInstruction):
        kinds = [_p_same_prep, _p_same_objs, _p_random]
    elif isinstance(instruction, DPInstruction):
        kinds = [_dp_swap_objs, _dp_alter_dets, _dp_alter_prep]
    else:
        raise SemanticsError(f"not an instruction: {instruction!r}")
    return [draw_distractor(instruction, rng, kind=i % 3, kinds=kinds) for i in range(n)]


def draw_distractor(
    instruction: Instruction, rng, kind: int, kinds=None
) -> Instruction:
    """One distractor description of recipe family `kind` (0, 1 or 2).

    Falls through to the other recipe families if the requested one cannot
    produce a non-identical description (restricted vocabularies can make a
    family degenerate, e.g. a single color/shape kills "same determiner,
    random object").
    """
    if kinds is None:
        kinds = {
            DInstruction: [_d_same_det, _d_same_obj, _d_random],
            PInstruction: [_p_same_prep, _p_same_objs, _p_random],
            DPInstruction: [_dp_swap_objs, _dp_alter_dets, _dp_alter_prep],
        }[type(instruction)]
    for offset in range(len(kinds)):
        fn = kinds[(kind + offset) % len(kinds)]
        for _ in range(RECIPE_BUDGET):
            candidate = fn(instruction, rng)
            if candidate != instruction:
                return candidate
    raise SemanticsError(f"no distractor recipe possible for {instruction!r}")


def _rand_color(rng):
    from .core import Color

    return Color(int(rng.integers(5)))


def _rand_shape(rng):
    from .core import Shape

    return Shape(int(rng.integers(5)))


def _rand_phrase(rng) -> ObjectPhrase:
    return ObjectPhrase(_rand_color(rng), _rand_shape(rng))


def _rand_det(rng) -> Determiner:
    return Determiner(int(rng.integers(8)))


def _rand_prep(rng) -> Preposition:
    return Preposition(int(rng.integers(8)))


def _d_same_det(i: DInstruction, rng) -> Instruction:
    return DInstruction(i.det, _rand_phrase(rng))


def _d_same_obj(i: DInstruction, rng) -> Instruction:
    return DInstruction(_rand_det(rng), i.obj)


def _d_random(i: DInstruction, rng) -> Instruction:
    return DInstruction(_rand_det(rng), _rand_phrase(rng))


def _distinct_pair(rng) -> tuple[ObjectPhrase, ObjectPhrase]:
    while True:
        a, b = _rand_phrase(rng), _rand_phrase(rng)
        if a != b:
            return a, b


def _p_same_prep(i: PInstruction, rng) -> Instruction:
    a, b = _distinct_pair(rng)
    return PInstruction(a, i.prep, b)


def _p_same_objs(i: PInstruction, rng) -> Instruction:
    return PInstruction(i.obj_a, _rand_prep(rng), i.obj_b)


def _p_random(i: PInstruction, rng) -> Instruction:
    a, b = _distinct_pair(rng)
    return PInstruction(a, _rand_prep(rng), b)


def _dp_swap_objs(i: DPInstruction, rng) -> Instruction:
    return DPInstruction(i.det_a, i.obj_b, i.prep, i.det_b, i.obj_a)


def _dp_alter_dets(i: DPInstruction, rng) -> Instruction:
    # Prefer the swap; degenerate (equal) or incompatible swaps resample.
    allowed_b = set(compatible_det_b(i.prep))
    if i.det_a != i.det_b and i.det_a in allowed_b and compatible_det_pair(i.det_b, i.det_a):
        return DPInstruction(i.det_b, i.obj_a, i.prep, i.det_a, i.obj_b)
    for _ in range(RECIPE_BUDGET):
        det_a, det_b = _rand_det(rng), _rand_det(rng)
        if det_b in allowed_b and compatible_det_pair(det_a, det_b):
            return DPInstruction(det_a, i.obj_a, i.prep, det_b, i.obj_b)
    return i  # caller treats identity as a failed draw


def _dp_alter_prep(i: DPInstruction, rng) -> Instruction:
    for _ in range(RECIPE_BUDGET):
        prep = _rand_prep(rng)
        if prep != i.prep and i.det_b in compatible_det_b(prep):
            return DPInstruction(i.det_a, i.obj_a, prep, i.det_b, i.obj_b)
    return i
