"""Scene construction: rooms, landmarks, and constructive group placement.

`build_scene` is the constructive inverse of the semantic oracle: it places
the target so the oracle accepts it and places three distractors the oracle
rejects, resampling recipes until that holds. Placements live on a 3x3x3 cell
grid inside each location's block, with small continuous jitter.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import (
    Determiner,
    DInstruction,
    DPInstruction,
    GroupSpec,
    Instruction,
    PInstruction,
    PlacedGroup,
    Pose,
    Preposition,
    SceneSpec,
    Vec3,
    env_kind_of,
)
from .semantics import (
    DET_COUNT_RANGES,
    FAR_DETERMINERS,
    NEAR_DETERMINERS,
    PREP_B_ARITY_LIMITS,
    PREP_B_COUNT_RANGES,
    SpatialParams,
    draw_distractor,
    satisfies,
)


class PlacementError(RuntimeError):
    pass


@dataclass(frozen=True)
class Landmark:
    name: str
    center: Vec3
    size: Vec3  # full extents of an axis-aligned box
    color: tuple[float, float, float]


@dataclass(frozen=True)
class RoomLayout:
    """Fixed room geometry: bounds, location anchors, landmarks, spawn."""

    layout_id: str
    width: float = 12.0
    depth: float = 16.0
    height: float = 4.0
    cell: float = 0.6
    anchors: tuple[tuple[float, float], ...] = ((3.0, 4.0), (9.0, 4.0), (3.0, 12.0), (9.0, 12.0))
    reference_man: Vec3 = (6.0, 0.0, 0.8)
    spawn_position: Vec3 = (6.0, 0.0, 8.0)
    spawn_heading: float = math.pi  # facing -z, toward the reference man

    @classmethod
    def default(cls, n_locations: int = 4) -> "RoomLayout":
        if not 2 <= n_locations <= 4:
            raise ValueError("n_locations must be 2..4")
        full = cls(layout_id=f"room12x16-{n_locations}loc")
        return cls(
            layout_id=full.layout_id,
            anchors=full.anchors[:n_locations],
        )

    @property
    def spawn(self) -> Pose:
        return Pose(self.spawn_position, self.spawn_heading)

    def landmarks(self) -> list[Landmark]:
        w, d = self.width, self.depth
        white = (0.98, 0.98, 0.98)
        return [
            Landmark("door", (0.04, 1.1, 5.0), (0.08, 2.2, 1.0), (0.51, 0.31, 0.18)),
            Landmark("window", (w - 0.04, 2.0, 11.0), (0.08, 1.2, 1.6), (0.63, 0.78, 0.92)),
            Landmark("shelf", (4.0, 0.75, d - 0.18), (1.6, 1.5, 0.35), (0.69, 0.53, 0.35)),
            Landmark(
                "man_body",
                (self.reference_man[0], 0.55, self.reference_man[2]),
                (0.5, 1.1, 0.3),
                white,
            ),
            Landmark(
                "man_head",
                (self.reference_man[0], 1.28, self.reference_man[2]),
                (0.3, 0.34, 0.3),
                white,
            ),
        ]

    def near_anchor_indices(self, params: SpatialParams) -> list[int]:
        rx, rz = self.reference_man[0], self.reference_man[2]
        return [
            i
            for i, (ax, az) in enumerate(self.anchors)
            if math.hypot(ax - rx, az - rz) <= params.near_far_threshold
        ]


# ---------------------------------------------------------------------------
# Cell grid helpers. Cells are indexed (ix, iy, iz) in {0,1,2}^3; offsets are
# relative to the anchor's ground point.

_JITTER = 0.04
_PLACE_RETRIES = 20
_DISTRACTOR_RETRIES = 60


def _cell_offset(ix: int, iy: int, iz: int, cell: float) -> Vec3:
    half = cell / 2.0
    return ((ix - 1) * cell, half + iy * cell, (iz - 1) * cell)


def _symmetry(variant: int):
    """One of the 8 square symmetries acting on (ix, iz)."""

    def apply(ix: int, iz: int) -> tuple[int, int]:
        for _ in range(variant & 3):
            ix, iz = iz, 2 - ix
        if variant & 4:
            ix = 2 - ix
        return ix, iz

    return apply


# Ground columns ordered center-first; subsets keep their centroid near the
# anchor, which keeps paired groups within the horizontal tolerance.
_COLUMNS = [(1, 1), (0, 1), (2, 1), (1, 0), (1, 2), (0, 0), (2, 2), (0, 2), (2, 0)]
# Per-plane order for the front/back and side templates (iy rises last).
_PLANE = [(1, 0), (0, 0), (2, 0), (1, 1), (0, 1), (2, 1), (1, 2), (0, 2), (2, 2)]  # (u, iy)
_BETWEEN_A = [
    (1, 0, 1), (1, 1, 1), (1, 2, 1), (1, 0, 0), (1, 0, 2),
    (1, 1, 0), (1, 1, 2), (1, 2, 0), (1, 2, 2),
]
_AMONG_RING = [(0, 0), (2, 2), (2, 0), (0, 2), (1, 0), (1, 2), (0, 1), (2, 1)]
_AMONG_A_PAIRS = [((0, 2, 0), (2, 2, 2)), ((0, 2, 2), (2, 2, 0)), ((1, 2, 0), (1, 2, 2))]


def _jitter3(rng, scale: float = _JITTER) -> Vec3:
    d = rng.uniform(-scale, scale, size=3)
    return (float(d[0]), float(d[1]), float(d[2]))


def _place_cells(cells, cell: float, rng, jitter_y: bool = True) -> list[Vec3]:
    out = []
    for ix, iy, iz in cells:
        ox, oy, oz = _cell_offset(ix, iy, iz, cell)
        jx, jy, jz = _jitter3(rng)
        out.append((ox + jx, oy + (jy if jitter_y else 0.0), oz + jz))
    return out


def place_simple(count: int, cell: float, rng) -> list[Vec3]:
    """`count` objects at distinct random cells of the block."""
    idx = rng.choice(27, size=count, replace=False)
    cells = [(int(i) % 3, (int(i) // 3) % 3, int(i) // 9) for i in idx]
    return _place_cells(cells, cell, rng)


def place_relation(
    prep: Preposition,
    n_a: int,
    n_b: int,
    cell: float,
    rng,
    params: SpatialParams,
) -> tuple[list[Vec3], list[Vec3]]:
    """Block-local placements realizing `prep` between an A and a B group.

    Raises PlacementError for unrealizable arities; geometric validity is
    re-checked by the caller against the oracle.
    """
    if not 1 <= n_a <= 9 or not 1 <= n_b <= 9:
        raise PlacementError(f"counts out of range: {n_a}, {n_b}")
    r = params.object_radius

    if prep in (Preposition.ABOVE, Preposition.BELOW):
        sym = _symmetry(int(rng.integers(8)))
        cols = [sym(ix, iz) for ix, iz in _COLUMNS]
        a_layer, b_layer = (2, 0) if prep is Preposition.ABOVE else (0, 2)
        a = _place_cells([(ix, a_layer, iz) for ix, iz in cols[:n_a]], cell, rng)
        b = _place_cells([(ix, b_layer, iz) for ix, iz in cols[:n_b]], cell, rng)
        return a, b

    if prep is Preposition.ON:
        sym = _symmetry(int(rng.integers(8)))
        cols = [sym(ix, iz) for ix, iz in _COLUMNS]
        b = _place_cells([(ix, 0, iz) for ix, iz in cols[:n_b]], cell, rng)
        top_b = max(p[1] for p in b) + r
        a = []
        for ix, iz in cols[:n_a]:
            ox, _, oz = _cell_offset(ix, 0, iz, cell)
            jx, _, jz = _jitter3(rng)
            lift = float(rng.uniform(0.005, 0.015))  # resting contact, never interpenetrating
            a.append((ox + jx, top_b + r + lift, oz + jz))
        return a, b

    if prep is Preposition.BESIDE:
        # A fills the ix=0 plane, B the ix in {1,2} planes, bottom layers first;
        # a random symmetry then picks which side is which.
        sym = _symmetry(int(rng.integers(8)))
        a_cells = [(0, iy, iz) for iz, iy in _PLANE[:n_a]]
        b_order = [(ix, iy, iz) for iy in range(3) for ix in (1, 2) for iz in (1, 0, 2)]
        b_cells = b_order[:n_b]
        a_cells_t = [(sym(ix, iz)[0], iy, sym(ix, iz)[1]) for ix, iy, iz in a_cells]
        b_cells_t = [(sym(ix, iz)[0], iy, sym(ix, iz)[1]) for ix, iy, iz in b_cells]
        return _place_cells(a_cells_t, cell, rng), _place_cells(b_cells_t, cell, rng)

    if prep in (Preposition.IN_FRONT_OF, Preposition.BEHIND):
        flip = bool(rng.integers(2))  # mirror across x keeps the depth axis intact

        def fx(ix: int) -> int:
            return 2 - ix if flip else ix

        a_iz, b_iz = (0, 2) if prep is Preposition.IN_FRONT_OF else (2, 0)
        a = _place_cells([(fx(u), iy, a_iz) for u, iy in _PLANE[:n_a]], cell, rng)
        b = _place_cells([(fx(u), iy, b_iz) for u, iy in _PLANE[:n_b]], cell, rng)
        return a, b

    if prep is Preposition.BETWEEN:
        if n_b != 2:
            raise PlacementError("between needs exactly two reference objects")
        sym = _symmetry(int(rng.integers(8)))
        b_cells = [(cx, 0, cz) for cx, cz in (sym(0, 1), sym(2, 1))]
        a_cells = [(sym(ix, iz)[0], iy, sym(ix, iz)[1]) for ix, iy, iz in _BETWEEN_A[:n_a]]
        return _place_cells(a_cells, cell, rng), _place_cells(b_cells, cell, rng)

    if prep is Preposition.AMONG:
        if n_b < 3:
            raise PlacementError("among needs at least three reference objects")
        sym = _symmetry(int(rng.integers(8)))
        ring = [(sym(ix, iz)[0], 0, sym(ix, iz)[1]) for ix, iz in _AMONG_RING]
        b_cells = ring[:n_b] if n_b <= 8 else ring + [(sym(0, 0)[0], 1, sym(0, 0)[1])]
        m = n_a if n_a <= 3 else (3 if n_a % 2 else 2)
        a_cells = [(1, iy, 1) for iy in range(m)]
        for pair in _AMONG_A_PAIRS[: (n_a - m) // 2]:
            for ix, iy, iz in pair:
                a_cells.append((sym(ix, iz)[0], iy, sym(ix, iz)[1]))
        return _place_cells(a_cells, cell, rng), _place_cells(b_cells, cell, rng)

    raise PlacementError(f"unknown preposition: {prep!r}")


# ---------------------------------------------------------------------------
# Group realization and scene assembly.


def _sample_count(rng, lo: int, hi: int) -> int:
    return int(rng.integers(lo, hi + 1))


def _anchor_vec(anchor: tuple[float, float]) -> Vec3:
    return (anchor[0], 0.0, anchor[1])


def _offset_all(placements: list[Vec3], anchor: tuple[float, float]) -> list[Vec3]:
    ax, az = anchor
    return [(x + ax, y, z + az) for x, y, z in placements]


def realize_group(
    desc: Instruction,
    anchor: tuple[float, float],
    cell: float,
    rng,
    params: SpatialParams,
) -> GroupSpec:
    """Build a concrete group at `anchor` faithfully realizing `desc`."""
    if isinstance(desc, DInstruction):
        lo, hi = DET_COUNT_RANGES[desc.det]
        count = _sample_count(rng, lo, hi)
        placements = _offset_all(place_simple(count, cell, rng), anchor)
        return GroupSpec(desc.obj, count, placements)
    if isinstance(desc, PInstruction):
        n_a = 1
        n_b = _sample_count(rng, *PREP_B_COUNT_RANGES[desc.prep])
        prep = desc.prep
        obj_a, obj_b = desc.obj_a, desc.obj_b
    elif isinstance(desc, DPInstruction):
        lo_a, hi_a = DET_COUNT_RANGES[desc.det_a]
        n_a = _sample_count(rng, lo_a, hi_a)
        lo_b, hi_b = DET_COUNT_RANGES[desc.det_b]
        plo, phi = PREP_B_ARITY_LIMITS[desc.prep]
        lo_b, hi_b = max(lo_b, plo), min(hi_b, phi)
        if lo_b > hi_b:
            raise PlacementError(f"unrealizable reference arity for {desc!r}")
        n_b = _sample_count(rng, lo_b, hi_b)
        prep = desc.prep
        obj_a, obj_b = desc.obj_a, desc.obj_b
    else:
        raise PlacementError(f"not an instruction: {desc!r}")
    a, b = place_relation(prep, n_a, n_b, cell, rng, params)
    return GroupSpec(
        obj_a,
        n_a,
        _offset_all(a, anchor),
        anchor=GroupSpec(obj_b, n_b, _offset_all(b, anchor)),
    )


def _proximity_requirement(instruction: Instruction) -> str:
    dets: list[Determiner] = []
    if isinstance(instruction, DInstruction):
        dets = [instruction.det]
    elif isinstance(instruction, DPInstruction):
        dets = [instruction.det_a, instruction.det_b]
    if any(d in NEAR_DETERMINERS for d in dets):
        return "near"
    if any(d in FAR_DETERMINERS for d in dets):
        return "far"
    return "any"


def build_scene(
    instruction: Instruction,
    rng: np.random.Generator,
    params: SpatialParams,
    layout: RoomLayout,
    seed: int = 0,
) -> SceneSpec:
    """Assemble a full scene; the oracle accepts the target and rejects all
    distractors by construction."""
    near = set(layout.near_anchor_indices(params))
    req = _proximity_requirement(instruction)
    if req == "near":
        admissible = [i for i in range(len(layout.anchors)) if i in near]
    elif req == "far":
        admissible = [i for i in range(len(layout.anchors)) if i not in near]
    else:
        admissible = list(range(len(layout.anchors)))
    if not admissible:
        raise PlacementError(f"no admissible location for {instruction!r} in {layout.layout_id}")

    target_loc = int(admissible[int(rng.integers(len(admissible)))])
    other_locs = [i for i in range(len(layout.anchors)) if i != target_loc]
    other_locs = [int(i) for i in rng.permutation(other_locs)]

    ref = layout.reference_man
    target = None
    for _ in range(_PLACE_RETRIES):
        candidate = realize_group(
            instruction, layout.anchors[target_loc], layout.cell, rng, params
        )
        if satisfies(instruction, candidate, ref, params):
            target = candidate
            break
    if target is None:
        raise PlacementError(f"could not realize target for {instruction!r}")

    distractors: list[PlacedGroup] = []
    for slot, loc in enumerate(other_locs):
        placed = None
        for attempt in range(_DISTRACTOR_RETRIES):
            recipe = draw_distractor(instruction, rng, kind=(slot + attempt) % 3)
            group = realize_group(recipe, layout.anchors[loc], layout.cell, rng, params)
            if not satisfies(instruction, group, ref, params):
                placed = PlacedGroup(group, loc)
                break
        if placed is None:
            raise PlacementError(f"distractor budget exhausted for {instruction!r}")
        distractors.append(placed)

    return SceneSpec(
        env_kind=env_kind_of(instruction),
        instruction=instruction,
        target=PlacedGroup(target, target_loc),
        distractors=distractors,
        layout_id=layout.layout_id,
        seed=seed,
        spatial=asdict(params),
    )
