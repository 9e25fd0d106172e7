"""Shared vocabulary: enums, instruction structures, geometry primitives.

Everything here is a plain value type. Integer enum ids double as one-hot
indices, so their order is load-bearing and must never change.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Union

Vec3 = tuple[float, float, float]

TWO_PI = 6.283185307179586


class Color(IntEnum):
    RED = 0
    GREEN = 1
    BLUE = 2
    YELLOW = 3
    BLACK = 4


class Shape(IntEnum):
    CAPSULE = 0
    CUBE = 1
    CYLINDER = 2
    PRISM = 3
    SPHERE = 4


class Determiner(IntEnum):
    A = 0
    FEW = 1
    SOME = 2
    MANY = 3
    THIS = 4
    THAT = 5
    THESE = 6
    THOSE = 7


#: Determiners that constrain only the group's object count.
QUANTITY_DETERMINERS = frozenset(
    {Determiner.A, Determiner.FEW, Determiner.SOME, Determiner.MANY}
)
#: Determiners that additionally constrain distance to the reference man.
PROXIMITY_DETERMINERS = frozenset(
    {Determiner.THIS, Determiner.THAT, Determiner.THESE, Determiner.THOSE}
)


class Preposition(IntEnum):
    ABOVE = 0
    BELOW = 1
    IN_FRONT_OF = 2
    BEHIND = 3
    BESIDE = 4
    ON = 5
    BETWEEN = 6
    AMONG = 7


#: Prepositions whose reference group (object B) has 2-9 instances.
MULTI_INSTANCE_PREPOSITIONS = frozenset({Preposition.BETWEEN, Preposition.AMONG})


class EnvKind(str, Enum):
    D = "d"
    P = "p"
    DP = "dp"


class ParseError(ValueError):
    """Raised when a canonical instruction string cannot be parsed."""


@dataclass(frozen=True)
class ObjectPhrase:
    color: Color
    shape: Shape


@dataclass(frozen=True)
class DInstruction:
    det: Determiner
    obj: ObjectPhrase


@dataclass(frozen=True)
class PInstruction:
    obj_a: ObjectPhrase
    prep: Preposition
    obj_b: ObjectPhrase


@dataclass(frozen=True)
class DPInstruction:
    det_a: Determiner
    obj_a: ObjectPhrase
    prep: Preposition
    det_b: Determiner
    obj_b: ObjectPhrase


Instruction = Union[DInstruction, PInstruction, DPInstruction]


def env_kind_of(instr: Instruction) -> EnvKind:
    if isinstance(instr, DInstruction):
        return EnvKind.D
    if isinstance(instr, PInstruction):
        return EnvKind.P
    if isinstance(instr, DPInstruction):
        return EnvKind.DP
    raise TypeError(f"not an instruction: {instr!r}")


# Slot layouts. Per environment: number of one-hot slots and each slot's width.
_VOCAB_SIZES: dict[EnvKind, tuple[int, tuple[int, ...]]] = {
    EnvKind.D: (3, (8, 5, 5)),
    EnvKind.P: (5, (5, 5, 8, 5, 5)),
    EnvKind.DP: (7, (8, 5, 5, 8, 8, 5, 5)),
}


def vocab_sizes(env_kind: EnvKind) -> tuple[int, tuple[int, ...]]:
    """Slot count and per-slot one-hot widths for an environment's language input."""
    return _VOCAB_SIZES[EnvKind(env_kind)]


def flat_vocab_len(env_kind: EnvKind) -> int:
    return sum(vocab_sizes(env_kind)[1])


# ---------------------------------------------------------------------------
# Canonical text form. Tokens are lowercase; shapes are always singular;
# "in front of" is a single grammar token spelled with spaces.

_DET_WORDS = {d: d.name.lower() for d in Determiner}
_COLOR_WORDS = {c: c.name.lower() for c in Color}
_SHAPE_WORDS = {s: s.name.lower() for s in Shape}
_PREP_WORDS = {
    Preposition.ABOVE: "above",
    Preposition.BELOW: "below",
    Preposition.IN_FRONT_OF: "in front of",
    Preposition.BEHIND: "behind",
    Preposition.BESIDE: "beside",
    Preposition.ON: "on",
    Preposition.BETWEEN: "between",
    Preposition.AMONG: "among",
}

_WORD_TO_DET = {w: d for d, w in _DET_WORDS.items()}
_WORD_TO_COLOR = {w: c for c, w in _COLOR_WORDS.items()}
_WORD_TO_SHAPE = {w: s for s, w in _SHAPE_WORDS.items()}
_WORD_TO_PREP = {w: p for p, w in _PREP_WORDS.items() if " " not in w}


def instruction_to_text(instr: Instruction) -> str:
    """Canonical lowercase text; inverse of :func:`text_to_instruction`."""
    if isinstance(instr, DInstruction):
        return f"{_DET_WORDS[instr.det]} {_phrase_text(instr.obj)}"
    if isinstance(instr, PInstruction):
        return (
            f"{_phrase_text(instr.obj_a)} {_PREP_WORDS[instr.prep]} "
            f"{_phrase_text(instr.obj_b)}"
        )
    if isinstance(instr, DPInstruction):
        return (
            f"{_DET_WORDS[instr.det_a]} {_phrase_text(instr.obj_a)} "
            f"{_PREP_WORDS[instr.prep]} "
            f"{_DET_WORDS[instr.det_b]} {_phrase_text(instr.obj_b)}"
        )
    raise TypeError(f"not an instruction: {instr!r}")


def _phrase_text(obj: ObjectPhrase) -> str:
    return f"{_COLOR_WORDS[obj.color]} {_SHAPE_WORDS[obj.shape]}"


class _TokenStream:
    def __init__(self, text: str):
        self.tokens = text.lower().split()
        self.pos = 0

    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self) -> str:
        if self.done():
            raise ParseError("unexpected end of instruction")
        return self.tokens[self.pos]

    def take(self) -> str:
        tok = self.peek()
        self.pos += 1
        return tok


def _parse_det(ts: _TokenStream) -> Determiner:
    tok = ts.take()
    if tok not in _WORD_TO_DET:
        raise ParseError(f"expected determiner, got {tok!r}")
    return _WORD_TO_DET[tok]


def _parse_phrase(ts: _TokenStream) -> ObjectPhrase:
    color_tok = ts.take()
    if color_tok not in _WORD_TO_COLOR:
        raise ParseError(f"expected color, got {color_tok!r}")
    shape_tok = ts.take()
    # Plural surface forms are cosmetic; normalize "cubes" -> "cube".
    if shape_tok.endswith("s") and shape_tok[:-1] in _WORD_TO_SHAPE:
        shape_tok = shape_tok[:-1]
    if shape_tok not in _WORD_TO_SHAPE:
        raise ParseError(f"expected shape, got {shape_tok!r}")
    return ObjectPhrase(_WORD_TO_COLOR[color_tok], _WORD_TO_SHAPE[shape_tok])


def _parse_prep(ts: _TokenStream) -> Preposition:
    tok = ts.take()
    if tok == "in":
        if ts.take() != "front" or ts.take() != "of":
            raise ParseError("expected 'in front of'")
        return Preposition.IN_FRONT_OF
    if tok not in _WORD_TO_PREP:
        raise ParseError(f"expected preposition, got {tok!r}")
    return _WORD_TO_PREP[tok]


def text_to_instruction(text: str) -> Instruction:
    """Parse canonical text back into a typed instruction.

    Accepts plural shape forms. Raises :class:`ParseError` on unknown tokens,
    wrong arity, or identical object phrases in P/DP instructions.
    """
    ts = _TokenStream(text)
    if ts.done():
        raise ParseError("empty instruction")
    if ts.peek() in _WORD_TO_DET:
        det = _parse_det(ts)
        obj = _parse_phrase(ts)
        if ts.done():
            return DInstruction(det, obj)
        prep = _parse_prep(ts)
        det_b = _parse_det(ts)
        obj_b = _parse_phrase(ts)
        instr: Instruction = DPInstruction(det, obj, prep, det_b, obj_b)
    else:
        obj = _parse_phrase(ts)
        prep = _parse_prep(ts)
        obj_b = _parse_phrase(ts)
        instr = PInstruction(obj, prep, obj_b)
    if not ts.done():
        raise ParseError(f"trailing tokens: {' '.join(ts.tokens[ts.pos:])!r}")
    if instr.obj_a == instr.obj_b:
        raise ParseError("object A and object B must differ")
    return instr


# ---------------------------------------------------------------------------
# Geometry plumbing.


def normalize_heading(theta: float) -> float:
    """Wrap a yaw angle into [0, 2*pi)."""
    theta = theta % TWO_PI
    return theta if theta >= 0.0 else theta + TWO_PI


@dataclass
class Pose:
    """Ground position plus yaw. Pitch is fixed; the action set has no look-up/down."""

    position: Vec3
    heading: float

    def __post_init__(self) -> None:
        self.heading = normalize_heading(self.heading)


@dataclass
class GroupSpec:
    """One option's object group: a phrase realized `count` times at `placements`.

    For preposition relations, `anchor` holds the reference group (object B);
    the outer group is object A.
    """

    phrase: ObjectPhrase
    count: int
    placements: list[Vec3]
    anchor: "GroupSpec | None" = None

    def __post_init__(self) -> None:
        if self.count != len(self.placements):
            raise ValueError("count must equal number of placements")
        if not 1 <= self.count <= 9:
            raise ValueError(f"count out of range: {self.count}")


@dataclass
class PlacedGroup:
    group: GroupSpec
    location: int


@dataclass
class SceneSpec:
    """Complete declarative description of one episode's room contents."""

    env_kind: EnvKind
    instruction: Instruction
    target: PlacedGroup
    distractors: list[PlacedGroup]
    layout_id: str
    seed: int
    spatial: dict = field(default_factory=dict)

    @property
    def options(self) -> list[PlacedGroup]:
        return [self.target] + self.distractors

    def to_json_dict(self) -> dict:
        return {
            "env_kind": self.env_kind.value,
            "instruction": instruction_to_text(self.instruction),
            "target": _group_to_dict(self.target),
            "distractors": [_group_to_dict(g) for g in self.distractors],
            "layout_id": self.layout_id,
            "seed": self.seed,
            "spatial": self.spatial,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SceneSpec":
        return cls(
            env_kind=EnvKind(d["env_kind"]),
            instruction=text_to_instruction(d["instruction"]),
            target=_group_from_dict(d["target"]),
            distractors=[_group_from_dict(g) for g in d["distractors"]],
            layout_id=d["layout_id"],
            seed=d["seed"],
            spatial=d["spatial"],
        )


def _group_to_dict(pg: PlacedGroup) -> dict:
    d: dict = {
        "color": _COLOR_WORDS[pg.group.phrase.color],
        "shape": _SHAPE_WORDS[pg.group.phrase.shape],
        "count": pg.group.count,
        "placements": [list(p) for p in pg.group.placements],
        "location": pg.location,
    }
    if pg.group.anchor is not None:
        d["anchor"] = _group_to_dict(PlacedGroup(pg.group.anchor, pg.location))
        del d["anchor"]["location"]
    return d


def _group_from_dict(d: dict) -> PlacedGroup:
    anchor = None
    if "anchor" in d:
        anchor = _group_from_dict({**d["anchor"], "location": d["location"]}).group
    group = GroupSpec(
        phrase=ObjectPhrase(_WORD_TO_COLOR[d["color"]], _WORD_TO_SHAPE[d["shape"]]),
        count=d["count"],
        placements=[tuple(p) for p in d["placements"]],
        anchor=anchor,
    )
    return PlacedGroup(group, d["location"])
