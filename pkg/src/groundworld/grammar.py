"""Instruction enumeration, sampling, counting, and one-hot encoding.

Owns the object-phrase distinctness rule and the combined environment's
realizability constraints (a relation's reference arity restricts which
determiners may fill the second slot, and near/far determiners cannot
contradict each other inside one location block).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import (
    Color,
    Determiner,
    DInstruction,
    DPInstruction,
    EnvKind,
    Instruction,
    ObjectPhrase,
    PInstruction,
    Preposition,
    Shape,
    vocab_sizes,
)
from .semantics import compatible_det_b, compatible_det_pair
from .splits import Split, matches_split


class DistinctnessRule(str, Enum):
    # Object A and object B differ in color AND shape.
    DIFFER_BOTH = "both"
    # Object A and object B merely differ as phrases.
    DIFFER_PAIR = "pair"


def phrases_distinct(a: ObjectPhrase, b: ObjectPhrase, rule: DistinctnessRule) -> bool:
    if rule is DistinctnessRule.DIFFER_BOTH:
        return a.color != b.color and a.shape != b.shape
    return a != b


@dataclass(frozen=True)
class GrammarConfig:
    env_kind: EnvKind
    rule: DistinctnessRule = DistinctnessRule.DIFFER_BOTH
    determiner_subset: tuple[int, ...] = tuple(int(d) for d in Determiner)
    preposition_subset: tuple[int, ...] = tuple(int(p) for p in Preposition)

    def __post_init__(self) -> None:
        if not self.determiner_subset or not self.preposition_subset:
            raise ValueError("concept subsets must be non-empty")
        object.__setattr__(self, "env_kind", EnvKind(self.env_kind))
        object.__setattr__(self, "determiner_subset", tuple(sorted(set(self.determiner_subset))))
        object.__setattr__(
            self, "preposition_subset", tuple(sorted(set(self.preposition_subset)))
        )

    def with_stage(self, concept_ids: tuple[int, ...]) -> "GrammarConfig":
        """Restrict the curriculum-relevant concept class to `concept_ids`."""
        if self.env_kind is EnvKind.D:
            return GrammarConfig(self.env_kind, self.rule, tuple(concept_ids))
        return GrammarConfig(
            self.env_kind, self.rule, self.determiner_subset, tuple(concept_ids)
        )

    @property
    def determiners(self) -> list[Determiner]:
        return [Determiner(i) for i in self.determiner_subset]

    @property
    def prepositions(self) -> list[Preposition]:
        return [Preposition(i) for i in self.preposition_subset]


def _phrases() -> list[ObjectPhrase]:
    return [ObjectPhrase(c, s) for c in Color for s in Shape]


def _phrase_pairs(rule: DistinctnessRule) -> list[tuple[ObjectPhrase, ObjectPhrase]]:
    return [
        (a, b)
        for a in _phrases()
        for b in _phrases()
        if phrases_distinct(a, b, rule)
    ]


def enumerate_instructions(cfg: GrammarConfig) -> list[Instruction]:
    """Full, duplicate-free instruction list in lexicographic id order."""
    if cfg.env_kind is EnvKind.D:
        return [
            DInstruction(det, obj) for det in cfg.determiners for obj in _phrases()
        ]
    if cfg.env_kind is EnvKind.P:
        return [
            PInstruction(a, prep, b)
            for a in _phrases()
            for prep in cfg.prepositions
            for b in _phrases()
            if phrases_distinct(a, b, cfg.rule)
        ]
    out: list[Instruction] = []
    for det_a in cfg.determiners:
        for a in _phrases():
            for prep in cfg.prepositions:
                allowed_b = set(compatible_det_b(prep))
                for det_b in cfg.determiners:
                    if det_b not in allowed_b or not compatible_det_pair(det_a, det_b):
                        continue
                    for b in _phrases():
                        if phrases_distinct(a, b, cfg.rule):
                            out.append(DPInstruction(det_a, a, prep, det_b, b))
    return out


_SAMPLE_BUDGET = 100_000


def sample_instruction(cfg: GrammarConfig, split: Split, rng: np.random.Generator) -> Instruction:
    """Uniform draw over the enumeration filtered to `split`.

    D and P sample by index into a cached filtered list; the combined grammar
    is sampled by uniform component draws with rejection, which is uniform
    over the valid set without materializing ~10^5 instructions.
    """
    if cfg.env_kind in (EnvKind.D, EnvKind.P):
        pool = _filtered_pool(cfg, split)
        if not pool:
            raise ValueError(f"no instructions in split {split.value!r}")
        return pool[int(rng.integers(len(pool)))]
    dets = cfg.determiners
    preps = cfg.prepositions
    for _ in range(_SAMPLE_BUDGET):
        det_a = dets[int(rng.integers(len(dets)))]
        det_b = dets[int(rng.integers(len(dets)))]
        prep = preps[int(rng.integers(len(preps)))]
        if det_b not in compatible_det_b(prep) or not compatible_det_pair(det_a, det_b):
            continue
        a = ObjectPhrase(Color(int(rng.integers(5))), Shape(int(rng.integers(5))))
        b = ObjectPhrase(Color(int(rng.integers(5))), Shape(int(rng.integers(5))))
        if not phrases_distinct(a, b, cfg.rule):
            continue
        instr = DPInstruction(det_a, a, prep, det_b, b)
        if matches_split(instr, split):
            return instr
    raise ValueError(f"no instructions in split {split.value!r} (sampling budget hit)")


_POOL_CACHE: dict[tuple, list[Instruction]] = {}


def _filtered_pool(cfg: GrammarConfig, split: Split) -> list[Instruction]:
    key = (cfg.env_kind, cfg.rule, cfg.determiner_subset, cfg.preposition_subset, split)
    if key not in _POOL_CACHE:
        _POOL_CACHE[key] = [
            i for i in enumerate_instructions(cfg) if matches_split(i, split)
        ]
    return _POOL_CACHE[key]


# ---------------------------------------------------------------------------
# One-hot encoding.


@dataclass
class EncodedInstruction:
    slots: list[np.ndarray]
    flat: np.ndarray


def _slot_ids(instr: Instruction) -> list[int]:
    if isinstance(instr, DInstruction):
        return [int(instr.det), int(instr.obj.color), int(instr.obj.shape)]
    if isinstance(instr, PInstruction):
        return [
            int(instr.obj_a.color),
            int(instr.obj_a.shape),
            int(instr.prep),
            int(instr.obj_b.color),
            int(instr.obj_b.shape),
        ]
    if isinstance(instr, DPInstruction):
        return [
            int(instr.det_a),
            int(instr.obj_a.color),
            int(instr.obj_a.shape),
            int(instr.prep),
            int(instr.det_b),
            int(instr.obj_b.color),
            int(instr.obj_b.shape),
        ]
    raise TypeError(f"not an instruction: {instr!r}")


def encode(instr: Instruction) -> EncodedInstruction:
    """Per-slot one-hot vectors plus their concatenation (float32)."""
    from .core import env_kind_of

    _, dims = vocab_sizes(env_kind_of(instr))
    ids = _slot_ids(instr)
    slots = []
    for dim, idx in zip(dims, ids):
        v = np.zeros(dim, dtype=np.float32)
        v[idx] = 1.0
        slots.append(v)
    return EncodedInstruction(slots=slots, flat=np.concatenate(slots))


# ---------------------------------------------------------------------------
# Count report.

#: Figures stated by the source work, printed alongside ours for comparison.
PAPER_COUNTS = {
    EnvKind.D: {"total": 200, "train": 160, "test": 40},
    EnvKind.P: {"total": 6000, "train": 4800, "test": 1200},
    EnvKind.DP: {"total": 160_000, "train": 120_000, "test": 40_000},
}


@dataclass
class CountReport:
    env_kind: EnvKind
    rule: DistinctnessRule
    total: int
    train: int
    test: int
    paper: dict
    flags: list[str] = field(default_factory=list)

    def rows(self) -> list[tuple[str, int, int]]:
        return [
            ("total", self.total, self.paper["total"]),
            ("train", self.train, self.paper["train"]),
            ("test", self.test, self.paper["test"]),
        ]


def count_report(cfg: GrammarConfig) -> CountReport:
    """Enumeration sizes split by the train/test tables, with source figures flagged."""
    if cfg.env_kind in (EnvKind.D, EnvKind.P):
        instructions = enumerate_instructions(cfg)
        total = len(instructions)
        train = sum(1 for i in instructions if matches_split(i, Split.TRAIN))
    else:
        total, train = _dp_counts(cfg)
    test = total - train
    paper = PAPER_COUNTS[cfg.env_kind]
    flags = [
        f"{name}: ours {ours} != stated {stated}"
        for name, ours, stated in [
            ("total", total, paper["total"]),
            ("train", train, paper["train"]),
            ("test", test, paper["test"]),
        ]
        if ours != stated
    ]
    return CountReport(cfg.env_kind, cfg.rule, total, train, test, paper, flags)


def _dp_counts(cfg: GrammarConfig) -> tuple[int, int]:
    """Cell arithmetic over the (shape A, preposition) grid; no materialization."""
    from .splits import preposition_table

    table = preposition_table()
    pairs_by_shape_a: dict[Shape, int] = {s: 0 for s in Shape}
    for a, b in _phrase_pairs(cfg.rule):
        pairs_by_shape_a[a.shape] += 1
    total = 0
    train = 0
    for prep in cfg.prepositions:
        allowed_b = set(compatible_det_b(prep))
        det_pairs = sum(
            1
            for da in cfg.determiners
            for db in cfg.determiners
            if db in allowed_b and compatible_det_pair(da, db)
        )
        for shape in Shape:
            cell = pairs_by_shape_a[shape] * det_pairs
            total += cell
            if table.label(shape, int(prep)) is Split.TRAIN:
                train += cell
    return total, train
