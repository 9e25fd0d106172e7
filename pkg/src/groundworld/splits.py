"""Train/test split grids and curriculum schedules.

The two 5x8 grids (shape x determiner, shape x preposition) ship as CSV data
files and are loaded verbatim; 75% of cells train, 25% are held out. The
determiner grid keys on the instruction's shape; the preposition grid keys on
object A's shape for both the single-relation and combined environments.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from .core import (
    Determiner,
    DInstruction,
    DPInstruction,
    EnvKind,
    Instruction,
    PInstruction,
    Preposition,
    Shape,
)


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"
    ALL = "all"


_PREP_HEADERS = {
    "above": Preposition.ABOVE,
    "below": Preposition.BELOW,
    "in front of": Preposition.IN_FRONT_OF,
    "behind": Preposition.BEHIND,
    "beside": Preposition.BESIDE,
    "on": Preposition.ON,
    "between": Preposition.BETWEEN,
    "among": Preposition.AMONG,
}


@dataclass(frozen=True)
class SplitTable:
    """(shape, concept-id) -> Train/Test lookup for one concept class."""

    concept_kind: str  # "determiner" | "preposition"
    grid: dict[tuple[Shape, int], Split]

    def label(self, shape: Shape, concept_id: int) -> Split:
        return self.grid[(shape, concept_id)]

    def test_cells(self) -> list[tuple[Shape, int]]:
        return sorted(k for k, v in self.grid.items() if v is Split.TEST)


def _load_table(filename: str, concept_kind: str, headers: dict) -> SplitTable:
    text = resources.files("groundworld.data").joinpath(filename).read_text()
    rows = list(csv.DictReader(text.splitlines()))
    grid: dict[tuple[Shape, int], Split] = {}
    for row in rows:
        shape = Shape[row["shape"].upper()]
        for header, concept in headers.items():
            grid[(shape, int(concept))] = Split(row[header])
    if len(grid) != 40:
        raise ValueError(f"{filename}: expected 40 cells, got {len(grid)}")
    return SplitTable(concept_kind, grid)


_D_TABLE: SplitTable | None = None
_P_TABLE: SplitTable | None = None


def determiner_table() -> SplitTable:
    global _D_TABLE
    if _D_TABLE is None:
        headers = {d.name.lower(): int(d) for d in Determiner}
        _D_TABLE = _load_table("split_d.csv", "determiner", headers)
    return _D_TABLE


def preposition_table() -> SplitTable:
    global _P_TABLE
    if _P_TABLE is None:
        _P_TABLE = _load_table("split_p.csv", "preposition", dict(_PREP_HEADERS))
    return _P_TABLE


def membership(instr: Instruction) -> Split:
    """Which side of the train/test split an instruction falls on."""
    if isinstance(instr, DInstruction):
        return determiner_table().label(instr.obj.shape, int(instr.det))
    if isinstance(instr, (PInstruction, DPInstruction)):
        return preposition_table().label(instr.obj_a.shape, int(instr.prep))
    raise TypeError(f"not an instruction: {instr!r}")


def matches_split(instr: Instruction, split: Split) -> bool:
    return split is Split.ALL or membership(instr) is split


# ---------------------------------------------------------------------------
# Curriculum schedules: staged concept subsets with a criterion gate.

#: Default "simple first" subsets. The source work picked stage concepts by
#: fastest individual learning curves without listing them; these are our
#: declared defaults and are overridable in run configs.
DEFAULT_STAGE_SUBSETS: dict[EnvKind, dict[int, tuple[int, ...]]] = {
    EnvKind.D: {
        2: (int(Determiner.A), int(Determiner.THIS)),
        4: (int(Determiner.A), int(Determiner.FEW), int(Determiner.THIS), int(Determiner.THAT)),
        8: tuple(int(d) for d in Determiner),
    },
    EnvKind.P: {
        2: (int(Preposition.ABOVE), int(Preposition.BELOW)),
        4: (
            int(Preposition.ABOVE),
            int(Preposition.BELOW),
            int(Preposition.ON),
            int(Preposition.BESIDE),
        ),
        8: tuple(int(p) for p in Preposition),
    },
}
DEFAULT_STAGE_SUBSETS[EnvKind.DP] = DEFAULT_STAGE_SUBSETS[EnvKind.P]


@dataclass(frozen=True)
class Stage:
    name: str
    concept_ids: tuple[int, ...]  # determiner ids for D, preposition ids for P/DP
    criterion: float = 0.80
    window: int = 1000
    episode_cap: int = 5_000_000


@dataclass(frozen=True)
class CurriculumSchedule:
    env_kind: EnvKind
    stages: tuple[Stage, ...]

    def __post_init__(self) -> None:
        if not self.stages:
            raise ValueError("schedule needs at least one stage")
        prev: set[int] = set()
        for stage in self.stages:
            ids = set(stage.concept_ids)
            if prev and not prev < ids:
                raise ValueError("stage subsets must strictly increase")
            prev = ids
        if len(prev) != 8:
            raise ValueError("final stage must cover all eight concepts")


def schedule_from_names(env_kind: EnvKind, names: list[str]) -> CurriculumSchedule:
    """Build a schedule from names like ["4p", "8p"] or ["2d", "4d", "8d"]."""
    env_kind = EnvKind(env_kind)
    subsets = DEFAULT_STAGE_SUBSETS[env_kind]
    stages = []
    for name in names:
        size = int(name.rstrip("dpDP"))
        if size not in subsets:
            raise ValueError(f"no default subset of size {size}")
        stages.append(Stage(name=name.lower(), concept_ids=subsets[size]))
    return CurriculumSchedule(env_kind, tuple(stages))


@dataclass
class ScheduleProgress:
    """Mutable cursor over a schedule; owned by the trainer, advanced on episodes."""

    schedule: CurriculumSchedule
    stage_index: int = 0
    episodes_in_stage: int = 0
    stage_episode_counts: list[int] = field(default_factory=list)
    _window: list[bool] = field(default_factory=list)

    @property
    def stage(self) -> Stage:
        return self.schedule.stages[self.stage_index]

    @property
    def completed(self) -> bool:
        return self.stage_index >= len(self.schedule.stages)

    def record_episode(self, perfect: bool) -> bool:
        """Feed one finished episode; returns True when this completes a stage."""
        if self.completed:
            raise RuntimeError("schedule already completed")
        stage = self.stage
        self.episodes_in_stage += 1
        self._window.append(perfect)
        if len(self._window) > stage.window:
            self._window.pop(0)
        if (
            len(self._window) == stage.window
            and sum(self._window) >= stage.criterion * stage.window
        ):
            self.stage_episode_counts.append(self.episodes_in_stage)
            self.stage_index += 1
            self.episodes_in_stage = 0
            self._window.clear()
            return True
        return False

    @property
    def budget_exhausted(self) -> bool:
        return not self.completed and self.episodes_in_stage >= self.stage.episode_cap


def stage_for(history: list[tuple[int, bool]], schedule: CurriculumSchedule) -> int:
    """Replay (stage, perfect) episode records; returns the resulting stage index.

    Monotone in the history; `len(schedule.stages)` means the schedule finished.
    """
    progress = ScheduleProgress(schedule)
    for _, perfect in history:
        if progress.completed:
            break
        progress.record_episode(perfect)
    return progress.stage_index
