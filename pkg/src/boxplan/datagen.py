"""Reproducible environment generation for the three dataset variants.

Every emitted record is verified solvable by the search planner and carries
the golden plan it found. Records serialize one-per-line as JSON with a
fixed field order so identical seeds give byte-identical files.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, TextIO

from . import astar, env as E
from .env import EnvConfig, ObjectSpec, Point, RobotSpec
from .errors import EmptyDataset, GenerationExhausted
from .plans import Plan, plan_from_jsonable, plan_length, plan_to_jsonable

RETRY_BUDGET = 50
# Generation gives the solver a little more headroom than the scoring
# default so dense object layouts stay reachable before resampling.
SOLVE_ITERATIONS = 5000
CELL_OFFSETS = (0.25, 0.75)
# NewCoord offsets are drawn on a 0.05 grid inside [-0.2, 0.2].
NEWCOORD_STEP = 0.05
NEWCOORD_MAX = 0.2


@dataclass
class DatasetRecord:
    cfg: EnvConfig
    golden_plan: Plan
    golden_len: int
    golden_para: int
    seed: int
    id: str


@dataclass
class DatasetSummary:
    count: int
    avg_optimal_steps: float
    avg_para: float
    size_histogram: dict[str, int]
    object_histogram: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "avg_optimal_steps": self.avg_optimal_steps,
            "avg_para": self.avg_para,
            "size_histogram": self.size_histogram,
            "object_histogram": self.object_histogram,
        }


def cell_lattice(width: int, height: int) -> tuple[Point, ...]:
    """The four quarter points of every cell, in row-major lattice order."""
    pts = []
    for cx in range(width):
        for cy in range(height):
            for ox in CELL_OFFSETS:
                for oy in CELL_OFFSETS:
                    pts.append(Point(cx + ox, cy + oy))
    return tuple(pts)


def standard_robot_layout(width: int, height: int) -> tuple[RobotSpec, ...]:
    """Bases on the checkerboard of grid joints (x + y even).

    Every cell's quarter points fall inside some base's reach band, and
    diagonally adjacent bases share a full cell of lattice points, so
    objects can be handed over between robots anywhere on the map.
    """
    bases = [
        Point(float(x), float(y))
        for x in range(width + 1)
        for y in range(height + 1)
        if (x + y) % 2 == 0
    ]
    return tuple(RobotSpec(f"Robot {i}", b) for i, b in enumerate(bases))


def para_of_plan(plan: Plan) -> int:
    return max((len(s.actions) for s in plan.steps), default=0)


def _sample_objects(
    rng: random.Random, points: Sequence[Point], count: int
) -> Optional[tuple[ObjectSpec, ...]]:
    if count > len(points):
        return None
    starts = rng.sample(points, count)
    targets = rng.sample(points, count)
    if any(s == t for s, t in zip(starts, targets)):
        return None
    return tuple(
        ObjectSpec(f"Object {i}", s, t)
        for i, (s, t) in enumerate(zip(starts, targets))
    )


def _solve_record(
    cfg: EnvConfig, rec_id: str, seed: int,
    max_iterations: int = SOLVE_ITERATIONS,
) -> Optional[DatasetRecord]:
    try:
        cfg.validate()
    except Exception:
        return None
    result = astar.solve(cfg, max_iterations=max_iterations)
    if result.status is not astar.SolveStatus.SOLVED or result.plan is None:
        return None
    return DatasetRecord(
        cfg=cfg,
        golden_plan=result.plan,
        golden_len=plan_length(result.plan),
        golden_para=para_of_plan(result.plan),
        seed=seed,
        id=rec_id,
    )


def _retrying(make_cfg, rec_id: str, seed: int) -> DatasetRecord:
    for attempt in range(RETRY_BUDGET):
        rng = random.Random((seed, rec_id, attempt).__repr__())
        cfg = make_cfg(rng)
        if cfg is None:
            continue
        record = _solve_record(cfg, rec_id, seed)
        if record is not None:
            return record
    raise GenerationExhausted(
        f"no solvable sample for {rec_id} within {RETRY_BUDGET} attempts")


def gen_standard(
    sizes: Iterable[int] = range(2, 7),
    objects: Iterable[int] = range(1, 6),
    count_per_config: int = 10,
    seed: int = 0,
) -> Iterator[DatasetRecord]:
    """Square maps with the even robot layout; streams solvable records."""
    for size in sizes:
        points = cell_lattice(size, size)
        robots = standard_robot_layout(size, size)
        for n_obj in objects:
            for i in range(count_per_config):
                rec_id = f"standard-{size}x{size}-o{n_obj}-{i:03d}"

                def make_cfg(rng: random.Random, _size=size, _n=n_obj):
                    objs = _sample_objects(rng, points, _n)
                    if objs is None:
                        return None
                    return EnvConfig(
                        width=_size, height=_size, points=points,
                        robots=robots, objects=objs,
                        variant="standard", seed=seed)

                yield _retrying(make_cfg, rec_id, seed)


def gen_randrob(
    sizes: Iterable[int] = range(2, 6),
    objects: Iterable[int] = range(1, 6),
    count_per_config: int = 10,
    seed: int = 0,
) -> Iterator[DatasetRecord]:
    """Robot bases sampled uniformly from all grid joints."""
    for size in sizes:
        points = cell_lattice(size, size)
        n_robots = len(standard_robot_layout(size, size))
        joints = [
            Point(float(x), float(y))
            for x in range(size + 1) for y in range(size + 1)
        ]
        for n_obj in objects:
            for i in range(count_per_config):
                rec_id = f"randrob-{size}x{size}-o{n_obj}-{i:03d}"

                def make_cfg(rng: random.Random, _size=size, _n=n_obj,
                             _k=n_robots):
                    bases = rng.sample(joints, _k)
                    robots = tuple(RobotSpec(f"Robot {j}", b)
                                   for j, b in enumerate(bases))
                    objs = _sample_objects(rng, points, _n)
                    if objs is None:
                        return None
                    return EnvConfig(
                        width=_size, height=_size, points=points,
                        robots=robots, objects=objs,
                        variant="randrob", seed=seed)

                yield _retrying(make_cfg, rec_id, seed)


def _perturb(rng: random.Random, p: Point, width: int, height: int) -> Point:
    steps = int(NEWCOORD_MAX / NEWCOORD_STEP)
    for _ in range(100):
        dx = rng.randint(-steps, steps) * NEWCOORD_STEP
        dy = rng.randint(-steps, steps) * NEWCOORD_STEP
        q = Point(round(p.x + dx, 6), round(p.y + dy, 6))
        if 0.0 < q.x < width and 0.0 < q.y < height:
            return q
    return p


def gen_newcoord(
    base_records: Iterable[DatasetRecord], seed: int = 0
) -> Iterator[DatasetRecord]:
    """Standard records with every object start/target offset randomly."""
    for base in base_records:
        rec_id = base.id.replace("standard-", "newcoord-", 1)
        src = base.cfg

        def make_cfg(rng: random.Random, _src=src):
            objs = []
            extra: list[Point] = []
            for o in _src.objects:
                s = _perturb(rng, o.start, _src.width, _src.height)
                t = _perturb(rng, o.target, _src.width, _src.height)
                if s == t:
                    return None
                objs.append(ObjectSpec(o.name, s, t))
                extra.extend([s, t])
            starts = [o.start for o in objs]
            targets = [o.target for o in objs]
            if len(set(starts)) != len(starts):
                return None
            if len(set(targets)) != len(targets):
                return None
            points = tuple(dict.fromkeys(list(_src.points) + extra))
            return EnvConfig(
                width=_src.width, height=_src.height, points=points,
                robots=_src.robots, objects=tuple(objs),
                variant="newcoord", seed=seed)

        yield _retrying(make_cfg, rec_id, seed)


def summarize(records: Sequence[DatasetRecord]) -> DatasetSummary:
    if not records:
        raise EmptyDataset("no records to summarize")
    sizes: dict[str, int] = {}
    objs: dict[str, int] = {}
    for r in records:
        skey = f"{r.cfg.width}x{r.cfg.height}"
        sizes[skey] = sizes.get(skey, 0) + 1
        okey = str(len(r.cfg.objects))
        objs[okey] = objs.get(okey, 0) + 1
    return DatasetSummary(
        count=len(records),
        avg_optimal_steps=sum(r.golden_len for r in records) / len(records),
        avg_para=sum(r.golden_para for r in records) / len(records),
        size_histogram=dict(sorted(sizes.items())),
        object_histogram=dict(sorted(objs.items())),
    )


def record_to_dict(rec: DatasetRecord) -> dict:
    cfg = rec.cfg
    return {
        "id": rec.id,
        "variant": cfg.variant,
        "width": cfg.width,
        "height": cfg.height,
        "points": [[_num(p.x), _num(p.y)] for p in cfg.points],
        "robots": [{"name": r.name, "base": [_num(r.base.x), _num(r.base.y)]}
                   for r in cfg.robots],
        "objects": [{"name": o.name,
                     "start": [_num(o.start.x), _num(o.start.y)],
                     "target": [_num(o.target.x), _num(o.target.y)]}
                    for o in cfg.objects],
        "golden_plan": plan_to_jsonable(rec.golden_plan),
        "golden_len": rec.golden_len,
        "golden_para": rec.golden_para,
        "seed": rec.seed,
    }


def _num(v: float):
    # Up to 6 significant decimals, rendered as int when whole.
    r = round(v, 6)
    return int(r) if r == int(r) else r


def record_from_dict(d: dict) -> DatasetRecord:
    cfg = E.config_from_dict(d)
    plan = plan_from_jsonable(d["golden_plan"])
    return DatasetRecord(
        cfg=cfg,
        golden_plan=plan,
        golden_len=int(d["golden_len"]),
        golden_para=int(d["golden_para"]),
        seed=int(d.get("seed", 0)),
        id=d["id"],
    )


def write_records(records: Iterable[DatasetRecord], fp: TextIO) -> int:
    n = 0
    for rec in records:
        fp.write(json.dumps(record_to_dict(rec)) + "\n")
        n += 1
    return n


def read_records(fp: TextIO) -> list[DatasetRecord]:
    out = []
    for line in fp:
        line = line.strip()
        if line:
            out.append(record_from_dict(json.loads(line)))
    return out


def load_dataset(path: str) -> list[DatasetRecord]:
    with open(path, "r", encoding="utf-8") as fp:
        return read_records(fp)
