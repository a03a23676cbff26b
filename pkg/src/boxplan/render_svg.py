"""SVG rendering of environments and plans.

Draws the grid, robot bases, arm links (blue), objects, targets, and one
red trajectory line per plan action.
"""
from __future__ import annotations

from typing import Optional

from . import env as E
from .env import EnvConfig, EnvState
from .plans import Plan

SCALE = 80
MARGIN = 30

_OBJECT_COLORS = (
    "#c44e52", "#dd8452", "#956cb4", "#4c72b0", "#64b5cd",
    "#8c8c8c", "#ccb974", "#55a868",
)


def _sx(x: float) -> float:
    return MARGIN + x * SCALE


def _sy(y: float, height: int) -> float:
    # Flip so the y axis points up.
    return MARGIN + (height - y) * SCALE


def render_svg(cfg: EnvConfig, plan: Optional[Plan] = None) -> str:
    """Render the environment, replaying `plan` to draw trajectories."""
    w = cfg.width * SCALE + 2 * MARGIN
    h = cfg.height * SCALE + 2 * MARGIN
    sy = lambda y: _sy(y, cfg.height)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
    ]
    for x in range(cfg.width + 1):
        parts.append(
            f'<line x1="{_sx(x)}" y1="{sy(0)}" x2="{_sx(x)}" '
            f'y2="{sy(cfg.height)}" stroke="#cccccc"/>')
    for y in range(cfg.height + 1):
        parts.append(
            f'<line x1="{_sx(0)}" y1="{sy(y)}" x2="{_sx(cfg.width)}" '
            f'y2="{sy(y)}" stroke="#cccccc"/>')

    state = E.init_state(cfg)

    # trajectories, one per action, replayed step by step
    if plan is not None:
        replay = state
        for step_idx, step in enumerate(plan.steps):
            for act in step.actions:
                parts.append(
                    f'<line class="trajectory" data-step="{step_idx}" '
                    f'x1="{_sx(act.start.x)}" y1="{sy(act.start.y)}" '
                    f'x2="{_sx(act.end.x)}" y2="{sy(act.end.y)}" '
                    f'stroke="red" stroke-width="2" '
                    f'stroke-opacity="{0.35 + 0.65 * (step_idx + 1) / len(plan.steps):.3f}"/>')
            replay, violations = E.apply_step(cfg, replay, step)

    for i, o in enumerate(cfg.objects):
        color = _OBJECT_COLORS[i % len(_OBJECT_COLORS)]
        parts.append(
            f'<circle cx="{_sx(o.target.x)}" cy="{sy(o.target.y)}" r="12" '
            f'fill="none" stroke="{color}" stroke-width="2"/>')
        pos = state.obj_pos[o.name]
        parts.append(
            f'<rect x="{_sx(pos.x) - 9}" y="{sy(pos.y) - 9}" width="18" '
            f'height="18" fill="{color}"/>')

    for r in cfg.robots:
        arm = state.arm_pos[r.name]
        parts.append(
            f'<line x1="{_sx(r.base.x)}" y1="{sy(r.base.y)}" '
            f'x2="{_sx(arm.x)}" y2="{sy(arm.y)}" '
            f'stroke="#4c72b0" stroke-width="3"/>')
        parts.append(
            f'<circle cx="{_sx(r.base.x)}" cy="{sy(r.base.y)}" r="7" '
            f'fill="#4c72b0"/>')
        parts.append(
            f'<text x="{_sx(r.base.x) + 9}" y="{sy(r.base.y) - 9}" '
            f'font-size="12" fill="#333333">{r.name}</text>')

    parts.append("</svg>")
    return "\n".join(parts)
