"""Learning-rate schedules with linear warmup, and schedule-length scaling."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


@dataclass
class ScheduleConfig:
    """Warmup followed by linear decay, cosine decay, or stepped decay."""

    kind: str = "linear"  # linear | cosine | step | constant
    warmup_steps: int = 0
    total_steps: int = 1
    base_lr: float = 1e-3
    period: int = 1  # step kind only
    gamma: float = 0.5  # step kind only

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "cosine", "step", "constant"):
            raise ValidationError(f"unknown schedule kind: {self.kind}")
        if self.total_steps < 0 or self.warmup_steps < 0:
            raise ValidationError("step counts must be non-negative")
        if self.total_steps > 0 and not self.warmup_steps < self.total_steps:
            raise ValidationError("need warmup_steps < total_steps")
        if self.base_lr <= 0:
            raise ValidationError("base_lr must be positive")
        if self.kind == "step" and self.period <= 0:
            raise ValidationError("step schedule needs period > 0")


def lr_at_step(schedule: ScheduleConfig, step: int) -> float:
    """Learning rate at an integer step in [0, total_steps]."""
    w, t = schedule.warmup_steps, schedule.total_steps
    if t == 0:
        raise ValidationError("schedule of zero steps has no learning rate")
    if step < 0 or step > t:
        raise ValidationError(f"step {step} outside [0, {t}]")
    base = schedule.base_lr
    if step < w:
        return base * step / w
    if schedule.kind == "constant":
        return base
    if schedule.kind == "linear":
        return base * (t - step) / (t - w)
    if schedule.kind == "cosine":
        return base * 0.5 * (1.0 + math.cos(math.pi * (step - w) / (t - w)))
    return base * schedule.gamma ** ((step - w) // schedule.period)


def schedule_len_for_fraction(p: float) -> int:
    """Epoch count for a dataset fraction, interpolated linearly in p.

    Anchored at 100 epochs for p=0.01 and 2 epochs for p=1.0; rounded to the
    nearest integer, never below 2.
    """
    if not 0.01 <= p <= 1.0:
        raise ValidationError("fraction must be in [0.01, 1]")
    epochs = 100.0 + (p - 0.01) * (2.0 - 100.0) / (1.0 - 0.01)
    return max(2, round(epochs))
