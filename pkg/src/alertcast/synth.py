"""Synthetic alert intervals with a planted lead-lag relation between two regions."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from alertcast.ingest import DEFAULT_WINDOW_START, RawEvent

# the first four cover the default target regions
REGION_NAMES = (
    "Kharkivska oblast",
    "Kyivska oblast",
    "Lvivska oblast",
    "Vinnytska oblast",
    "Poltavska oblast",
    "Sumska oblast",
    "Dnipropetrovska oblast",
    "Zaporizka oblast",
    "Chernihivska oblast",
    "Odeska oblast",
    "Mykolaivska oblast",
    "Khersonska oblast",
    "Donetska oblast",
    "Luhanska oblast",
    "Cherkaska oblast",
    "Kirovohradska oblast",
    "Zhytomyrska oblast",
    "Rivnenska oblast",
    "Volynska oblast",
    "Khmelnytska oblast",
    "Ternopilska oblast",
    "Ivano-Frankivska oblast",
    "Zakarpatska oblast",
    "Chernivetska oblast",
    "Kyiv city",
)


@dataclass(frozen=True)
class SynthSpec:
    n_regions: int = 6
    days: int = 180
    lead_region: str = "Kharkivska oblast"
    lag_region: str = "Kyivska oblast"
    lag_minutes: int = 10
    follow_prob: float = 0.9
    jitter: int = 2
    mean_gap: float = 480.0  # minutes between independent alerts of one region
    mean_duration: float = 60.0
    min_duration: int = 10
    start: datetime = DEFAULT_WINDOW_START

    def __post_init__(self) -> None:
        if not 2 <= self.n_regions <= len(REGION_NAMES):
            raise ValueError(f"n_regions must be in [2, {len(REGION_NAMES)}]")
        if self.days < 1:
            raise ValueError("days must be positive")
        names = REGION_NAMES[: self.n_regions]
        for role, name in (("lead", self.lead_region), ("lag", self.lag_region)):
            if name not in names:
                raise ValueError(f"{role} region {name!r} is not among the first {self.n_regions} synthetic regions")
        if self.lead_region == self.lag_region:
            raise ValueError("lead and lag regions must differ")
        if self.lag_minutes < 0 or self.jitter < 0 or self.jitter > self.lag_minutes:
            raise ValueError("need 0 <= jitter <= lag_minutes")
        if not 0.0 <= self.follow_prob <= 1.0:
            raise ValueError("follow_prob must be a probability")
        if self.min_duration < 1 or self.mean_duration < self.min_duration or self.mean_gap <= 0:
            raise ValueError("need 1 <= min_duration <= mean_duration and a positive mean_gap")

    @property
    def region_names(self) -> tuple[str, ...]:
        return REGION_NAMES[: self.n_regions]

    @property
    def n_minutes(self) -> int:
        return self.days * 1440


def _duration(rng: np.random.Generator, spec: SynthSpec) -> int:
    return spec.min_duration + int(rng.exponential(spec.mean_duration - spec.min_duration))


def _renewal(rng: np.random.Generator, spec: SynthSpec, mean_gap: float) -> list[tuple[int, int]]:
    spans = []
    t = int(rng.exponential(mean_gap))
    while t < spec.n_minutes:
        end = t + _duration(rng, spec)
        spans.append((t, min(end, spec.n_minutes)))
        t = end + 1 + int(rng.exponential(mean_gap))
    return spans


def generate_spans(seed: int, spec: SynthSpec) -> dict[str, list[tuple[int, int]]]:
    """Alert intervals per region in window minutes.

    The lag region gets a following alert ``lag_minutes`` (plus uniform jitter)
    after each lead alert with probability ``follow_prob``, and independent
    background alerts at ``1 - follow_prob`` times the usual rate.
    """
    rng = np.random.default_rng(seed)
    spans: dict[str, list[tuple[int, int]]] = {}
    for name in spec.region_names:
        if name != spec.lag_region:
            spans[name] = _renewal(rng, spec, spec.mean_gap)

    lag: list[tuple[int, int]] = []
    if spec.follow_prob < 1.0:
        lag += _renewal(rng, spec, spec.mean_gap / (1.0 - spec.follow_prob))
    for lead_start, _ in spans[spec.lead_region]:
        if rng.random() < spec.follow_prob:
            start = lead_start + spec.lag_minutes + int(rng.integers(-spec.jitter, spec.jitter + 1))
            duration = _duration(rng, spec)
            if start < spec.n_minutes:
                lag.append((start, min(start + duration, spec.n_minutes)))
    spans[spec.lag_region] = sorted(lag)
    return spans


def generate_synthetic(seed: int, spec: SynthSpec = SynthSpec()) -> list[RawEvent]:
    """Synthetic raw records sorted by (start, region), deterministic per seed."""
    spans = generate_spans(seed, spec)
    minute = timedelta(minutes=1)
    rows = sorted((s, name, e) for name, region_spans in spans.items() for s, e in region_spans)
    return [RawEvent(name, spec.start + s * minute, spec.start + e * minute) for s, name, e in rows]
