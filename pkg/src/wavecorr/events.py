"""Discrete detection events from continuous port intensities.

Two classical detection schemes turn per-port intensities into a stream of
single-port events.  The threshold detector integrates each port's intensity
until a randomly drawn energy threshold is crossed, then resets and draws a
fresh threshold; the loaded die simply samples outcomes from the normalized
intensity distribution.  Both estimate the same limiting distribution and
differ only in finite-sample statistics, which is the point: correlation
experiments built on either produce the same correlators up to 1/sqrt(N)
noise.

Events are functions of intensities alone.  Nothing in this module sees an
amplitude or a phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from wavecorr.outcomes import OutcomeDistribution, empirical
from wavecorr.splitmix import counter_uniform, substream

THRESHOLD_DETECTOR = "threshold_detector"
LOADED_DIE = "loaded_die"
EVENT_MODELS = (THRESHOLD_DETECTOR, LOADED_DIE)

# Initial per-port click budget: expected share plus a wide margin.  The
# stream extends itself if a port runs dry before the global cutoff, and the
# counter-based draws make the result identical no matter how the budget is
# chunked, so these two knobs affect speed only.
_CHUNK_SIGMAS = 10.0
_CHUNK_FLOOR = 16


@dataclass(frozen=True)
class EventModelConfig:
    """Parameters of one detection run.

    ``threshold`` and ``threshold_spread`` matter only to the threshold
    detector: each click consumes an energy drawn uniformly from
    [threshold - threshold_spread, threshold + threshold_spread], redrawn
    after every click.  The spread must stay below the threshold so drawn
    energies remain positive.  A zero spread is a degenerate configuration
    in which equal-rate ports click simultaneously; simultaneous clicks are
    recorded in ascending port order.
    """

    model: str = LOADED_DIE
    threshold: float = 1.0
    threshold_spread: float = 0.25
    sample_count: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.model not in EVENT_MODELS:
            raise ValueError(f"unknown event model {self.model!r}; expected one of {EVENT_MODELS}")
        if self.sample_count < 1:
            raise ValueError(f"sample_count must be at least 1, got {self.sample_count}")
        if not self.threshold > 0.0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if self.threshold_spread < 0.0:
            raise ValueError(f"threshold_spread must be nonnegative, got {self.threshold_spread}")
        if self.model == THRESHOLD_DETECTOR and self.threshold_spread >= self.threshold:
            raise ValueError(
                f"threshold_spread {self.threshold_spread} must stay below threshold {self.threshold}"
            )


@dataclass(frozen=True)
class EventCounts:
    """Per-outcome click tallies from one or more detection runs."""

    counts: Mapping[str, int]
    total: int

    def __post_init__(self) -> None:
        if not self.counts:
            raise ValueError("no outcomes tallied")
        running = 0
        for key, c in self.counts.items():
            if not isinstance(c, (int, np.integer)) or isinstance(c, bool):
                raise ValueError(f"count for {key!r} must be an integer, got {c!r}")
            if c < 0:
                raise ValueError(f"negative count {c} for outcome {key!r}")
            running += int(c)
        if running != self.total:
            raise ValueError(f"counts sum to {running}, not the declared total {self.total}")
        if self.total < 1:
            raise ValueError("at least one event is required")

    def frequency(self, outcome: str) -> float:
        return self.counts.get(outcome, 0) / self.total


def merge_event_counts(*parts: EventCounts) -> EventCounts:
    """Combine tallies from disjoint runs.  Associative and commutative."""
    if not parts:
        raise ValueError("nothing to merge")
    combined: dict[str, int] = {}
    for part in parts:
        for key, c in part.counts.items():
            combined[key] = combined.get(key, 0) + int(c)
    return EventCounts(counts=combined, total=sum(p.total for p in parts))


def loaded_die_sample(dist: OutcomeDistribution, config: EventModelConfig) -> EventCounts:
    """Tallies of ``sample_count`` independent draws from ``dist``.

    The joint tally of N categorical draws is multinomial, so it is sampled
    in one shot rather than draw by draw.
    """
    keys = list(dist.probs)
    p = np.clip(np.array([dist.probs[k] for k in keys], dtype=float), 0.0, None)
    p /= p.sum()
    rng = np.random.default_rng(config.seed)
    tally = rng.multinomial(config.sample_count, p)
    return EventCounts(
        counts={k: int(c) for k, c in zip(keys, tally)},
        total=config.sample_count,
    )


def threshold_event_stream(
    intensities: Mapping[str, float], config: EventModelConfig
) -> EventCounts:
    """First ``sample_count`` clicks of per-port threshold detectors.

    Port j accumulates energy at rate I_j and clicks when the running total
    crosses its current threshold; the accumulator then resets and a new
    threshold is drawn.  Each port is therefore a renewal process with click
    times cumsum(thresholds)/I_j, and the recorded stream is the time-ordered
    merge of all ports, truncated after ``sample_count`` clicks.  Simultaneous
    clicks (possible only with zero spread) are recorded in ascending port
    order.  Long-run click fractions approach I_j / sum(I).
    """
    ports = list(intensities)
    if not ports:
        raise ValueError("no ports given")
    rates = np.array([float(intensities[k]) for k in ports])
    if not np.all(np.isfinite(rates)) or np.any(rates < 0.0):
        raise ValueError("port intensities must be finite and nonnegative")
    if not np.any(rates > 0.0):
        raise ValueError("every port intensity vanishes; no detector can fire")
    if config.threshold_spread >= config.threshold:
        raise ValueError(
            f"threshold_spread {config.threshold_spread} must stay below"
            f" threshold {config.threshold}"
        )

    n = config.sample_count
    lo = config.threshold - config.threshold_spread
    span = 2.0 * config.threshold_spread
    # only relative rates matter for the merge order, and normalizing by the
    # brightest port keeps the click-time arithmetic in a sane float range
    rates = rates / rates.max()
    live = np.flatnonzero(rates > 0.0)
    frac = rates[live] / rates[live].sum()

    def draws(k: int, start: int, count: int) -> np.ndarray:
        stream = substream(config.seed, int(live[k]))
        u = counter_uniform(stream, np.arange(start, start + count, dtype=np.uint64))
        return lo + span * u

    budget = np.minimum(
        n, np.ceil(n * frac + _CHUNK_SIGMAS * np.sqrt(n * frac + 1.0) + _CHUNK_FLOOR)
    ).astype(np.int64)
    drawn = [draws(k, 0, int(budget[k])) for k in range(live.size)]
    # a port dimmer than the brightest by ~1e300 overflows to inf click
    # times, meaning it never fires in any finite window: the right limit
    with np.errstate(over="ignore"):
        times = [np.cumsum(d) / rates[live[k]] for k, d in enumerate(drawn)]

        while True:
            merged_t = np.concatenate(times)
            merged_port = np.concatenate(
                [np.full(t.size, live[k], dtype=np.int64) for k, t in enumerate(times)]
            )
            # stable merge: time first, ties by port index
            order = np.lexsort((merged_port, merged_t))[:n]
            cutoff = float(merged_t[order[-1]])
            # a port whose generated stream ends before the cutoff might
            # still owe clicks inside the window, so extend it and remerge
            short = [
                k
                for k in range(live.size)
                if times[k].size < n and float(times[k][-1]) < cutoff
            ]
            if not short:
                break
            for k in short:
                have = drawn[k].size
                grow = int(min(n - have, max(have, _CHUNK_FLOOR)))
                drawn[k] = np.concatenate([drawn[k], draws(k, have, grow)])
                times[k] = np.cumsum(drawn[k]) / rates[live[k]]

    fired = np.bincount(merged_port[order], minlength=len(ports))
    return EventCounts(
        counts={ports[i]: int(fired[i]) for i in range(len(ports))}, total=n
    )


def sample_events(dist: OutcomeDistribution, config: EventModelConfig) -> EventCounts:
    """Run whichever detection model the config names on a distribution.

    The threshold detector consumes raw port intensities when the
    distribution carries them, otherwise the normalized probabilities (the
    two differ only by an irrelevant time scale).
    """
    if config.model == THRESHOLD_DETECTOR:
        weights = dist.intensities if dist.intensities is not None else dist.probs
        return threshold_event_stream(dict(weights), config)
    return loaded_die_sample(dist, config)


def empirical_distribution(counts: EventCounts) -> OutcomeDistribution:
    """Click frequencies with per-outcome binomial standard errors."""
    return empirical(dict(counts.counts))


def event_counts_csv(counts: EventCounts) -> str:
    """CSV export with header outcome_string,count,frequency,stderr."""
    dist = empirical_distribution(counts)
    fmt = "{:.17g}".format
    lines = ["outcome_string,count,frequency,stderr"]
    for key, c in counts.counts.items():
        lines.append(f"{key},{int(c)},{fmt(dist.prob(key))},{fmt(dist.stderr(key))}")
    return "\n".join(lines) + "\n"
