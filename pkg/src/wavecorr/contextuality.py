"""Noncontextuality inequalities, their bounds, and compatibility audits.

Three inequality families are built in: the four-correlator CHSH
expression, the four-correlator Mermin expression on triple products, and
the Peres-Mermin square whose six row and column products witness
state-independent contextuality.  Each evaluates to a report carrying the
measured value next to four reference numbers: the noncontextual bound,
the same bound corrected for a measured deviation rate, the quantum
maximum, and the algebraic maximum.

The deviation rate comes from a compatibility audit: sequences that probe
whether marginals are context independent, whether joint correlators are
order independent, whether repeated measurements repeat, and whether
interleaved compatible measurements disturb each other.  The audit is pure
bookkeeping over outcome distributions supplied by a provider callable, so
the same code audits exact projector chains, circuit propagation, or
event-sampled counts.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from wavecorr.outcomes import OutcomeDistribution, outcome_signs
from wavecorr.wavecore import (
    WaveState,
    check_pairwise_compatible,
    pauli_observable,
    sequential_distribution,
    state_library,
)

_VALUE_TOL = 1e-12


# ------------------------------------------------------------- correlators


@dataclass(frozen=True)
class Correlator:
    """Mean product of the outcomes of one measurement sequence."""

    labels: tuple[str, ...]
    value: float
    stderr: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.stderr < 0.0:
            raise ValueError(f"stderr must be nonnegative, got {self.stderr}")
        if abs(self.value) > 1.0 + 3.0 * self.stderr + _VALUE_TOL:
            raise ValueError(
                f"correlator {self.value} lies outside [-1, 1] beyond 3 sigma"
            )


def correlator(dist: OutcomeDistribution, labels: Sequence[str] = ()) -> Correlator:
    """Average of the product of the +/-1 outcomes under ``dist``.

    When the distribution is empirical the standard error of a mean of
    +/-1 products is sqrt((1 - v^2)/N); exact distributions carry zero.
    """
    labels = tuple(labels)
    if labels and len(labels) != dist.outcome_length:
        raise ValueError(
            f"{len(labels)} labels for outcome strings of length {dist.outcome_length}"
        )
    value = 0.0
    for key, p in dist.probs.items():
        value += math.prod(outcome_signs(key)) * p
    stderr = 0.0
    if dist.sample_count is not None:
        stderr = math.sqrt(max(0.0, 1.0 - value * value) / dist.sample_count)
    return Correlator(labels=labels, value=float(value), stderr=stderr)


# ------------------------------------------------------------ inequalities


@dataclass(frozen=True)
class InequalityDefinition:
    """A signed sum of sequence correlators with its reference bounds."""

    name: str
    terms: tuple[tuple[tuple[str, ...], float], ...]
    nc_bound: float
    quantum_max: float
    algebraic_max: float

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("an inequality needs at least one term")
        for labels, sign in self.terms:
            if not labels:
                raise ValueError("empty measurement sequence in term")
            if sign == 0.0 or not math.isfinite(sign):
                raise ValueError(f"term sign must be finite and nonzero, got {sign}")
        if not self.nc_bound <= self.algebraic_max:
            raise ValueError("noncontextual bound exceeds the algebraic maximum")
        if not self.nc_bound <= self.quantum_max <= self.algebraic_max:
            raise ValueError("quantum maximum must lie between the bounds")

    @property
    def sequences(self) -> tuple[tuple[str, ...], ...]:
        return tuple(labels for labels, _ in self.terms)

    @property
    def observable_labels(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for labels, _ in self.terms:
            for lab in labels:
                seen.setdefault(lab)
        return tuple(seen)


_SQRT8 = 2.0 * math.sqrt(2.0)

# factor observables: Z on the first mode pair, Z on the second, X on the
# second, X on the first; the four correlators pair them crosswise
CHSH = InequalityDefinition(
    name="CHSH",
    terms=(
        (("ZI", "IZ"), 1.0),
        (("XI", "IZ"), 1.0),
        (("ZI", "IX"), 1.0),
        (("XI", "IX"), -1.0),
    ),
    nc_bound=2.0,
    quantum_max=_SQRT8,
    algebraic_max=4.0,
)

MERMIN = InequalityDefinition(
    name="Mermin",
    terms=(
        (("ZII", "IZI", "IIX"), 1.0),
        (("XII", "IZI", "IIZ"), 1.0),
        (("ZII", "IXI", "IIZ"), 1.0),
        (("XII", "IXI", "IIX"), -1.0),
    ),
    nc_bound=2.0,
    quantum_max=4.0,
    algebraic_max=4.0,
)

# the nine two-mode-pair observables arranged as rows then columns of the
# 3x3 grid; every triple multiplies to +identity except the last, which
# multiplies to -identity, so the ideal value is 6 for every input state
PERES_MERMIN = InequalityDefinition(
    name="PeresMermin",
    terms=(
        (("ZI", "IZ", "ZZ"), 1.0),
        (("IX", "XI", "XX"), 1.0),
        (("ZX", "XZ", "YY"), 1.0),
        (("ZI", "IX", "ZX"), 1.0),
        (("IZ", "XI", "XZ"), 1.0),
        (("ZZ", "XX", "YY"), -1.0),
    ),
    nc_bound=4.0,
    quantum_max=6.0,
    algebraic_max=6.0,
)

INEQUALITIES: Mapping[str, InequalityDefinition] = {
    d.name: d for d in (CHSH, MERMIN, PERES_MERMIN)
}


@dataclass(frozen=True)
class InequalityReport:
    """Evaluated inequality with every bound it is judged against."""

    name: str
    value: float
    stderr: float
    nc_bound: float
    corrected_bound: float
    quantum_max: float
    algebraic_max: float
    deviation_rate: float
    terms: tuple[Correlator, ...] = ()
    term_signs: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.stderr < 0.0:
            raise ValueError("stderr must be nonnegative")
        if not 0.0 <= self.deviation_rate <= 1.0:
            raise ValueError(f"deviation rate {self.deviation_rate} outside [0, 1]")
        if not (
            self.nc_bound - _VALUE_TOL
            <= self.corrected_bound
            <= self.algebraic_max + _VALUE_TOL
        ):
            raise ValueError("corrected bound escaped [nc_bound, algebraic_max]")
        if not (
            self.nc_bound - _VALUE_TOL
            <= self.quantum_max
            <= self.algebraic_max + _VALUE_TOL
        ):
            raise ValueError("quantum maximum escaped [nc_bound, algebraic_max]")
        if len(self.terms) != len(self.term_signs):
            raise ValueError("terms and term_signs disagree in length")

    def violates(self, bound: float, sigmas: float = 0.0) -> bool:
        """Whether the value exceeds ``bound`` by ``sigmas`` standard errors."""
        return self.value - sigmas * self.stderr > bound

    @property
    def verdict(self) -> str:
        parts = []
        word = "violates" if self.violates(self.nc_bound) else "respects"
        parts.append(f"{word} NC bound {self.nc_bound:g}")
        if self.deviation_rate > 0.0:
            word = "violates" if self.violates(self.corrected_bound) else "respects"
            parts.append(f"{word} corrected bound {self.corrected_bound:g}")
        if abs(self.value - self.quantum_max) <= max(1e-6, 3.0 * self.stderr):
            parts.append("saturates quantum max")
        return ", ".join(parts)


def corrected_bound(nc_bound: float, algebraic_max: float, deviation_rate: float) -> float:
    """Noncontextual bound inflated linearly toward the algebraic maximum.

    A deviation rate xi mixes the two bounds as (1-xi)*nc + xi*algebraic.
    The arithmetic runs in exact rationals built from the decimal form of
    each input, so bounds computed from hand-entered rates print exactly
    (0.14 on the 2..4 range gives 2.28, not 2.2800000000000002).
    """
    if not 0.0 <= deviation_rate <= 1.0:
        raise ValueError(f"deviation rate {deviation_rate} outside [0, 1]")
    if algebraic_max < nc_bound:
        raise ValueError(
            f"algebraic maximum {algebraic_max} below noncontextual bound {nc_bound}"
        )
    nc = Fraction(str(float(nc_bound)))
    alg = Fraction(str(float(algebraic_max)))
    xi = Fraction(str(float(deviation_rate)))
    return float(nc + xi * (alg - nc))


def evaluate_inequality(
    defn: InequalityDefinition,
    correlators: Iterable[Correlator],
    deviation_rate: float = 0.0,
) -> InequalityReport:
    """Assemble a report from correlators labeled by their sequences."""
    by_labels: dict[tuple[str, ...], Correlator] = {}
    for cor in correlators:
        by_labels[cor.labels] = cor
    picked: list[Correlator] = []
    signs: list[float] = []
    value = 0.0
    variance = 0.0
    for labels, sign in defn.terms:
        cor = by_labels.get(tuple(labels))
        if cor is None:
            raise ValueError(
                f"missing correlator for sequence {'*'.join(labels)} of {defn.name}"
            )
        picked.append(cor)
        signs.append(sign)
        value += sign * cor.value
        variance += (sign * cor.stderr) ** 2
    return InequalityReport(
        name=defn.name,
        value=value,
        stderr=math.sqrt(variance),
        nc_bound=defn.nc_bound,
        corrected_bound=corrected_bound(defn.nc_bound, defn.algebraic_max, deviation_rate),
        quantum_max=defn.quantum_max,
        algebraic_max=defn.algebraic_max,
        deviation_rate=deviation_rate,
        terms=tuple(picked),
        term_signs=tuple(signs),
    )


def chsh_E(correlators: Iterable[Correlator], deviation_rate: float = 0.0) -> InequalityReport:
    """CHSH expression: sum of the first three correlators minus the last."""
    return evaluate_inequality(CHSH, correlators, deviation_rate)


def mermin_M(correlators: Iterable[Correlator], deviation_rate: float = 0.0) -> InequalityReport:
    """Mermin expression over the four triple-product correlators."""
    return evaluate_inequality(MERMIN, correlators, deviation_rate)


def pm_chi(correlators: Iterable[Correlator], deviation_rate: float = 0.0) -> InequalityReport:
    """Peres-Mermin square: rows plus columns with the last column negated."""
    return evaluate_inequality(PERES_MERMIN, correlators, deviation_rate)


def classical_bound_oracle(inequality: InequalityDefinition | str) -> float:
    """Exact noncontextual maximum by brute-force +/-1 assignment.

    Every observable label gets a fixed outcome independent of which
    sequence it appears in; the maximum of the signed sum over all such
    assignments is the noncontextual bound.
    """
    defn = INEQUALITIES[inequality] if isinstance(inequality, str) else inequality
    labels = defn.observable_labels
    best = -math.inf
    for choice in itertools.product((1.0, -1.0), repeat=len(labels)):
        assigned = dict(zip(labels, choice))
        total = 0.0
        for seq, sign in defn.terms:
            total += sign * math.prod(assigned[lab] for lab in seq)
        best = max(best, total)
    return best


# ------------------------------------------------------ distribution source

# A provider maps (state name, measurement labels) to one distribution, or
# to a list of them when each seed of a noise ensemble produced its own.
Provider = Callable[[str, tuple[str, ...]], "OutcomeDistribution | Sequence[OutcomeDistribution]"]


def ideal_provider(resolve: Callable[[str], WaveState] = state_library) -> Provider:
    """Distributions from the projector oracle, no circuit in the loop."""

    def provide(state_name: str, labels: tuple[str, ...]) -> OutcomeDistribution:
        state = resolve(state_name)
        return sequential_distribution(state, [pauli_observable(lab) for lab in labels])

    return provide


def measure_inequality(
    defn: InequalityDefinition,
    provider: Provider,
    state_name: str,
    deviation_rate: float = 0.0,
) -> InequalityReport:
    """Evaluate every term of ``defn`` on one state through a provider."""
    cors = []
    for labels in defn.sequences:
        dist = provider(state_name, tuple(labels))
        if not isinstance(dist, OutcomeDistribution):
            raise TypeError(
                "measure_inequality needs a single-distribution provider; "
                "got an ensemble, evaluate per member instead"
            )
        cors.append(correlator(dist, labels))
    return evaluate_inequality(defn, cors, deviation_rate)


# ------------------------------------------------------ compatibility suite


@dataclass(frozen=True)
class SequenceGroups:
    """Audit plan: orderings to compare, chains to repeat, probes to interleave."""

    permutation_groups: tuple[tuple[tuple[str, ...], ...], ...]
    repeat_sequences: tuple[tuple[str, ...], ...]
    disturbance_sequences: tuple[tuple[str, ...], ...]

    def all_sequences(self) -> list[tuple[str, ...]]:
        out: list[tuple[str, ...]] = []
        for group in self.permutation_groups:
            out.extend(tuple(seq) for seq in group)
        out.extend(tuple(seq) for seq in self.repeat_sequences)
        out.extend(tuple(seq) for seq in self.disturbance_sequences)
        return out


_GRID_LABELS = ("ZI", "IZ", "ZZ", "IX", "XI", "XX", "ZX", "XZ", "YY")


def pm_suite_groups() -> SequenceGroups:
    """The nineteen audit sequences for the nine grid observables."""
    return SequenceGroups(
        permutation_groups=(tuple(itertools.permutations(("ZX", "XZ", "YY"))),),
        repeat_sequences=tuple((lab, lab, lab) for lab in _GRID_LABELS),
        disturbance_sequences=tuple(("ZX", lab, "ZX") for lab in ("ZI", "IX", "XZ", "YY")),
    )


def mermin_suite_groups() -> SequenceGroups:
    """The twelve audit sequences for the triple-product observables."""
    return SequenceGroups(
        permutation_groups=(tuple(itertools.permutations(("ZII", "IZI", "IIX"))),),
        repeat_sequences=(("ZII",) * 3, ("XII",) * 3),
        disturbance_sequences=tuple(
            ("ZII", lab, "ZII") for lab in ("IZI", "IIZ", "IXI", "IIX")
        ),
    )


# the eleven two-mode benchmark preparations, and the four three-mode ones
PM_SUITE_STATES: tuple[str, ...] = tuple(f"psi{i}" for i in range(1, 12))
MERMIN_SUITE_STATES: tuple[str, ...] = ("ghz", "000", "111", "singlet3")


@dataclass(frozen=True)
class DeviationRecord:
    """One audited quantity: its category, where it was measured, its size."""

    category: str
    state: str
    label: str
    value: float


@dataclass(frozen=True)
class CompatibilityReport:
    """Worst observed deviation per audit category, all in [0, 1]."""

    context_independence: float
    order_independence: float
    repeatability: float
    nondisturbance: float
    worst_case: float
    worst_description: str = ""
    records: tuple[DeviationRecord, ...] = ()

    def __post_init__(self) -> None:
        for name in (
            "context_independence",
            "order_independence",
            "repeatability",
            "nondisturbance",
            "worst_case",
        ):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} deviation {val} outside [0, 1]")
        peak = max(
            self.context_independence,
            self.order_independence,
            self.repeatability,
            self.nondisturbance,
        )
        if abs(self.worst_case - peak) > _VALUE_TOL:
            raise ValueError("worst_case is not the maximum of the category deviations")


def _clamped(x: float) -> float:
    return min(1.0, max(0.0, float(x)))


def _ensemble(result) -> list[OutcomeDistribution]:
    if isinstance(result, OutcomeDistribution):
        return [result]
    members = list(result)
    if not members or not all(isinstance(m, OutcomeDistribution) for m in members):
        raise TypeError("provider must return an OutcomeDistribution or a list of them")
    return members


def compatibility_suite(
    states: Sequence[str],
    groups: SequenceGroups,
    provider: Provider,
) -> CompatibilityReport:
    """Audit compatibility assumptions over states and sequence groups.

    Four deviations are tracked.  Order independence: within each
    permutation group, half the spread of the joint correlator across
    orderings.  Repeatability and nondisturbance: for three-link chains,
    the probability that the first and third results differ.  Context
    independence: the spread of each observable's single-outcome marginal
    across every sequence and slot where it appears.  Ensemble providers
    are averaged per audited quantity, member by member, so a noisy
    circuit's deviation is the mean over its seeds.  The worst case over
    everything is the suite's deviation rate.
    """
    if not states:
        raise ValueError("no states to audit")
    sequences = groups.all_sequences()
    if not sequences:
        raise ValueError("no sequences to audit")
    for seq in groups.repeat_sequences:
        if len(seq) != 3 or len(set(seq)) != 1:
            raise ValueError(f"repeat sequences must look like (O, O, O), got {seq}")
    for seq in groups.disturbance_sequences:
        if len(seq) != 3 or seq[0] != seq[2]:
            raise ValueError(f"disturbance sequences must look like (O, P, O), got {seq}")
    for seq in dict.fromkeys(sequences):
        check_pairwise_compatible([pauli_observable(lab) for lab in seq])

    records: list[DeviationRecord] = []
    length = None  # ensemble size, fixed across the whole audit

    def fetch(state: str, seq: tuple[str, ...]) -> list[OutcomeDistribution]:
        nonlocal length
        members = _ensemble(provider(state, tuple(seq)))
        if length is None:
            length = len(members)
        elif len(members) != length:
            raise ValueError(
                f"provider returned {len(members)} members for {seq}, expected {length}"
            )
        return members

    for state in states:
        # marginal of each observable in every context it appears in,
        # collected as one row of per-member values per (label, slot, seq)
        contexts: dict[str, list[np.ndarray]] = {}

        def note_marginals(seq: tuple[str, ...], members: list[OutcomeDistribution]) -> None:
            for pos, lab in enumerate(seq):
                row = np.array([m.marginal(pos)["+"] for m in members])
                contexts.setdefault(lab, []).append(row)

        for group in groups.permutation_groups:
            per_member = []
            for seq in group:
                members = fetch(state, tuple(seq))
                note_marginals(tuple(seq), members)
                per_member.append([correlator(m, seq).value for m in members])
            spread = (np.max(per_member, axis=0) - np.min(per_member, axis=0)) / 2.0
            records.append(
                DeviationRecord(
                    category="order-independence",
                    state=state,
                    label=f"orderings of {'*'.join(sorted(group[0]))}",
                    value=_clamped(float(np.mean(spread))),
                )
            )
        for category, seqs in (
            ("repeatability", groups.repeat_sequences),
            ("nondisturbance", groups.disturbance_sequences),
        ):
            for seq in seqs:
                members = fetch(state, tuple(seq))
                note_marginals(tuple(seq), members)
                mass = [m.mass_where(lambda s: s[0] != s[2]) for m in members]
                records.append(
                    DeviationRecord(
                        category=category,
                        state=state,
                        label="*".join(seq),
                        value=_clamped(float(np.mean(mass))),
                    )
                )
        for lab, rows in contexts.items():
            if len(rows) < 2:
                continue
            stacked = np.vstack(rows)
            spread = np.max(stacked, axis=0) - np.min(stacked, axis=0)
            records.append(
                DeviationRecord(
                    category="context-independence",
                    state=state,
                    label=f"marginal of {lab}",
                    value=_clamped(float(np.mean(spread))),
                )
            )

    def peak(category: str) -> float:
        vals = [r.value for r in records if r.category == category]
        return max(vals) if vals else 0.0

    worst = max(records, key=lambda r: r.value)
    return CompatibilityReport(
        context_independence=peak("context-independence"),
        order_independence=peak("order-independence"),
        repeatability=peak("repeatability"),
        nondisturbance=peak("nondisturbance"),
        worst_case=worst.value,
        worst_description=f"{worst.category}: state {worst.state}, {worst.label}",
        records=tuple(records),
    )


# ------------------------------------------------------------ serialization


def format_inequality_report(report: InequalityReport) -> str:
    """Human-readable table for one evaluated inequality."""
    lines = [f"{report.name}: value = {report.value:+.6f} +/- {report.stderr:.6f}"]
    if report.terms:
        width = max(len("*".join(c.labels)) for c in report.terms)
        for cor, sign in zip(report.terms, report.term_signs):
            mark = "+" if sign > 0 else "-"
            lines.append(
                f"  {mark} {'*'.join(cor.labels):<{width}}  "
                f"{cor.value:+.6f} +/- {cor.stderr:.6f}"
            )
    lines.append(
        "  bounds: noncontextual {:g}, corrected {:g} (deviation rate {:g}), "
        "quantum {:g}, algebraic {:g}".format(
            report.nc_bound,
            report.corrected_bound,
            report.deviation_rate,
            report.quantum_max,
            report.algebraic_max,
        )
    )
    lines.append(f"  verdict: {report.verdict}")
    return "\n".join(lines) + "\n"


def inequality_report_json(report: InequalityReport) -> str:
    """Machine-readable record with the report fields verbatim."""
    payload = {
        "name": report.name,
        "value": report.value,
        "stderr": report.stderr,
        "nc_bound": report.nc_bound,
        "corrected_bound": report.corrected_bound,
        "quantum_max": report.quantum_max,
        "algebraic_max": report.algebraic_max,
        "deviation_rate": report.deviation_rate,
        "terms": [
            {"labels": list(c.labels), "value": c.value, "stderr": c.stderr, "sign": s}
            for c, s in zip(report.terms, report.term_signs)
        ],
        "verdict": report.verdict,
    }
    return json.dumps(payload, sort_keys=True)


def format_compatibility_report(report: CompatibilityReport) -> str:
    """Human-readable summary of a compatibility audit."""
    lines = [
        "compatibility audit:",
        f"  context independence : {report.context_independence:.6f}",
        f"  order independence   : {report.order_independence:.6f}",
        f"  repeatability        : {report.repeatability:.6f}",
        f"  nondisturbance       : {report.nondisturbance:.6f}",
        f"  worst case           : {report.worst_case:.6f} ({report.worst_description})",
    ]
    return "\n".join(lines) + "\n"


def compatibility_report_json(report: CompatibilityReport) -> str:
    payload = {
        "context_independence": report.context_independence,
        "order_independence": report.order_independence,
        "repeatability": report.repeatability,
        "nondisturbance": report.nondisturbance,
        "worst_case": report.worst_case,
        "worst_description": report.worst_description,
        "records": [
            {
                "category": r.category,
                "state": r.state,
                "label": r.label,
                "value": r.value,
            }
            for r in report.records
        ],
    }
    return json.dumps(payload, sort_keys=True)
