"""Tiered spike structure and empirical eigenvalue/eigenvector checks.

The first K population eigenvalues (the spikes) are partitioned into tiers
H_1..H_M sharing a growth scale delta_m(n); everything past K is bulk noise
at level c_lambda.  Whether PCA recovers a tier is governed by the ratio
d / (n * delta_m(n)):

* ratio -> 0 for every tier: spike sample eigenvalues track their population
  levels and spike eigenvectors are consistent with the tier subspaces;
* ratio -> 0 only up to tier h: tiers past h are swallowed by the bulk, and
  their eigenvectors become strongly inconsistent, with inner product against
  the truth of order sqrt(n * lambda / d).

For an outlier component the population level entering the tier scale is the
realized one, w * tau2 (the large branch participates with probability w),
not tau2 itself.  Limit statements are operationalized as finite-sample
checks with explicit thresholds; see ``classify_regime``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DataError
from .model import DirectionSpec, GeneratedDataset
from .reporting import CheckResult
from .schedules import Schedule
from .spectra import SpectralDecomposition, sample_covariance_spectrum

#: d/(n delta) at or below this counts as a vanishing ratio ("strong" tier).
STRONG_THRESHOLD = 0.05
#: d/(n delta) at or above this counts as a diverging ratio ("weak" tier).
WEAK_THRESHOLD = 20.0

#: Multiplier applied to rate expressions when checking O(.)/o(.) statements.
RATE_SLACK = 3.0


def population_eigenvalue(direction: DirectionSpec) -> float:
    """Exact population eigenvalue of one direction: (1-w) tau1 + w tau2."""
    return (1.0 - direction.w) * direction.tau1 + direction.w * direction.tau2


def asymptotic_eigenvalue(direction: DirectionSpec) -> float:
    """Leading-order proxy: tau1 for main components, w * tau2 for outliers."""
    return direction.tau1 if direction.w == 0 else direction.w * direction.tau2


def mp_bulk_bounds(c: float, c_lambda: float) -> "tuple[float, float]":
    """Bulk support edges c_lambda * (1 -+ sqrt(c))**2 for d/n -> c < inf."""
    if not 0 <= c < math.inf:
        raise ConfigurationError("c must be finite and nonnegative")
    root = math.sqrt(c)
    return c_lambda * (1 - root) ** 2, c_lambda * (1 + root) ** 2


@dataclass(eq=False)
class TierStructure:
    """Partition of the K spike indices into tiers with their growth scales.

    ``tiers`` lists consecutive 1-based index blocks covering 1..K;
    ``deltas`` gives each tier's scale as a function of n.  ``c`` is the
    limit of d/n (0, a finite positive value, or math.inf); ``c_lambda``
    the bulk noise level.  ``I_out`` indexes the outlier spikes.
    """

    K: int
    tiers: "list[list[int]]"
    deltas: "list[Schedule]"
    I_out: frozenset = frozenset()
    c_lambda: float = 1.0
    c: float = math.inf

    def __post_init__(self):
        self.tiers = [list(t) for t in self.tiers]
        self.I_out = frozenset(self.I_out)
        flat = [i for tier in self.tiers for i in tier]
        if flat != list(range(1, self.K + 1)):
            raise ConfigurationError("tiers must consecutively partition 1..K")
        if any(not tier for tier in self.tiers):
            raise ConfigurationError("empty tier")
        if len(self.deltas) != len(self.tiers):
            raise ConfigurationError("need one scale per tier")
        if not self.I_out <= set(range(1, self.K + 1)):
            raise ConfigurationError("I_out must index spikes in 1..K")
        if self.c_lambda <= 0:
            raise ConfigurationError("c_lambda must be positive")
        if self.c < 0:
            raise ConfigurationError("c must be nonnegative (possibly inf)")

    @property
    def M(self) -> int:
        return len(self.tiers)

    @property
    def q(self) -> "list[int]":
        return [len(t) for t in self.tiers]

    @property
    def p(self) -> "list[int]":
        """Partial sums p_0..p_M of tier sizes."""
        sums = [0]
        for tier in self.tiers:
            sums.append(sums[-1] + len(tier))
        return sums

    @property
    def I_main(self) -> frozenset:
        return frozenset(range(1, self.K + 1)) - self.I_out

    @property
    def all_singletons(self) -> bool:
        return all(len(t) == 1 for t in self.tiers)

    def tier_of(self, i: int) -> int:
        """1-based tier index of spike i."""
        for m, tier in enumerate(self.tiers, start=1):
            if i in tier:
                return m
        raise ConfigurationError(f"index {i} is not a spike index")

    def validate_rates(self, n: int) -> None:
        """Check the scale ordering delta_1 > ... > delta_M > c_lambda at n."""
        values = [delta(n) for delta in self.deltas]
        for a, b in zip(values, values[1:]):
            if not a > b:
                raise ConfigurationError(f"tier scales not decreasing at n={n}: {values}")
        if values and not values[-1] > self.c_lambda:
            raise ConfigurationError(
                f"smallest tier scale {values[-1]} does not dominate the bulk level "
                f"{self.c_lambda} at n={n}"
            )


def singleton_tiers(
    deltas: "list[Schedule]", I_out=(), c_lambda: float = 1.0, c: float = math.inf
) -> TierStructure:
    """Tier structure with one spike per tier (separable spike levels)."""
    k = len(deltas)
    return TierStructure(
        K=k,
        tiers=[[i] for i in range(1, k + 1)],
        deltas=list(deltas),
        I_out=frozenset(I_out),
        c_lambda=c_lambda,
        c=c,
    )


@dataclass(eq=False)
class RegimeReport:
    """Outcome of classifying the tier ratios at a concrete (n, d).

    kind is "all_strong", "partial" (with ``h`` = last strong tier, possibly
    0 when every tier is weak), or "degenerate" (some ratio falls between the
    thresholds; checks are skipped rather than failed).
    """

    n: int
    d: int
    ratios: "list[float]"
    kind: str
    h: "int | None" = None
    predicted_eigenvalues: "dict[int, float]" = field(default_factory=dict)
    angle_behavior: "dict[int, str]" = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return self.kind == "degenerate"

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "ratios": self.ratios,
            "kind": self.kind,
            "h": self.h,
            "predicted_eigenvalues": {str(k): v for k, v in self.predicted_eigenvalues.items()},
            "angle_behavior": {str(k): v for k, v in self.angle_behavior.items()},
        }


def classify_regime(
    tiers: TierStructure,
    n: int,
    d: int,
    strong_threshold: float = STRONG_THRESHOLD,
    weak_threshold: float = WEAK_THRESHOLD,
) -> RegimeReport:
    """Classify the tier ratios d / (n * delta_m(n)) at a concrete (n, d).

    All ratios at or below ``strong_threshold``: all tiers are strong.
    Otherwise, the largest h whose ratio is below the strong threshold while
    tier h+1 is above the weak threshold gives a partial regime (h = 0 when
    even the first tier is weak).  Anything else is degenerate: no limit
    statement plausibly applies at this (n, d), so checks are skipped.
    """
    tiers.validate_rates(n)
    ratios = [d / (n * delta(n)) for delta in tiers.deltas]
    m = tiers.M

    kind, h = "degenerate", None
    if ratios[m - 1] <= strong_threshold:
        kind = "all_strong"
    else:
        for cand in range(m - 1, -1, -1):
            ratio_ok = cand == 0 or ratios[cand - 1] <= strong_threshold
            if ratio_ok and ratios[cand] >= weak_threshold:
                kind, h = "partial", cand
                break

    report = RegimeReport(n=n, d=d, ratios=ratios, kind=kind, h=h)
    for m_idx, tier in enumerate(tiers.tiers, start=1):
        scale = tiers.deltas[m_idx - 1](n)
        strong = kind == "all_strong" or (kind == "partial" and m_idx <= (h or 0))
        for i in tier:
            report.predicted_eigenvalues[i] = scale
        if strong:
            report.angle_behavior[m_idx] = "consistent"
        elif kind == "partial":
            report.angle_behavior[m_idx] = "strongly_inconsistent"
        else:
            report.angle_behavior[m_idx] = "not_classified"
    return report


def angle_to_subspace(v: np.ndarray, basis_columns, U: "np.ndarray | None" = None) -> float:
    """Angle in degrees between a unit vector and span{U_i : i in the set}.

    ``basis_columns`` holds 1-based direction indices; with the standard
    basis (U None) the projection norm is just sqrt(sum of the selected
    squared entries).
    """
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-8:
        raise DataError(f"v must be a unit vector (norm {norm})")
    cols = [int(i) for i in basis_columns]
    if not cols:
        raise ConfigurationError("basis_columns must be nonempty")
    if any(i < 1 or i > len(v) for i in cols):
        raise ConfigurationError("basis column index out of range")
    if U is None:
        energy = float(np.sum(v[np.array(cols) - 1] ** 2))
    else:
        coords = U[:, np.array(cols) - 1].T @ v
        energy = float(coords @ coords)
    energy = min(max(energy, 0.0), 1.0)
    return math.degrees(math.acos(math.sqrt(energy)))


def subspace_energy(decomp: SpectralDecomposition, row: int, pc_indices) -> float:
    """Sum over the selected PCs (1-based) of the squared row-``row`` entries.

    In the standard basis this is the fraction of direction ``row`` explained
    by the selected sample eigenvectors.  PCs beyond the retained range
    contribute zero.
    """
    if not 1 <= row <= decomp.d:
        raise ConfigurationError(f"row {row} outside 1..{decomp.d}")
    pcs = sorted({int(i) for i in pc_indices})
    if not pcs:
        raise ConfigurationError("pc_indices must be nonempty")
    if pcs[0] < 1 or pcs[-1] > len(decomp.eigenvalues):
        raise ConfigurationError("pc index out of range")
    cols = [i - 1 for i in pcs if i <= decomp.n_retained]
    if not cols:
        return 0.0
    return float(np.sum(decomp.eigenvectors[row - 1, cols] ** 2))


def _model_frame_vectors(decomp: SpectralDecomposition, dataset: GeneratedDataset) -> np.ndarray:
    """Sample eigenvectors expressed in the generating direction basis.

    For a non-standard basis the rotation by U' is exact, so row k of the
    result is the coefficient of ground-truth direction k in each PC.
    """
    basis = dataset.spec.basis.resolve(dataset.spec.d)
    if basis is None:
        return decomp.eigenvectors
    return basis.T @ decomp.eigenvectors


def _spike_proxies(dataset: GeneratedDataset, K: int) -> np.ndarray:
    return np.array([asymptotic_eigenvalue(dataset.spec.directions[i]) for i in range(K)])


def eigenvalue_checks(
    dataset: GeneratedDataset,
    tiers: TierStructure,
    decomp: "SpectralDecomposition | None" = None,
    spike_rtol: float = 0.2,
    bulk_rtol: float = 0.15,
    bulk_slack: float = 0.15,
) -> "list[CheckResult]":
    """Per-index verdicts on sample eigenvalues against their predicted levels.

    Spike indices in strong tiers: the ratio to the population proxy must be
    within ``spike_rtol`` of 1.  Bulk indices: with finite c the extreme bulk
    eigenvalues must respect the support edges up to ``bulk_slack``; with
    infinite c (or in a partial regime) the median of n * lambda / d over the
    bulk must be within ``bulk_rtol`` of c_lambda.  A degenerate regime skips
    everything.
    """
    spec = dataset.spec
    if decomp is None:
        decomp = sample_covariance_spectrum(dataset.X)
    regime = classify_regime(tiers, dataset.n, spec.d)
    results: list[CheckResult] = []
    if regime.degenerate:
        return [
            CheckResult(
                name="eigenvalues",
                passed=True,
                skipped=True,
                note="degenerate regime: no limit statement applies",
            )
        ]

    proxies = _spike_proxies(dataset, tiers.K)
    strong_upto = tiers.K if regime.kind == "all_strong" else tiers.p[regime.h]
    for i in range(1, tiers.K + 1):
        if i > strong_upto:
            continue  # weak spikes are covered by the bulk statement below
        ratio = float(decomp.eigenvalues[i - 1] / proxies[i - 1])
        results.append(
            CheckResult(
                name=f"spike_ratio_{i}",
                observed=ratio,
                predicted=1.0,
                tolerance=spike_rtol,
                passed=abs(ratio - 1.0) <= spike_rtol,
            )
        )

    n, d = dataset.n, spec.d
    n_effective = min(n, d)
    bulk_lo_idx = strong_upto if regime.kind == "partial" else tiers.K
    bulk = decomp.eigenvalues[bulk_lo_idx:n_effective]
    if bulk.size:
        if regime.kind == "all_strong" and tiers.c < math.inf:
            lo, hi = mp_bulk_bounds(tiers.c, tiers.c_lambda)
            top, bottom = float(bulk[0]), float(bulk[-1])
            results.append(
                CheckResult(
                    name="bulk_upper_edge",
                    observed=top,
                    predicted=hi,
                    tolerance=bulk_slack,
                    passed=top <= hi * (1 + bulk_slack),
                )
            )
            results.append(
                CheckResult(
                    name="bulk_lower_edge",
                    observed=bottom,
                    predicted=lo,
                    tolerance=bulk_slack,
                    passed=bottom >= lo * (1 - bulk_slack) - 1e-12,
                )
            )
        else:
            scaled_median = float(np.median(bulk) * n / d)
            results.append(
                CheckResult(
                    name="bulk_scaled_median",
                    observed=scaled_median,
                    predicted=tiers.c_lambda,
                    tolerance=bulk_rtol,
                    passed=abs(scaled_median - tiers.c_lambda) <= bulk_rtol * tiers.c_lambda,
                )
            )
    return results


def _angle_rate(tiers: TierStructure, regime: RegimeReport, m: int, n: int, d: int) -> float:
    """Rate bound (in radians) for angles of strong-tier m eigenvectors."""
    values = [delta(n) for delta in tiers.deltas]
    last_strong = tiers.M if regime.kind == "all_strong" else regime.h
    prev = values[m - 2] if m >= 2 else math.inf
    gap_prev = values[m - 1] / prev if math.isfinite(prev) else 0.0
    if m < last_strong:
        gap_next = values[m] / values[m - 1]
        return math.sqrt(max(gap_prev, gap_next))
    return max(math.sqrt(gap_prev), math.sqrt(d / (n * values[m - 1])))


def eigenvector_checks(
    dataset: GeneratedDataset,
    tiers: TierStructure,
    decomp: "SpectralDecomposition | None" = None,
    rate_slack: float = RATE_SLACK,
) -> "list[CheckResult]":
    """Per-tier verdicts on sample eigenvectors.

    Strong tiers: the angle (radians) between each tier eigenvector and the
    tier subspace must not exceed ``rate_slack`` times the tier's rate bound;
    singleton tiers are checked against their individual direction.  Weak
    spikes in a partial regime: |<PC_i, U_i>| <= rate_slack * sqrt(n lambda / d).
    Degenerate regimes skip; c = 0 is not covered by the angle limits and
    reports a skip as well.
    """
    spec = dataset.spec
    if decomp is None:
        decomp = sample_covariance_spectrum(dataset.X)
    regime = classify_regime(tiers, dataset.n, spec.d)
    if regime.degenerate:
        return [
            CheckResult(
                name="eigenvectors",
                passed=True,
                skipped=True,
                note="degenerate regime: no limit statement applies",
            )
        ]
    if tiers.c == 0:
        return [
            CheckResult(
                name="eigenvectors",
                passed=True,
                skipped=True,
                note="c = 0 is not covered by the angle limits",
            )
        ]

    n, d = dataset.n, spec.d
    vectors = _model_frame_vectors(decomp, dataset)
    proxies = _spike_proxies(dataset, tiers.K)
    last_strong = tiers.M if regime.kind == "all_strong" else regime.h
    results: list[CheckResult] = []

    for m in range(1, last_strong + 1):
        tier = tiers.tiers[m - 1]
        bound = min(rate_slack * _angle_rate(tiers, regime, m, n, d), math.pi / 2)
        rows = np.array(tier) - 1
        for i in tier:
            if i > decomp.n_retained:
                results.append(
                    CheckResult(
                        name=f"angle_tier{m}_pc{i}",
                        passed=False,
                        note="eigenvector not retained",
                    )
                )
                continue
            target_rows = rows if len(tier) > 1 else np.array([i - 1])
            energy = float(np.sum(vectors[target_rows, i - 1] ** 2))
            angle = math.acos(math.sqrt(min(max(energy, 0.0), 1.0)))
            results.append(
                CheckResult(
                    name=f"angle_tier{m}_pc{i}",
                    observed=math.degrees(angle),
                    predicted=0.0,
                    tolerance=math.degrees(bound),
                    passed=angle <= bound,
                    note="individual direction" if len(tier) == 1 else "tier subspace",
                )
            )

    if regime.kind == "partial":
        for i in range(tiers.p[regime.h] + 1, tiers.K + 1):
            bound = rate_slack * math.sqrt(n * proxies[i - 1] / d)
            if i > decomp.n_retained:
                continue
            inner = abs(float(vectors[i - 1, i - 1]))
            results.append(
                CheckResult(
                    name=f"strong_inconsistency_pc{i}",
                    observed=inner,
                    predicted=0.0,
                    tolerance=bound,
                    passed=inner <= bound,
                )
            )
    return results


def outlier_score(
    decomp: SpectralDecomposition,
    X: np.ndarray,
    pc_indices,
    weight_rows=None,
) -> np.ndarray:
    """Per-sample squared projection norm onto the selected PCs.

    With ``weight_rows`` (1-based direction indices), each PC's contribution
    is weighted by its energy on those rows, emphasizing components aligned
    with known outlier directions.  Diagnostic only.
    """
    pcs = sorted({int(i) for i in pc_indices})
    if not pcs:
        raise ConfigurationError("pc_indices must be nonempty")
    if pcs[0] < 1 or pcs[-1] > len(decomp.eigenvalues):
        raise ConfigurationError("pc index out of range")
    cols = [i - 1 for i in pcs if i <= decomp.n_retained]
    if not cols:
        return np.zeros(X.shape[1])
    basis = decomp.eigenvectors[:, cols]
    proj = basis.T @ X
    if weight_rows is None:
        weights = np.ones(len(cols))
    else:
        rows = np.array(sorted({int(r) for r in weight_rows})) - 1
        weights = np.sum(basis[rows, :] ** 2, axis=0)
    return weights @ (proj**2)
