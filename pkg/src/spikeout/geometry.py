"""Scaled-norm and pairwise-distance diagnostics with their large-d limits.

For a sample X_j in R^d the tracked statistics are ||X_j||^2 / d and, per
pair, ||X_j - X_l||^2 / d.  With unit noise variance sigma^2 these settle on
constants as d grows, and an outlier's deviation from them is governed by the
fraction / count of outlier directions it participates in and their variance
level:

* a positive limiting fraction p_out of outlier directions at level tau moves
  the norm limit to p_out * tau + (1 - p_out) * sigma^2;
* a vanishing fraction with a growing direction count K_d and level tau_d
  such that K_d * tau_d / d -> r gives r + sigma^2;
* a fixed count K gives a random limit (r / K) * sum_{i<=K} z_i^2 + sigma^2,
  exposed as a sampleable distribution object.

Pair classes use ground truth: a sample is an outlier for these reports iff
it belongs to at least one membership set.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import schedules
from .errors import ConfigurationError, UnsupportedCaseError
from .model import DirectionSpec, GeneratedDataset, MixtureModelSpec, generate
from .rng import derive_seed, stream

REGIMES = ("positive_fraction", "growing_k", "fixed_k")

PAIR_CLASSES = ("non/non", "out/non", "out/out")


@dataclass(frozen=True)
class GeometryScenario:
    """One asymptotic regime for the outlier geometry, plus its levels."""

    regime: str
    sigma_sq: float = 1.0
    p_out: "float | None" = None
    tau: "float | None" = None
    r: "float | None" = None
    K: "int | None" = None
    count_schedule: "schedules.Schedule | None" = None
    tau_schedule: "schedules.Schedule | None" = None

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ConfigurationError(f"unknown regime {self.regime!r}")
        if self.sigma_sq <= 0:
            raise ConfigurationError("sigma_sq must be positive")
        if self.regime == "positive_fraction":
            if self.p_out is None or not 0 < self.p_out <= 1:
                raise ConfigurationError("positive_fraction needs p_out in (0, 1]")
            if self.tau is None or self.tau < 0:
                raise ConfigurationError("positive_fraction needs a variance level tau")
        if self.regime == "growing_k":
            if self.r is None or self.r < 0:
                raise ConfigurationError("growing_k needs r >= 0")
        if self.regime == "fixed_k":
            if self.K is None or self.K < 1:
                raise ConfigurationError("fixed_k needs K >= 1")
            if self.r is None or self.r < 0:
                raise ConfigurationError("fixed_k needs r >= 0")

    @classmethod
    def positive_fraction(cls, p_out, tau, sigma_sq=1.0):
        return cls(regime="positive_fraction", sigma_sq=sigma_sq, p_out=p_out, tau=tau)

    @classmethod
    def growing_k(cls, r, sigma_sq=1.0, count_schedule=None, tau_schedule=None):
        """Outlier-direction count grows with d; K_d * tau_d / d -> r.

        Default schedules: K_d = ceil(sqrt(d)); tau_d = r * d / K_d for r > 0,
        else a constant 3 * sigma_sq (so the product ratio vanishes).
        """
        if count_schedule is None:
            count_schedule = schedules.power(0.5)
        if tau_schedule is None:
            if r > 0:
                tau_schedule = schedules.linear_over(r, count_schedule)
            else:
                tau_schedule = schedules.constant(3.0 * sigma_sq)
        return cls(
            regime="growing_k",
            sigma_sq=sigma_sq,
            r=r,
            count_schedule=count_schedule,
            tau_schedule=tau_schedule,
        )

    @classmethod
    def fixed_k(cls, K, r, sigma_sq=1.0):
        """K outlier directions held fixed; tau_d / d -> r / K per direction."""
        return cls(regime="fixed_k", sigma_sq=sigma_sq, K=K, r=r)

    def outlier_direction_count(self, d: int) -> int:
        if self.regime == "positive_fraction":
            return max(1, round(self.p_out * d))
        if self.regime == "fixed_k":
            if self.K >= d:
                raise ConfigurationError("fixed K must be smaller than d")
            return self.K
        k = math.ceil((self.count_schedule or schedules.power(0.5))(d))
        return min(max(1, k), d - 1)

    def outlier_level(self, d: int) -> float:
        if self.regime == "positive_fraction":
            return self.tau
        if self.regime == "fixed_k":
            return self.r * d / self.K
        return self.tau_schedule(d)


@dataclass(frozen=True)
class LimitDistribution:
    """Random geometry limit (r / K) * sum_{i<=K} z_i^2 + shift, z iid N(0,1)."""

    r: float
    K: int
    shift: float

    @property
    def mean(self) -> float:
        return self.r + self.shift

    def sample(self, size: int, seed: int = 0) -> np.ndarray:
        z = stream(seed, "limit-dist").standard_normal((size, self.K))
        return (self.r / self.K) * (z**2).sum(axis=1) + self.shift


def limit_norm(scenario: GeometryScenario, is_outlier: bool):
    """Limit of ||X_j||^2 / d for the given sample class.

    Non-outliers settle on sigma^2 in every regime.  Outliers settle on a
    constant except in the fixed-K regime, where a LimitDistribution with
    mean r + sigma^2 is returned.
    """
    if not is_outlier:
        return scenario.sigma_sq
    if scenario.regime == "positive_fraction":
        return scenario.p_out * scenario.tau + (1 - scenario.p_out) * scenario.sigma_sq
    if scenario.regime == "growing_k":
        return scenario.r + scenario.sigma_sq
    return LimitDistribution(r=scenario.r, K=scenario.K, shift=scenario.sigma_sq)


def limit_distance(scenario: GeometryScenario, pair_class: str):
    """Limit of ||X_j - X_l||^2 / d for a pair of the given class.

    No limit is claimed for outlier/outlier pairs (their overlap pattern is
    not part of any scenario); requesting one raises UnsupportedCaseError.
    """
    if pair_class not in PAIR_CLASSES:
        raise ConfigurationError(f"unknown pair class {pair_class!r}")
    if pair_class == "out/out":
        raise UnsupportedCaseError("no predicted limit for outlier/outlier pairs")
    two_sigma = 2 * scenario.sigma_sq
    if pair_class == "non/non":
        return two_sigma
    if scenario.regime == "positive_fraction":
        return scenario.p_out * (scenario.tau - scenario.sigma_sq) + two_sigma
    if scenario.regime == "growing_k":
        return scenario.r + two_sigma
    return LimitDistribution(r=scenario.r, K=scenario.K, shift=two_sigma)


def build_geometry_spec(scenario: GeometryScenario, d: int, membership_w: float) -> MixtureModelSpec:
    """Concrete d-dimensional model realizing the scenario.

    The scenario's outlier directions share one coupled membership draw with
    weight ``membership_w``, so a sample either participates in all of them
    (an outlier of the intended class) or in none.
    """
    if not 0 < membership_w <= 1:
        raise ConfigurationError("membership_w must lie in (0, 1]")
    k = scenario.outlier_direction_count(d)
    tau = scenario.outlier_level(d)
    s2 = scenario.sigma_sq
    out = DirectionSpec(s2, tau, membership_w, group=0)
    noise = DirectionSpec(s2, s2, 0.0)
    return MixtureModelSpec(
        directions=(out,) * k + (noise,) * (d - k),
        membership_mode="coupled",
    )


@dataclass(eq=False)
class GeometryReport:
    """Empirical scaled norms/distances with per-class summaries.

    ``class_summary`` maps a class label ("outlier"/"non_outlier" for norms,
    a pair class for distances) to {empirical_mean, predicted, gap}; the
    predicted entry is None without a scenario or for out/out pairs.
    """

    scaled_norms: np.ndarray
    scaled_distances: np.ndarray
    outlier_mask: np.ndarray
    class_summary: "dict[str, dict]" = field(default_factory=dict)

    def pair_class(self, j: int, l: int) -> str:
        a, b = self.outlier_mask[j - 1], self.outlier_mask[l - 1]
        return PAIR_CLASSES[int(a) + int(b)]

    def write_pairs_csv(self, path) -> None:
        n = len(self.scaled_norms)
        with open(path, "w", encoding="ascii") as fh:
            fh.write("j,l,class,scaled_dist\n")
            for j in range(1, n + 1):
                for l in range(j + 1, n + 1):
                    fh.write(
                        f"{j},{l},{self.pair_class(j, l)},"
                        f"{float(self.scaled_distances[j - 1, l - 1])!r}\n"
                    )

    def write_summary_json(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            json.dump(self.class_summary, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _class_means(report: GeometryReport) -> "dict[str, float]":
    out = report.outlier_mask
    means: dict[str, float] = {}
    if out.any():
        means["outlier"] = float(report.scaled_norms[out].mean())
    if (~out).any():
        means["non_outlier"] = float(report.scaled_norms[~out].mean())
    n = len(report.scaled_norms)
    iu, il = np.triu_indices(n, k=1)
    kinds = out[iu].astype(int) + out[il].astype(int)
    dists = report.scaled_distances[iu, il]
    for kind, label in enumerate(PAIR_CLASSES):
        sel = kinds == kind
        if sel.any():
            means[label] = float(dists[sel].mean())
    return means


def empirical_geometry(
    dataset: GeneratedDataset, scenario: "GeometryScenario | None" = None
) -> GeometryReport:
    """Exact scaled norms and pairwise scaled distances of a dataset.

    With a scenario, each class summary carries the predicted limit and the
    gap |empirical mean - prediction| (distribution-valued limits contribute
    their mean).
    """
    x = dataset.X
    d = dataset.spec.d
    sq = (x * x).sum(axis=0)
    norms = sq / d
    gram = x.T @ x
    dist = (sq[:, None] + sq[None, :] - 2 * gram) / d
    np.maximum(dist, 0.0, out=dist)
    np.fill_diagonal(dist, 0.0)
    dist = (dist + dist.T) / 2  # exact symmetry for the report invariant

    report = GeometryReport(
        scaled_norms=norms, scaled_distances=dist, outlier_mask=dataset.outlier_mask
    )
    means = _class_means(report)
    predictions: dict[str, object] = {}
    if scenario is not None:
        predictions["outlier"] = limit_norm(scenario, True)
        predictions["non_outlier"] = limit_norm(scenario, False)
        predictions["non/non"] = limit_distance(scenario, "non/non")
        predictions["out/non"] = limit_distance(scenario, "out/non")
        predictions["out/out"] = None  # reported empirically, no claimed limit
    for label, mean in means.items():
        pred = predictions.get(label)
        if isinstance(pred, LimitDistribution):
            pred = pred.mean
        report.class_summary[label] = {
            "empirical_mean": mean,
            "predicted": pred,
            "gap": abs(mean - pred) if pred is not None else None,
        }
    return report


def transition_sweep(
    scenario: GeometryScenario,
    d_values,
    n: int,
    replications: int,
    seed: int,
    membership_w: float = 0.5,
) -> "dict":
    """Convergence of class-mean scaled norms to their limits along growing d.

    For each d, ``replications`` datasets are generated (each from its own
    derived stream) and the per-replication outlier-class gap
    |class mean - limit| is recorded.  The verdict passes when the median gap
    at the largest d does not exceed the median gap at the smallest d.
    """
    d_values = [int(d) for d in d_values]
    if len(d_values) < 3 or sorted(set(d_values)) != d_values:
        raise ConfigurationError("need a schedule of >= 3 strictly increasing d values")
    limit_out = limit_norm(scenario, True)
    if isinstance(limit_out, LimitDistribution):
        limit_out = limit_out.mean
    limit_non = limit_norm(scenario, False)

    rows = []
    for d in d_values:
        spec = build_geometry_spec(scenario, d, membership_w)
        for rep in range(replications):
            ds = generate(spec, n, derive_seed(seed, "transition", d, rep),
                          retain_coefficients=False)
            report = empirical_geometry(ds)
            means = _class_means(report)
            rows.append(
                {
                    "d": d,
                    "rep": rep,
                    "outlier_mean": means.get("outlier", float("nan")),
                    "non_outlier_mean": means.get("non_outlier", float("nan")),
                    "outlier_gap": abs(means["outlier"] - limit_out)
                    if "outlier" in means
                    else float("nan"),
                    "non_outlier_gap": abs(means["non_outlier"] - limit_non)
                    if "non_outlier" in means
                    else float("nan"),
                    "class_mean_diff": means["outlier"] - means["non_outlier"]
                    if "outlier" in means and "non_outlier" in means
                    else float("nan"),
                }
            )

    def med(d, key):
        vals = [r[key] for r in rows if r["d"] == d]
        return float(np.nanmedian(vals))

    medians = {
        d: {key: med(d, key) for key in ("outlier_gap", "non_outlier_gap", "class_mean_diff")}
        for d in d_values
    }
    first, last = d_values[0], d_values[-1]
    return {
        "scenario": scenario.regime,
        "d_values": d_values,
        "rows": rows,
        "medians": medians,
        "outlier_limit": limit_out,
        "gap_first": medians[first]["outlier_gap"],
        "gap_last": medians[last]["outlier_gap"],
        "passed": medians[last]["outlier_gap"] <= medians[first]["outlier_gap"],
    }
