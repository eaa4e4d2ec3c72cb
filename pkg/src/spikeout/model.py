"""Two-variance mixture models over orthonormal directions, with generators.

A model on R^d fixes an orthonormal set of directions U_1..U_d and, for each
direction i, a coefficient law: the coefficient of a sample in direction i is
sqrt(tau1_i) * z with probability 1 - w_i and sqrt(tau2_i) * z with
probability w_i, where z has mean zero and unit variance.  Directions with
w_i > 0 are *outlier components*; the samples that drew the tau2 branch of
direction i form its *membership set* s_i.

Conventions
-----------
- Directions and samples are numbered from 1 in every public index set,
  matching the serialized formats (`sample_1..sample_n` CSV header,
  1-based membership lists).
- Data matrices are d x n: one column per sample.
- Generation is a pure function of (spec, n, seed).  Membership draws use
  per-direction streams separate from the coefficient noise stream, so
  changing variance levels never perturbs membership patterns.
"""

import json
from dataclasses import dataclass, field
from functools import cached_property
from math import sqrt

import numpy as np

from .errors import CapabilityError, ConfigurationError
from .rng import stream

NOISE_DISTS = ("gaussian", "rademacher", "uniform")
MEMBERSHIP_MODES = ("independent", "coupled")

#: Above this many matrix entries, generated coefficient matrices are dropped
#: after mixing to bound memory; only X and memberships are kept.
COEFFICIENT_RETENTION_LIMIT = 10_000_000

_ORTHONORMAL_TOL = 1e-10


@dataclass(frozen=True)
class DirectionSpec:
    """Coefficient law of one direction: variances (tau1, tau2), weight w.

    The direction is an outlier component iff w > 0.  ``group`` couples
    membership draws across directions when the model is in coupled mode.
    """

    tau1: float
    tau2: float
    w: float
    group: "int | str | None" = None

    def __post_init__(self):
        if not (0.0 <= self.w <= 1.0):
            raise ConfigurationError(f"w must lie in [0, 1], got {self.w}")
        if self.tau1 < 0 or self.tau2 < 0:
            raise ConfigurationError("variances must be nonnegative")

    @property
    def is_outlier_component(self) -> bool:
        return self.w > 0


@dataclass(frozen=True, eq=False)
class Basis:
    """Choice of the orthonormal direction set U_1..U_d.

    kind "standard" uses the coordinate axes (no matrix is materialized),
    "explicit" takes a given orthonormal matrix with directions as columns,
    and "random" orthonormalizes a seeded iid normal matrix.
    """

    kind: str = "standard"
    seed: "int | None" = None
    matrix: "np.ndarray | None" = None

    def __post_init__(self):
        if self.kind not in ("standard", "explicit", "random"):
            raise ConfigurationError(f"unknown basis kind {self.kind!r}")
        if self.kind == "explicit":
            if self.matrix is None:
                raise ConfigurationError("explicit basis needs a matrix")
            m = np.asarray(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ConfigurationError("explicit basis matrix must be square")
            gram_dev = np.abs(m.T @ m - np.eye(m.shape[0])).max()
            if gram_dev > _ORTHONORMAL_TOL:
                raise ConfigurationError(
                    f"explicit basis is not orthonormal (max |U'U - I| = {gram_dev:.3e})"
                )
            object.__setattr__(self, "matrix", m)
        if self.kind == "random" and self.seed is None:
            raise ConfigurationError("random basis needs a seed")

    def resolve(self, d: int) -> "np.ndarray | None":
        """Return the d x d direction matrix, or None for the standard basis."""
        if self.kind == "standard":
            return None
        if self.kind == "explicit":
            if self.matrix.shape[0] != d:
                raise ConfigurationError(
                    f"basis is {self.matrix.shape[0]}-dimensional, model is {d}-dimensional"
                )
            return self.matrix
        rng = stream(self.seed, "basis", d)
        q, r = np.linalg.qr(rng.standard_normal((d, d)))
        # Fix signs so the factorization (and hence the basis) is unique.
        q = q * np.sign(np.diag(r))
        return q

    def to_json(self) -> dict:
        doc = {"kind": self.kind}
        if self.seed is not None:
            doc["seed"] = self.seed
        if self.kind == "explicit":
            doc["matrix"] = self.matrix.tolist()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Basis":
        matrix = doc.get("matrix")
        return cls(
            kind=doc.get("kind", "standard"),
            seed=doc.get("seed"),
            matrix=np.asarray(matrix, dtype=float) if matrix is not None else None,
        )


@dataclass(eq=False)
class MixtureModelSpec:
    """Full parameterization of a d-dimensional two-variance mixture model."""

    directions: "tuple[DirectionSpec, ...]"
    basis: Basis = field(default_factory=Basis)
    noise_dist: str = "gaussian"
    membership_mode: str = "independent"

    def __post_init__(self):
        self.directions = tuple(self.directions)
        if not self.directions:
            raise ConfigurationError("model needs at least one direction")
        if self.noise_dist not in NOISE_DISTS:
            raise ConfigurationError(f"unknown noise distribution {self.noise_dist!r}")
        if self.membership_mode not in MEMBERSHIP_MODES:
            raise ConfigurationError(f"unknown membership mode {self.membership_mode!r}")
        if self.basis.kind == "explicit" and self.basis.matrix.shape[0] != self.d:
            raise ConfigurationError("explicit basis dimension does not match d")
        if self.membership_mode == "coupled":
            group_w: dict = {}
            for spec in self.directions:
                if spec.group is None:
                    continue
                prev = group_w.setdefault(spec.group, spec.w)
                if prev != spec.w:
                    raise ConfigurationError(
                        f"coupled group {spec.group!r} mixes weights {prev} and {spec.w}; "
                        "a shared membership draw needs a shared weight"
                    )

    @property
    def d(self) -> int:
        return len(self.directions)

    @cached_property
    def tau1(self) -> np.ndarray:
        return np.array([s.tau1 for s in self.directions])

    @cached_property
    def tau2(self) -> np.ndarray:
        return np.array([s.tau2 for s in self.directions])

    @cached_property
    def w(self) -> np.ndarray:
        return np.array([s.w for s in self.directions])

    @cached_property
    def outlier_components(self) -> "tuple[int, ...]":
        """1-based indices of directions with w > 0 (the set I_out)."""
        return tuple(i + 1 for i, s in enumerate(self.directions) if s.w > 0)

    @cached_property
    def main_components(self) -> "tuple[int, ...]":
        """1-based indices of directions with w == 0."""
        return tuple(i + 1 for i, s in enumerate(self.directions) if s.w == 0)

    def to_json(self) -> dict:
        dirs = []
        for s in self.directions:
            entry = {"tau1": s.tau1, "tau2": s.tau2, "w": s.w}
            if s.group is not None:
                entry["group"] = s.group
            dirs.append(entry)
        return {
            "d": self.d,
            "directions": dirs,
            "basis": self.basis.to_json(),
            "noise_dist": self.noise_dist,
            "membership_mode": self.membership_mode,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MixtureModelSpec":
        directions = tuple(
            DirectionSpec(
                tau1=float(e["tau1"]),
                tau2=float(e["tau2"]),
                w=float(e["w"]),
                group=e.get("group"),
            )
            for e in doc["directions"]
        )
        if "d" in doc and int(doc["d"]) != len(directions):
            raise ConfigurationError("declared d does not match the direction list")
        return cls(
            directions=directions,
            basis=Basis.from_json(doc.get("basis", {"kind": "standard"})),
            noise_dist=doc.get("noise_dist", "gaussian"),
            membership_mode=doc.get("membership_mode", "independent"),
        )


def build_variable_specific(d, outlier_vars, tau2, w) -> MixtureModelSpec:
    """Model whose outliers are extreme only at the listed variables.

    Every variable keeps unit base variance; each listed variable (1-based)
    becomes an outlier component with large-branch variance ``tau2`` and
    weight ``w``.  Uses the standard basis.
    """
    if tau2 <= 0:
        raise ConfigurationError("tau2 must be positive")
    outlier_vars = set(outlier_vars)
    for v in outlier_vars:
        if not 1 <= v <= d:
            raise ConfigurationError(f"variable index {v} outside 1..{d}")
    directions = tuple(
        DirectionSpec(1.0, tau2, w) if i in outlier_vars else DirectionSpec(1.0, 1.0, 0.0)
        for i in range(1, d + 1)
    )
    return MixtureModelSpec(directions=directions)


def build_scale_mixture(d, sigma1_sq, sigma2_sq, p) -> MixtureModelSpec:
    """Model whose outliers are rescaled across all variables at once.

    A single coupled membership draw per sample decides whether all d
    coordinates are drawn at variance ``sigma1_sq`` or all at ``sigma2_sq``.
    """
    if not sigma2_sq > sigma1_sq > 0:
        raise ConfigurationError("need sigma2_sq > sigma1_sq > 0")
    if not 0 < p < 1:
        raise ConfigurationError("need 0 < p < 1")
    directions = tuple(DirectionSpec(sigma1_sq, sigma2_sq, p, group=0) for _ in range(d))
    return MixtureModelSpec(directions=directions, membership_mode="coupled")


def build_shifted(d, mu, sigma1_sq, sigma2_sq, p, base_cov_diag) -> MixtureModelSpec:
    """Model whose outliers are scaled along a common direction mu.

    The first direction is mu / ||mu||; a random multiple of mu with a
    two-variance scale on the multiplier adds ``sigma*_sq * ||mu||^2`` on top
    of the base variance along that direction.  ``base_cov_diag`` gives the
    base variances along the constructed basis (first entry = along mu).
    The remaining directions complete mu to an orthonormal basis via a
    Householder reflection and keep their base variances with w = 0.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (d,):
        raise ConfigurationError(f"mu must have length {d}")
    norm = float(np.linalg.norm(mu))
    if norm == 0.0:
        raise ConfigurationError("mu must be nonzero")
    base = np.asarray(base_cov_diag, dtype=float)
    if base.shape != (d,):
        raise ConfigurationError(f"base_cov_diag must have length {d}")
    if np.any(base < 0):
        raise ConfigurationError("base variances must be nonnegative")

    u1 = mu / norm
    matrix = _householder_completion(u1)
    v1 = base[0]
    shift_sq = norm**2
    first = DirectionSpec(sigma1_sq * shift_sq + v1, sigma2_sq * shift_sq + v1, p)
    rest = tuple(DirectionSpec(base[i], base[i], 0.0) for i in range(1, d))
    return MixtureModelSpec(
        directions=(first,) + rest,
        basis=Basis(kind="explicit", matrix=matrix),
    )


def _householder_completion(u1: np.ndarray) -> np.ndarray:
    """Orthogonal matrix whose first column is the unit vector u1."""
    d = u1.shape[0]
    e1 = np.zeros(d)
    e1[0] = 1.0
    v = u1 - e1
    vnorm_sq = float(v @ v)
    if vnorm_sq < 1e-28:
        return np.eye(d)
    h = np.eye(d) - (2.0 / vnorm_sq) * np.outer(v, v)
    h[:, 0] = u1  # exact first column, immune to round-off in the reflector
    return h


@dataclass(eq=False)
class GeneratedDataset:
    """A generated d x n data matrix with its ground-truth memberships.

    ``memberships`` maps each outlier-component index (1-based) to the sorted
    1-based sample indices drawn from its tau2 branch.  ``coefficients`` holds
    the pre-rotation coefficient matrix Y (X = U Y) when retention is on.
    """

    X: np.ndarray
    memberships: "dict[int, np.ndarray]"
    spec: MixtureModelSpec
    seed: int
    n: int
    coefficients: "np.ndarray | None" = None

    def membership(self, direction: int) -> np.ndarray:
        """Sorted 1-based sample indices outlying in ``direction`` (1-based)."""
        if not 1 <= direction <= self.spec.d:
            raise ConfigurationError(f"direction {direction} outside 1..{self.spec.d}")
        return self.memberships.get(direction, np.empty(0, dtype=np.int64))

    @cached_property
    def outlier_mask(self) -> np.ndarray:
        """Boolean (n,) mask: sample belongs to at least one membership set."""
        mask = np.zeros(self.n, dtype=bool)
        for idx in self.memberships.values():
            mask[idx - 1] = True
        return mask

    def require_coefficients(self) -> np.ndarray:
        if self.coefficients is None:
            raise CapabilityError(
                "coefficients were not retained for this dataset "
                "(generate with retain_coefficients=True)"
            )
        return self.coefficients

    def write_matrix_csv(self, path) -> None:
        """Write X as CSV, one column per sample, header sample_1..sample_n."""
        with open(path, "w", encoding="ascii") as fh:
            fh.write(",".join(f"sample_{j}" for j in range(1, self.n + 1)) + "\n")
            for row in self.X:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    def write_memberships_json(self, path) -> None:
        doc = {str(i): idx.tolist() for i, idx in sorted(self.memberships.items())}
        with open(path, "w", encoding="ascii") as fh:
            json.dump(doc, fh, indent=0, sort_keys=True)
            fh.write("\n")


def draw_memberships(spec: MixtureModelSpec, n: int, seed: int) -> "dict[int, np.ndarray]":
    """Draw the membership sets alone (cheap: only outlier components draw).

    Independent mode gives every outlier component its own uniform stream
    keyed by direction index; coupled mode keys the stream by group so all
    directions in a group share one draw per sample.
    """
    memberships: dict[int, np.ndarray] = {}
    group_uniforms: dict = {}
    for i, dspec in enumerate(spec.directions, start=1):
        if dspec.w == 0.0:
            continue
        if spec.membership_mode == "coupled" and dspec.group is not None:
            if dspec.group not in group_uniforms:
                group_uniforms[dspec.group] = stream(seed, "member-group", dspec.group).random(n)
            u = group_uniforms[dspec.group]
        else:
            u = stream(seed, "member", i).random(n)
        memberships[i] = np.flatnonzero(u < dspec.w).astype(np.int64) + 1
    return memberships


def _draw_noise(noise_dist: str, rng: np.random.Generator, shape) -> np.ndarray:
    if noise_dist == "gaussian":
        return rng.standard_normal(shape)
    if noise_dist == "rademacher":
        return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
    # uniform on [-sqrt(3), sqrt(3)]: mean 0, variance 1
    return rng.uniform(-sqrt(3.0), sqrt(3.0), size=shape)


def generate(
    spec: MixtureModelSpec,
    n: int,
    seed: int,
    retain_coefficients: "bool | None" = None,
) -> GeneratedDataset:
    """Generate n samples from the model; pure function of (spec, n, seed).

    Parameters
    ----------
    spec : MixtureModelSpec
    n : int
        Sample count, >= 1.
    seed : int
        Root seed; identical inputs give bit-identical outputs.
    retain_coefficients : bool, optional
        Keep the coefficient matrix Y alongside X.  Defaults to True when
        d * n <= COEFFICIENT_RETENTION_LIMIT.

    Returns
    -------
    GeneratedDataset
    """
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    d = spec.d
    if retain_coefficients is None:
        retain_coefficients = d * n <= COEFFICIENT_RETENTION_LIMIT

    z = _draw_noise(spec.noise_dist, stream(seed, "z"), (d, n))
    memberships = draw_memberships(spec, n, seed)

    y = z * np.sqrt(spec.tau1)[:, None]
    sqrt_tau2 = np.sqrt(spec.tau2)
    for i, idx in memberships.items():
        y[i - 1, idx - 1] = z[i - 1, idx - 1] * sqrt_tau2[i - 1]

    basis_matrix = spec.basis.resolve(d)
    x = y if basis_matrix is None else basis_matrix @ y
    x.setflags(write=False)
    coefficients = None
    if retain_coefficients:
        coefficients = y  # For the standard basis this is the same array as X.
        coefficients.setflags(write=False)
    return GeneratedDataset(
        X=x, memberships=memberships, spec=spec, seed=seed, n=n, coefficients=coefficients
    )
