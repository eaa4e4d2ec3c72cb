"""Sample covariance spectra via the primal or dual (Gram) eigenproblem.

The sample covariance here is the uncentered (1/n) X X' throughout; all
theorem checks are stated for that form.  A centered variant with divisor
n - 1 is available behind a flag for exploratory use only.

When d > n the spectrum is computed from the n x n dual matrix (1/n) X' X,
which shares the nonzero eigenvalues, and eigenvectors are mapped back to
d-space as U_i = X v_i / sqrt(n * lambda_i).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataError
from .model import GeneratedDataset

#: Eigenvalues below RANK_TOL * lambda_max are reported as zero and their
#: eigenvectors omitted (avoids division blow-up in the dual recovery).
RANK_TOL = 1e-10


@dataclass(eq=False)
class SpectralDecomposition:
    """Eigenpairs of the sample covariance.

    ``eigenvalues`` has length min(d, n), sorted descending, with values
    below the rank tolerance reported as zero.  ``eigenvectors`` holds one
    d-vector column per *retained* (nonzero) eigenvalue, sign-fixed so the
    entry of largest magnitude is positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    method: str
    d: int
    n: int

    @property
    def n_retained(self) -> int:
        return self.eigenvectors.shape[1]

    def write_eigenvalues_csv(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("index,eigenvalue\n")
            for i, v in enumerate(self.eigenvalues, start=1):
                fh.write(f"{i},{float(v)!r}\n")

    def write_eigenvectors_csv(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(",".join(f"pc_{j}" for j in range(1, self.n_retained + 1)) + "\n")
            for row in self.eigenvectors:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of every column positive."""
    if vectors.size == 0:
        return vectors
    lead = vectors[np.abs(vectors).argmax(axis=0), np.arange(vectors.shape[1])]
    return vectors * np.where(lead < 0, -1.0, 1.0)


def _stabilize_ties(values: np.ndarray, vectors: np.ndarray) -> "tuple[np.ndarray, np.ndarray]":
    """Order exactly-equal eigenvalues by their sign-fixed eigenvectors.

    Within a tie group, columns are sorted so that the first differing entry
    is decreasing; downstream checks never depend on within-tie order, this
    only pins the output for reproducibility across eigensolvers.
    """
    start = 0
    order = np.arange(len(values))
    while start < len(values):
        stop = start
        while stop + 1 < len(values) and values[stop + 1] == values[start]:
            stop += 1
        if stop > start and stop < vectors.shape[1]:
            block = order[start : stop + 1]
            keys = sorted(block, key=lambda j: tuple(-vectors[:, j]))
            order[start : stop + 1] = keys
        start = stop + 1
    return values, vectors[:, order[: vectors.shape[1]]]


def sample_covariance_spectrum(
    X: np.ndarray,
    method: "str | None" = None,
    centered: bool = False,
    rank_tol: float = RANK_TOL,
) -> SpectralDecomposition:
    """Eigenpairs of (1/n) X X', computed primal or dual.

    Parameters
    ----------
    X : (d, n) array
        Data matrix, one column per sample; entries must be finite.
    method : {"primal", "dual"}, optional
        Force a computation path; default picks dual when d > n.
    centered : bool
        Subtract column means and divide by n - 1 instead (exploratory only;
        never used by the theorem checks).
    rank_tol : float
        Relative threshold below which eigenvalues count as zero.

    Returns
    -------
    SpectralDecomposition
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError("X must be a d x n matrix")
    if not np.all(np.isfinite(X)):
        raise DataError("X contains non-finite entries")
    d, n = X.shape
    if d < 1 or n < 1:
        raise DataError("X must be nonempty")

    divisor = n
    if centered:
        if n < 2:
            raise DataError("centered covariance needs n >= 2")
        X = X - X.mean(axis=1, keepdims=True)
        divisor = n - 1

    if method is None:
        method = "dual" if d > n else "primal"
    if method not in ("primal", "dual"):
        raise ConfigurationError(f"unknown method {method!r}")

    k = min(d, n)
    if method == "primal":
        values, vectors = np.linalg.eigh(X @ X.T / divisor)
        values = values[::-1][:k]
        vectors = vectors[:, ::-1][:, :k]
        values = np.maximum(values, 0.0)
        retained = values > rank_tol * max(values[0], 0.0) if k else np.zeros(0, bool)
        values = np.where(retained, values, 0.0)
        vectors = vectors[:, retained]
    else:
        gram_values, gram_vectors = np.linalg.eigh(X.T @ X / divisor)
        values = np.maximum(gram_values[::-1][:k], 0.0)
        gram_vectors = gram_vectors[:, ::-1][:, :k]
        retained = values > rank_tol * max(values[0], 0.0) if k else np.zeros(0, bool)
        values = np.where(retained, values, 0.0)
        vectors = X @ gram_vectors[:, retained]
        norms = np.sqrt(divisor * values[retained])
        vectors /= norms
        # Guard against drift in the back-mapped columns.
        vectors /= np.linalg.norm(vectors, axis=0)

    vectors = _fix_signs(vectors)
    values, vectors = _stabilize_ties(values, vectors)
    return SpectralDecomposition(
        eigenvalues=values, eigenvectors=vectors, method=method, d=d, n=n
    )


def ab_split_eigenvalues(dataset: GeneratedDataset, K: int) -> "tuple[np.ndarray, np.ndarray]":
    """Spectra of the spike part A and noise part B of the dual matrix.

    With coefficient rows Y_1..Y_d (each of length n), the dual matrix
    (1/n) Y'Y splits as A + B where A sums the outer products of the first K
    rows and B the rest.  Interlacing of their eigenvalues brackets every
    sample eigenvalue:  lam_i(A) + lam_n(B) <= lam_i <= lam_i(A) + lam_1(B).

    Requires retained coefficients; returns eigenvalues sorted descending.
    """
    if not 1 <= K < dataset.spec.d:
        raise ConfigurationError(f"K must lie in 1..{dataset.spec.d - 1}")
    y = dataset.require_coefficients()
    n = dataset.n
    a = y[:K, :].T @ y[:K, :] / n
    b = y[K:, :].T @ y[K:, :] / n
    eig_a = np.linalg.eigvalsh(a)[::-1]
    eig_b = np.linalg.eigvalsh(b)[::-1]
    return eig_a, eig_b
