"""Row-stochastic matrix helpers: validation, irreducibility, file format."""
from __future__ import annotations

import numpy as np

from .errors import NotIrreducible, NotStochastic, ParseError

ROW_SUM_TOL = 1e-12
# entries at or below this are treated as structural zeros when testing
# strong connectivity
STRUCTURAL_ZERO = 1e-15


def as_row_stochastic(values, n_types: int | None = None, *, what: str = "matrix",
                      tol: float = ROW_SUM_TOL) -> np.ndarray:
    """Coerce to a square float array and check each row sums to one.

    Accepts a square array-like, or a flat row-major sequence of length
    n_types**2 when `n_types` is given. Raises NotStochastic naming the
    offending row (1-based).
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1 and n_types is not None:
        if arr.size != n_types * n_types:
            raise NotStochastic(
                f"{what} needs {n_types * n_types} entries, got {arr.size}")
        arr = arr.reshape(n_types, n_types)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise NotStochastic(f"{what} must be square, got shape {arr.shape}")
    if np.any(arr < -tol) or np.any(arr > 1.0 + tol):
        raise NotStochastic(f"{what} has entries outside [0, 1]")
    sums = arr.sum(axis=1)
    for i, s in enumerate(sums):
        if abs(s - 1.0) > tol:
            raise NotStochastic(f"{what} row {i + 1} sums to {s!r}, not 1")
    return arr


def is_irreducible(matrix: np.ndarray, threshold: float = STRUCTURAL_ZERO) -> bool:
    """Strong connectivity of the digraph with an arc k->l iff entry > threshold."""
    arr = np.asarray(matrix, dtype=float)
    n = arr.shape[0]
    adjacency = arr > threshold
    return _reaches_all(adjacency) and _reaches_all(adjacency.T)


def _reaches_all(adjacency: np.ndarray) -> bool:
    n = adjacency.shape[0]
    seen = [False] * n
    seen[0] = True
    stack = [0]
    count = 1
    while stack:
        k = stack.pop()
        for l in np.flatnonzero(adjacency[k]):
            if not seen[l]:
                seen[l] = True
                count += 1
                stack.append(l)
    return count == n


def require_irreducible(matrix: np.ndarray, *, what: str = "matrix") -> None:
    if not is_irreducible(matrix):
        raise NotIrreducible(f"{what} is not irreducible")


def read_matrix(path) -> np.ndarray:
    """Read the plain-text matrix format: first token N, then N*N reals, row-major."""
    try:
        with open(path) as fh:
            tokens = fh.read().split()
    except OSError as exc:
        raise ParseError(f"cannot read matrix file {path}: {exc}") from exc
    if not tokens:
        raise ParseError(f"matrix file {path} is empty")
    try:
        n = int(tokens[0])
        entries = [float(t) for t in tokens[1:]]
    except ValueError as exc:
        raise ParseError(f"matrix file {path}: {exc}") from exc
    if n < 1 or len(entries) != n * n:
        raise ParseError(
            f"matrix file {path}: expected {n}*{n} entries, got {len(entries)}")
    return np.array(entries, dtype=float).reshape(n, n)


def row_cdfs(matrix: np.ndarray) -> tuple:
    """Per-row cumulative sums as tuples, last entry forced to 1.0.

    Used for inverse-CDF sampling of a categorical per row; forcing the last
    entry absorbs row-sum rounding within ROW_SUM_TOL.
    """
    cdf = np.cumsum(np.asarray(matrix, dtype=float), axis=1)
    cdf[:, -1] = 1.0
    return tuple(tuple(row) for row in cdf)
