"""Zero-intercept least squares and the hierarchical variance decomposition.

All fits here are through the origin, so goodness of fit uses the uncentered
convention: R^2 = 1 - ||y - Xb||^2 / ||y||^2.  The hierarchical fit enters
the selected predictors one at a time in importance order and reports the
R^2 after each step; successive gains are the unique-variance increments
that the domain aggregation treats as weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COND_LIMIT = 1e10  # condition number above which a column is dropped as collinear


class RegressionError(ValueError):
    pass


@dataclass(frozen=True)
class OlsResult:
    coefficients: np.ndarray  # one per input column; dropped columns get 0.0
    r2: float
    dropped: tuple[int, ...] = ()  # input column indices removed as collinear

    @property
    def flagged(self) -> bool:
        return bool(self.dropped)


def _as_design(y: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim != 1 or x.ndim != 2:
        raise RegressionError("y must be a vector and X a matrix")
    if y.shape[0] != x.shape[0]:
        raise RegressionError(f"{y.shape[0]} cases in y but {x.shape[0]} rows in X")
    if x.shape[1] < 1:
        raise RegressionError("X needs at least one column")
    ss_tot = float(np.dot(y, y))
    if ss_tot == 0.0:
        raise RegressionError("response is the zero vector; uncentered R^2 undefined")
    return y, x


def _filter_collinear(x: np.ndarray) -> tuple[list[int], list[int]]:
    """Keep columns left to right, dropping any later column whose addition
    drives the condition number past COND_LIMIT."""
    kept: list[int] = []
    dropped: list[int] = []
    for j in range(x.shape[1]):
        trial = x[:, kept + [j]]
        s = np.linalg.svd(trial, compute_uv=False)
        if s[-1] == 0.0 or s[0] / s[-1] > COND_LIMIT:
            dropped.append(j)
        else:
            kept.append(j)
    return kept, dropped


def ols_no_intercept(y: np.ndarray, x: np.ndarray) -> OlsResult:
    """Least squares through the origin with uncentered R^2.

    Rank-deficient designs are repaired by dropping the later collinear
    columns (their coefficients report as 0.0) and flagging the result.
    """
    y, x = _as_design(y, x)
    kept, dropped = _filter_collinear(x)
    if not kept:
        raise RegressionError("all columns are numerically zero")
    beta_kept, *_ = np.linalg.lstsq(x[:, kept], y, rcond=None)
    resid = y - x[:, kept] @ beta_kept
    r2 = 1.0 - float(np.dot(resid, resid)) / float(np.dot(y, y))
    beta = np.zeros(x.shape[1])
    beta[kept] = beta_kept
    return OlsResult(coefficients=beta, r2=min(max(r2, 0.0), 1.0), dropped=tuple(dropped))


@dataclass(frozen=True)
class StepwiseResult:
    """R^2 trajectory of the nested fits over the selected predictors.

    ``increments`` are computed from successive orthogonal projections, so
    they are nonnegative floats and their left-to-right sum reproduces the
    step R^2 values exactly.
    """

    target_ref: int
    steps: tuple[int, ...]  # predictor refs in entry order, length <= 3
    r2: tuple[float, ...]  # cumulative, one per step
    increments: tuple[float, ...]  # unique-variance gain at each step
    collinear_steps: tuple[int, ...] = ()  # steps (refs) dropped as collinear

    def __post_init__(self) -> None:
        if not self.steps:
            raise RegressionError("empty predictor selection")
        if len(self.r2) != len(self.steps) or len(self.increments) != len(self.steps):
            raise RegressionError("r2 and increments must have one entry per step")

    @property
    def flagged(self) -> bool:
        return bool(self.collinear_steps)

    @property
    def final_r2(self) -> float:
        return self.r2[-1]

    @property
    def step13_increase(self) -> float:
        return self.r2[-1] - self.r2[0]


def stepwise_from_r2(target_ref: int, steps: tuple[int, ...], r2: tuple[float, ...]) -> StepwiseResult:
    """Build a StepwiseResult from already-known step R^2 values.

    Used when ingesting a previously computed crosswalk table; increments are
    the literal successive differences.
    """
    incs = tuple(r2[k] - (r2[k - 1] if k else 0.0) for k in range(len(r2)))
    return StepwiseResult(target_ref=target_ref, steps=tuple(steps), r2=tuple(r2), increments=incs)


def hierarchical_fit(dataset, ranking) -> StepwiseResult:
    """Fit the nested zero-intercept models {s1}, {s1,s2}, {s1,s2,s3}.

    ``dataset`` is a similarity.RegressionDataset and ``ranking`` either a
    forest.ImportanceRanking or any object with a ``selected`` ref sequence
    (a plain sequence of refs also works).

    The step increments come from a QR factorization of the step-ordered
    design: increment k is the squared projection of the response onto the
    k-th orthogonalized direction, divided by ||y||^2.  That makes the R^2
    sequence nondecreasing by construction.  A step whose column is
    (numerically) collinear with the earlier steps contributes a zero
    increment and is flagged.
    """
    selected = tuple(getattr(ranking, "selected", ranking))
    if not selected:
        raise RegressionError("ranking selected no predictors")
    y = np.asarray(dataset.response, dtype=np.float64)
    ss_tot = float(np.dot(y, y))
    if ss_tot == 0.0:
        raise RegressionError("response is the zero vector; uncentered R^2 undefined")
    cols = np.column_stack([dataset.predictor_column(ref) for ref in selected])

    kept, dropped = _filter_collinear(cols)
    q, _ = np.linalg.qr(cols[:, kept])
    proj = q.T @ y

    increments: list[float] = []
    r2: list[float] = []
    running = 0.0
    kept_pos = 0
    for j in range(len(selected)):
        if j in dropped:
            inc = 0.0
        else:
            inc = float(proj[kept_pos]) ** 2 / ss_tot
            kept_pos += 1
        # guard against the running sum drifting past 1 by rounding error
        inc = max(0.0, min(inc, 1.0 - running))
        running += inc
        increments.append(inc)
        r2.append(running)

    return StepwiseResult(
        target_ref=dataset.target_ref,
        steps=selected,
        r2=tuple(r2),
        increments=tuple(increments),
        collinear_steps=tuple(selected[j] for j in dropped),
    )
