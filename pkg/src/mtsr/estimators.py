"""Closed-form thresholding estimators and support rules.

All three penalties admit closed forms or exact support tests on the identity
design: entrywise soft thresholding for the l1 penalty, rowwise Euclidean
shrinkage for the l1/l2 penalty, and a zero-row test on the rowwise l1 norm
for the l1/linf penalty (whose coefficient values we deliberately do not
compute).

Boundary conventions follow the source statements literally: the lasso and
group-l2 support statistics include the boundary (>= lambda), the l1/linf
rule zeroes a row exactly when sum_j |Y_ij| <= lambda.  Ties occur with
probability zero under the model.
"""

from dataclasses import dataclass

import numpy as np

from .model import SupportSet

PROCEDURES = ("lasso", "group_l2", "group_linf_support_only", "union")


@dataclass
class MeanEstimate:
    """Estimated p x k mean matrix with its procedure tag and penalty level.

    lambda_used is in the units native to the procedure: length units for the
    lasso, squared (variance-scale) units for group_l2.
    """

    values: np.ndarray
    procedure: str
    lambda_used: float

    def __post_init__(self):
        if self.procedure not in PROCEDURES:
            raise ValueError(f"unknown procedure tag {self.procedure!r}")


def soft_threshold_scalar(y, lam):
    """(1 - lam/|y|)+ * y, with the convention 0 at y = 0."""
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    ay = abs(y)
    if ay <= lam:
        return 0.0
    return (1.0 - lam / ay) * y


def estimate_lasso(Y, lam):
    """Entrywise soft thresholding, the closed-form l1 solution."""
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    Y = np.asarray(Y, dtype=np.float64)
    ay = np.abs(Y)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(ay > lam, (1.0 - lam / ay) * Y, 0.0)
    return MeanEstimate(values=values, procedure="lasso", lambda_used=float(lam))


def support_lasso(Y, lam):
    """Rows whose max statistic max_j |Y_ij| reaches lambda (boundary included)."""
    Y = np.asarray(Y, dtype=np.float64)
    keep = np.abs(Y).max(axis=1) >= lam
    return SupportSet(tuple(np.flatnonzero(keep)), Y.shape[0])


def estimate_group_l2(Y, lambda_sq):
    """Rowwise group soft thresholding.

    lambda_sq is in squared units, matching the chi-square calibration of the
    support statistic S_k(i) = sum_j Y_ij^2 >= lambda_sq.  The shrinkage
    radius is sqrt(lambda_sq); coefficient values are informational, the
    support test is the contract.
    """
    if lambda_sq < 0:
        raise ValueError(f"lambda_sq must be nonnegative, got {lambda_sq}")
    Y = np.asarray(Y, dtype=np.float64)
    radius = np.sqrt(lambda_sq)
    norms = np.sqrt((Y * Y).sum(axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(norms > radius, 1.0 - radius / norms, 0.0)
    return MeanEstimate(values=factor[:, None] * Y, procedure="group_l2",
                        lambda_used=float(lambda_sq))


def support_group_l2(Y, lambda_sq):
    """Rows with sum_j Y_ij^2 >= lambda_sq (boundary included)."""
    Y = np.asarray(Y, dtype=np.float64)
    keep = (Y * Y).sum(axis=1) >= lambda_sq
    return SupportSet(tuple(np.flatnonzero(keep)), Y.shape[0])


def support_group_linf(Y, lam):
    """Rows with sum_j |Y_ij| strictly above lambda.

    The l1/linf estimate zeroes a row if and only if its l1 norm is <= lambda,
    so the boundary is excluded here.
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    Y = np.asarray(Y, dtype=np.float64)
    keep = np.abs(Y).sum(axis=1) > lam
    return SupportSet(tuple(np.flatnonzero(keep)), Y.shape[0])


def extract_support(estimate):
    """Rows of the estimate with at least one exactly nonzero entry.

    Thresholding produces exact zeros, so no tolerance is involved.
    """
    nz = estimate.values != 0.0
    return SupportSet(tuple(np.flatnonzero(nz.any(axis=1))), estimate.values.shape[0])


def union_support(a, b):
    """Union of two supports over the same number of rows."""
    if a.p != b.p:
        raise ValueError(f"support sets disagree on p: {a.p} != {b.p}")
    return SupportSet(tuple(sorted(set(a.indices) | set(b.indices))), a.p)


def penalized_objective(Y, values, procedure, lam):
    """Least-squares objective 0.5 ||Y - values||_F^2 + penalty.

    lam is in length units for every procedure here (for group_l2 pass the
    shrinkage radius sqrt(lambda_sq)).
    """
    Y = np.asarray(Y, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    fit = 0.5 * ((Y - values) ** 2).sum()
    if procedure == "lasso":
        return fit + lam * np.abs(values).sum()
    if procedure == "group_l2":
        return fit + lam * np.sqrt((values * values).sum(axis=1)).sum()
    if procedure in ("group_linf", "group_linf_support_only"):
        return fit + lam * np.abs(values).max(axis=1).sum()
    raise ValueError(f"unknown procedure tag {procedure!r}")
