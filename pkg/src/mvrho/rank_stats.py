"""Multivariate Spearman-type concordance statistics.

Three statistics are computed from an n x m rank matrix:

* ``S`` averages products of the antiranks (n+1-R_ij) across margins,
* ``W`` averages products of the ranks themselves,
* ``V`` is the average pairwise classical Spearman coefficient,

each centered by ((n+1)/2)^m and, for S and W, scaled by the normalizer
C_m = mean(i^m) - ((n+1)/2)^m so that perfectly concordant data score 1.
All three collapse to the classical Spearman rho at m = 2.

Values are computed in exact integer/rational arithmetic and converted
to float only at the end, so algebraically equal configurations produce
bit-identical results.  ``u_statistic`` is the exhaustive concordance
U-statistic used as an independent oracle for S.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations
from typing import Optional

import numpy as np

from ._normal import inv_norm_cdf, norm_cdf
from .errors import TiesPresent, TooLarge, UnsupportedKind, ValidationError

U_TERM_CAP = 10 ** 8


@dataclass(frozen=True)
class SampleMatrix:
    """n x m real observations; rows are subjects, columns are margins."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 2:
            raise ValidationError("sample must be a 2-D array")
        n, m = arr.shape
        if n < 2 or m < 2:
            raise ValidationError("sample needs n >= 2 rows and m >= 2 columns")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("sample entries must be finite")
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def m(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class RankMatrix:
    """Columnwise ranks; every column is a permutation of 1..n."""

    ranks: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.ranks, dtype=np.int64)
        if arr.ndim != 2:
            raise ValidationError("ranks must be a 2-D array")
        n, m = arr.shape
        if n < 2 or m < 2:
            raise ValidationError("ranks need n >= 2 rows and m >= 2 columns")
        expected = np.arange(1, n + 1)
        for j in range(m):
            if not np.array_equal(np.sort(arr[:, j]), expected):
                raise ValidationError(
                    f"column {j} is not a permutation of 1..{n}")
        object.__setattr__(self, "ranks", arr)

    @property
    def n(self) -> int:
        return self.ranks.shape[0]

    @property
    def m(self) -> int:
        return self.ranks.shape[1]


@dataclass(frozen=True)
class StatValue:
    kind: str           # one of S, W, V, U
    value: float
    n: int
    m: int
    exact: Optional[Fraction] = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "value": self.value, "n": self.n, "m": self.m}
        if self.exact is not None:
            d["exact"] = str(self.exact)
        return d


def compute_ranks(sample: SampleMatrix, tie_policy: str = "reject",
                  seed: Optional[int] = None) -> RankMatrix:
    """Columnwise ranks of a sample.

    ``tie_policy='reject'`` raises TiesPresent on any tied column (the
    model assumes absolutely continuous margins); ``'random'`` breaks
    ties by a seeded shuffle and requires ``seed``.
    """
    if tie_policy not in ("reject", "random"):
        raise ValidationError("tie_policy must be 'reject' or 'random'")
    data = sample.data
    n, m = data.shape
    ranks = np.empty((n, m), dtype=np.int64)
    rng = None
    if tie_policy == "random":
        if seed is None:
            raise ValidationError("random tie-breaking requires a seed")
        rng = np.random.default_rng(seed)
    for j in range(m):
        col = data[:, j]
        has_ties = np.unique(col).size < n
        if has_ties and tie_policy == "reject":
            raise TiesPresent(f"ties in column {j}")
        if has_ties:
            order = np.lexsort((rng.random(n), col))
        else:
            order = np.argsort(col, kind="stable")
        ranks[order, j] = np.arange(1, n + 1)
    return RankMatrix(ranks)


def _normalizer_fraction(n: int, m: int) -> Fraction:
    power_sum = sum(i ** m for i in range(1, n + 1))
    return Fraction(power_sum, n) - Fraction(n + 1, 2) ** m


def normalizer(n: int, m: int) -> float:
    """C_m = mean of i^m over i=1..n, minus ((n+1)/2)^m."""
    if n < 2 or m < 2:
        raise ValidationError("normalizer needs n >= 2 and m >= 2")
    return float(_normalizer_fraction(n, m))


def _sum_of_products(values: np.ndarray) -> int:
    """Exact sum over rows of the product across columns (integer input)."""
    n, m = values.shape
    # int64 is exact as long as the largest possible row product times n
    # stays below 2^62; otherwise fall back to Python big integers.
    if n * (n + 1) ** m < 2 ** 62:
        return int(np.sum(np.prod(values, axis=1)))
    return sum(math.prod(int(v) for v in row) for row in values)


def _centered_stat(total: int, n: int, m: int) -> Fraction:
    return (Fraction(total, n) - Fraction(n + 1, 2) ** m) \
        / _normalizer_fraction(n, m)


def stat_S(ranks: RankMatrix) -> StatValue:
    """Concordance statistic built on antirank products (n+1-R_ij)."""
    n, m = ranks.n, ranks.m
    total = _sum_of_products(n + 1 - ranks.ranks)
    exact = _centered_stat(total, n, m)
    return StatValue("S", float(exact), n, m, exact)


def stat_W(ranks: RankMatrix) -> StatValue:
    """Concordance statistic built on rank products."""
    n, m = ranks.n, ranks.m
    total = _sum_of_products(ranks.ranks)
    exact = _centered_stat(total, n, m)
    return StatValue("W", float(exact), n, m, exact)


def stat_V(ranks: RankMatrix) -> StatValue:
    """Average pairwise classical Spearman coefficient."""
    n, m = ranks.n, ranks.m
    pair_total = 0
    r = ranks.ranks
    for i, j in combinations(range(m), 2):
        # int64 dot is exact here: the sum is at most n * n^2 << 2^63
        pair_total += int(np.dot(r[:, i], r[:, j]))
    npairs = m * (m - 1) // 2
    exact = Fraction(12, n * n - 1) * (
        Fraction(pair_total, n * npairs) - Fraction(n + 1, 2) ** 2)
    return StatValue("V", float(exact), n, m, exact)


def sigma_sq_null(m: int) -> float:
    """Null variance of sqrt(n) * S in the large-sample limit."""
    return (m + 1) ** 2 / (2 ** m - (m + 1)) ** 2 \
        * ((4.0 / 3.0) ** m - m / 3.0 - 1.0)


def standardize(stat: StatValue, alpha: float = 0.05):
    """One-sided asymptotic test of independence based on S.

    Returns (z, p_value, reject) with z = sqrt(n) * S / sigma_m(0).
    Only kind S is supported: the null scaling constants for W and V are
    not part of this package's scope.
    """
    if stat.kind != "S":
        raise UnsupportedKind(
            f"standardize supports kind S only, got {stat.kind}")
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    sigma = math.sqrt(sigma_sq_null(stat.m))
    z = math.sqrt(stat.n) * stat.value / sigma
    p = 1.0 - norm_cdf(z)
    return z, p, z > inv_norm_cdf(1.0 - alpha)


def u_statistic(sample: SampleMatrix) -> StatValue:
    """Exhaustive concordance U-statistic over (m+1)-point subsets.

    Averages the symmetrized dominance kernel over every subset of m+1
    observations and all orderings within the subset.  This is the
    correctness oracle for S, not a production path: the term count
    C(n, m+1) * (m+1)! is capped at 1e8.
    """
    n, m = sample.n, sample.m
    if n < m + 1:
        raise ValidationError("u_statistic needs n >= m + 1")
    n_subsets = math.comb(n, m + 1)
    n_terms = n_subsets * math.factorial(m + 1)
    if n_terms > U_TERM_CAP:
        raise TooLarge(f"{n_terms} kernel terms exceed the cap {U_TERM_CAP}")

    data = sample.data
    subsets = np.fromiter(
        (i for c in combinations(range(n), m + 1) for i in c),
        dtype=np.int64, count=n_subsets * (m + 1)).reshape(n_subsets, m + 1)

    hits = 0
    for perm in permutations(range(m + 1)):
        last = subsets[:, perm[m]]
        ok = np.ones(n_subsets, dtype=bool)
        for j in range(m):
            ok &= data[last, j] < data[subsets[:, perm[j]], j]
        hits += int(ok.sum())

    c_m = Fraction(1, 2 ** m)
    d_m = Fraction(1, m + 1) - c_m
    exact = (Fraction(hits, n_terms) - c_m) / d_m
    return StatValue("U", float(exact), n, m, exact)
