"""Dependence-function alternatives to independence on the unit cube.

A model is the independence copula perturbed along a dependence function
Omega: F(x) = prod(x_j) + theta * Omega(x), with density 1 + theta *
omega(x) where omega is the full mixed derivative of Omega.  Valid
dependence functions are nonnegative, vanish on the lower faces and on
the edges through the upper corner, and have a square-integrable mixed
derivative; those conditions are what ``validate`` measures.

Built-ins:

``fgm``        pairwise product-moment perturbation (the multivariate
               Farlie-Gumbel-Morgenstern family).  Stored unnormalized;
               the recorded closed-form integrals are for Omega divided
               by the number of pairs, which is the convention the
               reference tables use.  Efficiencies are scale-free, so
               both scalings give identical e-values.
``gaussian``   first-order expansion of the equicorrelated Gaussian
               copula.  Its density perturbation is unbounded, so it has
               no rejection sampler; simulate from the true copula via
               ``sample_gaussian_copula``.
``optimal_s``  the dependence function attaining the Fisher bound for S.
``optimal_w``  the one attaining the bound for W.

Sampling is a rejection scheme against the uniform proposal.  The random
stream is counter-based: round r of the stream for ``seed`` is an
independently keyed Philox block, and sample i always reads the same
cells of each round, so any partition of the index range across workers
reproduces the identical sample set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Callable, Optional

import numpy as np

from ._normal import inv_norm_cdf, norm_cdf, norm_pdf
from .errors import (
    BadCorrelation,
    InvalidDependence,
    ThetaTooLarge,
    UnboundedScore,
    ValidationError,
)
from .polynomials import Poly, fgm_poly, optimal_s_poly, optimal_w_poly
from .quadrature import (
    EVAL_CAP,
    FunctionalSet,
    default_rule,
    gauss_hermite_rule,
    integrate_cube,
)
from .rank_stats import SampleMatrix

_GRID_BATCH = 1 << 20
_P_FLOOR = 1e-300          # quantile argument floor; maps to z ~ -37
_P_CEIL = 1.0 - 1e-16


@dataclass(frozen=True)
class DependenceFunction:
    """A pairing of Omega (copula perturbation) and omega (its mixed
    derivative, the density perturbation), with optional closed-form
    integrals and evaluation hints."""

    name: str
    m: int
    omega: Callable                      # Omega, (N, m) -> (N,)
    omega_density: Callable              # omega, (N, m) -> (N,)
    closed_form: Optional[FunctionalSet] = None
    closed_form_scale: float = 1.0       # closed_form describes scale * Omega
    poly: Optional[Poly] = None
    poly_density: Optional[Poly] = None
    score_bounded: bool = True           # omega bounded on the cube
    singular_at_faces: bool = False      # omega blows up at the faces
    rejection_samplable: bool = True
    trusted: bool = False                # built-ins skip mandatory validation
    builtin_kind: Optional[str] = None


@dataclass(frozen=True)
class ModelSpec:
    dependence: DependenceFunction
    theta: float
    theta_max: float


@dataclass(frozen=True)
class ValidationReport:
    """Worst-case violations of the dependence-function conditions.

    All entries are magnitudes; a clean function reports numbers at the
    quadrature noise level.
    """

    name: str
    m: int
    grid_points_per_axis: int
    nonnegativity: float        # worst negative excursion of Omega
    boundary: float             # worst |Omega| on lower faces / upper edges
    moment_omega: float         # |integral of omega|
    moment_x_omega: float       # max_j |integral of x_j omega|
    identity_gap: float         # |int Omega - int prod(1-x_j) omega|
    quadrature: str

    @property
    def max_violation(self) -> float:
        return max(self.nonnegativity, self.boundary, self.moment_omega,
                   self.moment_x_omega, self.identity_gap)

    def passed(self, tol: float) -> bool:
        return self.max_violation <= tol

    def to_dict(self) -> dict:
        return {
            "name": self.name, "m": self.m,
            "grid_points_per_axis": self.grid_points_per_axis,
            "nonnegativity": self.nonnegativity, "boundary": self.boundary,
            "moment_omega": self.moment_omega,
            "moment_x_omega": self.moment_x_omega,
            "identity_gap": self.identity_gap, "quadrature": self.quadrature,
        }


# -- built-ins --------------------------------------------------------------

def _poly_dep(name: str, kind: str, m: int, poly: Poly, **kw) -> DependenceFunction:
    density = poly.mixed_derivative()
    return DependenceFunction(
        name=name, m=m, omega=poly, omega_density=density,
        poly=poly, poly_density=density, trusted=True, builtin_kind=kind, **kw)


def _gaussian_callables(m: int):
    def omega(x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        z = inv_norm_cdf(np.clip(pts, _P_FLOOR, _P_CEIL))
        dens = norm_pdf(z)
        out = np.zeros(pts.shape[0])
        for i, j in combinations(range(m), 2):
            rest = [k for k in range(m) if k != i and k != j]
            term = dens[:, i] * dens[:, j]
            if rest:
                term = term * np.prod(pts[:, rest], axis=1)
            out += term
        return out[0] if np.asarray(x).ndim == 1 else out

    def omega_density(x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        z = inv_norm_cdf(np.clip(pts, _P_FLOOR, _P_CEIL))
        s = z.sum(axis=1)
        out = 0.5 * (s * s - (z * z).sum(axis=1))
        return out[0] if np.asarray(x).ndim == 1 else out

    return omega, omega_density


def builtin(kind: str, m: int) -> DependenceFunction:
    """Construct a built-in dependence function of dimension m."""
    if m < 2:
        raise ValidationError("dependence functions need m >= 2")
    key = kind.strip().lower().replace("-", "_")
    npairs = m * (m - 1) // 2

    if key == "fgm":
        closed = FunctionalSet(
            int_omega=1.0 / (9.0 * 2 ** m),
            int_prodx_omega=1.0 / (9.0 * 2 ** m),
            int_pair=1.0 / 36.0,
            fisher=2.0 / (9.0 * m * (m - 1)),
            method="closed_form")
        return _poly_dep("fgm", "fgm", m, fgm_poly(m),
                         closed_form=closed, closed_form_scale=1.0 / npairs)

    if key == "gaussian":
        omega, omega_density = _gaussian_callables(m)
        closed = FunctionalSet(
            int_omega=m * (m - 1) / (2 ** (m + 1) * math.pi),
            int_prodx_omega=m * (m - 1) / (2 ** (m + 1) * math.pi),
            int_pair=npairs / (4.0 * math.pi),
            fisher=m * (m - 1) / 2.0,
            method="closed_form")
        return DependenceFunction(
            name="gaussian", m=m, omega=omega, omega_density=omega_density,
            closed_form=closed, score_bounded=False, singular_at_faces=True,
            rejection_samplable=False, trusted=True, builtin_kind="gaussian")

    if key == "optimal_s":
        return _poly_dep("optimal_s", "optimal_s", m, optimal_s_poly(m))

    if key == "optimal_w":
        return _poly_dep("optimal_w", "optimal_w", m, optimal_w_poly(m))

    raise ValidationError(f"unknown built-in dependence function '{kind}'")


def custom(name: str, m: int, omega: Callable, omega_density: Callable,
           score_bounded: bool = True) -> DependenceFunction:
    """Register a user-supplied (Omega, omega) pair.

    The result is untrusted: ``make_model`` will run ``validate`` on it
    before any sampling is allowed.
    """
    if m < 2:
        raise ValidationError("dependence functions need m >= 2")
    return DependenceFunction(name=name, m=m, omega=omega,
                              omega_density=omega_density,
                              score_bounded=score_bounded)


# -- validation -------------------------------------------------------------

def _tensor_scan(f: Callable, m: int, axis_values: np.ndarray):
    """(min, max) of f over the tensor grid axis_values^m, batched."""
    k = len(axis_values)
    total = k ** m
    if total > EVAL_CAP:
        raise ValidationError("grid scan too large; reduce points per axis")
    lo, hi = math.inf, -math.inf
    for start in range(0, total, _GRID_BATCH):
        idx = np.arange(start, min(start + _GRID_BATCH, total))
        coords = np.empty((len(idx), m))
        rem = idx
        for axis in range(m - 1, -1, -1):
            rem, j = np.divmod(rem, k)
            coords[:, axis] = axis_values[j]
        vals = np.asarray(f(coords), dtype=float)
        lo = min(lo, float(vals.min()))
        hi = max(hi, float(vals.max()))
    return lo, hi


def _moment_rule(dep: DependenceFunction):
    if not dep.singular_at_faces:
        return default_rule(dep.m)
    for k in (40, 32, 24, 16, 12):
        if k ** dep.m <= 4 * 10 ** 6:
            return gauss_hermite_rule(k)
    raise ValidationError("dimension too large for validation quadrature")


def validate(dep: DependenceFunction,
             grid_points_per_axis: int = 21) -> ValidationReport:
    """Measure violations of the model conditions on a grid.

    Checks nonnegativity of Omega, its vanishing on the lower faces and
    on the edges through (1,...,1), the zero moments of omega, and the
    integration-by-parts consistency between int Omega and
    int prod(1-x_j) omega.  The report carries numbers; callers decide
    what tolerance to demand.
    """
    if grid_points_per_axis < 3:
        raise ValidationError("need at least 3 grid points per axis")
    m = dep.m
    grid = np.linspace(0.0, 1.0, grid_points_per_axis)

    omega_min, _ = _tensor_scan(dep.omega, m, grid)
    c1 = max(0.0, -omega_min)

    c2 = 0.0
    for k in range(m):
        _, face_high = _tensor_scan(
            lambda pts, k=k: np.abs(dep.omega(np.insert(pts, k, 0.0, axis=1))),
            m - 1, grid)
        c2 = max(c2, face_high)
        edge = np.ones((grid_points_per_axis, m))
        edge[:, k] = grid
        vals = np.abs(np.asarray(dep.omega(edge), dtype=float))
        c2 = max(c2, float(vals.max()))

    rule = _moment_rule(dep)
    omega = dep.omega_density
    moment = abs(integrate_cube(omega, m, rule))
    moment_x = 0.0
    for j in range(m):
        val = integrate_cube(lambda x, j=j: x[:, j] * omega(x), m, rule)
        moment_x = max(moment_x, abs(val))
    int_omega = integrate_cube(dep.omega, m, rule)
    int_survival = integrate_cube(
        lambda x: np.prod(1.0 - x, axis=1) * omega(x), m, rule)
    gap = abs(int_omega - int_survival)

    return ValidationReport(
        name=dep.name, m=m, grid_points_per_axis=grid_points_per_axis,
        nonnegativity=c1, boundary=c2, moment_omega=moment,
        moment_x_omega=moment_x, identity_gap=gap,
        quadrature=f"{rule.label}:{rule.points_per_axis}")


@lru_cache(maxsize=None)
def _score_extrema(dep: DependenceFunction):
    """Grid (min, max) of the density perturbation.

    Grid resolution follows dimension: 101 points per axis up to m=3,
    21 for m in {4, 5}, 9 beyond.  These are estimates, not proofs; for
    the built-in polynomial functions the perturbation is multilinear
    per axis, so its extrema sit on grid corners and the estimate is in
    fact exact.
    """
    if not dep.score_bounded:
        raise UnboundedScore(
            f"density perturbation of {dep.name} is unbounded")
    m = dep.m
    k = 101 if m <= 3 else (21 if m <= 5 else 9)
    return _tensor_scan(dep.omega_density, m, np.linspace(0.0, 1.0, k))


def theta_max(dep: DependenceFunction) -> float:
    """Largest theta keeping the density 1 + theta*omega nonnegative,
    estimated from the grid minimum of omega.  Infinite when omega is
    nonnegative on the grid."""
    lo, _ = _score_extrema(dep)
    if lo >= 0.0:
        return math.inf
    return 1.0 / abs(lo)


def make_model(dep: DependenceFunction, theta: float,
               validation_tol: float = 1e-8) -> ModelSpec:
    """Bind a dependence function and an association parameter.

    Untrusted (user-registered) dependence functions are validated here;
    that validation is mandatory before any sampling.
    """
    if theta < 0.0:
        raise ValidationError("theta must be nonnegative (one-sided model)")
    if not dep.trusted:
        report = validate(dep)
        if not report.passed(validation_tol):
            raise InvalidDependence(
                f"{dep.name} violates the model conditions "
                f"(worst violation {report.max_violation:.3g})")
    bound = theta_max(dep)
    if theta > bound:
        raise ThetaTooLarge(f"theta={theta} exceeds theta_max={bound:.6g}")
    return ModelSpec(dependence=dep, theta=theta, theta_max=bound)


# -- sampling ---------------------------------------------------------------

_KEY_MASK = (1 << 64) - 1


def _round_block(seed: int, rnd: int, count: int) -> np.ndarray:
    """Uniform block for one rejection round.

    Each (seed, round) pair keys an independent Philox stream, and
    sample i always owns the same cell range of every round, so the
    draw for any index can be reproduced in isolation.
    """
    key = np.array([seed & _KEY_MASK, rnd], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).random(count)


def sample(model: ModelSpec, n: int, seed: int) -> SampleMatrix:
    """n i.i.d. draws from the perturbed-uniform model by rejection.

    Proposals are uniform on the cube; a proposal x is accepted with
    probability (1 + theta*omega(x)) / (1 + theta*sup omega).  The
    envelope constant comes from the grid scan, so acceptance is exact
    up to grid error of the supremum.
    """
    dep = model.dependence
    if not dep.rejection_samplable:
        raise UnboundedScore(
            f"{dep.name} has no rejection sampler; "
            "use sample_gaussian_copula for the gaussian model")
    if n < 1:
        raise ValidationError("need n >= 1")
    m = dep.m
    width = m + 1
    theta = model.theta

    if theta == 0.0:
        block = _round_block(seed, 0, n * width).reshape(n, width)
        return SampleMatrix(block[:, :m].copy())

    sup = max(_score_extrema(dep)[1], 0.0)
    envelope = 1.0 + theta * sup
    out = np.empty((n, m))
    pending = np.arange(n)
    for rnd in range(10000):
        block = _round_block(seed, rnd, n * width).reshape(n, width)
        x = block[pending, :m]
        u = block[pending, m]
        accept = u * envelope <= 1.0 + theta * dep.omega_density(x)
        out[pending[accept]] = x[accept]
        pending = pending[~accept]
        if pending.size == 0:
            return SampleMatrix(out)
    raise ValidationError(
        "rejection sampler failed to converge; is the envelope valid?")


def sample_gaussian_copula(m: int, theta: float, n: int,
                           seed: int) -> SampleMatrix:
    """Draws with uniform margins from the equicorrelated Gaussian copula.

    The underlying normal vector is one common factor plus independent
    noise, Z_j = sqrt(theta) Z0 + sqrt(1-theta) eps_j, which has unit
    variances and all pairwise correlations equal to theta.
    """
    if m < 2:
        raise ValidationError("copula sampling needs m >= 2")
    if not 0.0 <= theta < 1.0:
        raise BadCorrelation("correlation must lie in [0, 1)")
    if n < 1:
        raise ValidationError("need n >= 1")
    width = m + 1
    block = _round_block(seed, 0, n * width).reshape(n, width)
    z = inv_norm_cdf(np.maximum(block, _P_FLOOR))
    common = z[:, :1]
    noise = z[:, 1:]
    return SampleMatrix(
        norm_cdf(math.sqrt(theta) * common + math.sqrt(1.0 - theta) * noise))
