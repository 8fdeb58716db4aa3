"""Numerical integration over the unit hypercube.

Three routes are provided and cross-checked against each other in the
test suite:

* tensor-product Gauss-Legendre rules, exact for the polynomial
  dependence functions;
* a transformed Gauss-Hermite rule that substitutes x = Phi(z) per axis,
  for integrands built from the normal quantile function (which is
  square-integrable but unbounded at the faces of the cube);
* plain Monte Carlo with a standard-error estimate.

``functionals`` evaluates the four integrals every slope/efficiency
formula consumes: the integral of the dependence function, its product
moment against prod(x), the summed pairwise moments, and the Fisher
information (the squared density perturbation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.hermite import hermgauss

from ._normal import norm_cdf
from .errors import (
    DomainError,
    MissingClosedForm,
    SingularIntegrand,
    TooLarge,
    ValidationError,
)

EVAL_CAP = 10 ** 8
_BATCH = 1 << 20


@dataclass(frozen=True)
class QuadratureRule:
    """1-D nodes/weights on (0,1); tensorized by ``integrate_cube``."""

    points_per_axis: int
    nodes: np.ndarray
    weights: np.ndarray
    label: str = "gauss"

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "weights",
                           np.asarray(self.weights, dtype=float))


@dataclass(frozen=True)
class FunctionalSet:
    """The four cube integrals feeding the slope and efficiency formulas."""

    int_omega: float            # integral of the dependence function
    int_prodx_omega: float      # integral of prod(x_j) * density perturbation
    int_pair: float             # sum over i<j of integral of x_i x_j * omega
    fisher: float               # integral of omega^2
    method: str = "unspecified"
    std_errors: Optional[dict] = field(default=None, compare=False)

    def to_dict(self) -> dict:
        d = {
            "int_omega": self.int_omega,
            "int_prodx_omega": self.int_prodx_omega,
            "int_pair": self.int_pair,
            "fisher": self.fisher,
            "method": self.method,
        }
        if self.std_errors is not None:
            d["std_errors"] = dict(self.std_errors)
        return d


def legendre_value_and_derivative(k: int, x: np.ndarray):
    """P_k(x) and P_k'(x) on [-1,1] by the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    if k == 0:
        return p_prev, np.zeros_like(x)
    for deg in range(2, k + 1):
        p_prev, p = p, ((2 * deg - 1) * x * p - (deg - 1) * p_prev) / deg
    dp = k * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def gauss_rule(k: int) -> QuadratureRule:
    """Gauss-Legendre rule mapped to [0,1].

    Nodes are found by Newton iteration on P_k starting from the Chebyshev
    initial guesses; the iteration converges to ~1e-15 in a few steps.
    """
    if not 1 <= k <= 64:
        raise ValidationError("gauss rule order must be in [1, 64]")
    if k == 1:
        return QuadratureRule(1, np.array([0.5]), np.array([1.0]))
    i = np.arange(1, k + 1)
    x = np.cos(math.pi * (i - 0.25) / (k + 0.5))
    for _ in range(100):
        p, dp = legendre_value_and_derivative(k, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    _, dp = legendre_value_and_derivative(k, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return QuadratureRule(k, (x[order] + 1.0) / 2.0, w[order] / 2.0)


def gauss_hermite_rule(k: int) -> QuadratureRule:
    """Gauss-Hermite rule pushed through x = Phi(z).

    Integrates f over [0,1] as the expectation of f(Phi(Z)) for standard
    normal Z; polynomial functions of the normal quantile are integrated
    exactly, which removes the face singularity of quantile-based
    integrands.
    """
    if not 1 <= k <= 64:
        raise ValidationError("hermite rule order must be in [1, 64]")
    t, w = hermgauss(k)
    nodes = norm_cdf(math.sqrt(2.0) * t)
    return QuadratureRule(k, nodes, w / math.sqrt(math.pi),
                          label="hermite")


def integrate_cube(f: Callable, m: int, rule: QuadratureRule) -> float:
    """Tensor-product quadrature of ``f`` over [0,1]^m.

    ``f`` receives an (N, m) array and returns N values.  Evaluation is
    batched so large tensor grids never materialize at once; grids beyond
    ``EVAL_CAP`` nodes are refused.
    """
    k = rule.points_per_axis
    total = k ** m
    if total > EVAL_CAP:
        raise TooLarge(
            f"tensor rule needs {total} evaluations (cap {EVAL_CAP})")
    acc = 0.0
    for start in range(0, total, _BATCH):
        idx = np.arange(start, min(start + _BATCH, total))
        coords = np.empty((len(idx), m))
        wprod = np.ones(len(idx))
        rem = idx
        for axis in range(m - 1, -1, -1):
            rem, j = np.divmod(rem, k)
            coords[:, axis] = rule.nodes[j]
            wprod *= rule.weights[j]
        acc += float(np.dot(wprod, np.asarray(f(coords), dtype=float)))
    return acc


def mc_integrate(f: Callable, m: int, samples: int, seed: int):
    """Plain Monte Carlo mean over uniform points; returns (value, se)."""
    if samples < 1000:
        raise ValidationError("mc_integrate needs at least 1000 samples")
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        n = min(_BATCH, samples - done)
        vals = np.asarray(f(rng.random((n, m))), dtype=float)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += n
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return mean, math.sqrt(var / samples)


def default_rule(m: int) -> QuadratureRule:
    """Gauss rule exact for every built-in polynomial dependence function."""
    return gauss_rule(max(6, m + 2))


def _pair_weight(x: np.ndarray) -> np.ndarray:
    """sum_{i<j} x_i x_j, computed as ((sum x)^2 - sum x^2)/2."""
    s = x.sum(axis=1)
    return 0.5 * (s * s - (x * x).sum(axis=1))


def _integrands(dep):
    omega = dep.omega_density
    return {
        "int_omega": dep.omega,
        "int_prodx_omega": lambda x: np.prod(x, axis=1) * omega(x),
        "int_pair": lambda x: _pair_weight(x) * omega(x),
        "fisher": lambda x: omega(x) ** 2,
    }


def functionals(dep, method: str = "auto", seed: Optional[int] = None
                ) -> FunctionalSet:
    """Evaluate the four slope/efficiency integrals of a dependence function.

    ``method`` is one of ``closed_form``, ``gauss[:K]``, ``hermite[:K]``
    (the transformed rule), ``mc:N`` (requires ``seed``), or ``auto``
    which prefers closed forms, then the rule matching the integrand's
    smoothness.  Note that closed forms are reported at the scale the
    source tables use, which for some built-ins differs from the stored
    dependence function by a constant; efficiencies are unaffected.
    """
    name, _, arg = method.partition(":")
    if name == "auto":
        if dep.closed_form is not None:
            name = "closed_form"
        elif dep.singular_at_faces:
            name = "hermite"
        else:
            name = "gauss"

    if name in ("closed_form", "closed"):
        if dep.closed_form is None:
            raise MissingClosedForm(
                f"no closed-form integrals recorded for {dep.name}")
        return dep.closed_form

    if name == "gauss":
        if dep.singular_at_faces:
            raise SingularIntegrand(
                f"{dep.name} is unbounded at the cube faces; "
                "use the transformed hermite rule")
        rule = gauss_rule(int(arg)) if arg else default_rule(dep.m)
    elif name == "hermite":
        rule = gauss_hermite_rule(int(arg) if arg else 40)
    elif name == "mc":
        if seed is None:
            raise ValidationError("mc integration requires a seed")
        n = int(arg) if arg else 10 ** 6
        values = {}
        errors = {}
        for i, (key, f) in enumerate(_integrands(dep).items()):
            values[key], errors[key] = mc_integrate(f, dep.m, n, seed + i)
        return FunctionalSet(values["int_omega"], values["int_prodx_omega"],
                             values["int_pair"], values["fisher"],
                             method=f"mc:{n}", std_errors=errors)
    else:
        raise ValidationError(f"unknown integration method '{method}'")

    vals = {key: integrate_cube(f, dep.m, rule)
            for key, f in _integrands(dep).items()}
    return FunctionalSet(vals["int_omega"], vals["int_prodx_omega"],
                         vals["int_pair"], vals["fisher"],
                         method=f"{rule.label}:{rule.points_per_axis}")
