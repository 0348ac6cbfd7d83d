"""Pointwise energy densities for the saturating-gradient field theory.

The primal density, as a function of the squared gradient x = |grad u|^2, is

    f(x) = 1 - sqrt(1 - x)   for x in [0, 1],      f(x) = +inf  for x > 1.

Its Maclaurin coefficients are c_1 = 1/2 and c_k = (2k-3)!!/(2k)!! for k > 1;
all are positive and strictly decreasing, so the Taylor polynomials f_K form a
pointwise increasing family of smooth convex functions converging to f on
[0, 1] and diverging for x > 1.  The graduated minimization scheme in
:mod:`bornfield.solver` replaces f by f_K along an increasing K schedule.

The dual density, as a function of the displacement field V, is

    g(V) = sqrt(1 + |V|^2) - 1,

the Legendre-Fenchel partner of the primal density under the pairing
p <-> V = -p/sqrt(1-|p|^2).  For |p| < 1 the two sides satisfy the pointwise
identity  f(|p|^2) + g(|V|) = -V.p  with V the image of p, which is the basis
of the duality-gap certificate.

Everything here is scalar/ndarray-polymorphic and stateless after
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SingularGradientError",
    "TaylorEnergy",
    "coefficient",
    "taylor_coefficients",
    "f_exact",
    "f_exact_prime",
    "dual_density",
    "grad_to_dual",
    "dual_to_grad",
]


class SingularGradientError(ValueError):
    """Raised when a gradient reaches or exceeds the causal bound |p| = 1.

    Carries the offending location (grid index or coordinate tuple) when the
    caller knows it.
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


def coefficient(k: int) -> float:
    """Maclaurin coefficient of the primal density.

    Returns 0 for k = 0, 1/2 for k = 1 and (2k-3)!!/(2k)!! for k > 1,
    evaluated through the overflow-free recurrence
    c_{k+1} = c_k * (2k-1) / (2k+2).
    """
    if k < 0:
        raise ValueError(f"coefficient index must be >= 0, got {k}")
    if k == 0:
        return 0.0
    c = 0.5
    for j in range(1, k):
        c *= (2 * j - 1) / (2 * j + 2)
    return c


def taylor_coefficients(order: int) -> np.ndarray:
    """Coefficients c_1..c_K as an array of length ``order``."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    c = np.empty(order)
    c[0] = 0.5
    for k in range(1, order):
        c[k] = c[k - 1] * (2 * k - 1) / (2 * k + 2)
    return c


@dataclass(frozen=True)
class TaylorEnergy:
    """Degree-K Maclaurin polynomial of the primal density.

    The polynomial has no constant term; coefficients are precomputed once
    (factorials would overflow past k ~ 85, the recurrence does not).
    """

    order: int
    coefficients: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.order < 2:
            # The K=1 member (pure Dirichlet energy) cannot support point
            # sources; the schedule must start at K >= 2.
            raise ValueError(f"Taylor order must be >= 2, got {self.order}")
        object.__setattr__(self, "coefficients", taylor_coefficients(self.order))

    def value(self, x):
        """Horner evaluation of sum_k c_k x^k (finite for any x >= 0)."""
        x = np.asarray(x, dtype=float)
        if np.any(x < -0.0):
            raise ValueError("squared gradient must be nonnegative")
        acc = np.zeros_like(x)
        for c in self.coefficients[::-1]:
            acc = x * (c + acc)
        return acc if acc.ndim else float(acc)

    def derivative(self, x):
        """d/dx of the polynomial: sum_k k c_k x^(k-1)."""
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x)
        c = self.coefficients
        for k in range(self.order, 0, -1):
            acc = acc * x + k * c[k - 1]
        return acc if acc.ndim else float(acc)

    def second_derivative(self, x):
        x = np.asarray(x, dtype=float)
        acc = np.zeros_like(x)
        c = self.coefficients
        for k in range(self.order, 1, -1):
            acc = acc * x + k * (k - 1) * c[k - 1]
        return acc if acc.ndim else float(acc)


def f_exact(x):
    """Extended-real primal density: 1 - sqrt(1-x) on [0,1], +inf beyond.

    Computed as x / (1 + sqrt(1-x)), which is exact algebra and free of the
    cancellation the naive form suffers for x -> 0.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("squared gradient must be nonnegative")
    inside = x <= 1.0
    root = np.sqrt(np.where(inside, 1.0 - x, 0.0))
    out = np.where(inside, x / (1.0 + root), np.inf)
    return out if out.ndim else float(out)


def f_exact_prime(x):
    """f'(x) = 1 / (2 sqrt(1-x)) for x < 1; diverges at x = 1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = 0.5 / np.sqrt(np.maximum(1.0 - x, 0.0))
    return out if out.ndim else float(out)


def f_exact_second(x):
    """f''(x) = 1 / (4 (1-x)^{3/2}) for x < 1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = 0.25 / np.maximum(1.0 - x, 0.0) ** 1.5
    return out if out.ndim else float(out)


def dual_density_sq(m2):
    """g as a function of the squared magnitude: sqrt(1+m2) - 1, stably."""
    m2 = np.asarray(m2, dtype=float)
    out = m2 / (1.0 + np.sqrt(1.0 + m2))
    return out if out.ndim else float(out)


def dual_density(v) -> float:
    """Dual density g(V) = sqrt(1 + |V|^2) - 1 of a displacement vector."""
    v = np.asarray(v, dtype=float)
    return dual_density_sq(np.dot(v, v))


def grad_to_dual(p, location=None):
    """Map a gradient p (|p| < 1 strictly) to the displacement U.

    U = -p / sqrt(1 - |p|^2).  The pointwise Legendre identity
    g(U) = 1/sqrt(1-|p|^2) - 1 then holds, and |U| -> inf exactly as
    |p| -> 1 (the lightcone limit).
    """
    p = np.asarray(p, dtype=float)
    m2 = float(np.dot(p, p))
    if m2 >= 1.0:
        raise SingularGradientError(
            f"gradient magnitude {np.sqrt(m2):.17g} is not < 1", location=location
        )
    return -p / np.sqrt(1.0 - m2)


def dual_to_grad(v):
    """Inverse map: grad u = -U / sqrt(1 + |U|^2); always lands in |p| < 1."""
    v = np.asarray(v, dtype=float)
    return -v / np.sqrt(1.0 + np.dot(v, v))
