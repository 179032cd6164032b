"""Built-in test problems.

Each constructor returns a fully validated ProblemDefinition.  These are the
acceptance fixtures: a worked example with linear potential and linear
kernel skew, the free operator, a cosine potential for round-trip tests,
and the constant-mass operator whose trajectories have closed forms.
"""

import math

import numpy as np

from .problem import (
    BoundaryParams,
    CoefficientSet,
    KernelMatrix,
    ProblemDefinition,
    SeparableKernel,
    ZeroKernel,
)

PI = math.pi


def _arr(fn):
    return lambda x: fn(np.asarray(x, dtype=float))


def worked_example_problem(b1=0.3, b2=-0.2):
    """theta = beta = pi/4, V(x) = x/2 - pi/4, m = 1, and an upper-right
    kernel chi12(x,t) = pi/2 - (x+t)/2, so L'(x) = pi/2 - x and K = 0.

    Reconstruction targets: theta = beta = pi/4, V as above, m = 1,
    L'(x) = pi/2 - x.  b1, b2 are free (they drop out of every recovered
    quantity) and default to nonzero values so tests exercise their terms.
    """
    bc = BoundaryParams(theta=PI / 4, beta=PI / 4, b1=b1, b2=b2, d1=0.0, d2=0.0)
    chi12 = SeparableKernel(
        terms=(
            (_arr(lambda x: PI / 2 - x / 2), _arr(np.ones_like)),
            (_arr(np.ones_like), _arr(lambda t: -t / 2)),
        )
    )
    coeffs = CoefficientSet(
        V=_arr(lambda x: x / 2 - PI / 4),
        m=1.0,
        chi=KernelMatrix(k11=ZeroKernel(), k12=chi12, k21=ZeroKernel(), k22=ZeroKernel()),
    )
    return ProblemDefinition(bc=bc, coeffs=coeffs)


def worked_example_reference():
    """Printed reconstruction targets of the worked example."""
    return {
        "theta": PI / 4,
        "beta": PI / 4,
        "m": 1.0,
        "V": _arr(lambda x: x / 2 - PI / 4),
        "Lprime": _arr(lambda x: PI / 2 - x),
        "f": _arr(lambda x: x * x / 4 - PI * x / 4 - PI / 4),
        "nu": _arr(lambda x: x * x / 4 - PI * x / 4),
        "L": _arr(lambda x: PI * x / 2 - x * x / 2),
    }


def free_problem(theta=0.0, beta=0.0):
    """All coefficients zero; Delta(lambda) = lambda^2 sin(lambda pi - beta + theta)
    up to the boundary rotation, eigenvalues exactly n + (beta-theta)/pi."""
    bc = BoundaryParams(theta=theta, beta=beta, b1=0.0, b2=0.0, d1=0.0, d2=0.0)
    coeffs = CoefficientSet(
        V=_arr(np.zeros_like),
        m=0.0,
        chi=KernelMatrix(ZeroKernel(), ZeroKernel(), ZeroKernel(), ZeroKernel()),
    )
    return ProblemDefinition(bc=bc, coeffs=coeffs)


def cosine_roundtrip_problem():
    """V(x) = cos x, m = 0.5, theta = 0.3, beta = 0.1, and
    chi12(x,t) = sin((x+t)/2) - 2/pi, so L'(x) = sin x - 2/pi with
    L(pi) = 0 (the normalization mass recovery needs)."""
    bc = BoundaryParams(theta=0.3, beta=0.1, b1=0.0, b2=0.0, d1=0.0, d2=0.0)
    chi12 = SeparableKernel(
        terms=(
            (_arr(lambda x: np.sin(x / 2)), _arr(lambda t: np.cos(t / 2))),
            (_arr(lambda x: np.cos(x / 2)), _arr(lambda t: np.sin(t / 2))),
            (_arr(lambda x: np.full_like(x, -2 / PI)), _arr(np.ones_like)),
        )
    )
    coeffs = CoefficientSet(
        V=_arr(np.cos),
        m=0.5,
        chi=KernelMatrix(k11=ZeroKernel(), k12=chi12, k21=ZeroKernel(), k22=ZeroKernel()),
    )
    return ProblemDefinition(bc=bc, coeffs=coeffs)


def cosine_roundtrip_reference():
    return {
        "theta": 0.3,
        "beta": 0.1,
        "m": 0.5,
        "V": _arr(np.cos),
        "Lprime": _arr(lambda x: np.sin(x) - 2 / PI),
        "f": _arr(lambda x: 0.2 * x / PI + np.sin(x) - 0.3),
        "nu": _arr(np.sin),
        "L": _arr(lambda x: 1 - np.cos(x) - 2 * x / PI),
    }


def constant_mass_problem(m=1.0):
    """V = 0, chi = 0, theta = beta = 0, mass m: the trajectory has the
    closed form phi1 = lam(lam+m)/rho sin(rho x), phi2 = -lam cos(rho x)
    with rho = sqrt(lam^2 - m^2); eigenvalues are sqrt(k^2 + m^2)."""
    bc = BoundaryParams(theta=0.0, beta=0.0, b1=0.0, b2=0.0, d1=0.0, d2=0.0)
    coeffs = CoefficientSet(
        V=_arr(np.zeros_like),
        m=float(m),
        chi=KernelMatrix(ZeroKernel(), ZeroKernel(), ZeroKernel(), ZeroKernel()),
    )
    return ProblemDefinition(bc=bc, coeffs=coeffs)


def constant_mass_exact(m, lam, x):
    """Closed-form (phi1, phi2) for constant_mass_problem, |lam| > |m|."""
    x = np.asarray(x, dtype=float)
    rho = math.sqrt(lam * lam - m * m)
    phi1 = lam * (lam + m) / rho * np.sin(rho * x)
    phi2 = -lam * np.cos(rho * x)
    return phi1, phi2
