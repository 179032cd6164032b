"""Large-lambda closed forms: solution expansions, eigenvalue seeds, nodal
predictions, and synthetic nodal data.

Everything here is an explicit formula in the problem data and the derived
integrals nu(x) = int_0^x V, K(x) = int_0^x (chi11+chi22)(t,t) dt,
L(x) = int_0^x (chi12-chi21)(t,t) dt.  The expansions keep every term
through order 1/lambda (resp. 1/n^2 for nodes) and drop the remainder;
acceptance tests bound the dropped remainder against the direct integrator.
"""

import math
from dataclasses import dataclass

import numpy as np

from .problem import derived_integrals


@dataclass(frozen=True)
class AsymptoticConstants:
    """n-independent parts of the two 1/lambda_n coefficients entering the
    characteristic-function expansion and the eigenvalue formula."""

    B_hat: float
    C_hat: float


def asymptotic_constants(problem, integrals=None):
    """B_hat, C_hat from the boundary data, m, and K(pi), L(pi)."""
    ints = integrals if integrals is not None else derived_integrals(problem)
    bc = problem.bc
    m = problem.coeffs.m
    th, be = bc.theta, bc.beta
    cross = math.cos(be - th) * math.cos(th + be)
    skew_cross = math.sin(be - th) * math.cos(th + be)
    B_hat = (
        bc.b1 * math.cos(th)
        + bc.b2 * math.sin(th)
        + m * cross
        - ints.K_end / 2.0
        + bc.d1 * math.cos(be)
        + bc.d2 * math.sin(be)
    )
    C_hat = (
        bc.b1 * math.sin(th)
        - bc.b2 * math.cos(th)
        - m * skew_cross
        + m * m * math.pi / 2.0
        - ints.L_end / 2.0
        - bc.d1 * math.sin(be)
        + bc.d2 * math.cos(be)
    )
    return AsymptoticConstants(B_hat=B_hat, C_hat=C_hat)


def phi_asym(problem, x, lam, integrals=None):
    """Expansion of (phi1, phi2)(x, lambda) with all terms through 1/lambda.

    Vectorized over x; lam is a nonzero scalar.  The x = 0 value reproduces
    the initial state exactly (nu(0) = K(0) = L(0) = 0).
    """
    if lam == 0:
        raise ValueError("expansion requires lambda != 0")
    ints = integrals if integrals is not None else derived_integrals(problem)
    bc = problem.bc
    m = problem.coeffs.m
    b1, b2 = bc.b1, bc.b2
    th = bc.theta
    x = np.asarray(x, dtype=float)
    nu = ints.nu_at(x)
    K = ints.K_at(x)
    L = ints.L_at(x)
    A = th + lam * x - nu
    D = lam * x - nu
    sinA, cosA = np.sin(A), np.cos(A)
    sinD, cosD = np.sin(D), np.cos(D)
    mm = m * m

    phi1 = (
        lam * sinA
        + b1 * sinD
        + b2 * cosD
        + m * math.cos(th) * sinD
        + (b1 * m / lam) * sinD
        - (mm * x / 2.0) * cosA
        - (b1 * mm * x / (2.0 * lam)) * cosD
        + (b2 * mm * x / (2.0 * lam)) * sinD
        - (K / 2.0) * sinA
        - (b1 * K / (2.0 * lam)) * sinD
        - (b2 * K / (2.0 * lam)) * cosD
        + (L / 2.0) * cosA
        + (b1 * L / (2.0 * lam)) * cosD
        - (b2 * L / (2.0 * lam)) * sinD
    )
    phi2 = (
        -lam * cosA
        - b1 * cosD
        + b2 * sinD
        - m * math.sin(th) * sinD
        - (b2 * m / lam) * sinD
        - (mm * x / 2.0) * sinA
        - (b1 * mm * x / (2.0 * lam)) * sinD
        - (b2 * mm * x / (2.0 * lam)) * cosD
        + (K / 2.0) * cosA
        + (b1 * K / (2.0 * lam)) * cosD
        - (b2 * K / (2.0 * lam)) * sinD
        + (L / 2.0) * sinA
        + (b1 * L / (2.0 * lam)) * sinD
        + (b2 * L / (2.0 * lam)) * cosD
    )
    if phi1.ndim == 0:
        return float(phi1), float(phi2)
    return phi1, phi2


def char_fn_asym(problem, lam, integrals=None, constants=None):
    """Expansion of Delta(lambda)/lambda^2 with all terms through 1/lambda.

    Vectorized over lam.  Leading term sin(lambda pi + theta - beta); the
    1/lambda terms carry b's, d's, m, K(pi), L(pi).
    """
    ints = integrals if integrals is not None else derived_integrals(problem)
    bc = problem.bc
    m = problem.coeffs.m
    th, be = bc.theta, bc.beta
    lam = np.asarray(lam, dtype=float)
    phase = lam * math.pi
    lead = np.sin(phase + th - be)
    corr = (
        bc.b1 * np.sin(phase - be)
        + bc.b2 * np.cos(phase - be)
        + m * np.sin(phase) * math.cos(th + be)
        - (m * m * math.pi / 2.0) * np.cos(phase + th - be)
        - (ints.K_end / 2.0) * np.sin(phase + th - be)
        + (ints.L_end / 2.0) * np.cos(phase + th - be)
        + bc.d1 * np.sin(phase + th)
        - bc.d2 * np.cos(phase + th)
    )
    out = lead + corr / lam
    return float(out) if out.ndim == 0 else out


def lambda_asym(problem, n, constants=None, integrals=None):
    """Eigenvalue seed lambda_n ~ n + (beta-theta)/pi + C_hat/(n pi)."""
    consts = constants if constants is not None else asymptotic_constants(problem, integrals)
    n_arr = np.asarray(n, dtype=float)
    out = n_arr + (problem.bc.beta - problem.bc.theta) / math.pi + consts.C_hat / (n_arr * math.pi)
    return float(out) if out.ndim == 0 else out


def node_asym(problem, n, j, integrals=None):
    """Predicted j-th node of phi1(., lambda_n) through order 1/n^2.

    The curvature corrections are evaluated at the zeroth-order position
    x* = j pi / n (one-step substitution; iterating changes the value below
    the formula's own accuracy).  j may run from 0 to n; the extreme values
    can fall outside (0, pi) and are the caller's burden to clip.
    """
    n = int(n)
    j = int(j)
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if not (0 <= j <= n):
        raise ValueError(f"node index j = {j} out of range [0, {n}]")
    ints = integrals if integrals is not None else derived_integrals(problem)
    bc = problem.bc
    m = problem.coeffs.m
    th = bc.theta
    skew = bc.beta - bc.theta
    xs = j * math.pi / n
    nu = float(ints.nu_at(xs))
    L = float(ints.L_at(xs))
    bracket = (
        2.0 * bc.b1 * math.sin(th)
        - 2.0 * bc.b2 * math.cos(th)
        + 2.0 * m * math.cos(th) * math.sin(th)
        + m * m * xs
        - L
    )
    return (
        xs
        - xs * skew / (n * math.pi)
        + (nu - th) / n
        - (nu - th) * skew / (n * n * math.pi)
        + bracket / (2.0 * n * n)
    )


def synthesize_nodal_data(problem, n_range, integrals=None):
    """NodalData built from node_asym over n in the inclusive range.

    Evaluates j = 0..n and keeps the values landing strictly inside
    (0, pi); each kept list is sorted ascending.  Tagged source=synthetic.
    """
    from .spectrum import NodalData

    n_lo, n_hi = int(n_range[0]), int(n_range[1])
    if n_lo < 1 or n_hi < n_lo:
        raise ValueError(f"bad index range [{n_lo}, {n_hi}]")
    ints = integrals if integrals is not None else derived_integrals(problem)
    nodes = {}
    for n in range(n_lo, n_hi + 1):
        vals = [node_asym(problem, n, j, integrals=ints) for j in range(0, n + 1)]
        kept = sorted(v for v in vals if 0.0 < v < math.pi)
        nodes[n] = np.asarray(kept)
    return NodalData(nodes=nodes, source="synthetic")
