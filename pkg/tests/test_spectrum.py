import math

import numpy as np
import pytest

from nodalrec.asymptotics import asymptotic_constants
from nodalrec.errors import ResolutionError
from nodalrec.forward import integrate_ivp
from nodalrec.spectrum import (
    NodalData,
    Spectrum,
    compute_spectrum,
    find_eigenvalue,
    find_nodes,
    nodal_data,
)

from _bullets import covers
from conftest import sup


@covers("spectrum.delta-residual-bound")
def test_residual_bound_free(free_spectrum_fine):
    # bisection ran at tol = 1e-11 on |Delta| / max(1, lam^2); the stored
    # residual is the raw |Delta(lambda_n)|
    for n, lam, res in free_spectrum_fine.rows():
        assert res <= 1e-11 * max(1.0, lam * lam)
        assert abs(lam - n) <= 1e-10


def test_residual_bound_worked(worked_spectrum_3060):
    for _, lam, res in worked_spectrum_3060.rows():
        assert res <= 1e-9 * max(1.0, lam * lam)


def test_eigenvalues_strictly_increasing(worked_spectrum_3060):
    lams = [worked_spectrum_3060.entries[n] for n in worked_spectrum_3060.indices]
    gaps = np.diff(lams)
    assert np.all(gaps > 0.9)
    assert np.all(gaps < 1.1)


def test_find_eigenvalue_matches_batch(worked_problem, worked_spectrum_3060):
    # the single-index call sizes its grid for lam ~ 35, the batch for
    # lam ~ 61, so they agree to discretization error, not bisection width
    lam, res = find_eigenvalue(worked_problem, 35)
    assert abs(lam - worked_spectrum_3060.entries[35]) <= 5e-6
    assert res <= 1e-9 * lam * lam


@covers("spectrum.nodes-increasing-alternating")
def test_nodes_increasing_and_phi1_alternates(worked_problem):
    lam, _ = find_eigenvalue(worked_problem, 12)
    nodes = find_nodes(worked_problem, lam)
    assert np.all(np.diff(nodes) > 0)
    assert 0.0 < nodes[0] and nodes[-1] < math.pi
    traj = integrate_ivp(worked_problem, lam)
    edges = np.concatenate(([0.0], nodes, [math.pi]))
    mids = 0.5 * (edges[:-1] + edges[1:])
    idx = np.rint(mids / traj.step).astype(int)
    signs = np.sign(traj.phi1[idx])
    assert np.all(signs != 0)
    assert np.all(signs[:-1] * signs[1:] < 0)


def _predicted_count(problem, n):
    # leading node phase runs from theta to n pi + beta + C_hat / n, one
    # node per integer multiple of pi strictly inside
    C = asymptotic_constants(problem).C_hat
    upper = n * math.pi + problem.bc.beta + C / n
    return sum(1 for j in range(0, 2 * n + 2) if problem.bc.theta < j * math.pi < upper)


@covers("spectrum.node-count")
def test_node_count_free(free_prob, free_numeric_data):
    for n in free_numeric_data.indices:
        assert len(free_numeric_data.nodes[n]) == n - 1
        assert _predicted_count(free_prob, n) == n - 1
    assert not free_numeric_data.failures


def test_node_count_worked(worked_problem, worked_numeric_nodes):
    for n in worked_numeric_nodes.indices:
        assert len(worked_numeric_nodes.nodes[n]) == _predicted_count(worked_problem, n)


def test_node_count_cosine(cosine_problem, cosine_numeric_data):
    for n in cosine_numeric_data.indices:
        assert len(cosine_numeric_data.nodes[n]) == _predicted_count(cosine_problem, n)


def test_free_nodes_uniform(free_numeric_data):
    # exact free nodes sit at j pi / n
    for n in free_numeric_data.indices:
        want = np.array([j * math.pi / n for j in range(1, n)])
        assert sup(free_numeric_data.nodes[n], want) <= 1e-10


@covers("spectrum.corridor-cauchy")
def test_corridor_limit_is_C_hat(worked_problem, worked_spectrum_3060):
    # (lambda_n - n - (beta-theta)/pi) * n pi settles onto C_hat
    consts = asymptotic_constants(worked_problem)
    off = worked_spectrum_3060.offset
    vals = np.array(
        [
            (worked_spectrum_3060.entries[n] - n - off) * n * math.pi
            for n in worked_spectrum_3060.indices
        ]
    )
    top = vals[-16:]
    assert (top.max() - top.min()) <= 0.1 * abs(np.mean(top))
    assert abs(vals[-1] - consts.C_hat) <= 0.01


def test_compute_spectrum_rejects_bad_ranges(free_prob):
    with pytest.raises(ValueError):
        compute_spectrum(free_prob, (3, 10))
    with pytest.raises(ValueError):
        compute_spectrum(free_prob, (10, 5))
    with pytest.raises(ValueError):
        compute_spectrum(free_prob, (5, 10), tol=0.0)


def test_spectrum_container_guards():
    with pytest.raises(ValueError):
        Spectrum(entries={5: 6.5}, residuals={5: 0.0}, brackets={5: (6.0, 7.0)}, offset=0.0)
    with pytest.raises(ValueError):
        Spectrum(
            entries={5: 5.2, 6: 5.1},
            residuals={5: 0.0, 6: 0.0},
            brackets={5: (5.0, 5.5), 6: (5.0, 5.5)},
            offset=0.0,
        )


def test_nodal_container_guards():
    with pytest.raises(ValueError):
        NodalData(nodes={5: np.array([0.5, 0.4])})
    with pytest.raises(ValueError):
        NodalData(nodes={5: np.array([0.5, math.pi])})
    with pytest.raises(ValueError):
        NodalData(nodes={5: np.array([0.5])}, source="guessed")


def test_find_nodes_requires_resolution(worked_problem):
    with pytest.raises(ResolutionError):
        find_nodes(worked_problem, 40.0, points=64)


def test_nodal_data_rejects_bad_ranges(free_prob):
    with pytest.raises(ValueError):
        nodal_data(free_prob, (4, 10))
    with pytest.raises(ValueError):
        nodal_data(free_prob, (12, 10))
