import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nodalrec.errors import InvalidProblemError, ProblemFormatError
from nodalrec.fixtures import (
    cosine_roundtrip_problem,
    free_problem,
    worked_example_problem,
)
from nodalrec.forward import _coefficient_tables
from nodalrec.problem import (
    BoundaryParams,
    CoefficientSet,
    GeneralKernel,
    KernelMatrix,
    ProblemDefinition,
    SeparableKernel,
    ZeroKernel,
    derived_integrals,
    ensure_valid,
    problem_from_mapping,
    validate,
)

from _bullets import covers


def test_angle_branch_enforced():
    with pytest.raises(InvalidProblemError):
        BoundaryParams(theta=2.0)
    with pytest.raises(InvalidProblemError):
        BoundaryParams(beta=-math.pi / 2)  # open at -pi/2
    BoundaryParams(theta=math.pi / 2)  # closed at +pi/2


def test_nonfinite_rejected():
    with pytest.raises(InvalidProblemError):
        BoundaryParams(b1=float("nan"))
    with pytest.raises(InvalidProblemError):
        CoefficientSet(m=float("inf"))


def test_zero_mean_potential_enforced():
    bad = ProblemDefinition(coeffs=CoefficientSet(V=lambda x: np.cos(x) + 0.5))
    report = validate(bad)
    assert not report.ok
    assert report.failures()
    with pytest.raises(InvalidProblemError):
        ensure_valid(bad)
    ensure_valid(cosine_roundtrip_problem())


def test_kernel_matrix_modes():
    assert KernelMatrix().mode == "zero"
    sep = KernelMatrix(k12=SeparableKernel([(lambda x: x, lambda t: t)]))
    assert sep.mode == "separable"
    gen = KernelMatrix(k21=GeneralKernel(lambda x, t: x * t))
    assert gen.mode == "general"
    assert isinstance(KernelMatrix(k11=0).k11, ZeroKernel)


def test_diag_trace_and_skew():
    chi = worked_example_problem().coeffs.chi
    t = np.linspace(0, math.pi, 9)
    # chi12(x, t) = pi/2 - (x+t)/2 on the diagonal: pi/2 - t; chi21 = 0
    assert np.allclose(chi.diag_skew(t), math.pi / 2 - t)
    assert np.allclose(chi.diag_trace(t), 0.0)


@covers("problem.integral-endpoints")
@pytest.mark.parametrize("problem", [
    worked_example_problem(),
    cosine_roundtrip_problem(),
    free_problem(),
])
def test_derived_integral_endpoints(problem):
    ints = derived_integrals(problem)
    assert ints.nu[0] == 0.0
    assert ints.K[0] == 0.0
    assert ints.L[0] == 0.0
    assert abs(ints.nu[-1]) <= 1e-6  # zero-mean V up to quadrature error


def test_derived_integrals_match_closed_forms():
    from nodalrec.fixtures import worked_example_reference

    problem = worked_example_problem()
    ref = worked_example_reference()
    ints = derived_integrals(problem)
    assert np.max(np.abs(ints.nu - ref["nu"](ints.grid))) < 1e-12  # trapezoid exact on linear V
    assert np.max(np.abs(ints.L - ref["L"](ints.grid))) < 1e-12
    assert np.max(np.abs(ints.K)) < 1e-12


@covers("problem.p-minus-r")
@given(
    m=st.floats(min_value=-5, max_value=5, allow_nan=False),
    a=st.floats(min_value=-3, max_value=3, allow_nan=False),
)
def test_p_minus_r_is_twice_m(m, a):
    problem = ProblemDefinition(coeffs=CoefficientSet(
        V=lambda x, a=a: a * (np.cos(x) ** 2 - 0.5), m=m))
    tab = _coefficient_tables(problem, 64)
    tol = 8 * np.finfo(float).eps * max(1.0, abs(m), abs(a))
    for node in ("node", "mid"):
        diff = tab[f"p_{node}"] - tab[f"r_{node}"]
        assert np.max(np.abs(diff - 2 * m)) <= tol


@covers("problem.quadrature-doubling")
def test_quadrature_doubling_factor():
    problem = cosine_roundtrip_problem()
    ref = derived_integrals(problem, grid_size=4097)

    def err(gs, field):
        ints = derived_integrals(problem, grid_size=gs)
        stride = 4096 // (gs - 1)
        return np.max(np.abs(getattr(ints, field) - getattr(ref, field)[::stride]))

    for field in ("nu", "L"):
        ratio = err(129, field) / err(257, field)
        assert 3.0 < ratio < 5.5, (field, ratio)


def test_yaml_mapping_loader_roundtrip():
    doc = {
        "bc": {"theta": 0.3, "beta": 0.1},
        "coeffs": {
            "V": "cos(x)",
            "m": 0.5,
            "chi_separable": {"12": [
                {"a": "sin(x/2)", "b": "cos(t/2)"},
                {"a": "cos(x/2)", "b": "sin(t/2)"},
                {"a": "-2/pi", "b": "1"},
            ]},
        },
    }
    problem = problem_from_mapping(doc)
    ensure_valid(problem)
    ref = cosine_roundtrip_problem()
    xs = np.linspace(0, math.pi, 11)
    assert np.allclose(problem.coeffs.V(xs), ref.coeffs.V(xs))
    assert np.allclose(
        problem.coeffs.chi.k12.eval(xs[:, None], xs[None, :]),
        ref.coeffs.chi.k12.eval(xs[:, None], xs[None, :]),
    )


@pytest.mark.parametrize("doc, fragment", [
    ({}, "missing required key 'bc'"),
    ({"bc": 3}, "'bc' must be a mapping"),
    ({"bc": {"theta": 0, "beta": 0, "gamma": 1}}, "unknown bc keys"),
    ({"bc": {"theta": 0, "beta": 0}, "coeffs": {"chi": {"13": "x"}}}, "unknown kernel entry"),
    ({"bc": {"theta": 0, "beta": 0},
      "coeffs": {"chi": {"12": "x"}, "chi_separable": {"12": [{"a": "x", "b": "t"}]}}},
     "both"),
], ids=["no-bc", "bc-scalar", "bc-extra", "bad-entry", "dual-form"])
def test_mapping_loader_rejects(doc, fragment):
    with pytest.raises(ProblemFormatError) as info:
        problem_from_mapping(doc)
    assert fragment in str(info.value)
