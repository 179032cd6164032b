import math

import numpy as np
import pytest

from nodalrec.asymptotics import synthesize_nodal_data
from nodalrec.errors import (
    CalibrationError,
    InsufficientDataError,
    MassRecoveryError,
    StageQualityError,
)
from nodalrec.fixtures import worked_example_problem, worked_example_reference
from nodalrec.inverse import (
    ReconstructOptions,
    SampledCurve,
    calibrate_offset,
    differentiate,
    f_estimate,
    g_estimate,
    reconstruct,
)
from nodalrec.problem import (
    BoundaryParams,
    CoefficientSet,
    KernelMatrix,
    ProblemDefinition,
    SeparableKernel,
    ZeroKernel,
)
from nodalrec.spectrum import NodalData

from _bullets import covers
from conftest import sup

WORKED_G0 = 0.8535533905932738
WORKED_GPI = WORKED_G0 + math.pi / 2


def _unit_kernel_problem():
    # chi12(x, t) = 1 with m = 0 gives L(pi) = pi, so the mass radicand
    # 2(g(pi) - g(0))/pi sits at exactly -1: the L(pi) = 0 normalization
    # that mass recovery relies on is violated as hard as possible
    ones = lambda x: np.ones_like(np.asarray(x, dtype=float))
    zeros = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return ProblemDefinition(
        bc=BoundaryParams(theta=0.0, beta=0.0, b1=0.0, b2=0.0, d1=0.0, d2=0.0),
        coeffs=CoefficientSet(
            V=zeros,
            m=0.0,
            chi=KernelMatrix(
                k11=ZeroKernel(),
                k12=SeparableKernel(terms=((ones, ones),)),
                k21=ZeroKernel(),
                k22=ZeroKernel(),
            ),
        ),
    )


def test_calibration_offset_on_fixtures(worked_synth_data, free_numeric_data):
    assert calibrate_offset(worked_synth_data, math.pi / 2) == 1
    assert calibrate_offset(free_numeric_data, math.pi / 2) == 1


def test_calibration_survives_deleted_node(worked_synth_data):
    nodes = {n: np.array(v) for n, v in worked_synth_data.nodes.items()}
    victim = sorted(nodes)[len(nodes) // 2]
    nodes[victim] = np.delete(nodes[victim], len(nodes[victim]) // 2)
    damaged = NodalData(nodes=nodes, source="synthetic")
    assert calibrate_offset(damaged, math.pi / 2) == 1


def test_calibration_rejects_inconsistent_data():
    with pytest.raises(CalibrationError):
        calibrate_offset(NodalData(nodes={}), math.pi / 2)
    # single stray node per n whose implied origin grows with n
    cluster = NodalData(nodes={n: np.array([3.13]) for n in range(5, 14)})
    with pytest.raises(CalibrationError):
        calibrate_offset(cluster, math.pi / 2)
    # origin lands inside [-2, 2] but the scaled residuals have spread
    # far beyond pi: no offset branch stabilizes them
    f0 = [0.5, 0.6, 0.7, 0.8, 7.0, 7.2, 20.0, 22.0, 25.0]
    wild = NodalData(nodes={n: np.array([f0[k] / n]) for k, n in enumerate(range(5, 14))})
    with pytest.raises(CalibrationError):
        calibrate_offset(wild, math.pi / 2)


def test_f_estimate_requires_enough_indices(free_prob):
    sparse = synthesize_nodal_data(free_prob, (5, 10))
    with pytest.raises(InsufficientDataError):
        f_estimate(sparse, math.pi / 2, 1)


def test_f_estimate_worked_midpoint(worked_synth_data):
    # f(pi/2) = -pi^2/16 - pi/4 for the linear-potential fixture
    offset = calibrate_offset(worked_synth_data, math.pi / 2)
    fit = f_estimate(worked_synth_data, math.pi / 2, offset)
    want = -(math.pi ** 2) / 16 - math.pi / 4
    assert abs(fit.a0 - want) <= 1e-6
    assert len(fit.samples) == len(worked_synth_data.nodes)
    assert set(fit.model) == {"a0", "drift", "a1", "a2"}
    assert 0.0 <= fit.dispersion <= 1e-3


def test_g_estimate_gated_on_stage1_quality(worked_synth_data):
    grid = np.linspace(0.0, math.pi, 33)
    bad_f = SampledCurve(x=grid, values=np.zeros(33), dispersion=0.5)
    with pytest.raises(StageQualityError):
        g_estimate(worked_synth_data, 1.0, 1, 0.0, 0.0, bad_f)


def test_worked_stage_limits_at_endpoints(worked_synth_recon):
    # g(0) = (b1 - b2) sqrt(2)/2 + 1/2 and g(pi) = g(0) + pi/2; the pi end
    # is where the fit is cleanest, the 0 end carries the stage-2 bias
    rec = worked_synth_recon
    assert abs(rec.g_hat.values[0] - WORKED_G0) <= 5e-3
    assert abs(rec.g_hat.values[-1] - WORKED_GPI) <= 1e-9
    assert abs(rec.m_hat - 1.0) <= 1e-2


def test_differentiate_quadratic_exact():
    xs = np.linspace(0.0, math.pi, 33)
    curve = SampledCurve(x=xs, values=3.0 * xs * xs - 2.0 * xs + 1.0)
    deriv = differentiate(curve, window=9)
    assert sup(deriv.values, 6.0 * xs - 2.0) <= 1e-10


def test_differentiate_guards():
    xs = np.linspace(0.0, math.pi, 33)
    curve = SampledCurve(x=xs, values=np.sin(xs))
    with pytest.raises(ValueError):
        differentiate(curve, window=8)
    with pytest.raises(ValueError):
        differentiate(curve, window=1)
    with pytest.raises(InsufficientDataError):
        differentiate(SampledCurve(x=xs[:8], values=np.sin(xs[:8])), window=9)
    uneven = SampledCurve(x=np.sqrt(np.linspace(0.1, 9.0, 33)), values=np.zeros(33))
    with pytest.raises(ValueError):
        differentiate(uneven, window=9)


def test_mass_recovery_failure_carries_partial_result():
    data = synthesize_nodal_data(_unit_kernel_problem(), (50, 200))
    with pytest.raises(MassRecoveryError) as exc:
        reconstruct(data)
    err = exc.value
    assert abs(err.radicand - (-1.0)) <= 1e-2
    assert {"theta_hat", "beta_hat", "f_hat", "g_hat", "V_hat", "diagnostics"} <= set(
        err.partial
    )


def test_known_mass_bypasses_radicand():
    data = synthesize_nodal_data(_unit_kernel_problem(), (50, 200))
    rec = reconstruct(data, options=ReconstructOptions(known_m=0.0))
    assert rec.m_hat == 0.0
    assert rec.diagnostics["m_mode"] == "known"
    assert abs(rec.diagnostics["m_radicand"] - (-1.0)) <= 1e-2
    assert sup(rec.Lprime_hat.values, 1.0) <= 0.1


@covers("inverse.identity-V-from-f")
def test_identity_V_from_f(cosine_recon):
    rec = cosine_recon
    f = rec.f_hat.values
    # endpoints define the angles, so f(pi) - f(0) = -(beta - theta) exactly
    assert f[-1] - f[0] == -(rec.beta_hat - rec.theta_hat)
    want = differentiate(rec.f_hat, 9).values - (f[-1] - f[0]) / math.pi
    assert np.array_equal(rec.V_hat.values, want)


@covers("inverse.zero-mean-V")
def test_recovered_potential_has_zero_mean(worked_synth_recon, cosine_recon):
    assert abs(worked_synth_recon.diagnostics["V_mean_integral"]) <= 1e-3
    assert abs(cosine_recon.diagnostics["V_mean_integral"]) <= 1e-3


@covers("inverse.convergence-doubling")
def test_errors_non_increasing_as_data_doubles(worked_problem, worked_ref):
    data = synthesize_nodal_data(worked_problem, (5, 400))
    prev = None
    for top in (50, 100, 200, 400):
        sliced = NodalData(
            nodes={n: data.nodes[n] for n in data.nodes if n <= top},
            source="synthetic",
        )
        rec = reconstruct(sliced)
        grid = rec.V_hat.x
        errs = {
            "theta": abs(rec.theta_hat - worked_ref["theta"]),
            "beta": abs(rec.beta_hat - worked_ref["beta"]),
            "V": sup(rec.V_hat.values, worked_ref["V"](grid)),
            "m": abs(rec.m_hat - worked_ref["m"]),
            "Lprime": sup(rec.Lprime_hat.values, worked_ref["Lprime"](grid)),
        }
        if prev is not None:
            for key, val in errs.items():
                # 10% slack, with an absolute floor so machine-zero errors
                # cannot fail on their own noise
                assert val <= max(1.1 * prev[key], 1e-12), (top, key, val, prev[key])
        prev = errs


@covers("inverse.determinism")
def test_reconstruct_is_deterministic(worked_synth_data, worked_synth_recon):
    again = reconstruct(worked_synth_data)
    assert again.theta_hat == worked_synth_recon.theta_hat
    assert again.beta_hat == worked_synth_recon.beta_hat
    assert again.m_hat == worked_synth_recon.m_hat
    for name in ("V_hat", "Lprime_hat", "f_hat", "g_hat"):
        assert np.array_equal(getattr(again, name).values,
                              getattr(worked_synth_recon, name).values)
    assert again.diagnostics == worked_synth_recon.diagnostics


def test_reconstruct_input_guards(free_prob, worked_synth_data):
    with pytest.raises(ValueError):
        reconstruct(worked_synth_data, grid_size=8)
    sparse = synthesize_nodal_data(free_prob, (5, 10))
    with pytest.raises(InsufficientDataError):
        reconstruct(sparse)


def test_brute_force_check_agrees(worked_synth_recon, cosine_recon):
    # the fitted limit must stay close to the rawest data it extrapolates
    assert worked_synth_recon.diagnostics["brute_force_agreement"] <= 0.05
    assert cosine_recon.diagnostics["brute_force_agreement"] <= 0.05


def test_sampled_curve_guards(worked_synth_recon):
    with pytest.raises(ValueError):
        SampledCurve(x=np.linspace(0, 1, 5), values=np.zeros(4))
    f_hat = worked_synth_recon.f_hat
    assert sup(f_hat.at(f_hat.x), f_hat.values) <= 1e-12
