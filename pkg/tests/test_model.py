import numpy as np
import pytest

from holocurve.model import (
    DiagonalKernelSpec,
    Fb2Model,
    Frame,
    HolomorphicPolynomial,
    backward_shift,
    bergman,
    drury_arveson,
    explicit,
    fb2_frame,
    hardy,
    jet_frame,
    kernel_preset,
    ofb_frame,
    ofb_sections,
    section_from_kernel,
)


def e(k, dim):
    v = np.zeros(dim)
    v[k] = 1
    return v


# kernels and sections -------------------------------------------------------------


def test_hardy_section_entries():
    t = section_from_kernel(hardy(1, 2))
    z = 0.3 - 0.2j
    assert np.allclose(t.evaluate([z])[:, 0], [1, z, z**2])


def test_bergman_first_entry():
    t = section_from_kernel(bergman(4))
    z = 0.4j
    assert t.evaluate([z])[1, 0] == pytest.approx(np.sqrt(2) * z)


def test_section_at_origin_is_scaled_first_vector():
    spec = explicit([3.0, 1.0, 0.5])
    assert np.allclose(section_from_kernel(spec).evaluate([0.0])[:, 0], 3 * e(0, 3))


def test_gram_value_closed_forms():
    assert hardy(1, 60).gram_value([0.5]) == pytest.approx(1 / 0.75, abs=1e-12)
    assert bergman(80).gram_value([0.3]) == pytest.approx(1 / 0.91**2, abs=1e-12)
    # drury-arveson: 1 / (1 - |z|^2)
    z = np.array([0.2 + 0.1j, -0.15])
    assert drury_arveson(2, 40).gram_value(z) == pytest.approx(1 / (1 - np.sum(np.abs(z) ** 2)), abs=1e-12)


def test_kernel_validation():
    with pytest.raises(ValueError):
        explicit([1.0, 0.0])
    with pytest.raises(ValueError):
        kernel_preset("bergman", 2, 5)
    with pytest.raises(ValueError):
        kernel_preset("nope", 1, 5)
    with pytest.raises(ValueError):
        DiagonalKernelSpec(1, {}, 2)


def test_tail_ratio_small_inside_and_large_near_boundary():
    spec = hardy(1, 60)
    assert spec.tail_ratio([0.5]) < 1e-15
    assert spec.tail_ratio([0.99]) > 1e-3


def test_backward_shift_eigenvector():
    spec = bergman(30)
    B = backward_shift(spec)
    t = section_from_kernel(spec)
    z = 0.3 + 0.1j
    v = t.evaluate([z])[:, 0]
    lhs = B @ v
    # exact up to the dropped top-degree term
    assert np.abs(lhs[:-1] - z * v[:-1]).max() < 1e-12


# frames ------------------------------------------------------------------------------


def test_jet_frame_hardy():
    t = section_from_kernel(hardy(1, 2))
    frame = jet_frame(t, 1)
    z = 0.25
    assert np.allclose(frame.evaluate([z]), np.column_stack([[1, z, z * z], [0, 1, 2 * z]]))
    assert jet_frame(t, 0).n == 1


def test_jet_frame_columns_at_origin():
    frame = jet_frame(section_from_kernel(hardy(1, 3)), 2)
    assert np.allclose(frame.evaluate([0.0]), np.column_stack([e(0, 4), e(1, 4), 2 * e(2, 4)]))


def test_jet_frame_degenerate_is_rejected():
    with pytest.raises(ValueError):
        jet_frame(section_from_kernel(hardy(1, 1)), 2, points=[0.0])


def test_frame_jet_is_holomorphic():
    t = section_from_kernel(hardy(1, 5))
    j = t.jet([0.0], (1, 2))
    assert np.allclose(j.coeff((1,), (0,))[:, 0], e(1, 6))
    assert np.abs(j.coeffs[:, 1:]).max() == 0


def test_constant_section_jet_is_constant():
    c = HolomorphicPolynomial.constant(np.array([[1.0], [2.0]]))
    j = c.jet([0.3], (2, 2))
    assert np.allclose(j.value, [[1.0], [2.0]])
    assert np.abs(j.coeffs.reshape(-1, 2)[1:]).max() == 0


def test_polynomial_jet_matches_derivatives():
    p = HolomorphicPolynomial.scalar([1, 2, 3, 4])
    j = p.jet([0.5], (3, 0))
    for k in range(4):
        assert j.extract((k,), (0,))[0, 0] == pytest.approx(p.derivative(0, k).evaluate([0.5])[0, 0])


def test_polynomial_product():
    p = HolomorphicPolynomial.scalar([1, 1])
    q = p * p
    assert np.allclose(q.coeffs[:, 0, 0], [1, 2, 1])


# OFB_n and FB2 frames -------------------------------------------------------------------


def test_ofb_frame_single_section():
    t = section_from_kernel(hardy(1, 4))
    assert np.allclose(ofb_frame([t]).evaluate([0.3]), t.evaluate([0.3]))


def test_ofb_frame_second_vector():
    secs = ofb_sections(hardy(1, 4), 2)
    gamma = ofb_frame(secs).evaluate([0.3])
    expected = np.concatenate([secs[0].derivative(0).evaluate([0.3]), secs[1].evaluate([0.3])])
    assert np.allclose(gamma[:, 1:2], expected)


def test_ofb_frame_third_vector_coefficient():
    # gamma_2 = t0'' + 1! C(2,1) t1' + 2! t2
    D = 5
    secs = [HolomorphicPolynomial(np.zeros((6, D, 1)), 1, 5)] * 3
    secs[1] = section_from_kernel(hardy(1, 4))
    gamma = ofb_frame(secs).evaluate([0.3])
    t1p = secs[1].derivative(0).evaluate([0.3])[:, 0]
    assert np.allclose(gamma[D : 2 * D, 2], 2 * t1p)


def test_ofb_sections_chain():
    secs = ofb_sections(hardy(1, 4), 3, coupling=2.0)
    z = [0.1j]
    assert np.allclose(secs[1].evaluate(z), -2 * secs[2].evaluate(z))
    assert np.allclose(secs[0].evaluate(z), -2 * secs[1].evaluate(z))


def test_fb2_frame_at_origin():
    # t0 = -S t1, so the frame is the negative of {e0 + 0, e1 - e0}
    h = hardy(1, 6)
    gamma = fb2_frame(Fb2Model(h, h, 1.0)).evaluate([0.0])
    D = h.dim
    assert np.allclose(gamma[:, 0], -np.concatenate([e(0, D), np.zeros(D)]))
    assert np.allclose(gamma[:, 1], -np.concatenate([e(1, D), -e(0, D)]))
    assert np.allclose(gamma.conj().T @ gamma, [[1, 0], [0, 2]])


def test_fb2_frame_spans_kernel():
    h = hardy(1, 40)
    model = Fb2Model(h, bergman(40), 0.7)
    T = model.operator()
    z = 0.2 + 0.1j
    gamma = fb2_frame(model).evaluate([z])
    assert np.abs((T - z * np.eye(T.shape[0])) @ gamma).max() < 1e-12


def test_fb2_model_validation():
    with pytest.raises(ValueError):
        Fb2Model(hardy(1, 4), hardy(1, 5))
    with pytest.raises(ValueError):
        Fb2Model(hardy(1, 4), hardy(1, 4), 0.0)
    with pytest.raises(ValueError):
        fb2_frame(Fb2Model(hardy(1, 4), hardy(1, 4)), sign=2)


def test_fb2_intertwiner_maps_t1_to_multiple_of_kernel0_section():
    model = Fb2Model(bergman(10), hardy(1, 10), 1.5)
    z = [0.3]
    St1 = model.intertwiner() @ model.t1().evaluate(z)
    t = section_from_kernel(bergman(10)).evaluate(z)
    ratio = St1[:, 0] / t[:, 0]
    assert np.allclose(ratio, ratio[0])


def test_frame_requires_matching_sections():
    with pytest.raises(ValueError):
        Frame([section_from_kernel(hardy(1, 2)), section_from_kernel(hardy(1, 3))])
