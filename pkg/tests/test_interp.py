"""Dense matrix semantics: generator tensors, functoriality, doubling."""

import cmath
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zxtk import (
    Angle,
    Diagram,
    GenKind,
    Generator,
    apply,
    compose,
    cpm_construct,
    empty_diagram,
    identity_wire,
    interp,
    interp_cpm,
    make_generator,
    red_spider,
    tensor,
)
from zxtk.errors import GroundNotAllowed
from zxtk.families import cnot_diagram, spider_z_nn
from zxtk.verify import GenConfig, random_diagram

INV_SQRT2 = 2.0**-0.5


def z(n, m, angle=None):
    return make_generator(GenKind.Z, n, m, Angle.of(angle))


class TestGeneratorMatrices:
    def test_phase_spider(self):
        m = interp(z(1, 1, Fraction(1, 4)))
        assert m[0, 0] == 1 and abs(m[0, 1]) == 0 and abs(m[1, 0]) == 0
        assert m[1, 1] == pytest.approx(cmath.exp(1j * cmath.pi / 4))

    def test_copy_spider(self):
        m = interp(z(1, 2))
        want = np.zeros((4, 2), complex)
        want[0, 0] = want[3, 1] = 1
        assert np.array_equal(m, want)

    def test_fusion_spider(self):
        m = interp(z(2, 1))
        want = np.zeros((2, 4), complex)
        want[0, 0] = want[1, 3] = 1
        assert np.array_equal(m, want)

    def test_hadamard_entries_are_correctly_rounded(self):
        m = interp(make_generator(GenKind.H, 1, 1))
        assert m[0, 0] == INV_SQRT2 == 0.7071067811865476
        assert m[1, 1] == -INV_SQRT2
        assert np.allclose(m @ m, np.eye(2), atol=1e-15)

    def test_cup_and_cap(self):
        cup = Diagram((Generator(GenKind.CUP, ("a1", "a2"), ()),), ("a1", "a2"), ())
        cap = Diagram((Generator(GenKind.CAP, (), ("b1", "b2")),), (), ("b1", "b2"))
        assert np.array_equal(interp(cup), [[1, 0, 0, 1]])
        assert np.array_equal(interp(cap), [[1], [0], [0], [1]])

    def test_ground_needs_the_doubled_reading(self):
        d = Diagram((Generator(GenKind.GROUND, ("a1",), ()),), ("a1",), ())
        with pytest.raises(GroundNotAllowed):
            interp(d)
        assert np.array_equal(interp_cpm(d), [[1, 0, 0, 1]])

    def test_empty_diagram_scalar_one(self):
        assert interp(empty_diagram()).tolist() == [[1]]

    def test_snake_is_identity(self):
        bent = Diagram(
            (
                Generator(GenKind.CAP, (), ("e", "b1")),
                Generator(GenKind.CUP, ("a1", "e"), ()),
            ),
            ("a1",),
            ("b1",),
        )
        assert np.allclose(interp(bent), np.eye(2), atol=1e-15)


class TestFunctoriality:
    def test_sequencing_is_matrix_product(self):
        a, b = z(1, 2, Fraction(1, 2)), z(2, 1, Fraction(1, 4))
        assert np.allclose(interp(compose(a, b)), interp(b) @ interp(a), atol=1e-12)

    def test_tensor_is_kron_first_wire_most_significant(self):
        a, b = z(1, 1, 1), make_generator(GenKind.H, 1, 1)
        assert np.allclose(interp(tensor(a, b)), np.kron(interp(a), interp(b)), atol=1e-12)

    def test_identity(self):
        assert np.array_equal(interp(identity_wire()), np.eye(2))

    def test_cnot_matrix(self):
        want = np.zeros((4, 4), complex)
        want[0, 0] = want[1, 1] = want[2, 3] = want[3, 2] = INV_SQRT2
        assert np.allclose(interp(cnot_diagram()), want, atol=1e-12)

    def test_not_gate(self):
        m = interp(red_spider(1, 1, Angle.pi()))
        assert np.allclose(m, [[0, 1], [1, 0]], atol=1e-12)

    def test_spider_family_two_entries(self):
        m = interp(spider_z_nn(3))
        nonzero = np.argwhere(np.abs(m) > 1e-12)
        assert nonzero.tolist() == [[0, 0], [7, 7]]


class TestApply:
    def test_matches_matrix_action(self):
        cnot = cnot_diagram()
        v = np.zeros(4, complex)
        v[2] = 1
        assert np.allclose(apply(cnot, v), interp(cnot) @ v, atol=1e-12)

    def test_dimension_checked(self):
        with pytest.raises(Exception):
            apply(cnot_diagram(), np.ones(3))


def interleave_perm(n):
    # kron block order (plain, conjugate) -> pairwise (plain, conjugate) per wire
    return [2 * (k % n) + (k // n) for k in range(2 * n)]


def grouped_to_interleaved(m, n_out, n_in):
    t = m.reshape((2,) * (2 * n_out + 2 * n_in))
    perm = interleave_perm(n_out) + [2 * n_out + p for p in interleave_perm(n_in)]
    return t.transpose(perm).reshape(4**n_out, 4**n_in)


class TestDoubling:
    def test_pure_doubling_is_kron_with_conjugate(self):
        cnot = cnot_diagram()
        w = interp(cnot)
        want = grouped_to_interleaved(np.kron(w, w.conj()), 2, 2)
        assert np.allclose(interp_cpm(cnot), want, atol=1e-12)
        assert np.allclose(interp_cpm(cnot), interp(cpm_construct(cnot)), atol=1e-12)

    def test_measurement_spider_dephases(self):
        meas = Diagram(
            (Generator(GenKind.Z, ("a1",), ("b1", "e1")), Generator(GenKind.GROUND, ("e1",), ())),
            ("a1",),
            ("b1",),
        )
        m = interp_cpm(meas)
        want = np.zeros((4, 4), complex)
        want[0, 0] = want[3, 3] = 1  # keeps populations, kills coherences
        assert np.allclose(m, want, atol=1e-12)

    def test_ground_after_h_flattens(self):
        gh = Diagram(
            (
                Generator(GenKind.H, ("a1",), ("e1",)),
                Generator(GenKind.GROUND, ("e1",), ()),
            ),
            ("a1",),
            (),
        )
        # discarding after a basis change still traces the state out
        assert np.allclose(interp_cpm(gh), [[1, 0, 0, 1]], atol=1e-12)


@given(st.integers(min_value=0, max_value=60))
def test_doubling_of_pure_diagrams_is_multiplicative(index):
    d = random_diagram(GenConfig(seed=55, max_generators=4, max_inputs=2, max_outputs=2), index)
    w = interp(d)
    want = grouped_to_interleaved(np.kron(w, w.conj()), d.n_outputs, d.n_inputs)
    assert np.allclose(interp_cpm(d), want, atol=1e-10)


@given(st.integers(min_value=0, max_value=60))
def test_conjugate_negates_phases(index):
    d = random_diagram(GenConfig(seed=56, max_generators=5), index)
    from zxtk import conjugate

    assert np.allclose(interp(conjugate(d)), interp(d).conj(), atol=1e-12)
