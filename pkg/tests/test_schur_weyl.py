import itertools
import math

import numpy as np
import pytest

from locclab.partitions import Partition, dim_u, dim_v, enumerate_partitions
from locclab.schur_weyl import (
    build_schur_basis,
    isotypic_projector,
    load_basis,
    load_or_build_basis,
    permutation_operator,
    save_basis,
    schur_basis,
    standard_form,
    weights_analytic,
    weights_by_projector,
)
from locclab.states import (
    StateVector,
    bell_state,
    bipartite_tensor_power,
    product_state,
    state_from_schmidt,
)
from locclab.teleport import sample_haar_unitary


def kron_power(mat: np.ndarray, n: int) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for _ in range(n):
        out = np.kron(out, mat)
    return out


# ---------------------------------------------------------------- permutation operators


def test_permutation_identity_and_swap():
    assert np.array_equal(permutation_operator((0, 1), 2), np.eye(4))
    swap = permutation_operator((1, 0), 2)
    vec = np.zeros(4)
    vec[0b01] = 1.0  # |01>
    assert np.argmax(swap @ vec) == 0b10


def test_permutation_composition():
    rng = np.random.default_rng(0)
    for n in (3, 4, 6):
        for _ in range(5):
            sigma = tuple(rng.permutation(n))
            tau = tuple(rng.permutation(n))
            composed = tuple(sigma[tau[k]] for k in range(n))
            assert np.allclose(
                permutation_operator(composed, 2),
                permutation_operator(sigma, 2) @ permutation_operator(tau, 2),
            )


def test_permutation_rejects_non_permutation():
    with pytest.raises(ValueError):
        permutation_operator((0, 0, 1), 2)


# ---------------------------------------------------------------- projectors


def test_projector_n2_symmetric_antisymmetric():
    swap = permutation_operator((1, 0), 2)
    assert np.allclose(isotypic_projector(Partition((2, 0)), 2), (np.eye(4) + swap) / 2)
    anti = isotypic_projector(Partition((1, 1)), 2)
    assert np.allclose(anti, (np.eye(4) - swap) / 2)
    assert np.linalg.matrix_rank(anti) == 1


@pytest.mark.parametrize("n,d", [(4, 2), (6, 2), (4, 3)])
def test_projector_properties(n, d):
    total = np.zeros((d**n, d**n))
    for lam in enumerate_partitions(n, d):
        proj = isotypic_projector(lam, d)
        assert np.max(np.abs(proj - proj.T)) < 1e-10
        assert np.max(np.abs(proj @ proj - proj)) < 1e-10
        rank = int(round(np.trace(proj)))
        assert rank == dim_u(lam) * dim_v(lam), str(lam)
        total += proj
    assert np.max(np.abs(total - np.eye(d**n))) < 1e-10


def test_projector_rank_example_31():
    proj = isotypic_projector(Partition((3, 1)), 2)
    assert int(round(np.trace(proj))) == 9


# ---------------------------------------------------------------- basis invariants


@pytest.mark.parametrize("n,d", [(2, 2), (3, 2), (4, 2), (6, 2), (3, 3), (4, 3)])
def test_basis_orthonormal(n, d):
    basis = schur_basis(n, d)
    mat = basis.matrix
    assert mat.shape == (d**n, d**n)
    assert np.max(np.abs(mat.T @ mat - np.eye(d**n))) < 1e-10


def test_basis_block_dims_small_qubit_cases():
    blocks2 = {lam.parts: (b.dim_u, b.dim_v) for lam, b in schur_basis(2, 2).blocks.items()}
    assert blocks2 == {(2, 0): (3, 1), (1, 1): (1, 1)}
    blocks3 = {lam.parts: (b.dim_u, b.dim_v) for lam, b in schur_basis(3, 2).blocks.items()}
    assert blocks3 == {(3, 0): (4, 1), (2, 1): (2, 2)}


def test_basis_triplet_singlet_vectors():
    basis = schur_basis(2, 2)
    sym = basis.blocks[Partition((2, 0))]
    s2 = math.sqrt(0.5)
    assert np.allclose(np.abs(sym.column(1, 0)), [0, s2, s2, 0])
    singlet = basis.blocks[Partition((1, 1))].column(0, 0)
    assert np.allclose(np.abs(singlet), [0, s2, s2, 0])
    assert abs(np.dot(sym.column(1, 0), singlet)) < 1e-12


@pytest.mark.parametrize("n,d", [(4, 2), (6, 2), (4, 3)])
def test_permutations_act_on_multiplicity_index_only(n, d):
    basis = schur_basis(n, d)
    mat = basis.matrix
    slices = basis.slices()
    rng = np.random.default_rng(7)
    for _ in range(4):
        sigma = tuple(rng.permutation(n))
        rep = mat.T @ permutation_operator(sigma, d) @ mat
        for lam_a, sl_a in slices.items():
            for lam_b, sl_b in slices.items():
                if lam_a != lam_b:
                    assert np.max(np.abs(rep[sl_a, sl_b])) < 1e-10
        for lam, sl in slices.items():
            block = basis.blocks[lam]
            du, dv = block.dim_u, block.dim_v
            tensor = rep[sl, sl].reshape(du, dv, du, dv)
            pi = tensor[0, :, 0, :]
            for u in range(du):
                for u2 in range(du):
                    expected = pi if u == u2 else np.zeros_like(pi)
                    assert np.max(np.abs(tensor[u, :, u2, :] - expected)) < 1e-10
            assert np.max(np.abs(pi.T @ pi - np.eye(dv))) < 1e-10


@pytest.mark.parametrize("n,d", [(4, 2), (6, 2), (3, 3)])
def test_unitaries_act_on_u_index_only(n, d):
    basis = schur_basis(n, d)
    mat = basis.matrix
    slices = basis.slices()
    rng = np.random.default_rng(11)
    for _ in range(3):
        u_local = sample_haar_unitary(d, rng)
        rep = mat.T @ kron_power(u_local, n) @ mat
        for lam_a, sl_a in slices.items():
            for lam_b, sl_b in slices.items():
                if lam_a != lam_b:
                    assert np.max(np.abs(rep[sl_a, sl_b])) < 1e-10
        for lam, sl in slices.items():
            block = basis.blocks[lam]
            du, dv = block.dim_u, block.dim_v
            tensor = rep[sl, sl].reshape(du, dv, du, dv)
            act = tensor[:, 0, :, 0]
            for v in range(dv):
                for v2 in range(dv):
                    expected = act if v == v2 else np.zeros_like(act)
                    assert np.max(np.abs(tensor[:, v, :, v2] - expected)) < 1e-10


def test_basis_deterministic():
    a = build_schur_basis(4, 3, seed=0)
    b = build_schur_basis(4, 3, seed=0)
    for lam in a.blocks:
        assert np.array_equal(a.blocks[lam].vectors, b.blocks[lam].vectors)


# ---------------------------------------------------------------- standard form


def test_standard_form_product_state():
    for n in (2, 3, 5):
        form = standard_form(product_state(2), n)
        for lam, q in form.weights.items():
            expected = 1.0 if lam.parts == (n, 0) else 0.0
            assert q == pytest.approx(expected, abs=1e-12)


def test_standard_form_bell_examples():
    form2 = standard_form(bell_state(2), 2)
    assert form2.weights[Partition((2, 0))] == pytest.approx(0.75, abs=1e-12)
    assert form2.weights[Partition((1, 1))] == pytest.approx(0.25, abs=1e-12)
    form4 = standard_form(bell_state(2), 4)
    assert form4.weights[Partition((4, 0))] == pytest.approx(5 / 16, abs=1e-12)
    assert form4.weights[Partition((3, 1))] == pytest.approx(9 / 16, abs=1e-12)
    assert form4.weights[Partition((2, 2))] == pytest.approx(2 / 16, abs=1e-12)


def test_weights_analytic_examples():
    w5 = weights_analytic((1.0, 0.0), 5)
    assert w5[Partition((5, 0))] == pytest.approx(1.0, abs=1e-12)
    w6 = weights_analytic((0.5, 0.5), 6)
    assert w6[Partition((6, 0))] == pytest.approx(7 / 64, abs=1e-12)
    assert w6[Partition((5, 1))] == pytest.approx(25 / 64, abs=1e-12)
    assert w6[Partition((4, 2))] == pytest.approx(27 / 64, abs=1e-12)
    assert w6[Partition((3, 3))] == pytest.approx(5 / 64, abs=1e-12)
    w4 = weights_analytic((0.8, 0.2), 4)
    assert sum(w4.values()) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("spectrum", [(0.5, 0.5), (0.8, 0.2), (1.0, 0.0)])
@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_two_path_weight_agreement(spectrum, n):
    phi = state_from_schmidt(spectrum)
    form = standard_form(phi, n)
    analytic = weights_analytic(spectrum, n)
    for lam, q in analytic.items():
        assert abs(form.weights[lam] - q) < 1e-9, str(lam)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_projector_weight_agreement(n):
    phi = state_from_schmidt((0.7, 0.3))
    analytic = weights_analytic((0.7, 0.3), n)
    projected = weights_by_projector(phi, n)
    for lam, q in analytic.items():
        assert abs(projected[lam] - q) < 1e-9


def test_standard_form_rotated_schmidt_basis():
    # weights and multiplicity parts must not care about local basis choice
    rng = np.random.default_rng(3)
    u = sample_haar_unitary(2, rng)
    v = sample_haar_unitary(2, rng)
    base = state_from_schmidt((0.6, 0.4))
    rotated = StateVector(np.kron(u, v) @ base.amplitudes, (2, 2))
    form = standard_form(rotated, 3)
    analytic = weights_analytic((0.6, 0.4), 3)
    for lam, q in analytic.items():
        assert abs(form.weights[lam] - q) < 1e-9


def test_standard_form_d3():
    spectrum = (0.5, 0.3, 0.2)
    phi = state_from_schmidt(spectrum)
    form = standard_form(phi, 3)
    analytic = weights_analytic(spectrum, 3)
    for lam, q in analytic.items():
        assert abs(form.weights[lam] - q) < 1e-9


def test_entangled_part_flat_and_state_independent():
    form_a = standard_form(bell_state(2), 4)
    form_b = standard_form(state_from_schmidt((0.7, 0.3)), 4)
    for lam, ent in form_a.entangled.items():
        dv = dim_v(lam)
        schmidt = ent.schmidt_coefficients()
        assert np.max(np.abs(schmidt - 1.0 / dv)) < 1e-8
        if lam in form_b.entangled:
            assert form_b.entangled[lam].fidelity(ent) > 1 - 1e-8


def test_standard_form_reassembly():
    phi = state_from_schmidt((0.8, 0.2))
    n = 4
    form = standard_form(phi, n)
    basis = form.basis
    slices = basis.slices()
    coeff = np.zeros((2**n, 2**n), dtype=complex)
    for lam, q in form.weights.items():
        if lam not in form.phi:
            continue
        block = basis.blocks[lam]
        du, dv = block.dim_u, block.dim_v
        piece = np.einsum(
            "ab,vw->avbw",
            form.phi[lam].amplitudes.reshape(du, du),
            form.entangled[lam].amplitudes.reshape(dv, dv),
        ).reshape(du * dv, du * dv)
        coeff[slices[lam], slices[lam]] = math.sqrt(q) * piece
    rebuilt = (basis.matrix @ coeff @ basis.matrix.T).reshape(-1)
    direct = bipartite_tensor_power(phi, n).reshape(-1)
    assert np.linalg.norm(rebuilt - direct) < 1e-8


def test_standard_form_rejects_bad_input():
    with pytest.raises(ValueError):
        standard_form(StateVector(np.ones(6) / math.sqrt(6), (2, 3)), 2)
    with pytest.raises(ValueError):
        standard_form(bell_state(2), 10)  # over the size limit


# ---------------------------------------------------------------- group-averaging checks


def test_cross_block_compressions_vanish():
    # any element of the permutation span is block diagonal across
    # inequivalent blocks
    n, d = 4, 2
    basis = schur_basis(n, d)
    slices = basis.slices()
    rng = np.random.default_rng(5)
    perms = list(itertools.permutations(range(n)))
    for _ in range(5):
        chosen = rng.choice(len(perms), size=6, replace=False)
        x = sum(
            rng.standard_normal() * permutation_operator(perms[k], d) for k in chosen
        )
        rep = basis.matrix.T @ x @ basis.matrix
        for lam_a, sl_a in slices.items():
            for lam_b, sl_b in slices.items():
                if lam_a != lam_b:
                    assert np.max(np.abs(rep[sl_a, sl_b])) < 1e-10


def test_haar_average_is_scalar_on_each_u_block():
    n, d = 4, 2
    samples = 500
    basis = schur_basis(n, d)
    slices = basis.slices()
    rng = np.random.default_rng(12)
    x = rng.standard_normal((d**n, d**n)) + 1j * rng.standard_normal((d**n, d**n))
    x = (x + x.conj().T) / 2
    x /= np.linalg.norm(x, 2)
    acc = np.zeros_like(x)
    for _ in range(samples):
        u_big = kron_power(sample_haar_unitary(d, rng), n)
        acc += u_big @ x @ u_big.conj().T
    acc /= samples
    rep = basis.matrix.T @ acc @ basis.matrix
    tol = 3.0 / math.sqrt(samples)
    for lam, sl in slices.items():
        block = basis.blocks[lam]
        du, dv = block.dim_u, block.dim_v
        tensor = rep[sl, sl].reshape(du, dv, du, dv)
        for v in range(dv):
            sub = tensor[:, v, :, v]
            scalar = np.trace(sub) / du
            assert np.linalg.norm(sub - scalar * np.eye(du), 2) < tol, str(lam)


# ---------------------------------------------------------------- serialization


def test_basis_round_trip_bit_identical(tmp_path):
    basis = build_schur_basis(4, 2)
    path = save_basis(basis, tmp_path / "basis")
    loaded = load_basis(path)
    assert loaded.n == 4 and loaded.d == 2
    for lam in basis.blocks:
        assert np.array_equal(basis.blocks[lam].vectors, loaded.blocks[lam].vectors)


def test_load_or_build_cache_hit(tmp_path):
    first = load_or_build_basis(3, 3, 0, cache_dir=tmp_path)
    second = load_or_build_basis(3, 3, 0, cache_dir=tmp_path)
    for lam in first.blocks:
        assert np.array_equal(first.blocks[lam].vectors, second.blocks[lam].vectors)
