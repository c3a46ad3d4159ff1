"""Shared test helpers."""

import numpy as np

from locclab.models import PureStateModel


def random_two_param_model(seed: int) -> PureStateModel:
    """Random smooth two-parameter qubit family with analytic derivatives:
    e^{-i t1 G1} e^{-i t2 G2} |psi0> for random Hermitian G1, G2."""
    rng = np.random.default_rng(seed)
    gens = []
    for _ in range(2):
        g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        gens.append((g + g.conj().T) / 2)
    psi0 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    psi0 = psi0 / np.linalg.norm(psi0)

    def mat_exp(g, t):
        w, v = np.linalg.eigh(g)
        return v @ np.diag(np.exp(-1j * w * t)) @ v.conj().T

    def state(theta):
        return mat_exp(gens[0], theta[0]) @ mat_exp(gens[1], theta[1]) @ psi0

    def deriv(theta, i):
        u1 = mat_exp(gens[0], theta[0])
        u2 = mat_exp(gens[1], theta[1])
        if i == 0:
            return -1j * gens[0] @ u1 @ u2 @ psi0
        return u1 @ (-1j * gens[1]) @ u2 @ psi0

    return PureStateModel(2, state, deriv, name=f"random-{seed}")
