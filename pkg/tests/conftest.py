"""Shared fixtures and random-object generators for the test suite."""

import numpy as np
import pytest

import blochframe as bf
from blochframe.models import ProjectorFamily


def random_unitary(rng, m):
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_symmetric_unitary(rng, m):
    # every symmetric unitary factors as U U^T (Autonne-Takagi)
    u = random_unitary(rng, m)
    return u @ u.T


def skew_hermitian(rng, m, scale=1.0):
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return scale * 0.5 * (a - a.conj().T)


def planted_loop(ts, m, winding, rng, scale=0.4, order=3):
    """Unitary loop whose determinant has winding exactly ``winding``.

    Built as diag(e^{2 pi i r t}, 1, ..) times exp(A(t)) with A a random
    skew-Hermitian trigonometric polynomial; det exp(A) = exp(tr A) has a
    global continuous argument, so only the planted phase winds.
    """
    ts = np.asarray(ts, dtype=float)
    coeffs = [
        (skew_hermitian(rng, m, scale / (j + 1)), skew_hermitian(rng, m, scale / (j + 1)))
        for j in range(order + 1)
    ]
    out = np.empty((len(ts), m, m), dtype=complex)
    for i, t in enumerate(ts):
        a = np.zeros((m, m), dtype=complex)
        for j, (bj, cj) in enumerate(coeffs):
            a += np.cos(2 * np.pi * j * t) * bj + np.sin(2 * np.pi * j * t) * cj
        w, q = np.linalg.eigh(1j * a)
        g = (q * np.exp(-1j * w)) @ q.conj().T
        head = np.eye(m, dtype=complex)
        head[0, 0] = np.exp(2j * np.pi * winding * t)
        out[i] = head @ g
    return out


def trig_deg0_field(m, rng, d, order=1, scale=0.35, terms=4):
    """k -> exp(A(k)) with A a skew-Hermitian trig polynomial on the torus.

    The determinant exp(tr A) lifts globally, so the restriction to any
    loop or surface has degree zero.
    """
    amp = scale / (m * terms)
    parts = []
    for _ in range(terms):
        q = rng.integers(-order, order + 1, size=d)
        parts.append((q, skew_hermitian(rng, m, amp), skew_hermitian(rng, m, amp)))

    def at(k):
        a = np.zeros((m, m), dtype=complex)
        for q, bq, cq in parts:
            ph = 2 * np.pi * float(np.dot(q, k))
            a += np.cos(ph) * bq + np.sin(ph) * cq
        w, qv = np.linalg.eigh(1j * a)
        return (qv * np.exp(-1j * w)) @ qv.conj().T

    return at


def shifted_haldane():
    """Haldane model with the second orbital moved to (1/2, 1/2).

    The fractional position turns the Bloch Hamiltonian quasi-periodic;
    the unit shifts are carried by diagonal tau generators.  Exercises
    every nontrivial-tau code path on a model that stays gapped and
    time-reversal symmetric.
    """
    base = bf.builtin_model("haldane")
    r2 = np.array([0.5, 0.5])
    hop = {}
    for vec, mat in base.hoppings.items():
        vec = np.asarray(vec, dtype=float)
        for a in range(2):
            for b in range(2):
                if mat[a, b] != 0:
                    off = (r2 if a == 1 else 0.0) - (r2 if b == 1 else 0.0)
                    entry = hop.setdefault(
                        tuple(vec + off), np.zeros((2, 2), dtype=complex)
                    )
                    entry[a, b] += mat[a, b]
    tau = [np.diag([1.0, np.exp(2j * np.pi * r2[j])]) for j in range(2)]
    return ProjectorFamily(
        d=2, n=2, m=1, hoppings=hop, tau=tau, name="haldane-shifted"
    )


def rotated_ssh(seed=2):
    """SSH chain conjugated by a fixed unitary V; theta becomes V V^T.

    Exercises the nontrivial conjugation-unitary code paths (obstruction
    algebra, theta-reality certificate) while staying unitarily equivalent
    to a plain model.
    """
    base = bf.builtin_model("ssh")
    rng = np.random.default_rng(seed)
    v = random_unitary(rng, 2)
    hop = {vec: v @ mat @ v.conj().T for vec, mat in base.hoppings.items()}
    return ProjectorFamily(
        d=1, n=2, m=1, hoppings=hop, theta=v @ v.T, name="ssh-rotated"
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)


@pytest.fixture(scope="session")
def haldane():
    return bf.builtin_model("haldane")


@pytest.fixture(scope="session")
def ssh():
    return bf.builtin_model("ssh")


@pytest.fixture(scope="session")
def random_trs_2d():
    return bf.builtin_model("random-trs", n=4, m=2, d=2, seed=3)
