"""Transfer operators of locally constant weights as finite matrices.

States are admissible blocks of length ``L = max(q-1, 1)``.  A function
depending on the first L symbols is a vector over states, and

    (L_{sf} w)(x) = sum over letters a with a.x reduced of exp(s f(a.x)) w(a.x)

becomes a matrix-vector product: row x, column ``(a.x)[:L]``.  Besides the
letter blocks (the infinite-word part) the augmented matrix carries the
padded blocks of finite words shorter than L and the empty word.  The empty
word never appears as a preimage, so the exclusion of ``y = 1`` holds by
construction.  Padded states only lead to longer ones, so the padded block
is nilpotent and the spectrum is that of the letter part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conjugacy import (
    ConjugacyClass,
    allowed_first_letters,
    class_sphere_array,
    is_cyclically_reduced,
)
from .symbolic import WeightFunction, birkhoff, birkhoff_array, holder_seminorm, mean_over_mu0
from .words import Word, invert, multiply, sphere_array


class SpectralIterationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    f: WeightFunction
    s: complex
    states: list[tuple[int, ...]]  # letter blocks first, then padded, empty last
    n_sigma: int
    full: np.ndarray = field(repr=False)

    @property
    def entries(self) -> np.ndarray:
        """The operator on the infinite-word part (letter blocks only)."""
        return self.full[: self.n_sigma, : self.n_sigma]

    @property
    def sigma_states(self) -> list[tuple[int, ...]]:
        return self.states[: self.n_sigma]

    @property
    def empty_index(self) -> int:
        return len(self.states) - 1

    def first_symbols(self) -> np.ndarray:
        return np.array([b[0] for b in self.states])


def _state_space(f: WeightFunction) -> tuple[list[tuple[int, ...]], int]:
    L = max(f.q - 1, 1)
    pad = f.pad
    sigma = [tuple(int(c) for c in row) for row in sphere_array(f.p, L)]
    padded = []
    for j in range(1, L):  # finite words of length j < L
        for row in sphere_array(f.p, j):
            padded.append(tuple(int(c) for c in row) + (pad,) * (L - j))
    return sigma + padded + [(pad,) * L], len(sigma)


def _structure(f: WeightFunction):
    """States plus the (row, col, f-value) triples of the preimage graph."""
    states, n_sigma = _state_space(f)
    L = len(states[0])
    index = {b: i for i, b in enumerate(states)}
    rows, cols, vals = [], [], []
    for i, x in enumerate(states):
        for a in range(2 * f.p):
            if x[0] != f.pad and x[0] == a ^ 1:
                continue
            y = (a,) + x
            rows.append(i)
            cols.append(index[y[:L]])
            vals.append(f.value(y[: f.q]))
    return states, n_sigma, np.array(rows), np.array(cols), np.array(vals)


def build_transfer_matrix(f: WeightFunction, s: complex) -> TransferMatrix:
    states, n_sigma, rows, cols, vals = _structure(f)
    real = np.isreal(s)
    dtype = float if real else complex
    s_ = float(np.real(s)) if real else complex(s)
    M = np.zeros((len(states), len(states)), dtype=dtype)
    M[rows, cols] = np.exp(s_ * vals)
    M.setflags(write=False)
    return TransferMatrix(f, s_, states, n_sigma, M)


@dataclass(frozen=True)
class PerronData:
    beta: float
    psi: np.ndarray
    nu: np.ndarray
    gap: float
    iterations: int


def _power(M: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray, int]:
    v = np.full(M.shape[0], 1.0 / M.shape[0])
    for it in range(1, max_iter + 1):
        w = M @ v
        beta = w.sum() / v.sum()
        w /= w.sum()
        Mw = M @ w
        res = np.max(np.abs(Mw - beta * w)) / np.max(np.abs(w))
        v = w
        if res <= tol * beta:
            return beta, v, it
    raise SpectralIterationError(
        f"spectral iteration failed: no convergence in {max_iter} iterations"
    )


def perron(tm: TransferMatrix, tol: float = 1e-13, max_iter: int = 100_000) -> PerronData:
    """Leading eigen-triple of the letter part by power iteration.

    ``nu`` is a probability vector and ``<nu, psi> = 1``.  ``gap`` is
    ``||Q^32||^(1/32) / beta`` with Q the complement of the Perron
    projection; it bounds |second eigenvalue| / beta from above.
    """
    if not np.isreal(tm.s):
        raise ValueError("Perron data needs a real parameter")
    M = np.asarray(tm.entries, dtype=float)
    _, psi, it1 = _power(M, tol, max_iter)
    _, nu, it2 = _power(M.T, tol, max_iter)
    nu = nu / nu.sum()
    beta = float(nu @ M @ psi / (nu @ psi))
    psi = psi / (nu @ psi)
    Q = M - beta * np.outer(psi, nu)
    K = 32
    gap = np.linalg.norm(np.linalg.matrix_power(Q / beta, K), 2) ** (1.0 / K)
    return PerronData(beta, psi, nu, float(gap), max(it1, it2))


@dataclass(frozen=True)
class SpectralDecomposition:
    beta: float
    R0: np.ndarray
    Q: np.ndarray
    q_bound: float


def spectral_decomposition(f: WeightFunction, s: float = 0.0) -> SpectralDecomposition:
    tm = build_transfer_matrix(f, s)
    pd = perron(tm)
    R0 = np.outer(pd.psi, pd.nu)
    Q = np.asarray(tm.entries, dtype=float) - pd.beta * R0
    return SpectralDecomposition(pd.beta, R0, Q, pd.gap * pd.beta)


def pressure(f: WeightFunction, t: float) -> float:
    return math.log(perron(build_transfer_matrix(f, t)).beta)


def lambda_(f: WeightFunction) -> float:
    """Drift: the mu0 integral of f, summed exactly over cylinders."""
    return mean_over_mu0(f)


def lambda_finite_difference(f: WeightFunction, h: float = 1e-4) -> float:
    def d(h):
        return (pressure(f, h) - pressure(f, -h)) / (2 * h)

    return (4 * d(h / 2) - d(h)) / 3


def sigma2(f: WeightFunction, h: float = 1e-3) -> float:
    """Second derivative of t -> P(tf) at 0, central differences + Richardson.

    f is first shifted by its mu0 mean; P(t(f - c)) = P(tf) - tc, so the
    second derivative is unchanged while the differences lose less to
    rounding (weights that are constant up to a shift give exactly 0).
    """
    fc = f.shifted(-mean_over_mu0(f))
    p0 = pressure(fc, 0.0)

    def d2(h):
        return (pressure(fc, h) - 2 * p0 + pressure(fc, -h)) / h**2

    return (4 * d2(h / 2) - d2(h)) / 3


def sigma2_green_kubo(f: WeightFunction, tol: float = 1e-14, max_lag: int = 100_000) -> float:
    """Var(f) + 2 sum_j Cov(f, f o shift^j) under mu0, exactly on the q-block chain."""
    blocks = [tuple(int(c) for c in b) for b in f.letter_blocks()]
    index = {b: i for i, b in enumerate(blocks)}
    n = len(blocks)
    P = np.zeros((n, n))
    for i, b in enumerate(blocks):
        nxt = [b[1:] + (c,) for c in range(2 * f.p) if c != b[-1] ^ 1]
        for b2 in nxt:
            P[i, index[b2]] = 1.0 / len(nxt)
    vals = np.array([f.value(b) for b in blocks])
    fc = vals - vals.mean()  # blocks are equally likely under mu0
    terms = [float(np.mean(fc * fc))]
    v = fc
    for _ in range(max_lag):
        v = P @ v
        term = 2.0 * float(np.mean(fc * v))
        terms.append(term)
        if np.max(np.abs(v)) < tol:
            break
    return math.fsum(terms)


@dataclass(frozen=True)
class Derivatives:
    lambda_cylinder: float
    lambda_fd: float
    sigma2_fd: float
    sigma2_gk: float

    @property
    def lambda_discrepancy(self) -> float:
        return abs(self.lambda_fd - self.lambda_cylinder)

    @property
    def sigma2_discrepancy(self) -> float:
        return abs(self.sigma2_fd - self.sigma2_gk)


def derivatives(f: WeightFunction) -> Derivatives:
    return Derivatives(lambda_(f), lambda_finite_difference(f), sigma2(f), sigma2_green_kubo(f))


def _chi(tm: TransferMatrix, g: Word) -> np.ndarray:
    banned = {g.codes[0], g.codes[-1] ^ 1}
    return np.array([0.0 if b[0] in banned else 1.0 for b in tm.states])


def _check_g(g: Word, p: int) -> None:
    if len(g) == 0 or not is_cyclically_reduced(g):
        raise ValueError(f"{g} is not a non-trivial cyclically reduced word")
    if g.rank_needed > p:
        raise ValueError(f"{g} uses generators beyond rank {p}")


def start_vectors(tm: TransferMatrix, m: int) -> list[np.ndarray]:
    """Row vectors e_1^T M^j for j = 0..m: evaluation at the empty word."""
    r = np.zeros(len(tm.states), dtype=tm.full.dtype)
    r[tm.empty_index] = 1.0
    out = [r]
    for _ in range(m):
        r = r @ tm.full
        out.append(r)
    return out


def weighted_restricted_sum(f: WeightFunction, g: Word, m: int, s: complex,
                            tm: TransferMatrix | None = None) -> complex:
    """(L_{sf}^m chi_g)(1) = sum over w in Gamma_m(g) of exp(s f^m(w))."""
    _check_g(g, f.p)
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return 1.0
    tm = tm if tm is not None else build_transfer_matrix(f, s)
    r = start_vectors(tm, m)[-1]
    return complex(r @ _chi(tm, g)) if np.iscomplexobj(r) else float(r @ _chi(tm, g))


@dataclass(frozen=True)
class EtaCoefficient:
    value: complex
    bound: float  # guaranteed |exact - value|
    mode: str


def eta_coefficient(C: ConjugacyClass, f: WeightFunction, m: int, s: complex,
                    mode: str = "decomposed", cap: int = 10**7) -> EtaCoefficient:
    """Coefficient of z^(k+2m) in the generating function of the class.

    ``exact`` sums exp(s F(x)) over an enumeration of C_{k+2m}.
    ``decomposed`` uses sum_g exp(s f^k(g)) (L_{2sf}^m chi_g)(1), which
    drops the junction correction kappa_w; the reported bound covers it
    when F(x) = F(x^-1).
    """
    if f.p != C.p:
        raise ValueError("weight and class have different ranks")
    if mode == "exact":
        arr = class_sphere_array(C, m, cap=cap)
        vals = np.exp(s * birkhoff_array(f, arr))
        return EtaCoefficient(complex(vals.sum()), 0.0, mode)
    if mode != "decomposed":
        raise ValueError(f"unknown mode {mode!r}")
    tm = build_transfer_matrix(f, 2 * s)
    tm_abs = build_transfer_matrix(f, 2 * np.real(s))
    total = 0j
    envelope = 0.0
    for g in C.orbit:
        Fg = birkhoff(f, g)
        total += np.exp(s * Fg) * weighted_restricted_sum(f, g, m, 2 * s, tm)
        envelope += math.exp(np.real(s) * Fg) * abs(weighted_restricted_sum(f, g, m, 2 * np.real(s), tm_abs))
    K = kappa_bound(f)
    bound = math.expm1(abs(s) * K) * envelope
    return EtaCoefficient(complex(total), bound, mode)


def kappa_exact(f: WeightFunction, g: Word, w: Word) -> float:
    """f^(k+2m)(w^-1 g w) - f^m(w) - f^k(g) - f^m(w^-1)."""
    _check_g(g, f.p)
    if len(w) and w.codes[0] not in allowed_first_letters(f.p, g):
        raise ValueError(f"{w} is not in the restricted sphere of {g}")
    x = multiply(invert(w), multiply(g, w))
    return birkhoff(f, x) - birkhoff(f, w) - birkhoff(f, g) - birkhoff(f, invert(w))


def kappa_bound(f: WeightFunction) -> float:
    return 2 * holder_seminorm(f) * f.theta / (1 - f.theta)


def spectral_projection_value(f: WeightFunction, g: Word) -> float:
    """(R_0 chi_g)(1): psi at the empty word times <nu, chi_g>, at s = 0."""
    _check_g(g, f.p)
    tm = build_transfer_matrix(f, 0.0)
    pd = perron(tm)
    n = tm.n_sigma
    M = np.asarray(tm.full, dtype=float)
    # extend psi to the padded states: (beta - M_pp) psi_p = M_ps psi_s
    Mpp = M[n:, n:]
    Mps = M[n:, :n]
    psi_pad = np.linalg.solve(pd.beta * np.eye(len(Mpp)) - Mpp, Mps @ pd.psi)
    chi = _chi(tm, g)[:n]
    return float(psi_pad[-1] * (pd.nu @ chi))
