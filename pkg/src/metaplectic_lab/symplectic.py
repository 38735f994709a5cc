"""Symplectic linear algebra over Sp(n, R).

Predicates, polar and singular-value decompositions with orthogonal
symplectic factors, the generating-triple chart for free matrices, the
two-free-factor splitting, and KAK (Cartan) coordinates with the
sinh-product density used for Monte Carlo on the group.

All functions are pure; matrices are validated and frozen on
construction and safe to share between threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

TOL_SYMPLECTIC = 1e-10
TOL_DET = 1e-12
TOL_RECONSTRUCT = 1e-9

#: palette of shear coefficients tried by :func:`factor_free_pair`
FACTOR_PALETTE = (1.0, -1.0, 0.5, 2.0, 1.0 / 3.0, 3.0)


class NotSymplecticError(ValueError):
    """Input matrix fails the symplectic predicate."""


class NotFreeError(ValueError):
    """Matrix has (numerically) singular upper-right block."""


def omega(n: int) -> np.ndarray:
    """Standard symplectic form J = (0 I; -I 0) on R^2n."""
    j = np.zeros((2 * n, 2 * n))
    j[:n, n:] = np.eye(n)
    j[n:, :n] = -np.eye(n)
    return j


def is_symplectic(m: np.ndarray, tol: float = TOL_SYMPLECTIC) -> bool:
    """True iff max|m^T J m - J| <= tol.

    Raises ValueError for non-square or odd-dimensional input.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] % 2 != 0:
        raise ValueError(f"symplectic matrices have even dimension, got {m.shape[0]}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = m.shape[0] // 2
    j = omega(n)
    return float(np.max(np.abs(m.T @ j @ m - j))) <= tol


def _predicate_tol(mat: np.ndarray, tol: float) -> float:
    # headroom for ill-conditioned (large singular value) inputs where
    # eigensolver residuals scale with ||S||^3
    scale = 1.0 + float(np.linalg.norm(mat, 2))
    return max(tol, 200.0 * np.finfo(float).eps * scale**3)


@dataclass(frozen=True)
class SymplecticMatrix:
    """A certified element of Sp(n, R) with block accessors."""

    mat: np.ndarray
    tol: float = TOL_SYMPLECTIC

    def __post_init__(self):
        mat = np.array(self.mat, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] % 2:
            raise ValueError(f"expected an even square matrix, got shape {mat.shape}")
        tol = _predicate_tol(mat, self.tol)
        if not is_symplectic(mat, tol):
            n = mat.shape[0] // 2
            j = omega(n)
            res = float(np.max(np.abs(mat.T @ j @ mat - j)))
            raise NotSymplecticError(f"predicate residual {res:.3e} exceeds {tol:.3e}")
        det = float(np.linalg.det(mat))
        assert abs(det - 1.0) <= 1e-6 * max(1.0, abs(det)), f"det {det} != 1"
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    @property
    def n(self) -> int:
        return self.mat.shape[0] // 2

    @property
    def a(self) -> np.ndarray:
        return self.mat[: self.n, : self.n]

    @property
    def b(self) -> np.ndarray:
        return self.mat[: self.n, self.n:]

    @property
    def c(self) -> np.ndarray:
        return self.mat[self.n:, : self.n]

    @property
    def d(self) -> np.ndarray:
        return self.mat[self.n:, self.n:]

    def __matmul__(self, other: "SymplecticMatrix") -> "SymplecticMatrix":
        return SymplecticMatrix(self.mat @ other.mat, tol=max(self.tol, other.tol))

    def inv(self) -> "SymplecticMatrix":
        # symplectic inverse: S^-1 = -J S^T J, exact up to roundoff
        j = omega(self.n)
        return SymplecticMatrix(-j @ self.mat.T @ j, tol=self.tol)

    def is_orthogonal(self, tol: float = 1e-9) -> bool:
        return float(np.max(np.abs(self.mat.T @ self.mat - np.eye(2 * self.n)))) <= tol

    @classmethod
    def identity(cls, n: int) -> "SymplecticMatrix":
        return cls(np.eye(2 * n))

    @classmethod
    def standard_j(cls, n: int) -> "SymplecticMatrix":
        return cls(omega(n))

    @classmethod
    def from_blocks(cls, a, b, c, d) -> "SymplecticMatrix":
        return cls(np.block([[np.atleast_2d(a), np.atleast_2d(b)],
                             [np.atleast_2d(c), np.atleast_2d(d)]]))

    @classmethod
    def diagonal_scaling(cls, t) -> "SymplecticMatrix":
        """a_t = diag(e^{t/2}, e^{-t/2}) for a vector t of length n."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        half = np.exp(t / 2.0)
        return cls(np.diag(np.concatenate([half, 1.0 / half])))

    @classmethod
    def rotation(cls, theta: float) -> "SymplecticMatrix":
        """Phase-space rotation (cos, sin; -sin, cos), n = 1."""
        c, s = math.cos(theta), math.sin(theta)
        return cls(np.array([[c, s], [-s, c]]))


@dataclass(frozen=True)
class GeneratingTriple:
    """Parameters (P, L, Q, m) of a quadratic Fourier transform.

    P and Q are symmetric, L invertible; the integer m mod 4 selects the
    sign branch and must have the parity of arg det L / pi.
    """

    p: np.ndarray
    l: np.ndarray
    q: np.ndarray
    maslov: int = 0

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.p, dtype=float))
        q = np.atleast_2d(np.asarray(self.q, dtype=float))
        l = np.atleast_2d(np.asarray(self.l, dtype=float))
        p = (p + p.T) / 2.0
        q = (q + q.T) / 2.0
        det_l = float(np.linalg.det(l))
        if abs(det_l) <= TOL_DET:
            raise NotFreeError(f"|det L| = {abs(det_l):.3e} <= {TOL_DET}")
        m = int(self.maslov) % 4
        # arg det L is 0 or pi for real L, so m must be even iff det L > 0
        if (m % 2 == 0) != (det_l > 0):
            raise ValueError(f"maslov {m} inconsistent with sign(det L) = {np.sign(det_l)}")
        for arr in (p, q, l):
            arr.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "maslov", m)

    @property
    def n(self) -> int:
        return self.l.shape[0]

    def companion(self) -> "GeneratingTriple":
        """The other, equally valid branch (operator negated)."""
        return GeneratingTriple(self.p, self.l, self.q, (self.maslov + 2) % 4)


@dataclass(frozen=True)
class EulerDecomposition:
    """S = u1 diag(lambdas, 1/lambdas) u2 with orthogonal symplectic u1, u2."""

    u1: SymplecticMatrix
    u2: SymplecticMatrix
    lambdas: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if np.any(np.diff(lam) > 1e-12) or lam[-1] < 1.0 - 1e-9:
            raise ValueError(f"lambdas must be descending and >= 1, got {lam}")
        if not (self.u1.is_orthogonal() and self.u2.is_orthogonal()):
            raise ValueError("u factors must be orthogonal")
        lam = lam.copy()
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)

    def diagonal(self) -> np.ndarray:
        return np.diag(np.concatenate([self.lambdas, 1.0 / self.lambdas]))

    def reconstruct(self) -> np.ndarray:
        return self.u1.mat @ self.diagonal() @ self.u2.mat


@dataclass(frozen=True)
class KakSample:
    """One KAK draw (u1, a_t, u2) with its sinh-product density weight."""

    t: np.ndarray
    u1: SymplecticMatrix
    u2: SymplecticMatrix
    weight: float

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        expected = haar_density(t)
        assert self.weight == expected, "weight must equal haar_density(t)"
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    def assemble(self) -> SymplecticMatrix:
        a_t = SymplecticMatrix.diagonal_scaling(self.t)
        return self.u1 @ a_t @ self.u2


# ---------------------------------------------------------------------------
# decompositions
# ---------------------------------------------------------------------------

def commutant_to_unitary(m: np.ndarray) -> np.ndarray:
    """Complex n x n matrix of a 2n x 2n real matrix commuting with J."""
    n = m.shape[0] // 2
    return m[:n, :n] + 1j * m[n:, :n]


def unitary_to_commutant(z: np.ndarray) -> np.ndarray:
    """Real 2n x 2n image (A -B; B A) of Z = A + iB."""
    a, b = z.real, z.imag
    return np.block([[a, -b], [b, a]])


def project_orthosymplectic(m: np.ndarray) -> np.ndarray:
    """Nearest orthogonal symplectic matrix (commutant average + polar)."""
    n = m.shape[0] // 2
    j = omega(n)
    comm = (m - j @ m @ j) / 2.0
    u, _ = scipy.linalg.polar(commutant_to_unitary(comm))
    return unitary_to_commutant(u)


def symplectic_polar(s: SymplecticMatrix) -> tuple[SymplecticMatrix, SymplecticMatrix]:
    """Unique factorization s = s0 u, s0 symmetric positive definite
    symplectic, u orthogonal symplectic."""
    m = s.mat @ s.mat.T
    w, v = np.linalg.eigh(m)
    if w[0] <= 0:
        raise NotSymplecticError("s s^T is not positive definite")
    s0 = (v * np.sqrt(w)) @ v.T
    s0 = (s0 + s0.T) / 2.0
    u = project_orthosymplectic(np.linalg.solve(s0, s.mat))
    return SymplecticMatrix(s0, tol=s.tol), SymplecticMatrix(u, tol=s.tol)


def _isotropic_selection(basis: np.ndarray, m: int, n: int) -> list[np.ndarray]:
    """Pick m orthonormal columns of `basis` spanning a J-isotropic set."""
    j = omega(n)
    picked: list[np.ndarray] = []
    pool = [basis[:, k] for k in range(basis.shape[1])]
    for _ in range(m):
        best, best_norm = None, -1.0
        for cand in pool:
            v = cand.copy()
            for c in picked:
                v -= (c @ v) * c
                jc = j @ c
                v -= (jc @ v) * jc
            nv = float(np.linalg.norm(v))
            if nv > best_norm:
                best, best_norm = v, nv
        assert best is not None and best_norm > 1e-8, "isotropic selection degenerated"
        picked.append(best / best_norm)
    return picked


def symplectic_svd(s: SymplecticMatrix) -> EulerDecomposition:
    """Euler decomposition s = U1 D U2 via the polar factor.

    The positive factor is diagonalized with an orthogonal *symplectic*
    change of basis built from its eigenvectors: if s0 v = lam v then
    s0 (Jv) = (1/lam) Jv, so columns are paired as (v, -Jv); the
    eigenvalue-one block needs an explicit isotropic selection.
    """
    n = s.n
    s0, u = symplectic_polar(s)
    w, v = np.linalg.eigh(s0.mat)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]

    pair_tol = 1e-9 * max(1.0, w[0])
    big = [k for k in range(2 * n) if w[k] > 1.0 + pair_tol]
    ones = [k for k in range(2 * n) if abs(w[k] - 1.0) <= pair_tol]
    assert len(big) + len(ones) // 2 == n, "eigenvalues do not pair reciprocally"

    cols = [v[:, k] for k in big]
    lambdas = [w[k] for k in big]
    if ones:
        cols += _isotropic_selection(v[:, ones], len(ones) // 2, n)
        lambdas += [1.0] * (len(ones) // 2)

    j = omega(n)
    r = np.empty((2 * n, 2 * n))
    for i, c in enumerate(cols):
        r[:, i] = c
        r[:, n + i] = -j @ c
    r = project_orthosymplectic(r)

    lam = np.array(lambdas)
    u1 = SymplecticMatrix(r, tol=s.tol)
    u2 = SymplecticMatrix(r.T @ u.mat, tol=s.tol)
    return EulerDecomposition(u1=u1, u2=u2, lambdas=lam)


def singular_value_product(s: SymplecticMatrix) -> float:
    """Product lambda_1 ... lambda_n of the singular values >= 1."""
    return float(np.prod(symplectic_svd(s).lambdas))


# ---------------------------------------------------------------------------
# free matrices and generating triples
# ---------------------------------------------------------------------------

def free_from_generating(g: GeneratingTriple) -> SymplecticMatrix:
    """Free symplectic matrix (L^-1 Q, L^-1; P L^-1 Q - L^T, P L^-1)."""
    l_inv = np.linalg.inv(g.l)
    a = l_inv @ g.q
    b = l_inv
    c = g.p @ l_inv @ g.q - g.l.T
    d = g.p @ l_inv
    return SymplecticMatrix.from_blocks(a, b, c, d)


def generating_from_free(s: SymplecticMatrix, companion: bool = False) -> GeneratingTriple:
    """Inverse chart: P = D B^-1, L = B^-1, Q = B^-1 A, canonical branch.

    The returned maslov index is the representative in {0, 1}; pass
    ``companion=True`` for the negated operator branch (m + 2).
    """
    det_b = float(np.linalg.det(s.b))
    if abs(det_b) <= TOL_DET:
        raise NotFreeError(f"|det B| = {abs(det_b):.3e} <= {TOL_DET}: matrix is not free")
    b_inv = np.linalg.inv(s.b)
    p = s.d @ b_inv
    q = b_inv @ s.a
    m = 0 if det_b > 0 else 1  # det L = 1/det B shares its sign
    if companion:
        m += 2
    return GeneratingTriple(p=(p + p.T) / 2, l=b_inv, q=(q + q.T) / 2, maslov=m)


def _shear_j(c: float, n: int) -> SymplecticMatrix:
    """V_c J with V_c = (I 0; cI I); always free with unit B block."""
    eye = np.eye(n)
    return SymplecticMatrix.from_blocks(0 * eye, eye, -eye, c * eye)


def factor_free_pair(
    s: SymplecticMatrix,
    prefer_conditioned: bool = False,
) -> tuple[GeneratingTriple, GeneratingTriple]:
    """Split s into two free factors, s = S_{g1} S_{g2}.

    Deterministic search: the left factor is V_c J over the fixed palette
    of shear coefficients c; the right factor (V_c J)^-1 s then has
    B-block cB - D, nonsingular for all but finitely many c.  By default
    the first palette entry whose factors both clear the determinant
    floor wins; ``prefer_conditioned=True`` instead picks the palette
    entry maximizing the smallest singular value of cB - D, which keeps
    the downstream integral kernels tame.
    """
    n = s.n
    admissible: list[tuple[float, float]] = []
    for c in FACTOR_PALETTE:
        b_right = c * s.b - s.d
        if abs(float(np.linalg.det(b_right))) <= TOL_DET:
            continue
        sigma_min = float(np.linalg.svd(b_right, compute_uv=False)[-1])
        admissible.append((c, sigma_min))
        if not prefer_conditioned:
            break
    if not admissible:
        raise RuntimeError("free-pair palette exhausted; input out of supported range")
    c = max(admissible, key=lambda item: item[1])[0] if prefer_conditioned else admissible[0][0]

    left = _shear_j(c, n)
    right = left.inv() @ s
    g1 = generating_from_free(left)
    g2 = generating_from_free(right)
    residual = np.max(np.abs(
        free_from_generating(g1).mat @ free_from_generating(g2).mat - s.mat))
    assert residual <= _predicate_tol(s.mat, TOL_RECONSTRUCT), \
        f"factor product residual {residual:.3e}"
    return g1, g2


# ---------------------------------------------------------------------------
# Haar measure in KAK coordinates
# ---------------------------------------------------------------------------

def haar_density(t: np.ndarray) -> float:
    """sinh-product density on the chamber t_1 >= ... >= t_n >= 0.

    prod_{i<j} sinh((t_i - t_j)/2) * prod_{i<=j} sinh((t_i + t_j)/2),
    with the overall Haar constant fixed to one.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(np.diff(t) > 0):
        raise ValueError(f"t must be sorted descending, got {t}")
    if t[-1] < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    n = t.size
    out = 1.0
    for i in range(n):
        for j in range(i, n):
            if i < j:
                out *= math.sinh((t[i] - t[j]) / 2.0)
            out *= math.sinh((t[i] + t[j]) / 2.0)
    return out


def simplex_volume(n: int, t_max: float) -> float:
    """Volume of the ordered chamber {t_max >= t_1 >= ... >= t_n >= 0}."""
    return t_max**n / math.factorial(n)


def haar_orthogonal_symplectic(n: int, rng: np.random.Generator) -> SymplecticMatrix:
    """Haar draw from U(2n, R) = Sp(n, R) o O(2n) via the U(n) embedding."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    return SymplecticMatrix(unitary_to_commutant(q))


def sample_kak(n: int, t_max: float, rng_seed) -> KakSample:
    """One seeded KAK sample: t uniform on the ordered chamber, u1 and u2
    Haar on the orthogonal symplectic subgroup, weight = haar_density(t)."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    t = np.sort(rng.uniform(0.0, t_max, size=n))[::-1]
    u1 = haar_orthogonal_symplectic(n, rng)
    u2 = haar_orthogonal_symplectic(n, rng)
    return KakSample(t=t, u1=u1, u2=u2, weight=haar_density(t))


def random_symplectic(n: int, t_max: float, rng: np.random.Generator) -> SymplecticMatrix:
    """Seeded generic group element assembled from a KAK sample."""
    return sample_kak(n, t_max, rng).assemble()


def random_generating_triple(n: int, rng: np.random.Generator,
                             spread: float = 1.5) -> GeneratingTriple:
    """Seeded triple with symmetric P, Q and a well-conditioned L."""
    p = rng.uniform(-spread, spread, size=(n, n))
    q = rng.uniform(-spread, spread, size=(n, n))
    z1 = rng.standard_normal((n, n))
    z2 = rng.standard_normal((n, n))
    u, _ = np.linalg.qr(z1)
    v, _ = np.linalg.qr(z2)
    l = u @ np.diag(np.exp(rng.uniform(-0.7, 0.7, size=n))) @ v
    det_l = float(np.linalg.det(l))
    return GeneratingTriple(p=(p + p.T) / 2, l=l, q=(q + q.T) / 2,
                            maslov=0 if det_l > 0 else 1)


# ---------------------------------------------------------------------------
# plain-text fixtures
# ---------------------------------------------------------------------------

def save_matrix_csv(path, s: SymplecticMatrix) -> None:
    np.savetxt(path, s.mat, delimiter=",", fmt="%.17g")


def load_matrix_csv(path) -> SymplecticMatrix:
    return SymplecticMatrix(np.atleast_2d(np.loadtxt(path, delimiter=",")))
