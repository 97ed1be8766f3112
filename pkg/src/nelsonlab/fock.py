"""Truncated bosonic Fock space over a finite mode set.

The basis enumerates occupation vectors sector by sector, vacuum first.
Annihilation is exact on the truncation and creation is its adjoint, so the
canonical commutation relations and all algebraic identities built from them
hold exactly on states whose sector stays far enough below the particle cap;
"safe sectors" are those at least two below it.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from .grid import Grid, LatticeFunction
from .operators import OperatorMatrix, hermitian_func, identity, psd_power


def fock_dim(n_modes: int, n_max: int) -> int:
    return sum(comb(n_modes + n - 1, n) for n in range(n_max + 1))


def _compositions(total: int, parts: int):
    """Occupation vectors summing to ``total``, first mode weakly first."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


@dataclass(frozen=True, eq=False)
class FockBasis:
    n_modes: int
    n_max: int
    occupations: np.ndarray  # (dim, n_modes)
    sector_bounds: tuple[int, ...]  # sector n occupies rows [bounds[n], bounds[n+1])
    index: dict

    @property
    def dim(self) -> int:
        return self.occupations.shape[0]

    @property
    def space(self) -> str:
        return f"fock({self.n_modes},{self.n_max})"

    def sector_slice(self, n: int) -> slice:
        return slice(self.sector_bounds[n], self.sector_bounds[n + 1])

    def sector_totals(self) -> np.ndarray:
        return self.occupations.sum(axis=1)

    def safe_cap(self, margin: int = 2) -> int:
        return self.n_max - margin


def fock_basis(n_modes: int, n_max: int) -> FockBasis:
    if n_modes < 1 or n_max < 0:
        raise ValueError("need n_modes >= 1 and n_max >= 0")
    rows = []
    bounds = [0]
    for n in range(n_max + 1):
        rows.extend(_compositions(n, n_modes))
        bounds.append(len(rows))
    occ = np.array(rows, dtype=np.int64)
    index = {tuple(r): i for i, r in enumerate(rows)}
    return FockBasis(n_modes, n_max, occ, tuple(bounds), index)


def vacuum(basis: FockBasis) -> np.ndarray:
    v = np.zeros(basis.dim, dtype=complex)
    v[0] = 1.0
    return v


def annihilate(basis: FockBasis, f: np.ndarray) -> OperatorMatrix:
    """a(f) for mode coefficients ``f``; antilinear in f."""
    f = np.asarray(f, dtype=complex)
    if f.shape != (basis.n_modes,):
        raise ValueError(f"expected {basis.n_modes} mode coefficients")
    mat = np.zeros((basis.dim, basis.dim), dtype=complex)
    occ = basis.occupations
    for s in range(basis.dim):
        state = occ[s]
        for j in np.nonzero(state)[0]:
            target = state.copy()
            target[j] -= 1
            t = basis.index[tuple(target)]
            mat[t, s] += np.conj(f[j]) * np.sqrt(state[j])
    return OperatorMatrix(mat, basis.space, False)


def create(basis: FockBasis, f: np.ndarray) -> OperatorMatrix:
    """a*(f), the exact adjoint of a(f) on the truncation."""
    return annihilate(basis, f).adjoint()


def second_quantize(basis: FockBasis, h: np.ndarray) -> OperatorMatrix:
    """dGamma(h) for a one-particle matrix ``h`` on the modes."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (basis.n_modes, basis.n_modes):
        raise ValueError("one-particle matrix has wrong shape")
    herm = bool(np.max(np.abs(h - h.conj().T)) <= 1e-12)
    mat = np.zeros((basis.dim, basis.dim), dtype=complex)
    occ = basis.occupations
    nz = [(j, k) for j in range(basis.n_modes) for k in range(basis.n_modes) if h[j, k] != 0]
    for s in range(basis.dim):
        state = occ[s]
        for j, k in nz:
            if state[k] == 0:
                continue
            if j == k:
                mat[s, s] += h[j, j] * state[j]
                continue
            target = state.copy()
            target[k] -= 1
            target[j] += 1
            t = basis.index[tuple(target)]
            mat[t, s] += h[j, k] * np.sqrt(state[k] * (state[j] + 1))
    return OperatorMatrix(mat, basis.space, herm if herm else None)


def number_operator(basis: FockBasis) -> OperatorMatrix:
    return OperatorMatrix(
        np.diag(basis.sector_totals().astype(complex)), basis.space, True
    )


def field(basis: FockBasis, f: np.ndarray) -> OperatorMatrix:
    """Phi(f) = (a*(f) + a(f)) / sqrt(2)."""
    a = annihilate(basis, f)
    mat = (a.adjoint().mat + a.mat) / np.sqrt(2.0)
    return OperatorMatrix(mat, basis.space, True)


def momentum(basis: FockBasis, f: np.ndarray) -> OperatorMatrix:
    """Pi(f) = i (a*(f) - a(f)) / sqrt(2) = Phi(i f)."""
    a = annihilate(basis, f)
    mat = 1j * (a.adjoint().mat - a.mat) / np.sqrt(2.0)
    return OperatorMatrix(mat, basis.space, True)


def weyl(basis: FockBasis, f: np.ndarray) -> OperatorMatrix:
    """V(f) = exp(i Pi(f)), unitary on the truncation."""
    pi = momentum(basis, f)
    mat = hermitian_func(pi.mat, lambda w: np.exp(1j * w))
    return OperatorMatrix(mat, basis.space, False)


def weyl_truncation_tolerance(n_max: int, sector_cap: int, f_norm: float) -> float:
    """Heuristic size of truncation effects of Weyl identities on sectors <= cap.

    Leakage must pass through the cut at the particle cap, which costs
    ||f||^(2K) / K! with K the sector headroom.
    """
    k = max(1, n_max - sector_cap)
    return float(np.exp(f_norm**2) * f_norm ** (2 * k) / factorial(k))


def sector_projector(basis: FockBasis, cap: int) -> OperatorMatrix:
    diag = (basis.sector_totals() <= cap).astype(complex)
    return OperatorMatrix(np.diag(diag), basis.space, True)


def dgamma_power(basis: FockBasis, h: np.ndarray, alpha: float) -> OperatorMatrix:
    """dGamma(h)^alpha for hermitian psd ``h`` (blockwise eigh)."""
    dg = second_quantize(basis, h)
    return OperatorMatrix(psd_power(dg.mat, alpha), basis.space, True)


# ---------------------------------------------------------------------------
# mode maps: lattice one-particle space -> finite mode set


@dataclass(frozen=True, eq=False)
class ModeMap:
    """Orthonormal mode family inside the weighted lattice inner product."""

    grid: Grid
    vectors: np.ndarray  # (grid.size, n_modes)

    @property
    def n_modes(self) -> int:
        return self.vectors.shape[1]

    def project(self, u) -> tuple[np.ndarray, float]:
        """Mode coefficients of ``u`` and the norm of what the modes miss.

        The residual is always reported, never silently dropped.
        """
        vals = u.values if isinstance(u, LatticeFunction) else np.asarray(u)
        coeffs = self.vectors.conj().T @ vals * self.grid.weight
        recon = self.vectors @ coeffs
        residual = float(
            np.sqrt(np.vdot(vals - recon, vals - recon).real * self.grid.weight)
        )
        return coeffs, residual

    def embed(self, coeffs: np.ndarray) -> np.ndarray:
        return self.vectors @ np.asarray(coeffs, dtype=complex)

    def reduce(self, one_particle_mat: np.ndarray) -> np.ndarray:
        """Compression of a lattice one-particle operator onto the modes."""
        return self.vectors.conj().T @ one_particle_mat @ self.vectors * self.grid.weight


def fourier_modes(grid: Grid, n_modes: int) -> ModeMap:
    """Plane-wave modes ordered by |xi|^2, then lexicographically."""
    if n_modes > grid.size:
        raise ValueError("more modes than lattice points")
    mesh = grid.momentum_mesh()
    sq = grid.momentum_sq()
    order = np.lexsort(tuple(mesh[:, d] for d in reversed(range(grid.dim))) + (sq,))
    chosen = order[:n_modes]
    pos = grid.position_mesh()
    vecs = np.exp(1j * pos @ mesh[chosen].T) / np.sqrt(grid.box**grid.dim)
    return ModeMap(grid, vecs)


def spectral_modes(grid: Grid, one_particle_mat: np.ndarray, n_modes: int):
    """Lowest eigenmodes of a hermitian lattice operator, weight-orthonormal."""
    if n_modes > grid.size:
        raise ValueError("more modes than lattice points")
    w, v = np.linalg.eigh(np.asarray(one_particle_mat))
    vecs = v[:, :n_modes] / np.sqrt(grid.weight)
    return ModeMap(grid, vecs), w[:n_modes]


# ---------------------------------------------------------------------------
# reference checks


def gross_check_static(
    basis: FockBasis,
    omega: np.ndarray,
    rho: np.ndarray,
    margin: int = 10,
    sector_cap: int | None = None,
) -> float:
    """Residual of the exact dressing identity for a static source.

    Conjugating dGamma(omega) + Phi(omega^{-1/2} rho) by the Weyl operator of
    f = -omega^{-3/2} rho removes the field term and shifts the energy by
    -||omega^{-1} rho||^2 / 2.  Returns the residual norm on sectors at least
    ``margin`` below the cap; pass ``sector_cap`` for a window that stays
    comparable across different caps.
    """
    omega = np.asarray(omega, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    f = -psd_power(omega, -1.5) @ rho
    ham = second_quantize(basis, omega) + field(basis, psd_power(omega, -0.5) @ rho)
    v = weyl(basis, f)
    shift = 0.5 * float(np.vdot(psd_power(omega, -1.0) @ rho, psd_power(omega, -1.0) @ rho).real)
    target = second_quantize(basis, omega).shifted(-shift)
    cap = basis.n_max - margin if sector_cap is None else sector_cap
    p = sector_projector(basis, cap)
    resid = p @ (v @ ham @ v.adjoint() - target) @ p
    return resid.norm()


def ac_estimate_report(
    basis: FockBasis,
    h: np.ndarray,
    f: np.ndarray,
    g: np.ndarray,
    psi: np.ndarray,
    alpha: float,
) -> dict:
    """Left and right sides of the annihilation-bound family.

    Requires h >= 1 hermitian on the modes and alpha >= 1/2.  Returns pairs
    (lhs, rhs); each inequality asserts lhs <= rhs.
    """
    if alpha < 0.5:
        raise ValueError("alpha must be at least 1/2")
    h = np.asarray(h, dtype=complex)
    wmin = float(np.min(np.linalg.eigvalsh(h)))
    if wmin < 1.0 - 1e-12:
        raise ValueError(f"need h >= 1, got min eigenvalue {wmin}")
    psi = np.asarray(psi, dtype=complex)

    def vec_norm(x):
        return float(np.linalg.norm(x))

    dg_alpha = dgamma_power(basis, h, alpha)
    a_f = annihilate(basis, f)
    a_g = annihilate(basis, g)
    n_shift = number_operator(basis).shifted(1.0)
    n_inv_half = OperatorMatrix(psd_power(n_shift.mat, -0.5), basis.space, True)

    lhs_a = vec_norm(a_f @ psi)
    rhs_a = vec_norm(psd_power(h, -alpha) @ f) * vec_norm(dg_alpha @ psi)

    lhs_c = vec_norm(a_f.adjoint() @ psi)
    rhs_c = rhs_a + vec_norm(f) * vec_norm(psi)

    lhs_p = vec_norm(n_inv_half @ (a_f @ (a_g @ psi)))
    rhs_p = (
        vec_norm(psd_power(h, -alpha / 2) @ f)
        * vec_norm(psd_power(h, -alpha / 2) @ g)
        * vec_norm(dg_alpha @ psi)
    )
    return {
        "annihilate": (lhs_a, rhs_a),
        "create": (lhs_c, rhs_c),
        "pair": (lhs_p, rhs_p),
    }
