"""Variable-coefficient particle-field model on the periodic lattice.

The particle coordinate X and the boson coordinate x share one Grid.  The
kinetic term is the divergence form K0 = Re(D g D) with D the hermitian
spectral derivative; the boson dispersion is omega = (K0 + mu^2)^{1/2} via
eigh.  Coupling enters through a smeared bump rho_{lam,X} built on the
Fourier side, so the interaction block at particle point X is
Phi(omega^{-1/2} rho_{lam,X}) on the Fock factor.

Scalar conventions used throughout:

  form factor      v_{lam,X} = omega^{-1/2} rho_{lam,X} / sqrt(2)   (enters a, a*)
  vacuum energy    E_lam(X) = (1/2) <omega^{-1/2} rho, (K+omega)^{-1} omega^{-1/2} rho>_w
  dressing         B_{lam,X} = -(K+omega)^{-1} omega^{-1/2} rho^sigma_{lam,X}

Full tensor assemblies are pinned to d = 1; the d = 3 evaluators are
quadrature-only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import fock
from .grid import (
    Grid,
    LatticeFunction,
    ResolutionError,
    cosine_ramp,
    derivative_matrix,
    gaussian_profile_hat,
    idft,
    inner,
    norm as lattice_norm,
    sobolev_norm,
)
from .operators import OperatorMatrix
from .psido import dequantize

# Largest tensor dimension (lattice size * Fock dimension) assembled densely.
MAX_DENSE_DIM = 4096

_PROFILE_HATS = {"gaussian": gaussian_profile_hat}


class ModelSpecError(ValueError):
    """A model ingredient violates its bounds at some lattice point."""


class SpectralError(ValueError):
    """A matrix that must be definite or invertible fails the check."""


class SizeError(ValueError):
    """A dense tensor assembly would exceed the memory guard."""


def _as_lattice_array(grid: Grid, values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(grid.size, float(arr))
    if arr.shape != (grid.size,):
        raise ModelSpecError(
            f"{name} must be scalar or flat of length {grid.size}, got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        bad = int(np.argmax(~np.isfinite(arr)))
        raise ModelSpecError(f"{name} is not finite at lattice point {bad}")
    return arr


@dataclass(frozen=True)
class ModelSpec:
    """Ingredients of the lattice model; one shared grid for X and x.

    ``g`` is the scalar coefficient of the divergence-form kinetic term per
    lattice point (isotropic; tensor assemblies are pinned to d = 1), ``mu``
    the boson mass function with a strictly positive floor, ``w`` the bounded
    particle potential.  ``n_modes`` counts the boson modes kept (default:
    all of them); ``n_max`` caps the total boson number.
    """

    grid: Grid
    g: np.ndarray
    mu: np.ndarray
    w: np.ndarray
    coupling: float = 1.0
    sigma: float = 0.0
    n_max: int = 2
    n_modes: int | None = None
    profile: str = "gaussian"

    def __post_init__(self) -> None:
        object.__setattr__(self, "g", _as_lattice_array(self.grid, self.g, "g"))
        object.__setattr__(self, "mu", _as_lattice_array(self.grid, self.mu, "mu"))
        object.__setattr__(self, "w", _as_lattice_array(self.grid, self.w, "w"))
        if np.min(self.g) <= 0.0:
            bad = int(np.argmin(self.g))
            raise ModelSpecError(
                f"ellipticity violated: g = {self.g[bad]:.6g} at lattice point {bad}"
            )
        if np.min(self.mu) <= 0.0:
            bad = int(np.argmin(self.mu))
            raise ModelSpecError(
                f"mass floor violated: mu = {self.mu[bad]:.6g} at lattice point {bad}"
            )
        if self.sigma < 0.0:
            raise ModelSpecError("sigma must be nonnegative")
        if self.n_max < 0:
            raise ModelSpecError("n_max must be nonnegative")
        if self.n_modes is None:
            object.__setattr__(self, "n_modes", self.grid.size)
        if not 1 <= self.n_modes <= self.grid.size:
            raise ModelSpecError(
                f"n_modes must lie in [1, {self.grid.size}], got {self.n_modes}"
            )
        if self.profile not in _PROFILE_HATS:
            raise ModelSpecError(f"unknown profile {self.profile!r}")

    @property
    def mass_floor(self) -> float:
        return float(np.min(self.mu))

    @property
    def ellipticity_bounds(self) -> tuple[float, float]:
        return float(np.min(self.g)), float(np.max(self.g))


def sinusoidal_spec(
    npts: int,
    box: float = 2.0 * np.pi,
    g_modulation: float = 0.3,
    w_amplitude: float = 0.2,
    mass: float = 1.0,
    coupling: float = 1.0,
    sigma: float = 0.0,
    n_max: int = 2,
    n_modes: int | None = None,
    profile: str = "gaussian",
) -> ModelSpec:
    """Bench family g = 1 + a sin(x), W = b cos(x), mu = const."""
    grid = Grid(1, npts, box)
    x = grid.position_mesh()[:, 0]
    return ModelSpec(
        grid=grid,
        g=1.0 + g_modulation * np.sin(x),
        mu=np.full(npts, mass),
        w=w_amplitude * np.cos(x),
        coupling=coupling,
        sigma=sigma,
        n_max=n_max,
        n_modes=n_modes,
        profile=profile,
    )


def divergence_form(grid: Grid, g: np.ndarray) -> np.ndarray:
    """Real symmetric part of D diag(g) D.

    D diag(g) D is hermitian up to the Nyquist column, whose unpaired mode
    makes the product complex for variable g; Re(.) projects back onto the
    symmetric divergence-form operator and is exact for constant g.
    """
    d = derivative_matrix(grid)
    m = d @ np.diag(np.asarray(g, dtype=complex)) @ d
    return 0.5 * (m + m.conj().T).real


@dataclass(frozen=True, eq=False)
class AssembledModel:
    """Free pieces of the model: one-particle matrices, modes, and H0.

    The dense tensor H0 is built on first access and cached; its dimension
    is guarded so quadrature- and sector-level work on large grids never
    pays for it.
    """

    spec: ModelSpec
    k0: np.ndarray
    k: np.ndarray
    h: np.ndarray
    h_evals: np.ndarray
    h_evecs: np.ndarray
    omega: np.ndarray
    modes: fock.ModeMap
    mode_freqs: np.ndarray
    basis: fock.FockBasis
    dgamma: OperatorMatrix

    @property
    def grid(self) -> Grid:
        return self.spec.grid

    @property
    def fock_dim(self) -> int:
        return self.basis.dim

    @property
    def dim(self) -> int:
        return self.grid.size * self.basis.dim

    @property
    def space(self) -> str:
        g = self.grid
        return f"tensor({g.dim},{g.npts},{g.box:g};{self.basis.space})"

    @property
    def h0(self) -> OperatorMatrix:
        """K x 1 + 1 x dGamma as a dense matrix (lazy, size-guarded)."""
        cached = getattr(self, "_h0", None)
        if cached is None:
            if self.dim > MAX_DENSE_DIM:
                raise SizeError(
                    f"dense H0 of dimension {self.dim} = {self.grid.size} x "
                    f"{self.fock_dim} exceeds the guard {MAX_DENSE_DIM}"
                )
            mat = np.kron(self.k, np.eye(self.fock_dim)) + np.kron(
                np.eye(self.grid.size), self.dgamma.mat
            )
            cached = OperatorMatrix(mat, self.space, True)
            object.__setattr__(self, "_h0", cached)
        return cached

    def block(self, x_index: int) -> slice:
        """Rows of the Fock block attached to particle point ``x_index``."""
        f = self.basis.dim
        return slice(x_index * f, (x_index + 1) * f)

    def omega_power(self, p: float) -> np.ndarray:
        """omega^p through the stored eigendecomposition of h (p acts as p/2 on h)."""
        return (self.h_evecs * self.h_evals ** (0.5 * p)) @ self.h_evecs.T

    def project(self, u) -> np.ndarray:
        """Mode coefficients of a lattice vector.

        The dropped complement is the mode truncation of the model itself,
        not an error; use ``modes.project`` directly to see the residual.
        """
        coeffs, _ = self.modes.project(u)
        return coeffs


def assemble_free(spec: ModelSpec) -> AssembledModel:
    """Build K, h, omega, the spectral modes, and H0 = K x 1 + 1 x dGamma.

    Boson modes are the lowest ``n_modes`` eigenvectors of h, orthonormal in
    the weighted inner product, so dGamma acts diagonally with frequencies
    sqrt(eigenvalues of h).
    """
    grid = spec.grid
    k0 = divergence_form(grid, spec.g)
    k = k0 + np.diag(spec.w)
    h = k0 + np.diag(spec.mu**2)
    h_evals, h_evecs = np.linalg.eigh(h)
    floor = spec.mass_floor**2
    if h_evals[0] < floor * (1.0 - 1e-10):
        raise SpectralError(
            f"h has eigenvalue {h_evals[0]:.6g} below the mass floor {floor:.6g}"
        )
    omega = (h_evecs * np.sqrt(h_evals)) @ h_evecs.T
    dev = np.max(np.abs(omega @ omega - h))
    if dev > 1e-10 * max(1.0, float(h_evals[-1])):
        raise SpectralError(f"omega^2 deviates from h by {dev:.3e}")

    modes = fock.ModeMap(grid, h_evecs[:, : spec.n_modes] / np.sqrt(grid.weight))
    mode_freqs = np.sqrt(h_evals[: spec.n_modes])
    basis = fock.fock_basis(spec.n_modes, spec.n_max)
    dgamma = fock.second_quantize(basis, np.diag(mode_freqs))
    return AssembledModel(
        spec=spec,
        k0=k0,
        k=k,
        h=h,
        h_evals=h_evals,
        h_evecs=h_evecs,
        omega=omega,
        modes=modes,
        mode_freqs=mode_freqs,
        basis=basis,
        dgamma=dgamma,
    )


# ---------------------------------------------------------------------------
# bump family and form factors


def form_factor_rho(
    model: AssembledModel, lam: float, x_index: int, sigma: float | None = None
) -> LatticeFunction:
    """Smeared coupling bump rho_{lam,X} centered at lattice point ``x_index``.

    Built on the Fourier side as coupling * profile_hat(|xi|/lam) *
    ramp(|xi|, sigma) * exp(-i xi X).  ``lam`` may not exceed the largest
    resolved momentum: beyond that the profile saturates on the lattice and
    larger cutoffs change nothing.
    """
    spec = model.spec
    grid = model.grid
    if lam <= 0:
        raise ValueError("lam must be positive")
    guard = grid.max_momentum()
    if lam > guard * (1.0 + 1e-12):
        raise ResolutionError(
            f"cutoff lam={lam:g} exceeds the resolved momentum range {guard:g} "
            f"(npts={grid.npts}, box={grid.box:g})"
        )
    if sigma is None:
        sigma = spec.sigma
    prof = _PROFILE_HATS[spec.profile]
    mesh = grid.momentum_mesh()
    r = np.sqrt(np.einsum("kd,kd->k", mesh, mesh))
    x0 = grid.position_mesh()[x_index]
    hat = prof(r / lam) * cosine_ramp(r, sigma) * np.exp(-1j * mesh @ x0)
    return LatticeFunction(grid, spec.coupling * idft(grid, hat))


def form_factor(
    model: AssembledModel, lam: float, x_index: int, sigma: float | None = None
) -> np.ndarray:
    """Mode coefficients of v_{lam,X} = omega^{-1/2} rho_{lam,X} / sqrt(2)."""
    rho = form_factor_rho(model, lam, x_index, sigma)
    v = model.omega_power(-0.5) @ rho.values / np.sqrt(2.0)
    return model.project(v)


def form_factor_split(
    model: AssembledModel, lam: float, x_index: int, sigma: float | None = None
) -> tuple[LatticeFunction, LatticeFunction, float]:
    """Split v = u + u~ by freezing the dispersion symbol at X.

    u applies the right-quantized symbol of omega^{-1/2} with its position
    argument frozen at X to the bump; u~ is the residual.  Returns
    (u, u~, ||u~|| / ||u||), both on the lattice side.
    """
    grid = model.grid
    spec = model.spec
    if sigma is None:
        sigma = spec.sigma
    symbol = dequantize(grid, model.omega_power(-0.5).astype(complex), 1.0)
    prof = _PROFILE_HATS[spec.profile]
    mesh = grid.momentum_mesh()
    r = np.sqrt(np.einsum("kd,kd->k", mesh, mesh))
    x0 = grid.position_mesh()[x_index]
    rho_hat = spec.coupling * prof(r / lam) * cosine_ramp(r, sigma) * np.exp(-1j * mesh @ x0)
    u_vals = idft(grid, symbol.values[x_index, :] * rho_hat) / np.sqrt(2.0)
    rho = form_factor_rho(model, lam, x_index, sigma)
    v_vals = model.omega_power(-0.5) @ rho.values / np.sqrt(2.0)
    u = LatticeFunction(grid, u_vals)
    residual = LatticeFunction(grid, v_vals - u_vals)
    return u, residual, residual.norm() / u.norm()


def assemble_cutoff_hamiltonian(
    model: AssembledModel, lam: float, sigma: float | None = None
) -> OperatorMatrix:
    """H_lam = H0 + blockdiag_X Phi(omega^{-1/2} rho_{lam,X})."""
    if model.dim > MAX_DENSE_DIM:
        raise SizeError(
            f"dense assembly of dimension {model.dim} = {model.grid.size} x "
            f"{model.fock_dim} exceeds the guard {MAX_DENSE_DIM}"
        )
    mat = model.h0.mat.copy()
    for x_index in range(model.grid.size):
        f = np.sqrt(2.0) * form_factor(model, lam, x_index, sigma)
        blk = model.block(x_index)
        mat[blk, blk] += fock.field(model.basis, f).mat
    return OperatorMatrix(mat, model.space, True)


# ---------------------------------------------------------------------------
# vacuum energy


def _k_plus_omega(model: AssembledModel) -> np.ndarray:
    ko = model.k + model.omega
    if np.linalg.eigvalsh(ko)[0] <= 0.0:
        raise SpectralError("K + omega is not positive definite")
    return ko


def vacuum_energy(
    model: AssembledModel, lam: float, x_index: int, sigma: float | None = None
) -> float:
    """Second-order energy shift E_lam(X), matrix evaluator."""
    ko = _k_plus_omega(model)
    rho = form_factor_rho(model, lam, x_index, sigma)
    f = model.omega_power(-0.5) @ rho.values
    return 0.5 * inner(model.grid, f, np.linalg.solve(ko, f)).real


def perturbation_energy_sum(
    model: AssembledModel, lam: float, x_index: int, sigma: float | None = None
) -> float:
    """E_lam(X) as an explicit sum over one-boson excitations.

    Diagonalizes K + omega and accumulates |amplitude|^2 / denominator, the
    textbook second-order expression; agrees with ``vacuum_energy`` to
    round-off and exists purely as an independent cross-check.
    """
    ko = _k_plus_omega(model)
    evals, evecs = np.linalg.eigh(ko)
    rho = form_factor_rho(model, lam, x_index, sigma)
    f = model.omega_power(-0.5) @ rho.values
    amps = evecs.conj().T @ f * model.grid.weight
    return 0.5 * float(np.sum(np.abs(amps) ** 2 / evals)) / model.grid.weight


def vacuum_energy_quadrature(
    lam: float, d: int, g_const: float = 1.0, profile: str = "gaussian"
) -> float:
    """Leading symbol form of E_lam for constant coefficients and unit mass.

    Radial quadrature of (h0+1)^{-1/2} / (K0+1) * profile_hat(r/lam)^2 with
    h0 = K0 = g_const * r^2, d in {1, 3}.  The integrand decays like
    r^{d-1-3}, so the d = 3 value grows logarithmically in lam.
    """
    if d not in (1, 3):
        raise ValueError("d must be 1 or 3")
    prof = _PROFILE_HATS[profile]

    def integrand(r: float) -> float:
        h0 = g_const * r * r
        return (h0 + 1.0) ** -0.5 / (h0 + 1.0) * prof(r / lam) ** 2 * r ** (d - 1)

    sphere = {1: 2.0, 3: 4.0 * np.pi}[d]
    head, _ = quad(integrand, 0.0, lam, limit=200)
    tail, _ = quad(integrand, lam, np.inf, limit=200)
    return 0.5 * (2.0 * np.pi) ** -d * sphere * (head + tail)


def vacuum_energy_operator(model: AssembledModel, lam: float) -> OperatorMatrix:
    """E_lam(X) as the diagonal-in-X multiplication operator on the tensor space."""
    vals = [vacuum_energy(model, lam, xi) for xi in range(model.grid.size)]
    mat = np.kron(np.diag(vals), np.eye(model.fock_dim))
    return OperatorMatrix(mat, model.space, True)


# ---------------------------------------------------------------------------
# dressing transformation


def gross_B(
    model: AssembledModel, lam: float, x_index: int, sigma: float | None = None
) -> LatticeFunction:
    """Dressing function B_{lam,X} = -(K+omega)^{-1} omega^{-1/2} rho^sigma."""
    ko = _k_plus_omega(model)
    rho = form_factor_rho(model, lam, x_index, sigma)
    b = -np.linalg.solve(ko, model.omega_power(-0.5) @ rho.values)
    imag = float(np.max(np.abs(b.imag)))
    if imag > 1e-10:
        raise SpectralError(f"dressing function has imaginary part {imag:.3e}")
    return LatticeFunction(model.grid, b.real.astype(complex))


def gross_bound_ratio(
    model: AssembledModel,
    lam: float,
    x_index: int,
    alpha: float = 0.5,
    s: float = -2.0,
    sigma: float | None = None,
) -> float:
    """||omega^alpha B|| / ||rho^sigma||_{H^s}; stability in lam is the point."""
    b = gross_B(model, lam, x_index, sigma)
    rho = form_factor_rho(model, lam, x_index, sigma)
    num = lattice_norm(model.grid, model.omega_power(alpha) @ b.values)
    return num / sobolev_norm(model.grid, rho.values, s)


def transformed_hamiltonian_check(
    model: AssembledModel,
    lam: float,
    sigma: float | None = None,
    b_family: np.ndarray | str | None = None,
) -> dict:
    """Conjugate H_lam by the blockwise Weyl dressing and rebuild it termwise.

    The left side is U H_lam U* with U = blockdiag_X V(b_X), b_X the mode
    coefficients of B_{lam,X}.  The right side regroups into the free part,
    a shifted field term Phi(omega^{-1/2} rho + (K0+omega) B_X), the mixed
    first-order terms -sqrt2 a*(dB) g dX + sqrt2 dX g a(dB), the quadratic
    block g(X)(-a*a*/2 - aa/2 + a*a) in dB, and a scalar per X.  On the
    continuum all that survives of the difference is zero; on the lattice the
    commutator of the discrete derivative with the X-dependent dressing
    leaves a residual that shrinks under grid refinement.

    Pass ``b_family`` to override the dressing: "zero" and "constant" are the
    degenerate checks, or give a real (size, size) array of lattice rows.
    Returns a report dict; the headline entry is ``residual`` = safe-sector
    residual norm relative to the safe-sector norm of the left side.
    """
    spec = model.spec
    grid = model.grid
    if spec.n_modes != grid.size:
        raise ModelSpecError("the conjugation check needs the full mode set")
    if model.dim > MAX_DENSE_DIM:
        raise SizeError(
            f"dense conjugation at dimension {model.dim} = {grid.size} x "
            f"{model.fock_dim} exceeds the guard {MAX_DENSE_DIM}"
        )
    if sigma is None:
        sigma = spec.sigma
    size = grid.size
    basis = model.basis
    fdim = basis.dim
    d = derivative_matrix(grid)
    pd = 1j * d
    k0 = model.k0
    omega = model.omega
    om_m12 = model.omega_power(-0.5)

    rhos = np.array(
        [form_factor_rho(model, lam, xi, sigma).values for xi in range(size)]
    )
    if b_family is None:
        fam_b = np.array(
            [gross_B(model, lam, xi, sigma).values.real for xi in range(size)]
        )
    elif isinstance(b_family, str):
        base = gross_B(model, lam, 0, sigma).values.real
        if b_family == "zero":
            fam_b = np.zeros((size, size))
        elif b_family == "constant":
            fam_b = np.broadcast_to(base, (size, size)).copy()
        else:
            raise ValueError(f"unknown b_family {b_family!r}")
    else:
        fam_b = np.asarray(b_family, dtype=float)
        if fam_b.shape != (size, size):
            raise ValueError(f"b_family must have shape ({size}, {size})")
    fam_db = pd @ fam_b  # derivative along the family index X

    ident_f = np.eye(fdim)
    h_mat = assemble_cutoff_hamiltonian(model, lam, sigma).mat
    weyls = []
    b_norm_max = 0.0
    for xi in range(size):
        b = model.project(fam_b[xi])
        b_norm_max = max(b_norm_max, float(np.linalg.norm(b)))
        weyls.append(fock.weyl(basis, b).mat)
    u_mat = np.zeros((model.dim, model.dim), dtype=complex)
    for xi in range(size):
        blk = model.block(xi)
        u_mat[blk, blk] = weyls[xi]
    lhs = u_mat @ h_mat @ u_mat.conj().T

    rhs = model.h0.mat.astype(complex).copy()
    g_pd = np.diag(spec.g) @ pd
    pd_g = pd @ np.diag(spec.g)
    sqrt2 = np.sqrt(2.0)
    for xi in range(size):
        blk = model.block(xi)
        b_x = fam_b[xi]
        q = model.project(fam_db[xi])
        aop = fock.annihilate(basis, q).mat
        cop = aop.conj().T
        shifted = model.project(om_m12 @ rhos[xi] + (k0 + omega) @ b_x)
        rhs[blk, blk] += fock.field(basis, shifted).mat
        rhs[blk, blk] += spec.g[xi] * (-0.5 * cop @ cop - 0.5 * aop @ aop + cop @ aop)
        scalar = (
            0.5 * inner(grid, b_x, omega @ b_x).real
            + inner(grid, b_x, om_m12 @ rhos[xi]).real
            + 0.5 * spec.g[xi] * inner(grid, fam_db[xi], fam_db[xi]).real
        )
        rhs[blk, blk] += scalar * ident_f
        for yi in range(size):
            blk_y = model.block(yi)
            rhs[blk, blk_y] += -sqrt2 * g_pd[xi, yi] * cop
            qy = model.project(fam_db[yi])
            rhs[blk, blk_y] += sqrt2 * pd_g[xi, yi] * fock.annihilate(basis, qy).mat

    cap = max(0, basis.n_max - 2)
    safe = np.where(basis.sector_totals() <= cap)[0]
    idx = np.concatenate([xi * fdim + safe for xi in range(size)])
    sub = np.ix_(idx, idx)
    residual_abs = float(np.linalg.svd((lhs - rhs)[sub], compute_uv=False)[0])
    scale = float(np.linalg.svd(lhs[sub], compute_uv=False)[0])

    # Fock-only conjugation identities, worst deviation over X
    dev_dgamma, dev_field, tolerance = 0.0, 0.0, 0.0
    freqs = model.mode_freqs
    for xi in range(size):
        b = model.project(fam_b[xi])
        v = weyls[xi]
        conj = v @ model.dgamma.mat @ v.conj().T
        pred = (
            model.dgamma.mat
            + fock.field(basis, freqs * b).mat
            + 0.5 * np.dot(b, freqs * b).real * ident_f
        )
        dev_dgamma = max(
            dev_dgamma, float(np.abs((conj - pred)[np.ix_(safe, safe)]).max())
        )
        u = model.project(om_m12 @ rhos[xi])
        conj = v @ fock.field(basis, u).mat @ v.conj().T
        pred = fock.field(basis, u).mat + np.dot(b, u).real * ident_f
        dev_field = max(
            dev_field, float(np.abs((conj - pred)[np.ix_(safe, safe)]).max())
        )
        tolerance = max(
            tolerance,
            fock.weyl_truncation_tolerance(basis.n_max, cap, float(np.linalg.norm(b))),
        )
    return {
        "residual": residual_abs / scale,
        "residual_abs": residual_abs,
        "scale": scale,
        "fock_dgamma_dev": dev_dgamma,
        "fock_field_dev": dev_field,
        "fock_tolerance": tolerance,
        "b_norm_max": b_norm_max,
    }


# ---------------------------------------------------------------------------
# renormalization sweep


def relative_bound_report(
    model: AssembledModel, lam: float, eps: float = 0.5, draws: int = 20, seed: int = 11
) -> dict:
    """Check ||Phi psi|| <= eps ||H0 psi|| + C_eps ||psi|| on random states.

    C_eps is assembled from the interaction data itself: the worst mode norms
    of omega^{-1/2} v (against the dGamma^{1/2} piece) and of v (against the
    constant), plus eps * |min W| to undo the potential shift.
    """
    h_mat = assemble_cutoff_hamiltonian(model, lam).mat
    h0_mat = model.h0.mat
    phi_part = h_mat - h0_mat
    size = model.grid.size
    v_bound = 0.0
    v_half = 0.0
    for xi in range(size):
        v = form_factor(model, lam, xi)
        v_bound = max(v_bound, float(np.linalg.norm(v)))
        v_half = max(v_half, float(np.linalg.norm(v / np.sqrt(model.mode_freqs))))
    c_eps = eps * abs(float(np.min(model.spec.w))) + v_half**2 / eps + v_bound
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        psi = rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)
        psi /= np.linalg.norm(psi)
        lhs = float(np.linalg.norm(phi_part @ psi))
        rhs = eps * float(np.linalg.norm(h0_mat @ psi)) + c_eps
        worst = max(worst, lhs / rhs)
    return {"worst_ratio": worst, "c_eps": c_eps, "eps": eps, "draws": draws}


def renorm_convergence_experiment(model: AssembledModel, lams) -> dict:
    """Resolvent-distance table along a cutoff sweep, with and without E_lam.

    For each lam the level row records the ground-state energies of H_lam
    and H_lam + E_lam(X); for each consecutive pair the distance row records
    D = ||(H + E + i)^{-1} - (H' + E' + i)^{-1}|| (largest singular value)
    next to the unsubtracted comparison.
    """
    lams = [float(v) for v in lams]
    if len(lams) < 2:
        raise ValueError("need at least two sweep points")
    plain: dict[float, np.ndarray] = {}
    subtracted: dict[float, np.ndarray] = {}
    levels = []
    eye = np.eye(model.dim)
    for lam in lams:
        h_mat = assemble_cutoff_hamiltonian(model, lam).mat
        e_mat = vacuum_energy_operator(model, lam).mat
        plain[lam] = h_mat
        subtracted[lam] = h_mat + e_mat
        ev_plain = np.linalg.eigvalsh(h_mat)
        ev_sub = np.linalg.eigvalsh(subtracted[lam])
        levels.append(
            {
                "lam": lam,
                "gs_plain": float(ev_plain[0]),
                "gs_subtracted": float(ev_sub[0]),
            }
        )

    def resolvent(mat: np.ndarray) -> np.ndarray:
        return np.linalg.inv(mat + 1j * eye)

    def opnorm(mat: np.ndarray) -> float:
        return float(np.linalg.svd(mat, compute_uv=False)[0])

    pairs = []
    for a, b in zip(lams[:-1], lams[1:]):
        pairs.append(
            {
                "lam": a,
                "lam_next": b,
                "d_subtracted": opnorm(resolvent(subtracted[a]) - resolvent(subtracted[b])),
                "d_unsubtracted": opnorm(resolvent(plain[a]) - resolvent(plain[b])),
            }
        )
    return {"levels": levels, "pairs": pairs}
