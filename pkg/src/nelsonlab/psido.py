"""Phase-space calculus for operators on the periodic lattice.

A symbol is a complex tabulation a(x, xi) over the product of the position
lattice and the momentum lattice.  Quantization at ordering parameter
t in [0, 1] places the position argument at t*x + (1-t)*y.  Off-lattice
midpoints are evaluated through the symbol's band-limited trigonometric
interpolant in x (the default), which makes quantization a bijection on
tabulated symbols and turns the composition, adjoint, and reordering rules
into exact finite sums.  Nearest-point snapping of the midpoint is kept as
an option; it agrees with the interpolant at t in {0, 1} but discards half
the x-information at t = 1/2 and is not invertible there.

Conventions: momenta carry the signed FFT-order values of
``Grid.axis_momenta``; displacement frequencies (the duals of xi) use the
nonpositive representative per axis.  Operator matrices act directly on flat
position samples, so the constant symbol 1 quantizes to the identity matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import Grid, cosine_ramp, momentum_multiplier
from .operators import HERMITIAN_TOL, OperatorMatrix, hermitian_func


class EllipticityError(ValueError):
    """The symbol has no positive lower bound against its order function."""


def lattice_space(grid: Grid) -> str:
    return f"grid({grid.dim},{grid.npts},{grid.box:g})"


@dataclass(frozen=True)
class OrderFunction:
    """Positive weight M controlling symbol growth.

    ``values`` is tabulated over the flat momentum mesh (shape (size,)) or
    over the full phase-space lattice (shape (size, size)).
    """

    name: str
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if np.min(v) <= 0:
            raise ValueError(f"order function {self.name!r} must be strictly positive")

    def table(self, size: int) -> np.ndarray:
        """Values broadcast to the (x, xi) table shape."""
        if self.values.ndim == 1:
            return np.broadcast_to(self.values[None, :], (size, size))
        return self.values


def xi_power_order(grid: Grid, m: float) -> OrderFunction:
    """The family <xi>^m."""
    return OrderFunction(f"xi^{m:g}", grid.xi_bracket() ** m)


def shifted_bracket_order(grid: Grid, shift: float = 0.0) -> OrderFunction:
    """The family <xi>^2 + c, for a nonnegative frequency offset c."""
    if shift < 0:
        raise ValueError("shift must be nonnegative")
    return OrderFunction(f"xi_sq+{shift:g}", grid.xi_bracket() ** 2 + shift)


@dataclass(frozen=True, eq=False)
class Symbol:
    """Tabulated phase-space symbol with an optional order function.

    ``values[j, k]`` is a(x_j, xi_k) with x flattened in C order and xi in
    FFT order.  Derivative-based quantities (seminorms, Poisson brackets)
    are computed by spectral differentiation and cached.
    """

    grid: Grid
    values: np.ndarray
    order: OrderFunction | None = None
    seminorm_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=complex)
        n = self.grid.size
        if v.shape != (n, n):
            raise ValueError(f"values must have shape ({n}, {n}), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("symbol values must be finite")
        object.__setattr__(self, "values", v)

    def order_table(self) -> np.ndarray:
        if self.order is None:
            return np.ones((self.grid.size,) * 2)
        return self.order.table(self.grid.size)

    def seminorm(self, alpha: tuple[int, ...]) -> float:
        """sup |d^alpha a| / M; alpha runs over the 2*dim phase axes."""
        alpha = tuple(int(p) for p in alpha)
        if len(alpha) != 2 * self.grid.dim or min(alpha) < 0:
            raise ValueError(f"alpha must be {2 * self.grid.dim} nonnegative orders")
        if alpha not in self.seminorm_cache:
            deriv = _phase_derivative(self.grid, self.values, alpha)
            self.seminorm_cache[alpha] = float(
                np.max(np.abs(deriv) / self.order_table())
            )
        return self.seminorm_cache[alpha]

    def seminorms(self, up_to: int = 4) -> dict[tuple[int, ...], float]:
        """All seminorms with |alpha| <= up_to (cached)."""
        out = {}
        for alpha in _multi_indices(2 * self.grid.dim, up_to):
            out[alpha] = self.seminorm(alpha)
        return out


def constant_symbol(grid: Grid, value: complex = 1.0) -> Symbol:
    return Symbol(grid, np.full((grid.size,) * 2, value, dtype=complex))


def xi_symbol(grid: Grid, values_xi: np.ndarray, order: OrderFunction | None = None) -> Symbol:
    """x-independent symbol from momentum-mesh values."""
    v = np.asarray(values_xi, dtype=complex)
    if v.shape != (grid.size,):
        raise ValueError("values_xi must be flat over the momentum mesh")
    return Symbol(grid, np.broadcast_to(v[None, :], (grid.size,) * 2).copy(), order)


def x_symbol(grid: Grid, values_x: np.ndarray) -> Symbol:
    """xi-independent (multiplication) symbol from position-mesh values."""
    v = np.asarray(values_x, dtype=complex)
    if v.shape != (grid.size,):
        raise ValueError("values_x must be flat over the position mesh")
    return Symbol(grid, np.broadcast_to(v[:, None], (grid.size,) * 2).copy())


def separable_symbol(
    grid: Grid,
    values_x: np.ndarray,
    values_xi: np.ndarray,
    order: OrderFunction | None = None,
) -> Symbol:
    vx = np.asarray(values_x, dtype=complex)
    vk = np.asarray(values_xi, dtype=complex)
    return Symbol(grid, np.outer(vx, vk), order)


# -- internal index helpers ------------------------------------------------


def _axis_components(grid: Grid) -> np.ndarray:
    """(size, dim) integer components of the flattened multi-index."""
    comps = np.unravel_index(np.arange(grid.size), grid.shape)
    return np.stack(comps, axis=-1)


def _target_index(grid: Grid) -> np.ndarray:
    """TG[j, n] = flat index of (j - n) mod L, per axis."""
    comp = _axis_components(grid)
    diff = (comp[:, None, :] - comp[None, :, :]) % grid.npts
    return np.ravel_multi_index(np.moveaxis(diff, -1, 0), grid.shape)

def _neg_index(grid: Grid) -> np.ndarray:
    """Flat index of -n mod L, per axis."""
    comp = _axis_components(grid)
    return np.ravel_multi_index(np.moveaxis((-comp) % grid.npts, -1, 0), grid.shape)


def _signed(grid: Grid, comp: np.ndarray) -> np.ndarray:
    """Signed (FFT-order) representative of index components."""
    L = grid.npts
    return (comp + L // 2) % L - L // 2


def _chi_mesh(grid: Grid) -> np.ndarray:
    """Signed pairing between x-frequencies and xi-frequencies.

    chi[m, p] = (2*pi/L) * sum_axes mtilde_a * ptilde_a reproduces the phase
    the midpoint interpolant attaches to each phase-space mode, so the
    reordering multiplier exp(i*(s-t)*chi) is consistent with quantize.  The
    xi axis carries the flipped representative (+L/2 at the Nyquist mode):
    quantize pairs xi-mode p with displacement (-p) mod L, whose signed
    representative fixes the Nyquist mode instead of mirroring it.
    """
    L = grid.npts
    mtil = np.rint(np.fft.fftfreq(L) * L).astype(int)
    ptil = -mtil[(-np.arange(L)) % L]
    chi = np.zeros((grid.size, grid.size))
    mcomp = _axis_components(grid)
    for a in range(grid.dim):
        chi = chi + np.multiply.outer(mtil[mcomp[:, a]], ptil[mcomp[:, a]])
    return 2.0 * np.pi / L * chi


def _phase_derivative(grid: Grid, values: np.ndarray, alpha: Sequence[int]) -> np.ndarray:
    """Spectral derivative d^alpha over the 2*dim phase axes."""
    d, L = grid.dim, grid.npts
    arr = values.reshape(grid.shape * 2)
    eta = grid.axis_momenta()
    theta = np.fft.fftfreq(L, d=1.0 / L) * grid.spacing
    for axis, p in enumerate(alpha):
        if p == 0:
            continue
        freq = eta if axis < d else theta
        mult = (1j * freq) ** p
        shape = [1] * 2 * d
        shape[axis] = L
        arr = np.fft.ifft(np.fft.fft(arr, axis=axis) * mult.reshape(shape), axis=axis)
    return arr.reshape(grid.size, grid.size)


def _multi_indices(slots: int, total: int):
    for t in range(total + 1):
        for cuts in itertools.combinations_with_replacement(range(slots), t):
            alpha = [0] * slots
            for c in cuts:
                alpha[c] += 1
            yield tuple(alpha)


# -- quantization ----------------------------------------------------------


def quantize(a: Symbol, t: float, midpoint: str = "interp") -> OperatorMatrix:
    """Matrix of Op_t(a) acting on flat position samples.

    The kernel is K(x, y) = dual_weight * sum_xi e^{i<x-y, xi>} a(m, xi) with
    m = t*x + (1-t)*y, and the returned matrix already carries the position
    quadrature weight, so quantize(1) is the identity.  ``midpoint`` selects
    how off-lattice m is evaluated: "interp" (band-limited interpolant,
    exact calculus) or "snap" (nearest lattice point, ties toward -inf).
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"ordering parameter t must lie in [0, 1], got {t}")
    if midpoint not in ("interp", "snap"):
        raise ValueError(f"unknown midpoint rule {midpoint!r}")
    grid = a.grid
    S, L, d = grid.size, grid.npts, grid.dim
    V = a.values
    TG = _target_index(grid)
    ncomp = _axis_components(grid)
    disp = _signed(grid, ncomp) * grid.spacing  # signed displacement vectors
    rows = np.arange(S)
    mom = grid.momentum_mesh()
    out = np.zeros((S, S), dtype=complex)
    back = 1.0 - t
    if midpoint == "interp" and back != 0.0:
        c2 = np.fft.fftn(V.reshape(grid.shape + (S,)), axes=range(d)).reshape(S, S) / S
        eta = grid.momentum_mesh()
    for nf in range(S):
        theta = disp[nf]
        if back == 0.0 or nf == 0:
            mid = V
        elif midpoint == "interp":
            shifted = c2 * np.exp(-1j * back * (eta @ theta))[:, None]
            mid = np.fft.ifftn(
                shifted.reshape(grid.shape + (S,)), axes=range(d)
            ).reshape(S, S) * S
        else:
            src = np.ceil(
                _axis_components(grid) - back * _signed(grid, ncomp[nf]) - 0.5
            ).astype(int) % L
            mid = V[np.ravel_multi_index(np.moveaxis(src, -1, 0), grid.shape), :]
        col = mid @ np.exp(1j * (mom @ theta)) / S
        out[rows, TG[:, nf]] = col
    return OperatorMatrix(out, lattice_space(grid))


def dequantize(grid: Grid, op, t: float) -> Symbol:
    """Inverse of interp quantization: the symbol with quantize(a, t) = op."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"ordering parameter t must lie in [0, 1], got {t}")
    A = op.mat if isinstance(op, OperatorMatrix) else np.asarray(op, dtype=complex)
    S, d = grid.size, grid.dim
    if A.shape != (S, S):
        raise ValueError(f"operator must be {S} x {S}")
    TG = _target_index(grid)
    fmat = A[np.arange(S)[:, None], TG]  # fmat[x, n] = A[x, x - n]
    fhat = np.fft.fftn(fmat.reshape(grid.shape + (S,)), axes=range(d)).reshape(S, S)
    neg = _neg_index(grid)
    ncomp = _axis_components(grid)
    eta = grid.momentum_mesh()
    theta_neg = _signed(grid, ncomp[neg]) * grid.spacing  # displacement of (-n') mod L
    coeff = fhat[:, neg] * np.exp(1j * (1.0 - t) * (eta @ theta_neg.T)) / S
    vals = np.fft.ifftn(coeff.reshape(grid.shape * 2)).reshape(S, S) * (S * S)
    return Symbol(grid, vals)


def change_quantization(a: Symbol, t_from: float, t_to: float) -> Symbol:
    """Symbol with Op_{t_to}(result) = Op_{t_from}(a), exactly on the lattice."""
    grid = a.grid
    c = np.fft.fftn(a.values.reshape(grid.shape * 2))
    c *= np.exp(1j * (t_to - t_from) * _chi_mesh(grid)).reshape(grid.shape * 2)
    vals = np.fft.ifftn(c).reshape(grid.size, grid.size)
    return Symbol(grid, vals, a.order)


def adjoint_symbol(a: Symbol, t: float) -> Symbol:
    """Symbol of the conjugate transpose: Op_t(result) = Op_t(a)^dagger."""
    a1 = change_quantization(a, t, 1.0)
    grid = a.grid
    S, d, L = grid.size, grid.dim, grid.npts
    c2 = np.fft.fftn(a1.values.reshape(grid.shape + (S,)), axes=range(d)).reshape(S, S) / S
    comp = _axis_components(grid)
    gather = np.ravel_multi_index(
        np.moveaxis((comp[None, :, :] - comp[:, None, :]) % L, -1, 0), grid.shape
    )  # gather[m, k'] = flat index of (k' - m) mod L
    h = np.conj(c2)[np.arange(S)[:, None], gather]
    vals = np.fft.fftn(h.reshape(grid.shape + (S,)), axes=range(d)).reshape(S, S)
    return change_quantization(Symbol(grid, vals, a.order), 1.0, t)


def moyal(a: Symbol, b: Symbol, t: float = 1.0) -> Symbol:
    """Composition symbol: Op_t(moyal(a, b, t)) = Op_t(a) Op_t(b).

    Computed by the exact twisted product at t = 1 and conjugated to other
    orderings with change_quantization, so the identity holds to roundoff
    for arbitrary tabulated symbols.
    """
    if a.grid != b.grid:
        raise ValueError("symbols must share a grid")
    grid = a.grid
    a1 = change_quantization(a, t, 1.0).values if t != 1.0 else a.values
    b1 = change_quantization(b, t, 1.0).values if t != 1.0 else b.values
    S, d, L = grid.size, grid.dim, grid.npts
    E = np.exp(1j * (grid.position_mesh() @ grid.momentum_mesh().T))
    bhat = np.fft.fftn(b1.reshape(grid.shape + (S,)), axes=range(d)).reshape(S, S)
    comp = _axis_components(grid)
    gather = np.ravel_multi_index(
        np.moveaxis((comp[:, None, :] - comp[None, :, :]) % L, -1, 0), grid.shape
    )  # gather[k, k'] = flat index of (k - k') mod L
    G = bhat[gather, np.arange(S)[None, :]]
    c1 = np.conj(E) * ((a1 * E) @ G) / S
    order = None
    if a.order is not None or b.order is not None:
        ta = a.order.table(S) if a.order is not None else np.ones((S, S))
        tb = b.order.table(S) if b.order is not None else np.ones((S, S))
        na = a.order.name if a.order is not None else "1"
        nb = b.order.name if b.order is not None else "1"
        order = OrderFunction(f"({na})*({nb})", ta * tb)
    prod = Symbol(grid, c1, order)
    if t != 1.0:
        prod = change_quantization(prod, 1.0, t)
        prod = Symbol(grid, prod.values, order)
    return prod


def poisson_bracket(a: Symbol, b: Symbol) -> Symbol:
    """{a, b} = sum_axes (d_x a d_xi b - d_xi a d_x b), spectrally."""
    if a.grid != b.grid:
        raise ValueError("symbols must share a grid")
    grid = a.grid
    d = grid.dim
    vals = np.zeros((grid.size,) * 2, dtype=complex)
    for ax in range(d):
        ex = tuple(1 if i == ax else 0 for i in range(2 * d))
        ek = tuple(1 if i == d + ax else 0 for i in range(2 * d))
        vals += _phase_derivative(grid, a.values, ex) * _phase_derivative(grid, b.values, ek)
        vals -= _phase_derivative(grid, a.values, ek) * _phase_derivative(grid, b.values, ex)
    return Symbol(grid, vals)


def poisson_residual(a: Symbol, b: Symbol, t: float = 1.0) -> float:
    """Weighted sup of (a#b - b#a) - i{a, b}.

    The weight is M_a * M_b * <xi>^-2, the order the leading Poisson term
    leaves behind; the standard-ordering expansion fixes the sign of the
    bracket used here.
    """
    grid = a.grid
    comm = moyal(a, b, t).values - moyal(b, a, t).values
    resid = comm - 1j * poisson_bracket(a, b).values
    weight = a.order_table() * b.order_table() * (grid.xi_bracket() ** -2)[None, :]
    return float(np.max(np.abs(resid) / weight))


# -- kernels and norm estimators --------------------------------------------


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Unweighted kernel K(x, y); the operator sums K(x, y) u(y) * weight."""

    grid: Grid
    entries: np.ndarray

    def __post_init__(self) -> None:
        e = np.asarray(self.entries, dtype=complex)
        if e.shape != (self.grid.size,) * 2:
            raise ValueError("entries must be square over the position lattice")
        object.__setattr__(self, "entries", e)

    def to_operator(self) -> OperatorMatrix:
        return OperatorMatrix(self.entries * self.grid.weight, lattice_space(self.grid))


def kernel_of(a: Symbol, t: float, midpoint: str = "interp") -> KernelMatrix:
    return KernelMatrix(a.grid, quantize(a, t, midpoint).mat / a.grid.weight)


def schur_bound(kernel: KernelMatrix) -> float:
    """max of the two weighted absolute kernel sums; dominates the norm."""
    absk = np.abs(kernel.entries) * kernel.grid.weight
    return float(max(absk.sum(axis=0).max(), absk.sum(axis=1).max()))


def cotlar_stein_bound(blocks: Sequence[OperatorMatrix]) -> float:
    """max of the two square-root cross-Gram row sums; dominates ||sum||."""
    mats = [b.mat for b in blocks]
    if not mats:
        return 0.0
    n = len(mats)
    star = np.zeros((n, n))
    plain = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            star[i, j] = np.sqrt(np.linalg.norm(mats[i].conj().T @ mats[j], 2))
            plain[i, j] = np.sqrt(np.linalg.norm(mats[i] @ mats[j].conj().T, 2))
    return float(max(star.sum(axis=1).max(), plain.sum(axis=1).max()))


# -- parametrix and resummation ---------------------------------------------


def ellipticity_margin(a: Symbol) -> float:
    """min |a| / M over phase space."""
    return float(np.min(np.abs(a.values) / a.order_table()))


def parametrix(a: Symbol, t: float = 1.0, iterations: int = 3):
    """Neumann parametrix b ~ (1/a) # (1 + r + r#r + ...), r = 1 - a#(1/a).

    Returns (b, residuals) where residuals[k] = ||quantize(a # b_k - 1, t)||
    for k = 0 .. iterations; the residuals are reported, never swallowed.
    """
    margin = ellipticity_margin(a)
    if margin <= 1e-14:
        raise EllipticityError(f"symbol is not elliptic: min |a|/M = {margin:.3e}")
    grid = a.grid
    inv_order = None
    if a.order is not None:
        inv_order = OrderFunction(f"1/({a.order.name})", 1.0 / a.order.table(grid.size))
    b0 = Symbol(grid, 1.0 / a.values, inv_order)
    one = constant_symbol(grid)
    r = Symbol(grid, one.values - moyal(a, b0, t).values)
    ident = np.eye(grid.size)
    series = one
    power = one
    residuals = []
    b = b0
    for k in range(iterations + 1):
        if k > 0:
            power = moyal(r, power, t)
            series = Symbol(grid, series.values + power.values)
            b = Symbol(grid, moyal(b0, series, t).values, inv_order)
        residuals.append(float(np.linalg.norm(quantize(moyal(a, b, t), t).mat - ident, 2)))
    return b, residuals


def measured_order(a: Symbol, min_shell: int = 1) -> float:
    """Slope of log2(sup |a|) against dyadic <xi> shells."""
    bracket = a.grid.xi_bracket()
    sup = np.max(np.abs(a.values), axis=0)
    shells = []
    tops = []
    s = min_shell
    while 2.0**s <= np.max(bracket):
        mask = (bracket >= 2.0**s) & (bracket < 2.0 ** (s + 1))
        if np.any(mask):
            top = float(np.max(sup[mask]))
            if top > 0:
                shells.append(s)
                tops.append(np.log2(top))
        s += 1
    if len(shells) < 2:
        raise ValueError("not enough momentum shells for an order fit")
    return float(np.polyfit(shells, tops, 1)[0])


def asymptotic_resum(
    grid: Grid,
    terms: Sequence[tuple[Symbol, float]],
    cutoffs: Sequence[float] | None = None,
) -> Symbol:
    """Borel-style sum of an asymptotic series of symbols.

    Each term a_j of order m_j (strictly decreasing) is switched on above
    momentum ~ 1/eps_j through 1 - chi(eps_j * |xi|) with a cosine bump chi;
    the default schedule halves eps_j at every order so later terms activate
    further out.  On a finite lattice, terms whose activation threshold
    exceeds the momentum range contribute nothing.
    """
    orders = [m for _, m in terms]
    if any(b >= a for a, b in zip(orders, orders[1:])):
        raise ValueError("orders must be strictly decreasing")
    if cutoffs is None:
        eps0 = 8.0 / grid.max_momentum()
        cutoffs = [eps0 * 2.0**-j for j in range(len(terms))]
    if len(cutoffs) != len(terms):
        raise ValueError("need one cutoff per term")
    radial = np.sqrt(grid.momentum_sq())
    total = np.zeros((grid.size,) * 2, dtype=complex)
    for (sym, _), eps in zip(terms, cutoffs):
        if sym.grid != grid:
            raise ValueError("all terms must live on the target grid")
        total += cosine_ramp(eps * radial, 0.5)[None, :] * sym.values
    order = terms[0][0].order if terms else None
    return Symbol(grid, total, order)


# -- functional calculus ----------------------------------------------------


def functional_calculus_check(
    a: Symbol,
    f: Callable[[np.ndarray], np.ndarray],
    p: float,
    order_m: float | None = None,
    s_values: Sequence[float] = (-1.0, 0.0, 1.0),
) -> dict:
    """Compare f of the Weyl matrix with the Weyl matrix of f of the symbol.

    For a real elliptic symbol of order m and f of order p the difference
    should act like an operator of order m*p - 1; the report carries the
    H^s -> H^{s - (m*p - 1)} norms so a caller can check they stay bounded
    under grid refinement.
    """
    grid = a.grid
    if order_m is None:
        name = a.order.name if a.order is not None else ""
        if not name.startswith("xi^"):
            raise ValueError("order_m is required unless the symbol uses the xi^m family")
        order_m = float(name[3:])
    A = quantize(a, 0.5)
    dev = float(np.max(np.abs(A.mat - A.mat.conj().T)))
    if dev > HERMITIAN_TOL:
        raise ValueError(
            f"Weyl matrix deviates from hermitian by {dev:.3e}; the symbol must be real"
        )
    herm = 0.5 * (A.mat + A.mat.conj().T)
    f_of_op = hermitian_func(herm, f)
    op_of_f = quantize(Symbol(grid, f(a.values.real).astype(complex)), 0.5).mat
    diff = f_of_op - op_of_f
    q = order_m * p - 1.0
    bracket = grid.xi_bracket()
    norms = {}
    for s in s_values:
        left = momentum_multiplier(grid, bracket ** (s - q))
        right = momentum_multiplier(grid, bracket ** (-s))
        norms[float(s)] = float(np.linalg.norm(left @ diff @ right, 2))
    return {
        "difference_order": q,
        "weyl_deviation": dev,
        "operator_norm": float(np.linalg.norm(diff, 2)),
        "sobolev_norms": norms,
    }


# -- random test symbols -----------------------------------------------------


def random_band_limited(
    grid: Grid,
    rng: np.random.Generator,
    band: int | None = None,
    real: bool = False,
) -> Symbol:
    """Random symbol with phase-space Fourier support in the inner half-lattice.

    Band-limited symbols keep spectral derivatives alias-free, so they are
    the right probes for every derivative-based claim; sup |a| is normalized
    to 1.
    """
    L = grid.npts
    if band is None:
        band = L // 4
    if not 0 < band < L // 2:
        raise ValueError(f"band must lie in (0, {L // 2})")
    signed = np.rint(np.fft.fftfreq(L) * L).astype(int)
    keep = np.abs(signed) <= band
    mask1 = np.zeros(L, dtype=bool)
    mask1[keep] = True
    comp = _axis_components(grid)
    flat_mask = np.ones(grid.size, dtype=bool)
    for a in range(grid.dim):
        flat_mask &= mask1[comp[:, a]]
    full = np.outer(flat_mask, flat_mask)
    c = np.zeros((grid.size,) * 2, dtype=complex)
    n = int(full.sum())
    c[full] = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    vals = np.fft.ifftn(c.reshape(grid.shape * 2)).reshape(grid.size, grid.size)
    if real:
        vals = vals.real.astype(complex)
    vals /= np.max(np.abs(vals))
    return Symbol(grid, vals)
