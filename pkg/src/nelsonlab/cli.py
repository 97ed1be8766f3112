"""Reproducible experiment runner over the library modules.

A run executes one named experiment against a resolved configuration and
writes three artifacts into the output directory: ``results.csv`` with one
row per measurement (experiment, parameters, lhs, rhs, status),
``summary.json`` with per-check status, tolerances, seed, config hash and
wall clock, and ``plot.gp``, a gnuplot script over the CSV.  Identical
(config, seed) pairs produce byte-identical CSV files; sweeps are merged
in parameter order regardless of the --threads setting.

Configs are flat ``key = value`` text files with three typed sections,
``[model]``, ``[sweep]`` and ``[tolerances]``; ``#`` starts a comment.
Unknown keys, unreadable values, and malformed lines are reported with
their line number and exit code 2; violated numeric guards (saturation,
dense-dimension, lattice caps) exit with code 3; a failed check exits
with code 1.

Check naming convention: a check whose name ends in ``-min`` passes when
lhs >= rhs (fit quality, separation factors); every other check passes
when lhs <= rhs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from os import cpu_count, makedirs, path

import numpy as np

from . import fock, ibc, inequalities, nelson, psido
from .grid import Grid, LatticeFunction

EXPERIMENTS = (
    "weyl-identities",
    "psido-calculus",
    "renorm-convergence",
    "gross-transform",
    "ibc-identity",
    "domain-regularity",
    "appendix-inequalities",
    "vacuum-energy",
)

# experiments that assemble a dense full-tensor Hamiltonian
_DENSE_EXPERIMENTS = {"renorm-convergence", "gross-transform", "ibc-identity"}


class ConfigError(ValueError):
    """Malformed configuration: bad line, unknown key, or unreadable value."""


class GuardError(ValueError):
    """A numeric field violates a structural guard."""


def _floats(raw: str) -> list[float]:
    return [float(tok) for tok in raw.split(",") if tok.strip()]


def _ints(raw: str) -> list[int]:
    return [int(tok) for tok in raw.split(",") if tok.strip()]


# (section, key) -> (parser, default as config text)
_SCHEMA: dict[tuple[str, str], tuple] = {
    ("model", "npts"): (int, "8"),
    ("model", "box"): (float, "6.283185307179586"),
    ("model", "g_modulation"): (float, "0.3"),
    ("model", "w_amplitude"): (float, "0.2"),
    ("model", "mass"): (float, "1.0"),
    ("model", "coupling"): (float, "1.0"),
    ("model", "sigma"): (float, "0.0"),
    ("model", "n_max"): (int, "2"),
    ("model", "profile"): (str, "gaussian"),
    ("sweep", "lams"): (_floats, "1.0, 2.0, 4.0"),
    ("sweep", "sizes"): (_ints, "8, 16, 32"),
    ("sweep", "domain_lams"): (_floats, "2.0, 4.0, 8.0"),
    ("sweep", "powers"): (_floats, "0.0, 0.2, 0.4, 0.5"),
    ("sweep", "omegas"): (_floats, "1.0, 2.0, 4.0, 8.0"),
    ("sweep", "quad_lams"): (_floats, "4.0, 8.0, 16.0, 32.0, 64.0"),
    ("sweep", "xis"): (_floats, "4.0, 8.0, 16.0, 32.0, 64.0"),
    ("sweep", "weyl_n_max"): (_ints, "10, 20, 40"),
    ("sweep", "weyl_coupling"): (float, "0.3"),
    ("sweep", "weyl_sector_cap"): (int, "5"),
    ("sweep", "psido_npts"): (int, "32"),
    ("sweep", "parametrix_npts"): (int, "64"),
    ("sweep", "draws"): (int, "20"),
    ("sweep", "fuzz_pairs"): (int, "1000"),
    ("sweep", "fuzz_samples"): (int, "100000"),
    ("sweep", "rearr_npts"): (int, "128"),
    ("sweep", "rearr_box"): (float, "32.0"),
    ("sweep", "demo_g_const"): (float, "4.0"),
    ("tolerances", "identity_rtol"): (float, "1e-10"),
    ("tolerances", "spectral_atol"): (float, "1e-9"),
    ("tolerances", "symbol_atol"): (float, "1e-10"),
    ("tolerances", "weyl_rtol"): (float, "1e-7"),
    ("tolerances", "float_floor"): (float, "1e-12"),
    ("tolerances", "gross_rtol"): (float, "0.05"),
    ("tolerances", "parametrix_gain"): (float, "10.0"),
    ("tolerances", "fit_r2"): (float, "0.99"),
    ("tolerances", "variation_max"): (float, "0.10"),
    ("tolerances", "scaling_band"): (float, "0.15"),
    ("tolerances", "scaling_eps"): (float, "0.05"),
    ("tolerances", "slope_margin"): (float, "0.1"),
    ("tolerances", "hl_slack"): (float, "1e-12"),
    ("tolerances", "norm_cap"): (float, "10.0"),
    ("tolerances", "growth_ratio_min"): (float, "2.0"),
    ("tolerances", "quad_tol"): (float, "1e-6"),
}

_SECTIONS = ("model", "sweep", "tolerances")


def parse_config_text(text: str) -> dict[tuple[str, str], str]:
    """Read raw section/key/value triples, rejecting anything off-schema."""
    entries: dict[tuple[str, str], str] = {}
    section = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any section")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if (section, key) not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key '{key}' in section [{section}]")
        if (section, key) in entries:
            raise ConfigError(f"line {lineno}: duplicate key '{key}' in section [{section}]")
        entries[(section, key)] = value
    return entries


def resolve_config(config_path: str | None) -> dict[str, dict]:
    """Merge a config file over the schema defaults into typed sections."""
    entries: dict[tuple[str, str], str] = {}
    if config_path is not None:
        try:
            with open(config_path, encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        entries = parse_config_text(text)
    resolved: dict[str, dict] = {name: {} for name in _SECTIONS}
    for (section, key), (cast, default) in _SCHEMA.items():
        raw = entries.get((section, key), default)
        try:
            resolved[section][key] = cast(raw)
        except ValueError as exc:
            raise ConfigError(f"field [{section}] {key}: unreadable value {raw!r}") from exc
    return resolved


def config_canonical_text(cfg: dict[str, dict]) -> str:
    lines = []
    for section in _SECTIONS:
        lines.append(f"[{section}]")
        for key in sorted(cfg[section]):
            value = cfg[section][key]
            if isinstance(value, list):
                value = ", ".join(f"{v:.12g}" if isinstance(v, float) else str(v) for v in value)
            elif isinstance(value, float):
                value = f"{value:.12g}"
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)


def check_guards(cfg: dict[str, dict], experiment: str | None) -> None:
    model = cfg["model"]
    sweep = cfg["sweep"]
    npts, box = model["npts"], model["box"]
    if npts < 2 or npts & (npts - 1):
        raise GuardError(f"lattice guard: npts must be a power of two >= 2, got {npts}")
    if box <= 0:
        raise GuardError(f"lattice guard: box must be positive, got {box}")
    if model["mass"] <= 0:
        raise GuardError(f"mass guard: mass must be positive, got {model['mass']}")
    if model["n_max"] < 1:
        raise GuardError(f"sector guard: n_max must be at least 1, got {model['n_max']}")
    if abs(model["w_amplitude"]) >= 1.0 or abs(model["g_modulation"]) >= 1.0:
        raise GuardError("ellipticity guard: modulations must stay below 1 in magnitude")
    saturation = np.pi * npts / box
    for lam in sweep["lams"]:
        if lam > saturation * (1 + 1e-12):
            raise GuardError(
                f"saturation guard: lam = {lam:g} above the grid maximum pi*npts/box = {saturation:.6g}"
            )
    if len(sweep["sizes"]) != len(sweep["domain_lams"]):
        raise ConfigError(
            f"fields [sweep] sizes and domain_lams must pair up, got {len(sweep['sizes'])} vs {len(sweep['domain_lams'])}"
        )
    for size, lam in zip(sweep["sizes"], sweep["domain_lams"]):
        if size < 2 or size & (size - 1):
            raise GuardError(f"lattice guard: sweep size {size} is not a power of two >= 2")
        if lam > np.pi * size / box * (1 + 1e-12):
            raise GuardError(
                f"saturation guard: domain lam = {lam:g} above pi*npts/box = {np.pi * size / box:.6g} at npts = {size}"
            )
    for n in sweep["weyl_n_max"]:
        if not 1 <= n <= 128:
            raise GuardError(f"sector guard: weyl_n_max entries must lie in [1, 128], got {n}")
    if experiment in _DENSE_EXPERIMENTS:
        dim = npts * fock.fock_dim(npts, model["n_max"])
        if dim > nelson.MAX_DENSE_DIM:
            raise GuardError(
                f"dense dimension guard: {npts} x fock({npts},{model['n_max']}) = {dim} exceeds {nelson.MAX_DENSE_DIM}"
            )


@dataclass(frozen=True)
class Row:
    check: str
    params: dict
    lhs: float
    rhs: float

    @property
    def status(self) -> str:
        if self.check.endswith("-min"):
            return "PASS" if self.lhs >= self.rhs else "FAIL"
        return "PASS" if self.lhs <= self.rhs else "FAIL"


def _fmt(value) -> str:
    if isinstance(value, float) or isinstance(value, np.floating):
        return f"{float(value):.12g}"
    return str(value)


def _params_text(params: dict) -> str:
    return ";".join(f"{k}={_fmt(v)}" for k, v in params.items())


def _ordered_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _assemble(cfg: dict, npts: int | None = None) -> nelson.AssembledModel:
    model = cfg["model"]
    spec = nelson.sinusoidal_spec(
        npts if npts is not None else model["npts"],
        box=model["box"],
        g_modulation=model["g_modulation"],
        w_amplitude=model["w_amplitude"],
        mass=model["mass"],
        coupling=model["coupling"],
        sigma=model["sigma"],
        n_max=model["n_max"],
        profile=model["profile"],
    )
    return nelson.assemble_free(spec)


def run_weyl_identities(cfg, seed, threads) -> list[Row]:
    sweep, tol = cfg["sweep"], cfg["tolerances"]
    coupling = sweep["weyl_coupling"]
    cap = sweep["weyl_sector_cap"]
    f = coupling * np.array([1.0 + 0.5j])
    g = coupling * np.array([0.6 - 0.8j])
    freq = np.array([[1.4]])
    rho = coupling * np.array([0.8 + 0.3j])

    def residuals(n_max: int) -> dict[str, float]:
        basis = fock.fock_basis(1, n_max)
        proj = fock.sector_projector(basis, cap)
        v = fock.weyl(basis, g)
        shift = complex(np.vdot(f, g).real)
        field_resid = (
            proj @ (v @ fock.field(basis, f) @ v.adjoint() - fock.field(basis, f).shifted(shift)) @ proj
        ).norm()
        target = (fock.second_quantize(basis, freq) + fock.field(basis, freq @ g)).shifted(
            0.5 * np.vdot(freq @ g, g).real
        )
        dgamma_resid = (
            proj @ (v @ fock.second_quantize(basis, freq) @ v.adjoint() - target) @ proj
        ).norm()
        static_resid = fock.gross_check_static(basis, freq, rho, sector_cap=cap)
        return {"field-shift": field_resid, "dgamma-shift": dgamma_resid, "static-dressing": static_resid}

    results = _ordered_map(residuals, sweep["weyl_n_max"], threads)
    rows = []
    for n_max, res in zip(sweep["weyl_n_max"], results):
        params = {"n_max": n_max, "coupling": coupling, "sector_cap": cap}
        for name, value in res.items():
            rows.append(Row(name, params, value, tol["weyl_rtol"]))
    for name in ("field-shift", "dgamma-shift", "static-dressing"):
        series = [res[name] for res in results]
        worst = max(np.diff(series)) if len(series) > 1 else 0.0
        rows.append(
            Row(
                f"{name}-monotone",
                {"n_max_sweep": "|".join(map(str, sweep["weyl_n_max"])), "sector_cap": cap},
                float(worst),
                tol["float_floor"],
            )
        )
    return rows


def run_psido_calculus(cfg, seed, threads) -> list[Row]:
    sweep, tol, model = cfg["sweep"], cfg["tolerances"], cfg["model"]
    grid = Grid(1, sweep["psido_npts"], model["box"])
    rng = np.random.default_rng(seed)
    symbols = [psido.random_band_limited(grid, rng) for _ in range(sweep["draws"])]

    def residuals(i: int) -> dict[str, float]:
        a = symbols[i]
        b = symbols[(i + 1) % len(symbols)]
        qa = psido.quantize(a, 1.0)
        qb = psido.quantize(b, 1.0)
        roundtrip = float(np.max(np.abs(psido.dequantize(grid, qa.mat, 1.0).values - a.values)))
        comp = float(
            np.linalg.norm(psido.quantize(psido.moyal(a, b, 1.0), 1.0).mat - qa.mat @ qb.mat, 2)
        )
        adj = float(
            np.linalg.norm(psido.quantize(psido.adjoint_symbol(a, 1.0), 1.0).mat - qa.mat.conj().T, 2)
        )
        change = float(
            np.linalg.norm(psido.quantize(psido.change_quantization(a, 1.0, 0.5), 0.5).mat - qa.mat, 2)
        )
        return {"roundtrip": roundtrip, "composition": comp, "adjoint": adj, "requantization": change}

    results = _ordered_map(residuals, list(range(len(symbols))), threads)
    params = {"npts": grid.npts, "draws": sweep["draws"], "seed": seed}
    rows = [
        Row(name, params, max(res[name] for res in results), tol["symbol_atol"])
        for name in ("roundtrip", "composition", "adjoint", "requantization")
    ]
    pgrid = Grid(1, sweep["parametrix_npts"], model["box"])
    x = pgrid.position_mesh()[:, 0]
    k = pgrid.momentum_mesh()[:, 0]
    modulation = 1.0 + model["g_modulation"] * np.sin(2.0 * np.pi * x / model["box"])
    sym = psido.Symbol(pgrid, np.outer(modulation, 1.0 + k**2), psido.xi_power_order(pgrid, 2))
    _, resid = psido.parametrix(sym, 1.0, iterations=3)
    pparams = {"npts": pgrid.npts, "order": 2, "iterations": 3}
    rows.append(Row("parametrix-gain-min", pparams, resid[0], tol["parametrix_gain"] * resid[3]))
    rows.append(Row("parametrix-monotone", pparams, float(max(np.diff(resid))), 0.0))
    return rows


def run_renorm_convergence(cfg, seed, threads) -> list[Row]:
    sweep = cfg["sweep"]
    model = _assemble(cfg)
    report = nelson.renorm_convergence_experiment(model, sweep["lams"])
    base = {"npts": model.grid.npts, "n_max": model.basis.n_max, "coupling": cfg["model"]["coupling"]}
    rows = []
    for level in report["levels"]:
        rows.append(
            Row(
                "subtraction-raises-floor",
                dict(base, lam=level["lam"]),
                level["gs_plain"],
                level["gs_subtracted"],
            )
        )
    pairs = report["pairs"]
    for pair in pairs:
        rows.append(
            Row(
                "subtracted-below-unsubtracted",
                dict(base, lam=pair["lam"], lam_next=pair["lam_next"]),
                pair["d_subtracted"],
                pair["d_unsubtracted"],
            )
        )
    for prev, nxt in zip(pairs[:-1], pairs[1:]):
        rows.append(
            Row(
                "cauchy-decreasing",
                dict(base, lam=nxt["lam"], lam_next=nxt["lam_next"]),
                nxt["d_subtracted"],
                prev["d_subtracted"],
            )
        )
    return rows


def run_gross_transform(cfg, seed, threads) -> list[Row]:
    sweep, tol = cfg["sweep"], cfg["tolerances"]
    model = _assemble(cfg)
    base = {"npts": model.grid.npts, "n_max": model.basis.n_max, "coupling": cfg["model"]["coupling"]}

    def one(lam: float):
        report = nelson.transformed_hamiltonian_check(model, lam)
        ratio = nelson.gross_bound_ratio(model, lam, 0)
        return report, ratio

    results = _ordered_map(one, sweep["lams"], threads)
    rows = []
    for lam, (report, ratio) in zip(sweep["lams"], results):
        params = dict(base, lam=lam)
        rows.append(Row("transformed-residual", params, report["residual"], tol["gross_rtol"]))
        rows.append(Row("fock-dgamma-conjugation", params, report["fock_dgamma_dev"], report["fock_tolerance"]))
        rows.append(Row("fock-field-conjugation", params, report["fock_field_dev"], report["fock_tolerance"]))
        rows.append(Row("dressing-ratio", params, ratio, 1.0))
    return rows


def run_ibc_identity(cfg, seed, threads) -> list[Row]:
    sweep, tol = cfg["sweep"], cfg["tolerances"]
    model = _assemble(cfg)
    base = {"npts": model.grid.npts, "n_max": model.basis.n_max, "coupling": cfg["model"]["coupling"]}

    def one(lam: float):
        keystone = ibc.factorization_identity_check(model, lam)
        ops = ibc.build_ibc(model, lam)
        reference = (
            nelson.assemble_cutoff_hamiltonian(model, lam).mat
            + nelson.vacuum_energy_operator(model, lam).mat
        )
        mismatch = float(
            np.max(np.abs(np.linalg.eigvalsh(ops.h_ibc.mat) - np.linalg.eigvalsh(reference)))
        )
        inverse_resid = float(
            np.linalg.norm(
                (np.eye(model.dim) - ops.g_op.mat) @ ops.inverse.mat - np.eye(model.dim), 2
            )
        )
        return keystone, mismatch, ops.neumann_tail, inverse_resid, ops.shift

    results = _ordered_map(one, sweep["lams"], threads)
    rows = []
    for lam, (keystone, mismatch, tail, inverse_resid, shift) in zip(sweep["lams"], results):
        params = dict(base, lam=lam, shift=shift)
        rows.append(Row("keystone-identity", params, keystone, tol["identity_rtol"]))
        rows.append(Row("spectral-equivalence", params, mismatch, tol["spectral_atol"]))
        rows.append(Row("neumann-closure", params, tail, 0.0))
        rows.append(Row("neumann-inverse", params, inverse_resid, tol["identity_rtol"]))
    return rows


def run_domain_regularity(cfg, seed, threads) -> list[Row]:
    sweep, tol = cfg["sweep"], cfg["tolerances"]
    models = [_assemble(cfg, npts=size) for size in sweep["sizes"]]
    report = ibc.domain_regularity_experiment(models, sweep["domain_lams"], sweep["powers"])
    rows = []
    for entry in report["rows"]:
        rows.append(
            Row(
                "sobolev-weighted-norm",
                {"npts": entry["npts"], "lam": entry["lam"], "p": entry["p"], "shift": entry["shift"]},
                entry["norm"],
                tol["norm_cap"],
            )
        )
    powers = sweep["powers"]
    for p in powers:
        rows.append(
            Row(
                "growth-total",
                {"p": p, "sizes": "|".join(map(str, sweep["sizes"]))},
                report["growth"][p]["total"],
                tol["norm_cap"],
            )
        )
    if len(powers) >= 2:
        # excess growth over the last refinement step: factors of a slowly
        # divergent quantity cluster near 1, so compare their excesses
        top, ref = powers[-1], powers[-2]
        excess_top = report["growth"][top]["factors"][-1] - 1.0
        excess_ref = report["growth"][ref]["factors"][-1] - 1.0
        rows.append(
            Row(
                "growth-separation-min",
                {"p": top, "p_ref": ref, "sizes": "|".join(map(str, sweep["sizes"]))},
                float(excess_top / excess_ref),
                tol["growth_ratio_min"],
            )
        )
    return rows


def run_appendix_inequalities(cfg, seed, threads) -> list[Row]:
    sweep, tol = cfg["sweep"], cfg["tolerances"]
    quad_tol = tol["quad_tol"]
    rows = []
    grid = Grid(1, sweep["rearr_npts"], sweep["rearr_box"])
    rng = np.random.default_rng(seed)

    violations = 0
    for _ in range(sweep["fuzz_pairs"]):
        f = LatticeFunction(grid, rng.random(grid.size).astype(complex))
        g = LatticeFunction(grid, rng.random(grid.size).astype(complex))
        lhs, rhs = inequalities.hardy_littlewood_check(f, g)
        violations += lhs > rhs + tol["hl_slack"]
    rows.append(
        Row("hardy-littlewood-fuzz", {"pairs": sweep["fuzz_pairs"], "npts": grid.npts, "seed": seed}, float(violations), 0.0)
    )

    samples = rng.normal(scale=4.0, size=(sweep["fuzz_samples"], 2, 3))
    for t in (-4.0, -1.5, 0.5, 4.0):
        count = inequalities.peetre_check(t, samples)
        rows.append(
            Row("peetre-fuzz", {"t": t, "samples": sweep["fuzz_samples"], "seed": seed}, float(count), 0.0)
        )

    half = 0.5 * grid.box
    signed = np.mod(grid.axis_positions() + half, grid.box) - half
    absx = np.abs(signed)
    f_cut = LatticeFunction(grid, np.where(absx > 1.0, np.maximum(absx, 1.0) ** -1.5, 0.0).astype(complex))
    profile = inequalities.rearrange(f_cut)
    radii = np.sort(absx, kind="stable")
    closed = (radii + 1.0) ** -1.5
    h = grid.spacing
    local = np.maximum(
        np.abs((radii + h + 1.0) ** -1.5 - closed),
        np.abs((np.maximum(radii - h, 0.0) + 1.0) ** -1.5 - closed),
    )
    mask = radii + 1.0 <= half - h
    bad = int(np.sum(np.abs(profile.values - closed)[mask] > 2.0 * local[mask] + 1e-12))
    rows.append(
        Row("rearrangement-closed-form", {"npts": grid.npts, "masked": int(mask.sum()), "p": 1.5, "lam": 1.0}, float(bad), 0.0)
    )

    eps = tol["scaling_eps"]
    for xi in (0.0, 1.0):

        def estimate(omega: float):
            return inequalities.integral_estimate_check(
                0.0, 0.0, 4.0, 1.0, 3, 0.0, omega, xi, eps, tol=quad_tol
            )

        values = _ordered_map(estimate, sweep["omegas"], threads)
        predicted = 2.0 ** (-4.0 + 3.0 + eps)
        for omega, (integral, bound) in zip(sweep["omegas"], values):
            rows.append(
                Row("estimate-dominated", {"omega": omega, "xi": xi, "eps": eps}, integral, bound + 1e-12)
            )
        for (om_a, (val_a, _)), (om_b, (val_b, _)) in zip(
            zip(sweep["omegas"][:-1], values[:-1]), zip(sweep["omegas"][1:], values[1:])
        ):
            deviation = abs(val_b / val_a / predicted - 1.0)
            rows.append(
                Row(
                    "omega-scaling",
                    {"omega": om_a, "omega_next": om_b, "xi": xi, "eps": eps},
                    float(deviation),
                    tol["scaling_band"],
                )
            )

    def cutoff_estimate(lam: float):
        return inequalities.integral_estimate_check(0.0, 0.0, 4.0, 1.0, 3, lam, 1.0, 1.0, eps, tol=quad_tol)

    cut_lams = [1.0, 4.0, 16.0, 64.0]
    cut_values = _ordered_map(cutoff_estimate, cut_lams, threads)
    for lam, (integral, bound) in zip(cut_lams, cut_values):
        rows.append(Row("cutoff-estimate-dominated", {"lam": lam, "eps": eps}, integral, bound + 1e-12))
    prefactors = [integral for integral, _ in cut_values]
    worst = max(b / a for a, b in zip(prefactors[:-1], prefactors[1:]))
    rows.append(Row("cutoff-prefactor-decreasing", {"lams": "|".join(map(_fmt, cut_lams))}, float(worst), 1.0))

    decay = inequalities.offset_decay_check(2.0, sweep["xis"], 0.0, eps=eps, tol=quad_tol)
    rows.append(
        Row(
            "offset-decay-slope",
            {"nu": 2.0, "eps": eps, "xis": "|".join(map(_fmt, sweep["xis"]))},
            decay["slope"],
            decay["decay_exponent"] + tol["slope_margin"],
        )
    )
    return rows


def run_vacuum_energy(cfg, seed, threads) -> list[Row]:
    sweep, tol = cfg["sweep"], cfg["tolerances"]
    lams = sweep["quad_lams"]

    def energy(lam: float) -> float:
        return nelson.vacuum_energy_quadrature(lam, 3)

    values = _ordered_map(energy, lams, threads)
    design = np.vstack([np.log(lams), np.ones(len(lams))]).T
    coef, residual, *_ = np.linalg.lstsq(design, np.array(values), rcond=None)
    total = float(np.sum((np.array(values) - np.mean(values)) ** 2))
    r_squared = 1.0 - float(residual[0]) / total if residual.size else 1.0
    rows = []
    for lam_a, lam_b, val_a, val_b in zip(lams[:-1], lams[1:], values[:-1], values[1:]):
        rows.append(Row("divergence-monotone", {"lam": lam_a, "lam_next": lam_b, "d": 3}, val_a, val_b))
    rows.append(
        Row("log-divergence-r2-min", {"lams": "|".join(map(_fmt, lams)), "d": 3, "slope": float(coef[0])}, r_squared, tol["fit_r2"])
    )
    demo = inequalities.diagonal_divergence_demo(lams, g_const=sweep["demo_g_const"], tol=tol["quad_tol"])
    demo_params = {"g_const": sweep["demo_g_const"], "lams": "|".join(map(_fmt, lams))}
    rows.append(Row("demo-unsubtracted-r2-min", demo_params, demo["log_r_squared"], tol["fit_r2"]))
    rows.append(Row("demo-subtracted-variation", demo_params, demo["variation"], tol["variation_max"]))
    return rows


_RUNNERS = {
    "weyl-identities": run_weyl_identities,
    "psido-calculus": run_psido_calculus,
    "renorm-convergence": run_renorm_convergence,
    "gross-transform": run_gross_transform,
    "ibc-identity": run_ibc_identity,
    "domain-regularity": run_domain_regularity,
    "appendix-inequalities": run_appendix_inequalities,
    "vacuum-energy": run_vacuum_energy,
}


def render_csv(experiment: str, rows: list[Row]) -> str:
    lines = ["experiment,parameters,lhs,rhs,status"]
    for row in rows:
        params = _params_text(dict({"check": row.check}, **row.params))
        lines.append(f"{experiment},{params},{_fmt(row.lhs)},{_fmt(row.rhs)},{row.status}")
    return "\n".join(lines) + "\n"


def render_plot(experiment: str) -> str:
    return "\n".join(
        [
            "# gnuplot script over results.csv (run from the same directory)",
            "set datafile separator ','",
            "set key outside",
            "set logscale y",
            f"set title '{experiment}'",
            "set xlabel 'measurement row'",
            "set ylabel 'lhs vs rhs'",
            "plot 'results.csv' every ::1 using 0:3 with linespoints title 'lhs', \\",
            "     'results.csv' every ::1 using 0:4 with linespoints title 'rhs'",
            "",
        ]
    )


def render_summary(experiment, rows, cfg, seed, threads, wall_clock) -> str:
    payload = {
        "experiment": experiment,
        "seed": seed,
        "threads": threads,
        "config_hash": hashlib.sha256(config_canonical_text(cfg).encode("utf-8")).hexdigest()[:16],
        "status": "PASS" if all(r.status == "PASS" for r in rows) else "FAIL",
        "wall_clock_s": round(wall_clock, 3),
        "checks": [
            {
                "name": row.check,
                "parameters": _params_text(row.params),
                "measured": float(f"{row.lhs:.12g}"),
                "bound": float(f"{row.rhs:.12g}"),
                "status": row.status,
            }
            for row in rows
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def write_outputs(out_dir, experiment, rows, cfg, seed, threads, wall_clock) -> None:
    makedirs(out_dir, exist_ok=True)
    with open(path.join(out_dir, "results.csv"), "w", encoding="utf-8", newline="\n") as handle:
        handle.write(render_csv(experiment, rows))
    with open(path.join(out_dir, "summary.json"), "w", encoding="utf-8", newline="\n") as handle:
        handle.write(render_summary(experiment, rows, cfg, seed, threads, wall_clock))
    with open(path.join(out_dir, "plot.gp"), "w", encoding="utf-8", newline="\n") as handle:
        handle.write(render_plot(experiment))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nelsonlab",
        description="Run one reproducible experiment and write results.csv, summary.json, plot.gp.",
    )
    parser.add_argument("--experiment", choices=EXPERIMENTS, help="experiment to run")
    parser.add_argument("--config", help="config file ([model]/[sweep]/[tolerances] key = value text)")
    parser.add_argument("--seed", type=int, default=7, help="seed for random draws (default 7)")
    parser.add_argument("--threads", type=int, default=0, help="worker threads; 0 means all cores")
    parser.add_argument("--out", default="results", help="output directory (default: results)")
    parser.add_argument("--list", action="store_true", help="print the experiment names and exit")
    parser.add_argument("--validate", action="store_true", help="check config and guards without running")
    args = parser.parse_args(argv)

    if args.list:
        for name in EXPERIMENTS:
            print(name)
        return 0

    threads = args.threads if args.threads > 0 else (cpu_count() or 1)
    try:
        cfg = resolve_config(args.config)
        check_guards(cfg, args.experiment)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GuardError as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return 3

    if args.validate:
        print(config_canonical_text(cfg), end="")
        return 0

    if args.experiment is None:
        print("config error: --experiment is required unless --list or --validate is given", file=sys.stderr)
        return 2

    start = time.perf_counter()
    rows = _RUNNERS[args.experiment](cfg, args.seed, threads)
    wall_clock = time.perf_counter() - start
    write_outputs(args.out, args.experiment, rows, cfg, args.seed, threads, wall_clock)
    failed = [row for row in rows if row.status != "PASS"]
    print(f"{args.experiment}: {len(rows) - len(failed)}/{len(rows)} checks pass ({wall_clock:.1f}s)")
    for row in failed:
        print(f"FAIL {row.check} [{_params_text(row.params)}] lhs={_fmt(row.lhs)} rhs={_fmt(row.rhs)}")
    return 0 if not failed else 1


if __name__ == "__main__":
    sys.exit(main())
