"""Functionals, balance residuals, limit profiles, and decay-rate fits.

Everything here is a pure function of immutable snapshots; the runner
evaluates these at the recording cadence and the acceptance suite replays
them on synthetic states.  Time integrals (energy balances, profile flux)
use trapezoidal quadrature at that cadence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .particles import MomentFields, ParticleEnsemble, gather_velocity
from .spectral import (
    ScalarField,
    VectorField,
    divergence,
    gradient,
    phase_shift,
    sobolev_norm,
    sup_norm,
)

__all__ = [
    "DiagnosticsRow",
    "CSV_COLUMNS",
    "CSV_COLUMNS_INHOMOGENEOUS",
    "kinetic_energy",
    "dissipation",
    "modulated_energy",
    "u_infinity",
    "u_infinity_inhomogeneous",
    "uinfty_identity_residual",
    "balance_residuals",
    "w1_upper_bound",
    "ProfileAccumulator",
    "lyapunov_record",
    "trace_cubed_pressure_integral",
    "entropy",
    "entropy_bound",
    "fit_decay",
    "FitResult",
    "lambda0_scale",
]


# --------------------------------------------------------------------------
# the recorded row

#: Fixed column order of the time-series output (homogeneous runs).
CSV_COLUMNS = [
    "t", "E", "D", "H", "mass", "px", "py", "mean_ux", "mean_uy",
    "uinf_x", "uinf_y", "energy_residual", "modulated_residual",
    "grad_u_L2", "grad2_u_L2", "grad_P_L2", "udot_L2",
    "nf_Linf", "jf_Linf", "ef_Linf", "grad_u_Linf", "lip_budget",
    "entropy", "w1_bound", "nf_profile_Hm1", "pressure_cross_term",
]

#: Variable-density runs append the density extras.
CSV_COLUMNS_INHOMOGENEOUS = CSV_COLUMNS + [
    "rho_min", "rho_max", "rho_mean", "rho_profile_Hm1",
]


@dataclass
class DiagnosticsRow:
    """One time-stamped record of every monitored functional.

    *_L2 columns store unsquared norms; E, D, H are the (squared-norm)
    energy functionals.  uinftybis_residual is carried alongside for the
    balance report even though it is not a CSV column.
    """

    t: float
    E: float
    D: float
    H: float
    mass: float
    px: float
    py: float
    mean_ux: float
    mean_uy: float
    uinf_x: float
    uinf_y: float
    energy_residual: float
    modulated_residual: float
    grad_u_L2: float
    grad2_u_L2: float
    grad_P_L2: float
    udot_L2: float
    nf_Linf: float
    jf_Linf: float
    ef_Linf: float
    grad_u_Linf: float
    lip_budget: float
    entropy: float
    w1_bound: float
    nf_profile_Hm1: float
    pressure_cross_term: float
    rho_min: float | None = None
    rho_max: float | None = None
    rho_mean: float | None = None
    rho_profile_Hm1: float | None = None
    uinftybis_residual: float = 0.0

    def as_csv_values(self, inhomogeneous: bool):
        cols = CSV_COLUMNS_INHOMOGENEOUS if inhomogeneous else CSV_COLUMNS
        return [getattr(self, c) for c in cols]


# --------------------------------------------------------------------------
# energies

def kinetic_energy(
    u: VectorField, ens: ParticleEnsemble | None, rho: ScalarField | None = None
) -> float:
    """Total kinetic energy, (1/2) int (rho)|u|^2 + (1/2) sum w |V|^2.

    The fluid part is evaluated by Parseval (exact for the band-limited
    velocity the solver carries).
    """
    g = u.grid
    if rho is None:
        fluid = 0.5 * g.area * float(np.sum(np.abs(u.hat) ** 2))
    else:
        fluid = 0.5 * float(np.sum(rho.values * (u.values ** 2).sum(axis=0))) * g.cell_area
    part = ens.kinetic_energy() if ens is not None else 0.0
    return fluid + part


def dissipation(u: VectorField, ens: ParticleEnsemble | None) -> float:
    """||grad u||_L2^2 plus the drag dissipation sum w |u(X) - V|^2."""
    g = u.grid
    grad_sq = g.area * float(np.sum(g.k_sq_deriv * (np.abs(u.hat) ** 2).sum(axis=0)))
    if ens is None or ens.count == 0:
        return grad_sq
    du = gather_velocity(u, ens.x) - ens.v
    return grad_sq + float(ens.w @ (du ** 2).sum(axis=1))


def _fluct_energy(u: VectorField) -> float:
    """int |u - <u>|^2 dx via Parseval over the nonzero modes."""
    power = (np.abs(u.hat) ** 2).sum(axis=0)
    return u.grid.area * float(power.sum() - power[0, 0])


def modulated_energy(
    u: VectorField, ens: ParticleEnsemble | None, rho: ScalarField | None = None
) -> float:
    """Distance from the monokinetic equilibrium with bulk-velocity matching.

    Homogeneous form: (1/2)int |u-<u>|^2 + (1/2)sum w |V - Vbar|^2
    + (1/2) (||n_f||_L1 / (<n_f> + 1)) |<u> - Vbar|^2 with Vbar the
    mass-weighted particle mean.  With no particles the coupling and
    particle terms vanish and only the fluid fluctuation remains.  The
    variable-density form weighs the fluid fluctuation by rho about
    <rho u>/<rho> and uses the harmonic-mean coupling weight.
    """
    g = u.grid
    mass = ens.total_mass() if ens is not None else 0.0
    if rho is None:
        h = 0.5 * _fluct_energy(u)
        if mass > 0:
            vbar = ens.mean_velocity()
            dv = ens.v - vbar
            h += 0.5 * float(ens.w @ (dv ** 2).sum(axis=1))
            mean_n = mass / g.area
            bulk_u = u.mean()
            h += 0.5 * (mass / (mean_n + 1.0)) * float(np.sum((bulk_u - vbar) ** 2))
        return h
    rho_l1 = rho.integral()
    if rho_l1 <= 0:
        raise ValueError("modulated energy needs positive total fluid mass")
    rho_u = (rho.values[None] * u.values).sum(axis=(1, 2)) * g.cell_area / g.area
    bulk_u = rho_u / (rho_l1 / g.area)  # <rho u>/<rho>
    du = u.values - bulk_u[:, None, None]
    h = 0.5 * float(np.sum(rho.values * (du ** 2).sum(axis=0))) * g.cell_area
    if mass > 0:
        vbar = ens.mean_velocity()
        dv = ens.v - vbar
        h += 0.5 * float(ens.w @ (dv ** 2).sum(axis=1))
        weight = mass * rho_l1 / (mass + rho_l1)
        h += 0.5 * weight * float(np.sum((bulk_u - vbar) ** 2))
    return h


# --------------------------------------------------------------------------
# equilibrium velocity and the bulk identity

def u_infinity(mean_u0: np.ndarray, mean_j0: np.ndarray, mean_n0: float) -> np.ndarray:
    """Limit velocity <u0 + j_f0>/(1 + <n_f0>), frozen at run start."""
    denom = 1.0 + mean_n0
    if denom <= 0:
        raise ValueError("limit-velocity denominator must be positive")
    return (np.asarray(mean_u0, dtype=float) + np.asarray(mean_j0, dtype=float)) / denom


def u_infinity_inhomogeneous(
    mean_rho_u0: np.ndarray, mean_j0: np.ndarray, mean_n0: float, mean_rho0: float
) -> np.ndarray:
    """Variable-density limit velocity <rho0 u0 + j_f0>/(<n_f0> + <rho0>)."""
    denom = mean_n0 + mean_rho0
    if denom <= 0:
        raise ValueError("limit-velocity denominator must be positive")
    return (np.asarray(mean_rho_u0, dtype=float) + np.asarray(mean_j0, dtype=float)) / denom


def uinfty_identity_residual(
    bulk_u: np.ndarray, mean_j: np.ndarray, mean_n: float, u_inf: np.ndarray,
    mean_rho: float | None = None,
) -> float:
    """Residual of the exact bulk identity linking <u>, the particle mean and u_inf.

    Homogeneous: <u> - u_inf - (<n>/(1+<n>)) (<u> - <j>/<n>); the
    variable-density analog replaces <u> by <rho u>/<rho> and the weight by
    <n>/(<n>+<rho>).  Zero whenever total momentum and mass are conserved.
    """
    bulk_u = np.asarray(bulk_u, dtype=float)
    if mean_n == 0:
        return float(np.linalg.norm(bulk_u - u_inf))
    vbar = np.asarray(mean_j, dtype=float) / mean_n
    denom = (1.0 if mean_rho is None else mean_rho) + mean_n
    res = bulk_u - u_inf - (mean_n / denom) * (bulk_u - vbar)
    return float(np.linalg.norm(res))


# --------------------------------------------------------------------------
# balances over a recorded history

def balance_residuals(history) -> dict:
    """Conservation-law residuals over recorded rows (>= 2 required).

    Returns per-row arrays (trapezoidal in time) and their maxima:
    |E + int D - E0|, |H + int D - H0|, mass drift, momentum drift and the
    bulk-identity residual.
    """
    rows = list(history)
    if len(rows) < 2:
        raise ValueError("balance residuals need at least two recorded rows")
    t = np.array([r.t for r in rows])
    e = np.array([r.E for r in rows])
    d = np.array([r.D for r in rows])
    h = np.array([r.H for r in rows])
    mass = np.array([r.mass for r in rows])
    mom = np.array([[r.px, r.py] for r in rows])
    int_d = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(t))])
    energy_res = np.abs(e + int_d - e[0])
    modulated_res = np.abs(h + int_d - h[0])
    mass_drift = np.abs(mass - mass[0])
    momentum_drift = np.linalg.norm(mom - mom[0], axis=1)
    identity_res = np.array([r.uinftybis_residual for r in rows])
    return {
        "t": t,
        "energy_residual": energy_res,
        "modulated_residual": modulated_res,
        "mass_drift": mass_drift,
        "momentum_drift": momentum_drift,
        "uinftybis_residual": identity_res,
        "max_energy_residual": float(energy_res.max()),
        "max_modulated_residual": float(modulated_res.max()),
        "max_mass_drift": float(mass_drift.max()),
        "max_momentum_drift": float(momentum_drift.max()),
        "max_uinftybis_residual": float(identity_res.max()),
    }


# --------------------------------------------------------------------------
# transport-distance surrogate and the limit profile

def w1_upper_bound(
    ens: ParticleEnsemble | None,
    u_inf: np.ndarray,
    shifted_density: ScalarField | None = None,
    profile: ScalarField | None = None,
) -> float:
    """Upper-bound surrogate for the transport distance to the monokinetic state.

    sum w |V - u_inf|  +  || n_f(shifted) - profile ||_{H^-1}.  This bounds
    the distance from above; it is NOT the distance itself and is labeled
    as a surrogate wherever reported.  Without a finalized profile only the
    velocity term is returned (running estimate).
    """
    val = 0.0
    if ens is not None and ens.count > 0:
        dv = ens.v - np.asarray(u_inf, dtype=float)
        val += float(ens.w @ np.sqrt((dv ** 2).sum(axis=1)))
    if shifted_density is not None and profile is not None:
        dev = shifted_density - profile
        val += sobolev_norm(dev - ScalarField(dev.grid, np.full_like(dev.values, dev.mean())), -1.0)
    return val


@dataclass
class ProfileAccumulator:
    """Running time integral of the shifted momentum deficit.

    Accumulates phase_shift(j_f - n_f u_inf, t u_inf) (or the rho analog)
    by the trapezoidal rule at the recording cadence; finalize returns
    base - div(flux_integral), whose mean equals the base mean because the
    divergence is mean-free.
    """

    base: ScalarField
    u_inf: np.ndarray
    flux: VectorField = None
    _last_t: float = None
    _last_sample: VectorField = None
    t_truncation: float = 0.0
    samples: int = 0

    def __post_init__(self):
        self.u_inf = np.asarray(self.u_inf, dtype=float)
        g = self.base.grid
        if self.flux is None:
            self.flux = VectorField(g, np.zeros((2, g.n, g.n)))

    def shifted_flux(self, t: float, flux_field: VectorField) -> VectorField:
        return phase_shift(flux_field, t * self.u_inf)

    def accumulate(self, t: float, flux_field: VectorField):
        """Feed the unshifted deficit field (j_f - n_f u_inf or rho(u - u_inf))."""
        sample = self.shifted_flux(t, flux_field)
        if self._last_sample is not None:
            dt = t - self._last_t
            if dt <= 0:
                raise ValueError("profile samples must advance in time")
            self.flux = VectorField(
                self.base.grid,
                self.flux.values + 0.5 * dt * (self._last_sample.values + sample.values),
            )
        self._last_t = t
        self._last_sample = sample
        self.samples += 1

    def finalize(self) -> ScalarField:
        if self.samples == 0:
            raise ValueError("profile finalized before any accumulation")
        self.t_truncation = self._last_t
        return self.base - divergence(self.flux)


# --------------------------------------------------------------------------
# higher-order functionals

def lyapunov_record(
    u: VectorField,
    pressure: ScalarField,
    moments: MomentFields | None,
    ens: ParticleEnsemble | None,
    udot: VectorField | None = None,
) -> dict:
    """Squared-norm functionals entering the higher-order energy estimates.

    Records ||grad u||^2, ||grad^2 u||^2, ||grad P||^2, ||udot||^2,
    ||sqrt(n_f) udot||^2, the drag dissipation, the pressure/velocity-gradient
    cross term int (P - <P>) grad u : (grad u)^T, the grid Lipschitz number
    ||grad u||_inf (pointwise Frobenius), and the sup norms of the deposited
    moments.
    """
    g = u.grid
    hat = u.hat
    power = (np.abs(hat) ** 2).sum(axis=0)
    out = {
        "grad_u_sq": g.area * float(np.sum(g.k_sq_deriv * power)),
        "grad2_u_sq": g.area * float(np.sum(g.k_sq_deriv ** 2 * power)),
        "grad_p_sq": g.area
        * float(np.sum(g.k_sq_deriv * np.abs(pressure.hat) ** 2)),
    }
    du = np.stack([
        g.ifft(g.ikx * hat[0]), g.ifft(g.iky * hat[0]),
        g.ifft(g.ikx * hat[1]), g.ifft(g.iky * hat[1]),
    ])  # [d1u1, d2u1, d1u2, d2u2]
    out["grad_u_sup"] = float(np.sqrt((du ** 2).sum(axis=0)).max())
    p_fluct = pressure.values - pressure.values.mean()
    # grad u : (grad u)^T = sum_ij (d_j u_i)(d_i u_j)
    cross = du[0] ** 2 + 2.0 * du[1] * du[2] + du[3] ** 2
    out["pressure_cross_term"] = float(np.sum(p_fluct * cross)) * g.cell_area
    if udot is not None:
        out["udot_sq"] = g.area * float(np.sum(np.abs(udot.hat) ** 2))
        if moments is not None:
            out["sqrt_nf_udot_sq"] = float(
                np.sum(moments.n_f.values * (udot.values ** 2).sum(axis=0))
            ) * g.cell_area
    if moments is not None:
        out["nf_sup"] = float(np.abs(moments.n_f.values).max())
        out["jf_sup"] = sup_norm(moments.j_f)
        out["ef_sup"] = float(np.abs(moments.e_f.values).max())
    if ens is not None and ens.count > 0:
        dv = gather_velocity(u, ens.x) - ens.v
        out["drag_dissipation"] = float(ens.w @ (dv ** 2).sum(axis=1))
    return out


def trace_cubed_pressure_integral(u: VectorField, pressure: ScalarField) -> float:
    """int (P - <P>) Tr((grad u)^3) dx; vanishes pointwise for solenoidal u.

    For a traceless 2x2 matrix A, Tr A^3 = (Tr A)^3 - 3 Tr A Det A = 0, so
    this is a rounding-level consistency probe of the projection.
    """
    g = u.grid
    hat = u.hat
    a11 = g.ifft(g.ikx * hat[0])
    a12 = g.ifft(g.iky * hat[0])
    a21 = g.ifft(g.ikx * hat[1])
    a22 = g.ifft(g.iky * hat[1])
    # Tr(A^3) for A = [[a11, a12], [a21, a22]]
    tr3 = (
        a11 ** 3 + a22 ** 3
        + 3.0 * a12 * a21 * (a11 + a22)
    )
    p_fluct = pressure.values - pressure.values.mean()
    return float(np.sum(p_fluct * tr3)) * g.cell_area


# --------------------------------------------------------------------------
# entropy

def entropy(n_f: ScalarField) -> float:
    """int n_f |log n_f| dx with 0 log 0 := 0."""
    vals = n_f.values
    if np.any(vals < 0):
        raise ValueError("entropy needs a nonnegative density")
    safe = np.where(vals > 0, vals, 1.0)
    return float(np.sum(np.where(vals > 0, vals * np.abs(np.log(safe)), 0.0))) * n_f.grid.cell_area


def entropy_bound(
    t: float, f0_log_f0: float, mass: float, area: float, velocity_fluct_energy: float
) -> float:
    """Affine-in-time ceiling for the density entropy.

    f0_log_f0 + (t + log 2 pi) * mass + 2/e * area + velocity term, where
    the last argument is (1/2) sum w |V - Vbar|^2 at the evaluation time
    (any upper bound for it, e.g. H or H0, is also valid).
    """
    return (
        f0_log_f0
        + (t + math.log(2.0 * math.pi)) * mass
        + 2.0 * math.exp(-1.0) * area
        + velocity_fluct_energy
    )


# --------------------------------------------------------------------------
# decay-rate fits

@dataclass(frozen=True)
class FitResult:
    model: str
    rate: float  # exponential: decay rate lambda (positive = decaying);
    # algebraic: exponent of (1+t) (negative = decaying)
    intercept: float
    r_squared: float
    n_points: int
    floored: bool = False


def fit_decay(times, values, model: str = "exponential", window: tuple | None = None,
              min_points: int = 10) -> FitResult:
    """Least-squares decay fit of a positive series.

    exponential: log(value) ~ a - rate * t; algebraic: log(value) ~
    a + rate * log(1 + t).  Non-positive samples are floored at 1e-300 and
    flagged.  The window is a closed (t_lo, t_hi) interval.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if window is not None:
        keep = (t >= window[0]) & (t <= window[1])
        t, v = t[keep], v[keep]
    if t.size < min_points:
        raise ValueError(f"decay fit needs >= {min_points} samples in the window, got {t.size}")
    floored = bool(np.any(v <= 0))
    v = np.maximum(v, 1e-300)
    y = np.log(v)
    if model in ("exponential", "exp"):
        x = t
        sign = -1.0
        name = "exponential"
    elif model in ("algebraic", "alg", "power"):
        x = np.log1p(t)
        sign = 1.0
        name = "algebraic"
    else:
        raise ValueError(f"unknown decay model {model!r}")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(
        model=name,
        rate=float(sign * slope),
        intercept=float(intercept),
        r_squared=r2,
        n_points=int(t.size),
        floored=floored,
    )


def lambda0_scale(mass: float, cubed_moment_sup: float) -> float:
    """Reference decay-rate scale (1 + M0 log(1 + sup |v-u_inf|^3 f0))^-1.

    Comparison scale only: the proportionality constant in front of it is
    not constructive, so no pass/fail is attached to the ratio with a
    fitted rate.
    """
    if not math.isfinite(cubed_moment_sup):
        return 0.0
    return 1.0 / (1.0 + mass * math.log1p(cubed_moment_sup))
