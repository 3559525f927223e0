"""Gradient-free density functional solver (kinetic term ~ rho^(5/3)).

Minimizes the relaxed problem over {rho >= 0, int rho <= N} by damped
fixed-point iteration on the Euler-Lagrange equation

    (5/3) c_tf rho^(2/3) = [Phi]_+,   Phi = Z/r - rho * 1/|x| - mu.

The unconstrained (mu = 0) problem is solved first; its mass is the
maximum the model binds, which equals Z.  Only if that exceeds N does
the solver switch to an iteration whose density update is projected to
mass N every step, with the multiplier resolved inside the loop; a
nested outer-mu/inner-density scheme falls into edge/mass breathing
cycles whenever the support boundary sits in the flat potential tail.

The default grid reaches r_max = 400: the neutral potential has the
universal r^-4 tail, and the density mass beyond r ~ 100 is ~3e-3, too
much for per-mille mass checks on a shorter box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, ParameterError
from .radial import (
    RadialField,
    RadialGrid,
    integrate_3d,
    make_log_grid,
    newton_potential,
)

__all__ = [
    "C_TF_DEFAULT",
    "TFParams",
    "TFSolverOptions",
    "TFSolution",
    "TailFit",
    "default_tf_grid",
    "tail_study_grid",
    "default_tail_window",
    "neutral_tail_solution",
    "solve_tf",
    "tf_energy",
    "tf_scaling_check",
    "tf_tail_exponent",
    "sommerfeld_amplitude",
]

# Spinless semiclassical constant (3/5)(3 pi^2)^(2/3); every asserted
# property (max mass, scaling, tail exponent) is independent of it.
C_TF_DEFAULT = 0.6 * (3.0 * np.pi**2) ** (2.0 / 3.0)


@dataclass(frozen=True)
class TFParams:
    z: float
    n_electrons: float
    c_tf: float = C_TF_DEFAULT

    def __post_init__(self):
        if self.z <= 0 or self.n_electrons <= 0 or self.c_tf <= 0:
            raise ParameterError("Z, N and c_tf must all be positive")


@dataclass(frozen=True)
class TFSolverOptions:
    # Large-Z neutral runs decay roughly one residual decade per 2e3
    # iterations on the default box; 2e4 covers Z ~ 100 with margin.
    mix_alpha: float = 0.3
    residual_tol: float = 1e-8
    max_iter: int = 20_000
    mass_rtol: float = 1e-9


@dataclass(frozen=True)
class TFSolution:
    rho: RadialField
    phi: RadialField  # Z/r - rho * 1/|x| - mu
    mu: float
    energy: float
    mass: float
    residual: float
    iterations: int
    params: TFParams


@dataclass(frozen=True)
class TailFit:
    exponent: float | None
    amplitude: float | None
    compact_support: bool
    window: tuple


def default_tf_grid() -> RadialGrid:
    return make_log_grid(1e-4, 400.0, 2200)


def tail_study_grid() -> RadialGrid:
    """Extended box for far-tail work; the r^-4 asymptote emerges slowly
    (corrections decay like r^-0.772), so fits need r ~ 10^3."""
    return make_log_grid(1e-4, 2000.0, 2800)


def _bare_potential(grid: RadialGrid, z: float, rho_values: np.ndarray) -> np.ndarray:
    rho = RadialField(grid, np.clip(rho_values, 0.0, None))
    return z / grid.r - newton_potential(rho).values


def _residual_norm(grid: RadialGrid, params: TFParams, rho, phi) -> float:
    """L1(R3) norm of the Euler-Lagrange defect."""
    defect = (5.0 / 3.0) * params.c_tf * rho ** (2.0 / 3.0) - np.clip(phi, 0.0, None)
    return float(4.0 * np.pi * np.dot(grid.w, grid.r**2 * np.abs(defect)))


def _mass_of_target(grid: RadialGrid, coeff: float, phi_bare: np.ndarray, mu: float):
    target = coeff * np.clip(phi_bare - mu, 0.0, None) ** 1.5
    return float(4.0 * np.pi * np.dot(grid.w, grid.r**2 * target)), target


def _projected_target(
    grid: RadialGrid, params: TFParams, phi_bare: np.ndarray, n_cap: float
):
    """Density update with the multiplier resolved per iteration.

    Picks mu >= 0 so the updated density carries mass min(N, mass at
    mu=0): pinning the mass inside the loop removes the global breathing
    mode that makes a nested (outer-mu, inner-density) iteration cycle
    when the support edge sits in the flat potential tail.
    """
    coeff = (3.0 / (5.0 * params.c_tf)) ** 1.5
    mass0, target0 = _mass_of_target(grid, coeff, phi_bare, 0.0)
    if mass0 <= n_cap:
        return 0.0, target0
    lo, hi = 0.0, float(np.max(phi_bare))
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        m_mid, _ = _mass_of_target(grid, coeff, phi_bare, mid)
        if m_mid > n_cap:
            lo = mid
        else:
            hi = mid
    mu = 0.5 * (lo + hi)
    return mu, _mass_of_target(grid, coeff, phi_bare, mu)[1]


def _fixed_point(
    grid: RadialGrid,
    params: TFParams,
    mu: float,
    rho0: np.ndarray,
    opts: TFSolverOptions,
):
    """Damped iteration rho <- (1-a) rho + a ((3/(5c)) [Phi]_+)^(3/2)
    at a frozen multiplier."""
    coeff = (3.0 / (5.0 * params.c_tf)) ** 1.5
    rho = rho0.copy()
    alpha = opts.mix_alpha
    cap = opts.mix_alpha
    best = np.inf
    res = np.inf
    improving = 0
    for it in range(1, opts.max_iter + 1):
        phi = _bare_potential(grid, params.z, rho) - mu
        target = coeff * np.clip(phi, 0.0, None) ** 1.5
        res = _residual_norm(grid, params, rho, phi)
        if res < opts.residual_tol:
            return rho, res, it
        if res > 2.0 * best:
            # Overshoot: damp harder, and lower the recovery ceiling so
            # the iteration cannot cycle back into the unstable regime.
            cap = max(0.7 * min(cap, alpha), 0.02)
            alpha = max(0.5 * alpha, 0.02)
            improving = 0
        elif res < best:
            improving += 1
            if improving >= 50:
                alpha = min(1.25 * alpha, cap)
                improving = 0
        best = min(best, res)
        rho = (1.0 - alpha) * rho + alpha * target
    return rho, res, opts.max_iter


def _constrained_fixed_point(
    grid: RadialGrid,
    params: TFParams,
    rho0: np.ndarray,
    opts: TFSolverOptions,
):
    """Damped iteration with the multiplier projected every step."""
    rho = rho0.copy()
    alpha = opts.mix_alpha
    cap = opts.mix_alpha
    best = np.inf
    res = np.inf
    mu = 0.0
    improving = 0
    for it in range(1, opts.max_iter + 1):
        phi_bare = _bare_potential(grid, params.z, rho)
        mu, target = _projected_target(grid, params, phi_bare, params.n_electrons)
        res = _residual_norm(grid, params, rho, phi_bare - mu)
        if res < opts.residual_tol:
            return rho, mu, res, it
        if res > 2.0 * best:
            cap = max(0.7 * min(cap, alpha), 0.02)
            alpha = max(0.5 * alpha, 0.02)
            improving = 0
        elif res < best:
            improving += 1
            if improving >= 50:
                alpha = min(1.25 * alpha, cap)
                improving = 0
        best = min(best, res)
        rho = (1.0 - alpha) * rho + alpha * target
    return rho, mu, res, opts.max_iter


def _initial_density(grid: RadialGrid, params: TFParams) -> np.ndarray:
    """Screened-core profile plus the universal r^-4 potential tail.

    Seeding the far field with its known power law matters on large
    boxes, where the tail otherwise equilibrates only diffusively.
    """
    scale = params.z ** (1.0 / 3.0)
    amp = sommerfeld_amplitude(params.c_tf)
    phi_guess = params.z / grid.r * np.exp(-scale * grid.r) + amp / (
        grid.r**4 + (3.0 / scale) ** 4
    )
    rho = (3.0 / (5.0 * params.c_tf) * phi_guess) ** 1.5
    mass = integrate_3d(RadialField(grid, rho))
    # Seed slightly under-massed: starting exactly critical leaves the
    # box-edge potential at zero up to noise, which flip-flops the
    # positive part there and can sustain a limit cycle.
    return 0.995 * min(params.n_electrons, params.z) / mass * rho


def solve_tf(
    params: TFParams,
    grid: RadialGrid | None = None,
    opts: TFSolverOptions | None = None,
) -> TFSolution:
    """Solve the relaxed minimization over {rho >= 0, int rho <= N}.

    mu = 0 first; if the unconstrained mass (which equals Z) exceeds N,
    a second stage pins the update's mass to N each iteration, with the
    multiplier found by bisection inside the step.
    """
    grid = grid if grid is not None else default_tf_grid()
    opts = opts or TFSolverOptions()
    # The residual norm is extensive and scales like Z^(1/3) under the
    # natural rescaling; keep the stopping rule equally strict at all Z.
    tol = opts.residual_tol * max(1.0, params.z) ** (1.0 / 3.0)
    work = TFSolverOptions(
        mix_alpha=opts.mix_alpha,
        residual_tol=tol,
        max_iter=opts.max_iter,
        mass_rtol=opts.mass_rtol,
    )

    # Coarse unconstrained (mu = 0) probe first: it is stable and its
    # mass approaches the maximum the model binds, which decides the
    # branch.  Only the branch that will be reported must converge to
    # the tight tolerance.
    rho0 = _initial_density(grid, params)
    coarse = TFSolverOptions(
        mix_alpha=opts.mix_alpha,
        residual_tol=max(tol, 1e-4 * max(1.0, params.z) ** (1.0 / 3.0)),
        max_iter=opts.max_iter,
        mass_rtol=opts.mass_rtol,
    )
    rho, res, iters = _fixed_point(grid, params, 0.0, rho0, coarse)
    total_iters = iters
    mu = 0.0
    mass = integrate_3d(RadialField(grid, np.clip(rho, 0.0, None)))

    if mass > params.n_electrons * 1.01:
        # Clearly supercritical: the iteration that projects the
        # multiplier every step (update always carries mass N) converges
        # hard, and never chops the tail on and off the way a marginal
        # N ~ Z run on this branch would.
        rho, mu, res, iters2 = _constrained_fixed_point(grid, params, rho, work)
        if res >= tol:
            raise ConvergenceError(
                f"constrained iteration stalled at residual {res:.3e}",
                residual=res,
                iterations=iters2,
            )
        total_iters += iters2
        mass = integrate_3d(RadialField(grid, np.clip(rho, 0.0, None)))
    else:
        # Neutral or marginal: finish the mu = 0 branch tight, then make
        # the final call with a noise-level slack.
        rho, res, iters2 = _fixed_point(grid, params, 0.0, rho, work)
        if res >= tol:
            raise ConvergenceError(
                f"fixed point stalled at residual {res:.3e}",
                residual=res,
                iterations=iters2,
            )
        total_iters += iters2
        mass = integrate_3d(RadialField(grid, np.clip(rho, 0.0, None)))
        # The discrete neutral mass carries a small positive quadrature
        # bias (measured +2.6e-6 relative at Z=100); the slack must sit
        # above it so N = Z stays on the mu = 0 branch.
        neutral_slack = max(1e-5, 10.0 * opts.mass_rtol)
        if mass > params.n_electrons * (1.0 + neutral_slack):
            rho, mu, res, iters3 = _constrained_fixed_point(grid, params, rho, work)
            if res >= tol:
                raise ConvergenceError(
                    f"constrained iteration stalled at residual {res:.3e}",
                    residual=res,
                    iterations=iters3,
                )
            total_iters += iters3
            mass = integrate_3d(RadialField(grid, np.clip(rho, 0.0, None)))

    phi = _bare_potential(grid, params.z, rho) - mu
    res = _residual_norm(grid, params, rho, phi)
    rho_field = RadialField(grid, np.clip(rho, 0.0, None), nonnegative=True)
    return TFSolution(
        rho=rho_field,
        phi=RadialField(grid, phi),
        mu=mu,
        energy=tf_energy(rho_field, params),
        mass=mass,
        residual=res,
        iterations=total_iters,
        params=params,
    )


def tf_energy(rho: RadialField, params: TFParams) -> float:
    """c_tf int rho^(5/3) - Z int rho/|x| + (1/2) int rho (rho * 1/|x|)."""
    if np.any(rho.values < -1e-12 * max(1.0, float(np.max(np.abs(rho.values))))):
        raise DomainError("density must be nonnegative")
    vals = np.clip(rho.values, 0.0, None)
    grid = rho.grid
    clean = RadialField(grid, vals)
    kinetic = params.c_tf * integrate_3d(RadialField(grid, vals ** (5.0 / 3.0)))
    attraction = params.z * integrate_3d(clean, radial_power=-1)
    hartree = 0.5 * integrate_3d(
        RadialField(grid, vals * newton_potential(clean).values)
    )
    return float(kinetic - attraction + hartree)


def tf_scaling_check(
    params: TFParams,
    grid: RadialGrid | None = None,
    opts: TFSolverOptions | None = None,
) -> float:
    """Relative defect of E(N, Z) = Z^(7/3) E(N/Z, 1).

    The (N, Z) problem is solved on the base grid shrunk by Z^(-1/3), the
    scale mapping the reference problem onto the charged one.
    """
    grid = grid if grid is not None else default_tf_grid()
    scale = params.z ** (-1.0 / 3.0)
    scaled_grid = make_log_grid(grid.r_min * scale, grid.r_max * scale, grid.n)
    e_z = solve_tf(params, scaled_grid, opts).energy
    ref = TFParams(z=1.0, n_electrons=params.n_electrons / params.z, c_tf=params.c_tf)
    e_1 = solve_tf(ref, grid, opts).energy
    return float(abs(e_z - params.z ** (7.0 / 3.0) * e_1) / abs(e_z))


def sommerfeld_amplitude(c_tf: float = C_TF_DEFAULT) -> float:
    """A solving 12 A = 4 pi (3 A / (5 c_tf))^(3/2): the amplitude of the
    universal Phi ~ A r^-4 far tail of the neutral solution."""
    return 9.0 * (5.0 * c_tf / 3.0) ** 3 / np.pi**2


def neutral_tail_solution(
    z: float,
    c_tf: float = C_TF_DEFAULT,
    r_max_base: float = 12000.0,
    n: int = 3400,
    base_residual_tol: float = 5e-7,
) -> TFSolution:
    """Neutral solution on a box rescaled by Z^(-1/3) for far-tail work.

    The solve commutes with the natural rescaling, so working on the
    scaled box converges exactly like the Z = 1 problem; the residual is
    an extensive quantity and its tolerance is scaled by Z^(1/3).
    """
    s = z ** (-1.0 / 3.0)
    grid = make_log_grid(1e-4 * s, r_max_base * s, n)
    opts = TFSolverOptions(
        residual_tol=base_residual_tol * z ** (1.0 / 3.0), max_iter=60_000
    )
    return solve_tf(TFParams(z=z, n_electrons=z, c_tf=c_tf), grid, opts)


def default_tail_window(z: float) -> tuple:
    """Fit window (1500, 3000) Z^(-1/3): a scale-invariant range deep
    enough in the asymptotic regime that the measured local slope sits
    within 0.05 of -4.  The approach to the power law is slow (the
    correction decays like r^-0.772), so early windows are still in the
    core-to-tail crossover; e.g. Z = 1 on [5, 50] has local slopes only
    -2.2 to -3.4.  Windows must also stay ~half a decade clear of the
    box wall, whose charge deficit bends the slope back up."""
    s = z ** (-1.0 / 3.0)
    return (1500.0 * s, 3000.0 * s)


def tf_tail_exponent(sol: TFSolution, fit_window: tuple | None = None) -> TailFit:
    """Least-squares fit of log Phi vs log r on the window.

    Neutral solutions give exponent near -4; ionized solutions (mu > 0)
    have compactly supported densities and no power tail, so the fit is
    refused with the compact_support flag.
    """
    if fit_window is None:
        fit_window = default_tail_window(sol.params.z)
    lo, hi = fit_window
    grid = sol.rho.grid
    if not (grid.r_min <= lo < hi <= grid.r_max):
        raise ParameterError(f"fit window {fit_window} outside grid")
    mask = (grid.r >= lo) & (grid.r <= hi)
    if sol.mu > 1e-8 or np.any(sol.phi.values[mask] <= 0.0):
        return TailFit(None, None, compact_support=True, window=fit_window)
    x = np.log(grid.r[mask])
    y = np.log(sol.phi.values[mask])
    slope, _ = np.polyfit(x, y, 1)
    # Amplitude of the nearest pure r^-4 law (exponent pinned at -4);
    # a free-intercept fit would slave the amplitude to the slope error.
    amplitude = float(np.exp(np.mean(y + 4.0 * x)))
    return TailFit(
        exponent=float(slope),
        amplitude=amplitude,
        compact_support=False,
        window=fit_window,
    )
