"""Finite-basis orbital theory for few-fermion Coulomb problems.

A single-center basis of s-type Gaussians gives analytic one- and
two-body Coulomb integrals.  On top of it:

  * aufbau self-consistent field over orthogonal-projection states,
  * relaxed minimization over density matrices 0 <= gamma <= 1 with
    fixed trace (projected gradient on the convex set),
  * exact diagonalization of the second-quantized Hamiltonian in each
    fermion-number sector, an upper-bound oracle for everything else.

The relaxed and projection minima agree (dropping the idempotency
constraint does not lower the minimum), which the tests verify over
random bases; the exact sector energies sit below both.

Conventions: spinless fermions, kinetic operator -Laplace (no 1/2),
chemists' index order eri[i,j,k,l] = (ij|kl).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.linalg
import scipy.special

from .errors import BasisError, CapacityError, ConvergenceError, ParameterError

__all__ = [
    "OneBodyBasis",
    "DensityMatrixState",
    "FockSpectrum",
    "boys_f0",
    "build_sgauss_basis",
    "hf_energy",
    "fock_matrix",
    "solve_hf_scf",
    "solve_hf_relaxed",
    "exact_diagonalization",
    "spectrum_scan",
    "random_basis",
]

SECTOR_CAP = 1_000_000


def boys_f0(t):
    """F0(t) = (1/2) sqrt(pi/t) erf(sqrt(t)), continuously 1 at t = 0."""
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    m = t > 1e-13
    out[m] = 0.5 * np.sqrt(np.pi / t[m]) * scipy.special.erf(np.sqrt(t[m]))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class OneBodyBasis:
    """Orthonormalized one-body space with Coulomb tensors."""

    dim: int
    h0: np.ndarray           # kinetic + nuclear attraction
    eri: np.ndarray          # (ij|kl), 8-fold symmetric
    z: float
    exponents: np.ndarray
    orthonormalized: bool = True

    def __post_init__(self):
        for arr in (self.h0, self.eri, self.exponents):
            np.asarray(arr).setflags(write=False)


@dataclass(frozen=True)
class DensityMatrixState:
    gamma: np.ndarray
    trace_n: float
    energy: float
    converged: bool = True
    iterations: int = 0
    stationarity_gap: float = 0.0
    fermi_degenerate: bool = False

    def __post_init__(self):
        np.asarray(self.gamma).setflags(write=False)


@dataclass(frozen=True)
class FockSpectrum:
    energies: np.ndarray  # E_N for N = 0..d
    monotonicity_violations: tuple
    convexity_violations: tuple


def build_sgauss_basis(z: float, exponents) -> OneBodyBasis:
    """s-type Gaussian shells exp(-a r^2) on a single center.

    All integrals are closed forms; the two-body ones reduce to the
    F0 Boys integral at zero argument for concentric shells.  The basis
    is symmetrically (Loewdin) orthonormalized; near-linear dependence
    (overlap condition number above 1e10) is rejected.
    """
    if z <= 0:
        raise ParameterError(f"charge must be positive, got {z}")
    a = np.asarray(sorted(float(x) for x in exponents))
    if a.size == 0 or np.any(a <= 0):
        raise ParameterError("need a nonempty list of positive exponents")
    d = a.size

    norms = (2.0 * a / np.pi) ** 0.75
    p = a[:, None] + a[None, :]
    s = (np.pi / p) ** 1.5 * norms[:, None] * norms[None, :]
    t = 6.0 * np.outer(a, a) / p * (np.pi / p) ** 1.5 * norms[:, None] * norms[None, :]
    v = -z * 2.0 * np.pi / p * norms[:, None] * norms[None, :]

    cond = np.linalg.cond(s)
    if not np.isfinite(cond) or cond > 1e10:
        raise BasisError(f"overlap condition number {cond:.2e} exceeds 1e10")

    pq = p[:, :, None, None] + p[None, None, :, :]
    eri = (
        2.0 * np.pi**2.5
        / (p[:, :, None, None] * p[None, None, :, :] * np.sqrt(pq))
        * boys_f0(np.zeros_like(pq))
    )
    eri = (
        eri
        * norms[:, None, None, None]
        * norms[None, :, None, None]
        * norms[None, None, :, None]
        * norms[None, None, None, :]
    )

    evals, evecs = np.linalg.eigh(s)
    x = evecs @ np.diag(evals**-0.5) @ evecs.T  # symmetric orthonormalizer
    h0 = x @ (t + v) @ x
    h0 = 0.5 * (h0 + h0.T)
    eri = np.einsum("pi,qj,rk,sl,pqrs->ijkl", x, x, x, x, eri, optimize=True)
    return OneBodyBasis(dim=d, h0=h0, eri=eri, z=float(z), exponents=a)


def hf_energy(gamma: np.ndarray, basis: OneBodyBasis) -> float:
    """Tr(h0 gamma) + (1/2) sum (ij|kl)[g_ij g_kl - g_ik g_jl]  (real)."""
    g = np.asarray(gamma, dtype=float)
    direct = np.einsum("ijkl,ij,kl", basis.eri, g, g)
    exch = np.einsum("ikjl,ij,kl", basis.eri, g, g)
    return float(np.sum(basis.h0 * g) + 0.5 * (direct - exch))


def fock_matrix(gamma: np.ndarray, basis: OneBodyBasis) -> np.ndarray:
    """h0 + J(gamma) - K(gamma), the energy gradient at gamma."""
    g = np.asarray(gamma, dtype=float)
    j = np.einsum("ijkl,kl->ij", basis.eri, g)
    k = np.einsum("ikjl,kl->ij", basis.eri, g)
    f = basis.h0 + j - k
    return 0.5 * (f + f.T)


def _aufbau(fock: np.ndarray, n: int, degeneracy_tol: float = 1e-9):
    evals, evecs = np.linalg.eigh(fock)
    c = evecs[:, :n]
    gamma = c @ c.T
    degenerate = bool(
        n < evals.size and n >= 1 and (evals[n] - evals[n - 1]) < degeneracy_tol
    )
    return gamma, degenerate


def solve_hf_scf(
    basis: OneBodyBasis,
    n: int,
    max_iter: int = 300,
    tol: float = 1e-11,
    n_starts: int = 4,
    seed: int = 0,
) -> DensityMatrixState:
    """Aufbau SCF over projections, best of several starts.

    Iterates occupation of the n lowest orbitals of the current mean
    field with damping 0.5 on the density matrix, restarting with
    stronger damping if the commutator stalls.  The returned gamma is
    the final aufbau projection, idempotent by construction.
    """
    d = basis.dim
    if not (1 <= n <= d):
        raise ParameterError(f"need 1 <= n <= dim, got n={n}, dim={d}")
    rng = np.random.default_rng(seed)

    starts = [_aufbau(basis.h0, n)[0]]
    # Aufbau iterations can settle on excited stationary points; seeding
    # from a quick relaxed solve reliably lands in the global basin.
    relaxed = solve_hf_relaxed(basis, n, max_iter=200, n_starts=2, seed=seed)
    starts.append(_aufbau(fock_matrix(relaxed.gamma, basis), n)[0])
    for _ in range(n_starts - 1):
        q, _ = np.linalg.qr(rng.normal(size=(d, d)))
        starts.append(q[:, :n] @ q[:, :n].T)

    best = None
    for gamma0 in starts:
        for damping in (0.5, 0.25, 0.1):
            state = _scf_single(basis, n, gamma0, damping, max_iter, tol)
            if state is not None:
                break
        if state is None:
            continue
        if best is None or state.energy < best.energy:
            best = state
    if best is None:
        raise ConvergenceError("aufbau iteration failed from every start")
    return best


def _scf_single(basis, n, gamma0, damping, max_iter, tol):
    gamma = gamma0
    scale = 1.0 + abs(float(np.trace(basis.h0)))
    for it in range(1, max_iter + 1):
        f = fock_matrix(gamma, basis)
        proj, degenerate = _aufbau(f, n)
        comm = f @ proj - proj @ f
        if np.linalg.norm(comm) < tol * scale:
            return DensityMatrixState(
                gamma=proj,
                trace_n=float(np.trace(proj)),
                energy=hf_energy(proj, basis),
                converged=True,
                iterations=it,
                fermi_degenerate=degenerate,
            )
        gamma = (1.0 - damping) * gamma + damping * proj
    return None


def _project_box_trace(sym: np.ndarray, n: float) -> np.ndarray:
    """Euclidean projection onto {0 <= gamma <= 1, Tr gamma = n}.

    Unitarily invariant set: project the eigenvalues onto the permuted
    box-with-sum (water filling with clipping).
    """
    evals, evecs = np.linalg.eigh(sym)

    def trace_at(theta):
        return float(np.sum(np.clip(evals - theta, 0.0, 1.0)))

    lo = float(np.min(evals)) - 1.5
    hi = float(np.max(evals)) + 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if trace_at(mid) > n:
            lo = mid
        else:
            hi = mid
    occ = np.clip(evals - 0.5 * (lo + hi), 0.0, 1.0)
    return (evecs * occ) @ evecs.T


def solve_hf_relaxed(
    basis: OneBodyBasis,
    n: int,
    max_iter: int = 600,
    tol: float = 1e-9,
    n_starts: int = 4,
    seed: int = 0,
) -> DensityMatrixState:
    """Projected-gradient minimization over {0 <= gamma <= 1, Tr = n}.

    First-order optimality is measured by the aufbau gap
    Tr(F gamma) - sum of the n lowest eigenvalues of F, which is
    nonnegative on the feasible set and zero exactly at a stationary
    point of the relaxed problem.
    """
    d = basis.dim
    if not (0 <= n <= d):
        raise ParameterError(f"need 0 <= n <= dim, got n={n}, dim={d}")
    if n == 0:
        return DensityMatrixState(gamma=np.zeros((d, d)), trace_n=0.0, energy=0.0)
    rng = np.random.default_rng(seed)

    starts = [_aufbau(basis.h0, n)[0], np.eye(d) * (n / d)]
    for _ in range(max(0, n_starts - 2)):
        q, _ = np.linalg.qr(rng.normal(size=(d, d)))
        starts.append(q[:, :n] @ q[:, :n].T)

    best = None
    for gamma0 in starts:
        state = _projected_gradient(basis, n, gamma0, max_iter, tol)
        if best is None or state.energy < best.energy:
            best = state
    return best


def _projected_gradient(basis, n, gamma0, max_iter, tol):
    gamma = _project_box_trace(gamma0, n)
    energy = hf_energy(gamma, basis)
    step = 0.5 / (1.0 + np.linalg.norm(basis.h0))
    gap = np.inf
    scale = 1.0
    for it in range(1, max_iter + 1):
        f = fock_matrix(gamma, basis)
        evals = np.linalg.eigvalsh(f)
        gap = float(np.sum(f * gamma) - np.sum(evals[:n]))
        scale = 1.0 + abs(energy)
        if gap < tol * scale:
            return DensityMatrixState(
                gamma=gamma,
                trace_n=float(np.trace(gamma)),
                energy=energy,
                converged=True,
                iterations=it,
                stationarity_gap=gap,
            )
        accepted = False
        for _ in range(40):
            cand = _project_box_trace(gamma - step * f, n)
            e_cand = hf_energy(cand, basis)
            if e_cand <= energy + 1e-14 * scale:
                gamma, energy = cand, e_cand
                step = min(step * 1.3, 1e3)
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    return DensityMatrixState(
        gamma=gamma,
        trace_n=float(np.trace(gamma)),
        energy=energy,
        converged=bool(gap < tol * scale),
        iterations=max_iter,
        stationarity_gap=float(gap),
    )


def _annihilate(det: int, p: int):
    if not det & (1 << p):
        return None, 0
    sign = -1 if bin(det & ((1 << p) - 1)).count("1") % 2 else 1
    return det & ~(1 << p), sign


def _create(det: int, p: int):
    if det & (1 << p):
        return None, 0
    sign = -1 if bin(det & ((1 << p) - 1)).count("1") % 2 else 1
    return det | (1 << p), sign


def _sector_hamiltonian(basis: OneBodyBasis, n: int) -> np.ndarray:
    """Dense second-quantized Hamiltonian in the n-fermion sector.

    H = sum h_pq a+_p a_q + (1/2) sum <pq|rs> a+_p a+_q a_s a_r with the
    physicists' element <pq|rs> = (pr|qs).
    """
    d = basis.dim
    from itertools import combinations

    dets = [sum(1 << i for i in occ) for occ in combinations(range(d), n)]
    index = {det: i for i, det in enumerate(dets)}
    dim = len(dets)
    h = np.zeros((dim, dim))
    w_phys = np.transpose(basis.eri, (0, 2, 1, 3))  # <pq|rs> = (pr|qs)

    for col, det in enumerate(dets):
        occ = [p for p in range(d) if det & (1 << p)]
        # one-body
        for q in occ:
            d1, s1 = _annihilate(det, q)
            for p in range(d):
                d2, s2 = _create(d1, p)
                if d2 is None:
                    continue
                h[index[d2], col] += s1 * s2 * basis.h0[p, q]
        # two-body
        for r in occ:
            d1, s1 = _annihilate(det, r)
            for s_ in range(d):
                d2, s2 = _annihilate(d1, s_)
                if d2 is None:
                    continue
                for q in range(d):
                    d3, s3 = _create(d2, q)
                    if d3 is None:
                        continue
                    for p in range(d):
                        d4, s4 = _create(d3, p)
                        if d4 is None:
                            continue
                        h[index[d4], col] += (
                            0.5 * s1 * s2 * s3 * s4 * w_phys[p, q, r, s_]
                        )
    return 0.5 * (h + h.T)


def exact_diagonalization(basis: OneBodyBasis, n: int) -> float:
    """Ground energy of the n-fermion sector; E_0 = 0 by convention."""
    d = basis.dim
    if not (0 <= n <= d):
        raise ParameterError(f"need 0 <= n <= dim, got n={n}, dim={d}")
    if comb(d, n) > SECTOR_CAP:
        raise CapacityError(f"sector dimension C({d},{n}) exceeds {SECTOR_CAP}")
    if n == 0:
        return 0.0
    h = _sector_hamiltonian(basis, n)
    return float(scipy.linalg.eigh(h, eigvals_only=True, subset_by_index=(0, 0))[0])


def spectrum_scan(basis: OneBodyBasis, tol: float = 1e-10) -> FockSpectrum:
    """E_N for every sector, with monotonicity/convexity flags.

    In a finite basis nothing can escape to infinity, so E_N <= E_{N-1}
    can fail at weak binding; violations are reported, not asserted.
    """
    d = basis.dim
    energies = np.array([exact_diagonalization(basis, n) for n in range(d + 1)])
    scale = 1.0 + float(np.max(np.abs(energies)))
    mono = tuple(
        (n, float(energies[n] - energies[n - 1]))
        for n in range(1, d + 1)
        if energies[n] > energies[n - 1] + tol * scale
    )
    convex = tuple(
        (n, float(energies[n + 1] + energies[n - 1] - 2.0 * energies[n]))
        for n in range(1, d)
        if energies[n + 1] + energies[n - 1] - 2.0 * energies[n] < -tol * scale
    )
    return FockSpectrum(
        energies=energies, monotonicity_violations=mono, convexity_violations=convex
    )


def random_basis(rng: np.random.Generator, dim: int) -> OneBodyBasis:
    """Well-conditioned random test basis: jittered geometric exponents."""
    if dim < 1:
        raise ParameterError("dimension must be at least 1")
    z = float(rng.uniform(0.5, 4.0))
    base = 0.08 * 3.1 ** np.arange(dim)
    a = base * np.exp(rng.uniform(-0.25, 0.25, size=dim))
    return build_sgauss_basis(z, a)
