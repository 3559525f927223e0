"""Radial grid, quadrature and reduced one-body operators.

Spherically symmetric functions f(|x|) are sampled on a logarithmic
radial grid.  One-body operators act on reduced functions phi(r) = r*f(r)
with Dirichlet conditions at both grid ends, which turns -Laplace into a
symmetric tridiagonal matrix.  All integrals use trapezoidal quadrature
in log r, plus a small rectangle correction for the untabulated interval
[0, r_min].

Atomic units throughout: the kinetic operator is -Laplace with no 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import DomainError, ParameterError

__all__ = [
    "RadialGrid",
    "RadialField",
    "ReducedOperator",
    "make_log_grid",
    "field_from_function",
    "integrate_3d",
    "newton_potential",
    "reduced_laplacian",
    "multiplication_operator",
    "extremal_eigs",
]


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing positive radii with quadrature weights for
    integrals of the form int_0^infty g(r) dr.

    ``w`` integrates over [0, r_max]: trapezoid in log r on the tabulated
    points plus a constant-extrapolation rectangle on [0, r_min].  ``mass``
    holds the uniform-in-log cell widths used as the lumped mass of the
    reduced operators (no origin rectangle; reduced functions vanish at 0).
    """

    r: np.ndarray
    w: np.ndarray
    mass: np.ndarray
    log_step: float
    quad_check_error: float = field(default=0.0, compare=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if r.ndim != 1 or r.size < 2:
            raise ParameterError("grid needs at least 2 points")
        if not np.all(r > 0) or not np.all(np.diff(r) > 0):
            raise ParameterError("radii must be positive and strictly increasing")
        if not np.all(w > 0):
            raise ParameterError("quadrature weights must be positive")
        for arr in (self.r, self.w, self.mass):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.r.size

    @property
    def r_min(self) -> float:
        return float(self.r[0])

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    def descriptor(self) -> str:
        return f"log[{self.r_min:.3g},{self.r_max:.3g}] n={self.n}"

    def integrate(self, values: np.ndarray) -> float:
        """int_0^infty g(r) dr for samples g(r_i)."""
        return float(np.dot(self.w, values))


def make_log_grid(r_min: float, r_max: float, n: int) -> RadialGrid:
    """Logarithmically spaced grid on [r_min, r_max] with trapezoid weights.

    The first weight carries an extra ``r_min`` so that integrands bounded
    near the origin pick up the [0, r_min] contribution by constant
    extrapolation; for r^2-weighted (3D) integrals the correction is
    O(r_min^3) and harmless.
    """
    if not (0 < r_min < r_max):
        raise ParameterError(f"need 0 < r_min < r_max, got [{r_min}, {r_max}]")
    if n < 4:
        raise ParameterError(f"need n >= 4 grid points, got {n}")
    x = np.linspace(np.log(r_min), np.log(r_max), n)
    h = x[1] - x[0]
    r = np.exp(x)
    c = np.ones(n)
    c[0] = c[-1] = 0.5
    w = h * r * c
    w = w.copy()
    w[0] += r_min
    mass = 2.0 * np.sinh(0.5 * h) * r
    grid = RadialGrid(r=r, w=w, mass=mass, log_step=float(h))
    err = abs(grid.integrate(np.exp(-r)) - 1.0)
    object.__setattr__(grid, "quad_check_error", float(err))
    return grid


@dataclass(frozen=True)
class RadialField:
    """Samples f(r_i) of a spherically symmetric function f(|x|)."""

    grid: RadialGrid
    values: np.ndarray
    nonnegative: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ParameterError(
                f"field has {v.shape} values for a grid of size {self.grid.n}"
            )
        if self.nonnegative and np.any(v < -1e-13 * max(1.0, np.max(np.abs(v)))):
            raise DomainError("field tagged nonnegative has negative entries")
        object.__setattr__(self, "values", v)
        v.setflags(write=False)

    def __len__(self) -> int:
        return self.grid.n


def field_from_function(grid: RadialGrid, fn, nonnegative: bool = False) -> RadialField:
    return RadialField(grid, np.asarray(fn(grid.r), dtype=float), nonnegative=nonnegative)


def integrate_3d(f: RadialField, radial_power: int = 0) -> float:
    """int_R3 f(|x|) |x|^p dx = 4 pi sum_i w_i r_i^(2+p) f(r_i).

    Requires p >= -2 so that bounded f stays integrable at the origin.
    """
    if radial_power < -2:
        raise ParameterError(f"radial_power must be >= -2, got {radial_power}")
    r = f.grid.r
    return float(4.0 * np.pi * np.dot(f.grid.w, r ** (2 + radial_power) * f.values))


def _cumulative_integral(grid: RadialGrid, integrand: np.ndarray) -> np.ndarray:
    """Running integral int_{r_1}^{r_i} integrand dr at every node.

    Trapezoid in log coordinates with the Euler-Maclaurin endpoint
    correction -h^2/12 (g'(x_i) - g'(x_1)), which lifts the cumulative
    rule to fourth order for smooth integrands.
    """
    h = grid.log_step
    g = integrand * grid.r
    seg = 0.5 * h * (g[:-1] + g[1:])
    out = np.concatenate(([0.0], np.cumsum(seg)))
    gp = np.gradient(g, h)
    return out - (h * h / 12.0) * (gp - gp[0])


def newton_potential(rho: RadialField) -> RadialField:
    """Coulomb potential of a radial charge density.

    Phi(r) = M(r)/r + int_{|y|>r} rho/|y| dy with M(r) the charge enclosed
    in the ball of radius r; this is the shell decomposition
    (rho * 1/|x|)(x) = int rho(y)/max(|x|,|y|) dy.
    """
    if not rho.nonnegative and np.any(rho.values < 0):
        scale = max(1.0, float(np.max(np.abs(rho.values))))
        if np.min(rho.values) < -1e-12 * scale:
            raise DomainError("newton_potential needs a nonnegative density")
    grid = rho.grid
    r = grid.r
    vals = np.clip(rho.values, 0.0, None)

    # Constant extrapolation of rho onto [0, r_min] for the enclosed mass.
    enclosed = _cumulative_integral(grid, vals * r**2) + vals[0] * r[0] ** 3 / 3.0

    outer_cum = _cumulative_integral(grid, vals * r)
    outer = outer_cum[-1] - outer_cum

    phi = 4.0 * np.pi * (enclosed / r + outer)
    return RadialField(grid, phi)


@dataclass(frozen=True)
class ReducedOperator:
    """Symmetric operator on reduced radial functions phi = r*f.

    The matrix acts in the weighted representation psi_i =
    sqrt(4 pi m_i) phi_i, in which the Euclidean inner product equals the
    L2(R3) product of the underlying radial functions.  Multiplication
    operators are diagonal and identical in both representations.
    """

    grid: RadialGrid
    matrix: scipy.sparse.csr_matrix

    def __post_init__(self):
        m = self.matrix
        if m.shape != (self.grid.n, self.grid.n):
            raise ParameterError("operator shape does not match grid")

    @property
    def n(self) -> int:
        return self.grid.n

    def symmetry_defect(self) -> float:
        d = self.matrix - self.matrix.T
        return float(np.max(np.abs(d.data))) if d.nnz else 0.0

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply_reduced(self, phi: np.ndarray) -> np.ndarray:
        """Apply the operator to raw samples of phi = r*f."""
        s = np.sqrt(4.0 * np.pi * self.grid.mass)
        return (self.matrix @ (s * phi)) / s

    def __add__(self, other: "ReducedOperator") -> "ReducedOperator":
        return ReducedOperator(self.grid, (self.matrix + other.matrix).tocsr())

    def __sub__(self, other: "ReducedOperator") -> "ReducedOperator":
        return ReducedOperator(self.grid, (self.matrix - other.matrix).tocsr())

    def __matmul__(self, other: "ReducedOperator") -> "ReducedOperator":
        return ReducedOperator(self.grid, (self.matrix @ other.matrix).tocsr())

    def __mul__(self, scalar: float) -> "ReducedOperator":
        return ReducedOperator(self.grid, (self.matrix * float(scalar)).tocsr())

    __rmul__ = __mul__

    def __neg__(self) -> "ReducedOperator":
        return self * (-1.0)


def reduced_laplacian(grid: RadialGrid) -> ReducedOperator:
    """-d^2/dr^2 on phi = r*f with Dirichlet at both grid ends.

    Assembled as the piecewise-linear stiffness matrix, with ghost nodes
    extending the log spacing one step past each end where phi = 0, then
    symmetrized against the lumped mass:  A = M^(-1/2) K M^(-1/2).
    """
    r = grid.r
    n = grid.n
    h = grid.log_step
    dr = np.diff(r)
    dr_lo = r[0] - r[0] * np.exp(-h)   # ghost cell below r_min
    dr_hi = r[-1] * np.exp(h) - r[-1]  # ghost cell above r_max

    inv = 1.0 / dr
    diag = np.empty(n)
    diag[0] = 1.0 / dr_lo + inv[0]
    diag[1:-1] = inv[:-1] + inv[1:]
    diag[-1] = inv[-1] + 1.0 / dr_hi

    s = 1.0 / np.sqrt(grid.mass)
    main = diag * s * s
    off = -inv * s[:-1] * s[1:]
    mat = scipy.sparse.diags([off, main, off], offsets=[-1, 0, 1], format="csr")
    return ReducedOperator(grid, mat)


def multiplication_operator(g: RadialField) -> ReducedOperator:
    """Diagonal operator g(r_i); commutes with any other multiplication."""
    mat = scipy.sparse.diags([g.values], offsets=[0], format="csr")
    return ReducedOperator(g.grid, mat)


def _bandwidth(mat: scipy.sparse.spmatrix) -> int:
    coo = mat.tocoo()
    if coo.nnz == 0:
        return 0
    return int(np.max(np.abs(coo.row - coo.col)))


def extremal_eigs(
    mat: scipy.sparse.spmatrix | np.ndarray,
    k: int = 1,
    which: str = "smallest",
):
    """k extremal eigenpairs of a symmetric matrix, ascending order.

    Banded matrices (bandwidth <= 16) go through the direct banded solver;
    anything else falls back to dense for n <= 4000 and to Lanczos beyond.
    Returns (values, vectors) with vectors in columns.
    """
    if which not in ("smallest", "largest"):
        raise ParameterError(f"which must be 'smallest' or 'largest', got {which!r}")
    if isinstance(mat, np.ndarray):
        sp = scipy.sparse.csr_matrix(mat)
    else:
        sp = mat.tocsr()
    n = sp.shape[0]
    k = min(k, n)
    bw = _bandwidth(sp)
    if bw <= 16:
        # Upper banded storage: a_band[bw + i - j, j] = a[i, j] for i <= j.
        band = np.zeros((bw + 1, n))
        coo = sp.tocoo()
        for i, j, v in zip(coo.row, coo.col, coo.data):
            if i <= j:
                band[bw + i - j, j] = v
        idx = (0, k - 1) if which == "smallest" else (n - k, n - 1)
        vals, vecs = scipy.linalg.eig_banded(
            band, lower=False, select="i", select_range=idx
        )
        return vals, vecs
    if n <= 4000:
        dense = sp.toarray()
        idx = (0, k - 1) if which == "smallest" else (n - k, n - 1)
        vals, vecs = scipy.linalg.eigh(dense, subset_by_index=idx)
        return vals, vecs
    import scipy.sparse.linalg as spla

    sigma_kind = "SA" if which == "smallest" else "LA"
    vals, vecs = spla.eigsh(sp, k=k, which=sigma_kind)
    order = np.argsort(vals)
    return vals[order], vecs[:, order]
