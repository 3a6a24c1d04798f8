"""Structured 1D/2D grids with Dirichlet lifting and finite-difference operators.

Unknowns live on interior nodes ``x_i = i*h, i = 1..n`` of a box
``[0, L_0] x [0, L_1]``; the boundary layer of the padded lattice carries the
Dirichlet trace.  All operators are written in flux form over faces so that
summation by parts holds exactly for the pairing

    <f, g>_h = sum_i f_i g_i |cell|,      G(f, g) = sum_faces (D f)(D g) |cell|

i.e. ``-<div(w grad u), v>_h = G_w(u, v)`` whenever ``v`` has zero trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

# a trace is a constant or a callable (x, y, t) -> values
Trace = Union[float, Callable]


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform rectangular grid of interior nodes.

    Parameters
    ----------
    extent : tuple of float
        Box side lengths, one per axis.
    n : tuple of int
        Interior node count per axis (at least 3).
    """

    extent: tuple
    n: tuple

    def __post_init__(self):
        extent = tuple(float(e) for e in np.atleast_1d(self.extent))
        n = tuple(int(k) for k in np.atleast_1d(self.n))
        if len(extent) != len(n) or len(n) not in (1, 2):
            raise ValueError(f"need 1 or 2 axes with matching extent/n, got {extent}, {n}")
        if any(k < 3 for k in n):
            raise ValueError(f"at least 3 interior nodes per axis required, got {n}")
        if any(e <= 0 for e in extent):
            raise ValueError(f"extent must be positive, got {extent}")
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "n", n)

    @classmethod
    def uniform(cls, dim: int, extent: float, n: int) -> "Grid":
        return cls((extent,) * dim, (n,) * dim)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def spacing(self) -> tuple:
        return tuple(e / (k + 1) for e, k in zip(self.extent, self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def shape(self) -> tuple:
        return self.n

    @property
    def padded_shape(self) -> tuple:
        return tuple(k + 2 for k in self.n)

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def index(self, *lattice) -> int:
        """Flat index of interior lattice coordinates (1-based, as in ``x_i = i*h``)."""
        if len(lattice) != self.dim:
            raise ValueError("wrong number of lattice coordinates")
        zero_based = [i - 1 for i in lattice]
        for i, k in zip(zero_based, self.n):
            if not 0 <= i < k:
                raise IndexError(f"lattice coordinate {lattice} is not interior")
        return int(np.ravel_multi_index(zero_based, self.n))

    def lattice(self, flat: int) -> tuple:
        return tuple(int(i) + 1 for i in np.unravel_index(flat, self.n))

    @cached_property
    def padded_coords(self) -> tuple:
        axes = [np.linspace(0.0, e, k + 2) for e, k in zip(self.extent, self.n)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def coords(self) -> tuple:
        """Interior node coordinates, one array of shape ``self.shape`` per axis."""
        return tuple(c[self.interior] for c in self.padded_coords)

    @property
    def interior(self) -> tuple:
        return tuple(slice(1, -1) for _ in self.n)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.ones(self.padded_shape, dtype=bool)
        mask[self.interior] = False
        return mask

    def evaluate(self, func: Trace, t: float = 0.0, padded: bool = False) -> np.ndarray:
        """Sample a constant or space-time callable at (interior or padded) nodes."""
        coords = self.padded_coords if padded else self.coords
        shape = coords[0].shape
        if callable(func):
            x = coords[0]
            y = coords[1] if self.dim == 2 else 0.0
            vals = np.broadcast_to(np.asarray(func(x, y, t), dtype=float), shape)
            return np.array(vals, dtype=float)
        return np.full(shape, float(func))

    def pad(self, values: np.ndarray, trace: Trace, t: float = 0.0) -> np.ndarray:
        """Interior values plus Dirichlet trace, on the padded lattice."""
        values = np.asarray(values, dtype=float)
        if values.size != self.size:
            raise ValueError(f"expected {self.size} interior values, got {values.size}")
        out = np.empty(self.padded_shape)
        if callable(trace):
            full = self.evaluate(trace, t, padded=True)
            out[self.boundary_mask] = full[self.boundary_mask]
        else:
            out[self.boundary_mask] = float(trace)
        out[self.interior] = values.reshape(self.shape)
        return out

    # -- face-based operators on padded arrays ---------------------------------

    def _face_slices(self, axis: int):
        """Slices (left, right) selecting the two nodes of every face along ``axis``,
        restricted to interior lines of the other axes."""
        left, right = [], []
        for a in range(self.dim):
            if a == axis:
                left.append(slice(0, -1))
                right.append(slice(1, None))
            else:
                left.append(slice(1, -1))
                right.append(slice(1, -1))
        return tuple(left), tuple(right)

    def face_weights(self, w_padded: np.ndarray | None = None) -> tuple:
        """Arithmetic-mean face weights from nodal weights (``None`` means unit weights)."""
        out = []
        for a in range(self.dim):
            lo, hi = self._face_slices(a)
            if w_padded is None:
                shape = tuple(k + 1 if b == a else k for b, k in enumerate(self.n))
                out.append(np.ones(shape))
            else:
                out.append(0.5 * (w_padded[lo] + w_padded[hi]))
        return tuple(out)

    def face_gradients(self, u_padded: np.ndarray) -> tuple:
        out = []
        for a, h in enumerate(self.spacing):
            lo, hi = self._face_slices(a)
            out.append((u_padded[hi] - u_padded[lo]) / h)
        return tuple(out)

    def flux_divergence(self, faces_w: tuple, u_padded: np.ndarray) -> np.ndarray:
        """Interior values of div(w grad u), flattened."""
        out = np.zeros(self.shape)
        for a, (g, w, h) in enumerate(zip(self.face_gradients(u_padded), faces_w, self.spacing)):
            flux = w * g
            hi = [slice(None)] * self.dim
            lo = [slice(None)] * self.dim
            hi[a] = slice(1, None)
            lo[a] = slice(0, -1)
            out += (flux[tuple(hi)] - flux[tuple(lo)]) / h
        return out.ravel()

    def gradient_pairing(self, u_padded, v_padded, faces_w: tuple | None = None) -> float:
        """G_w(u, v) = sum over faces of w (Du)(Dv) |cell|."""
        total = 0.0
        gu = self.face_gradients(u_padded)
        gv = self.face_gradients(v_padded)
        for a in range(self.dim):
            prod = gu[a] * gv[a]
            if faces_w is not None:
                prod = faces_w[a] * prod
            total += float(np.sum(prod))
        return total * self.cell_volume

    def flux_matrix(self, faces_w: tuple) -> sp.csr_matrix:
        """Sparse matrix of div(w grad .) on interior unknowns with zero trace."""
        idx = np.arange(self.size).reshape(self.shape)
        rows, cols, vals = [], [], []
        diag = np.zeros(self.shape)
        for a, (w, h) in enumerate(zip(faces_w, self.spacing)):
            c = 1.0 / h**2
            # face k lies between padded nodes k and k+1 along axis a
            inner = [slice(None)] * self.dim
            inner[a] = slice(1, -1)
            w_in = w[tuple(inner)]
            lo = [slice(None)] * self.dim
            hi = [slice(None)] * self.dim
            lo[a] = slice(0, -1)
            hi[a] = slice(1, None)
            i_lo = idx[tuple(lo)].ravel()
            i_hi = idx[tuple(hi)].ravel()
            wv = c * w_in.ravel()
            rows += [i_lo, i_hi]
            cols += [i_hi, i_lo]
            vals += [wv, wv]
            left = [slice(None)] * self.dim
            right = [slice(None)] * self.dim
            left[a] = slice(0, -1)
            right[a] = slice(1, None)
            diag -= c * (w[tuple(left)] + w[tuple(right)])
        rows.append(idx.ravel())
        cols.append(idx.ravel())
        vals.append(diag.ravel())
        m = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.size, self.size),
        )
        return m.tocsr()

    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        return self.flux_matrix(self.face_weights())

    @cached_property
    def poincare_constant(self) -> float:
        """Discrete Poincaré constant C with ||f|| <= C ||grad f|| for zero-trace f.

        Smallest eigenvalue of -L by inverse power iteration.
        """
        return 1.0 / np.sqrt(smallest_eigenvalue(-self.laplacian_matrix))


def smallest_eigenvalue(a: sp.spmatrix, tol: float = 1e-12, max_iter: int = 500) -> float:
    """Smallest eigenvalue of a symmetric positive definite matrix (inverse power iteration)."""
    lu = spla.splu(sp.csc_matrix(a))
    rng = np.random.default_rng(0)
    v = rng.standard_normal(a.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = lu.solve(v)
        v_new = w / np.linalg.norm(w)
        lam_new = float(v_new @ (a @ v_new))
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new
        v, lam = v_new, lam_new
    return lam


@dataclass(eq=False)
class Field:
    """Values at interior nodes plus a Dirichlet trace."""

    grid: Grid
    values: np.ndarray
    boundary: Trace = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size != self.grid.size:
            raise ValueError(
                f"field has {self.values.size} values, grid has {self.grid.size} interior nodes"
            )

    def padded(self, t: float = 0.0) -> np.ndarray:
        return self.grid.pad(self.values, self.boundary, t)

    def with_values(self, values) -> "Field":
        return Field(self.grid, values, self.boundary)

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def _check(grid: Grid, *fields: Field):
    for f in fields:
        if f.grid is not grid and (f.grid.n != grid.n or f.grid.extent != grid.extent):
            raise ValueError("field lives on a different grid")


def laplacian(grid: Grid, f: Field, t: float = 0.0) -> np.ndarray:
    """Centered second-difference Laplacian at interior nodes, trace lifted at time ``t``."""
    _check(grid, f)
    return grid.flux_divergence(grid.face_weights(), f.padded(t))


def div_weighted_flux(grid: Grid, w: Field, a: Field, b: Field, eta: float, t: float = 0.0) -> np.ndarray:
    """div(w (grad a - eta grad b)) in conservative form with arithmetic-mean face weights."""
    _check(grid, w, a, b)
    wp = w.padded(t)
    if np.any(wp <= 0):
        raise ValueError("diffusivity weight must be positive at every node")
    u = a.padded(t) - eta * b.padded(t)
    return grid.flux_divergence(grid.face_weights(wp), u)


def gradient_sq_integral(grid: Grid, f: Field, t: float = 0.0) -> float:
    """Face-sum quadrature of the integral of |grad f|^2, boundary faces included."""
    _check(grid, f)
    p = f.padded(t)
    return grid.gradient_pairing(p, p)


def _vals(grid, f):
    if isinstance(f, Field):
        _check(grid, f)
        return f.values
    v = np.asarray(f, dtype=float).ravel()
    if v.size != grid.size:
        raise ValueError(f"expected {grid.size} values, got {v.size}")
    return v


def l2_inner(grid: Grid, f, g) -> float:
    """Midpoint-rule L2 pairing over interior nodes."""
    return float(np.dot(_vals(grid, f), _vals(grid, g))) * grid.cell_volume


def l2_norm(grid: Grid, f) -> float:
    return float(np.sqrt(l2_inner(grid, f, f)))
