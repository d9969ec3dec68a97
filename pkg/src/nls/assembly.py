"""Grid discretization of the weighted quadratic forms.

On a uniform cell-center grid over the box [-L, L]^d, each unordered
node pair (i, j) contributes 2 * W(x_i, x_j) * K(x_j - x_i) * h^d to the
quadratic form, where K is the second-moment-preserving mass of the dual
cell around z = x_j - x_i (see kernels.lattice_couplings; it reduces to
cell-center collocation of the density on interior cells at alpha = 1).
W is collocated at the node pair.  The self cell is dropped; its mass is
O(h^(2-alpha)) per node and vanishes under refinement.

In restricted mode constants are in the kernel of the form and row sums
vanish identically.  zero_extension mode adds the diagonal killing term
2 h^d int_{outside box} W(x_i, y) J(x_i, dy) per node, realized on the
extended lattice.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import kernels as _k
from .errors import BudgetExceeded, DimensionMismatch

BOUNDARY_MODES = ("restricted", "zero_extension")


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-center grid on [-L, L]^d with mesh width h < 1."""

    d: int
    L: float
    h: float
    boundary_mode: str = "restricted"

    def __post_init__(self):
        if self.boundary_mode not in BOUNDARY_MODES:
            raise ValueError(f"unknown boundary mode {self.boundary_mode!r}")
        if not (0 < self.h < 1):
            raise ValueError("mesh width must satisfy 0 < h < 1")
        m = 2.0 * self.L / self.h
        if abs(m - round(m)) > 1e-9 or round(m) < 1:
            raise ValueError("2L/h must be a positive integer")

    @property
    def m_side(self):
        return int(round(2.0 * self.L / self.h))

    @property
    def n(self):
        return self.m_side ** self.d

    def axis_centers(self):
        return -self.L + (np.arange(self.m_side) + 0.5) * self.h

    def nodes(self):
        """Cell centers, shape (n, d), C-order over the index grid."""
        ax = self.axis_centers()
        grids = np.meshgrid(*([ax] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def metadata(self):
        return {"d": self.d, "L": self.L, "h": self.h,
                "mode": self.boundary_mode}


@dataclass
class SparseForm:
    """Symmetric sparse matrix A with f^T A f ~ E(f, f) on the grid.

    Entries are stored once per unordered pair (lower triangle including
    the diagonal), which makes symmetry of the expanded matrix bit exact.
    """

    n: int
    rows: np.ndarray          # lower triangle, rows >= cols
    cols: np.ndarray
    vals: np.ndarray
    cell_volume: float
    metadata: dict
    grid: GridSpec | None = None
    _csr: sparse.csr_matrix | None = field(default=None, repr=False)

    @property
    def matrix(self):
        if self._csr is None:
            lower = sparse.coo_matrix(
                (self.vals, (self.rows, self.cols)), shape=(self.n, self.n))
            off = self.rows != self.cols
            upper = sparse.coo_matrix(
                (self.vals[off], (self.cols[off], self.rows[off])),
                shape=(self.n, self.n))
            self._csr = (lower + upper).tocsr()
        return self._csr

    @property
    def nnz(self):
        return len(self.vals)

    def norm_bound(self):
        """Gershgorin upper bound for the spectral norm."""
        m = self.matrix
        return float(np.max(np.abs(m).sum(axis=1)))

    def row_sums(self):
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def scaled(self, factor):
        return SparseForm(n=self.n, rows=self.rows, cols=self.cols,
                          vals=self.vals * factor, cell_volume=self.cell_volume,
                          metadata=dict(self.metadata), grid=self.grid)


def apply_form(form, f):
    """The quadratic form f^T A f; nonnegative up to rounding for PSD A."""
    f = np.asarray(f, dtype=float).ravel()
    if len(f) != form.n:
        raise DimensionMismatch(f"vector length {len(f)} != n = {form.n}")
    return float(f @ (form.matrix @ f))


def _multi_indices_for_offset(m_side, d, offset):
    """Linear indices (i, j) of all in-grid pairs with j = i + offset."""
    slices_i, slices_j = [], []
    for k in range(d):
        o = int(offset[k])
        if o >= 0:
            slices_i.append(np.arange(0, m_side - o))
        else:
            slices_i.append(np.arange(-o, m_side))
    grids = np.meshgrid(*slices_i, indexing="ij")
    idx_i = np.zeros(grids[0].size, dtype=np.int64)
    idx_j = np.zeros(grids[0].size, dtype=np.int64)
    stride = 1
    for k in reversed(range(d)):
        flat = grids[k].ravel()
        idx_i += flat * stride
        idx_j += (flat + int(offset[k])) * stride
        stride *= m_side
    return idx_i, idx_j


def _pair_count(m_side, d, offset):
    c = 1
    for k in range(d):
        c *= max(0, m_side - abs(int(offset[k])))
    return c


def _weight_on_pairs(X, idx_i, idx_j, dist, weight_fn):
    return weight_fn(X[idx_i], X[idx_j], dist)


def assemble_generic(grid, kernel, weight_fn, weight_id, drop_tol=1e-14,
                     workers=1, max_n=65536, max_nnz=20_000_000,
                     kill_range_factor=2.0):
    """Assemble the form matrix for any translation-invariant kernel.

    weight_fn(Xi, Xj, dist) -> array of W values; dist is the pair
    distance (constant per offset), letting the weight pick its
    short/long-range branch without re-deriving geometry.
    """
    if kernel.d != grid.d:
        raise DimensionMismatch("kernel and grid dimensions differ")
    n = grid.n
    if n > max_n:
        raise BudgetExceeded(f"n = {n} exceeds budget {max_n}")
    h, d, m_side = grid.h, grid.d, grid.m_side
    box_diam = 2.0 * grid.L * np.sqrt(d)
    offsets, kw = _k.lattice_couplings(kernel, h, r_cap=box_diam)
    if len(offsets) == 0:
        raise ValueError("kernel couples no grid nodes at this mesh width")
    kmax = float(np.max(kw))
    kept = kw >= drop_tol * kmax
    offsets, kw = offsets[kept], kw[kept]
    # unordered pairs: keep lexicographically positive offsets
    lex = np.zeros(len(offsets), dtype=bool)
    for k in range(d):
        col = offsets[:, k]
        undecided = ~lex & np.all(offsets[:, :k] == 0, axis=1)
        lex |= undecided & (col > 0)
    half_off = offsets[lex]
    half_kw = kw[lex]
    est_nnz = n + sum(_pair_count(m_side, d, o) for o in half_off)
    if est_nnz > max_nnz:
        raise BudgetExceeded(f"estimated nnz = {est_nnz} exceeds budget {max_nnz}")

    X = grid.nodes()
    hd = h ** d

    def do_offset(args):
        off, kwt = args
        idx_i, idx_j = _multi_indices_for_offset(m_side, d, off)
        dist = float(np.linalg.norm(off * h))
        wv = _weight_on_pairs(X, idx_i, idx_j, dist, weight_fn)
        coupling = 2.0 * wv * (kwt * hd)
        return idx_i, idx_j, coupling

    tasks = list(zip(half_off, half_kw))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(do_offset, tasks))
    else:
        results = [do_offset(t) for t in tasks]

    diag = np.zeros(n)
    rows_list, cols_list, vals_list = [], [], []
    for idx_i, idx_j, coupling in results:  # deterministic: offset order
        np.add.at(diag, idx_i, coupling)
        np.add.at(diag, idx_j, coupling)
        lo = np.maximum(idx_i, idx_j)
        hi = np.minimum(idx_i, idx_j)
        rows_list.append(lo)
        cols_list.append(hi)
        vals_list.append(-coupling)

    if grid.boundary_mode == "zero_extension":
        diag += _killing_diagonal(grid, kernel, weight_fn, offsets, kw,
                                  kill_range_factor)

    rows = np.concatenate([np.arange(n, dtype=np.int64)] + rows_list)
    cols = np.concatenate([np.arange(n, dtype=np.int64)] + cols_list)
    vals = np.concatenate([diag] + vals_list)
    meta = grid.metadata()
    meta.update({"kernel": kernel.label(), "weight": weight_id})
    return SparseForm(n=n, rows=rows, cols=cols, vals=vals,
                      cell_volume=hd, metadata=meta, grid=grid)


def _killing_diagonal(grid, kernel, weight_fn, offsets, kw, kill_range_factor):
    """2 h^d sum over lattice cells outside the box of W(x_i, y) K(cell).

    For full-range kernels the lattice extension is truncated at
    kill_range_factor times the box diameter (documented approximation;
    the term is nonnegative either way).
    """
    h, d, m_side, n = grid.h, grid.d, grid.m_side, grid.n
    X = grid.nodes()
    hd = h ** d
    if np.isinf(kernel.truncation):
        cap = kill_range_factor * 2.0 * grid.L * np.sqrt(d)
        offsets, kw = _k.lattice_couplings(kernel, h, r_cap=cap)
    diag = np.zeros(n)
    for off, kwt in zip(offsets, kw):
        idx_in, _ = _multi_indices_for_offset(m_side, d, off)
        mask = np.ones(n, dtype=bool)
        mask[idx_in] = False
        idx_out = np.nonzero(mask)[0]
        if len(idx_out) == 0:
            continue
        y = X[idx_out] + off * h
        dist = float(np.linalg.norm(off * h))
        wv = _weight_on_pairs(np.vstack([X[idx_out], y]),
                              np.arange(len(idx_out)),
                              np.arange(len(idx_out), 2 * len(idx_out)),
                              dist, weight_fn)
        diag[idx_out] += 2.0 * wv * (kwt * hd)
    return diag


def assemble_form(grid, kernel, weight, drop_tol=1e-14, workers=1,
                  max_n=65536, max_nnz=20_000_000):
    """Discretize E(f, f) = iint (f(x)-f(y))^2 W(x, y) J(x, dy) dx."""
    from .weights import eval_W_radii

    def weight_fn(Xi, Xj, dist):
        rx = np.linalg.norm(Xi, axis=1)
        ry = np.linalg.norm(Xj, axis=1)
        return eval_W_radii(rx, ry, dist < weight.cut_radius, weight)

    return assemble_generic(grid, kernel, weight_fn, weight.label(),
                            drop_tol=drop_tol, workers=workers,
                            max_n=max_n, max_nnz=max_nnz)


def assemble_levy_form(grid, nu, vlam, drop_tol=1e-14, workers=1,
                       max_n=65536, max_nnz=20_000_000):
    """Discretize the auxiliary form with W_lambda(x, y) = V(x) + V(y).

    The jump measure is the reference nu itself (finite range by
    construction); singular variants couple nodes along their atom
    directions only.
    """
    kernel = _k.JumpKernelSpec(nu, truncation=1.0)

    def weight_fn(Xi, Xj, dist):
        rx = np.linalg.norm(Xi, axis=1)
        ry = np.linalg.norm(Xj, axis=1)
        return vlam.w_lambda(rx, ry)

    wid = f"Vlambda[lam={vlam.lam:g},R0={vlam.R0:g}]"
    return assemble_generic(grid, kernel, weight_fn, wid, drop_tol=drop_tol,
                            workers=workers, max_n=max_n, max_nnz=max_nnz)


# ----------------------------------------------------------------------
# Matrix Market export / import
# ----------------------------------------------------------------------

def export_matrix(form, path):
    """Write symmetric coordinate Matrix Market, lower triangle, 1-based.

    The header comment embeds the assembly metadata as a JSON line, so a
    file is self-describing.
    """
    order = np.lexsort((form.cols, form.rows))
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        fh.write("%nls " + json.dumps(form.metadata, sort_keys=True) + "\n")
        fh.write(f"{form.n} {form.n} {form.nnz}\n")
        for i in order:
            fh.write(f"{form.rows[i] + 1} {form.cols[i] + 1} "
                     f"{form.vals[i]:.17g}\n")


def import_matrix(path):
    """Read a file written by export_matrix back into a SparseForm."""
    with open(path) as fh:
        header = fh.readline()
        if "coordinate real symmetric" not in header:
            raise ValueError("not a symmetric coordinate MatrixMarket file")
        meta = {}
        line = fh.readline()
        while line.startswith("%"):
            if line.startswith("%nls "):
                meta = json.loads(line[5:])
            line = fh.readline()
        n, n2, nnz = (int(t) for t in line.split())
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        for k in range(nnz):
            i, j, v = fh.readline().split()
            rows[k], cols[k], vals[k] = int(i) - 1, int(j) - 1, float(v)
    cv = meta.get("h", 1.0) ** meta.get("d", 1) if meta else 1.0
    return SparseForm(n=n, rows=rows, cols=cols, vals=vals,
                      cell_volume=cv, metadata=meta, grid=None)
