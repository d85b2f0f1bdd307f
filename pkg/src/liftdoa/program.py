"""Translation of the lifted recovery problem into a real standard-form SOCP.

The solved problem is: minimize the two-layer group norm of the lifted
matrix subject to a data-fit ball of radius eta,

    min  q
    s.t. Phi vec(Xt) - vec(Y^T) = z,   ||z||_2 <= eta
         ||Xt_{:,k}||_2 <= v_k                       (per lifted column)
         sqrt(sum_j ||Xt_{:,i+jN}||^2) <= b_i,  1^T b <= q   (per grid bin)
         v >= 0,   v_p-block <= r * v_s-block         (off-grid coupling)

in the conic form ``A x + s = b_eq`` with s in zero x nonneg x SOC cones.
Complex quantities enter as interleaved (re, im) pairs -- a complex cone of
dimension n becomes a real second-order cone of dimension 2n + 1.  The
variable vector is [Xt reals | v | b | q | z reals]; row order is the zero
cone (data equalities), the orthant, then the residual / column / group
second-order cones.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.stats import chi2

__all__ = ["VariableMap", "ConicProgram", "build_program", "select_eta",
           "extract_lifted", "pack_feasible_point", "cone_violations",
           "dump_program", "load_program"]

MAX_VARIABLES = 5_000_000


@dataclass(frozen=True)
class VariableMap:
    """Slices locating each named block inside the real variable vector."""

    xt: slice
    v: slice
    b: slice
    q: slice
    z: slice

    @property
    def total(self):
        return self.z.stop


@dataclass(frozen=True)
class ConicProgram:
    """Real standard-form conic program: min c.x s.t. A_eq x + s = b_eq, s in cones."""

    c: np.ndarray
    A_eq: sp.csc_matrix
    b_eq: np.ndarray
    cones: tuple          # ordered (kind, dim) pairs covering all rows
    var_map: VariableMap
    eta: float = np.nan
    radius: float = np.nan
    dims: dict = None     # M, m, N, L, block_width
    data_norm: float = np.nan  # ||Y||_F of the observations the program encodes

    def __post_init__(self):
        total = sum(d for _, d in self.cones)
        if total != self.b_eq.size:
            raise ValueError("cone dimensions must sum to the slack dimension")

    @property
    def zero_candidate_feasible(self):
        """True when the all-zero lifted matrix is feasible (eta >= ||Y||_F)."""
        return bool(self.eta >= self.data_norm)


def select_eta(noise_variance, num_sensors, num_snapshots, confidence=0.95):
    """Radius such that P(||noise||_F <= eta) = confidence.

    The squared Frobenius norm of the M x L complex Gaussian noise is a sum
    of 2ML real squares of variance sigma^2/2, i.e. (sigma^2/2) chi2_{2ML}.
    """
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie strictly between 0 and 1")
    if noise_variance < 0:
        raise ValueError("noise variance must be nonnegative")
    dof = 2 * num_sensors * num_snapshots
    return float(np.sqrt(noise_variance / 2.0 * chi2.ppf(confidence, dof)))


def _interleave(values):
    """Complex vector -> interleaved (re, im) real vector."""
    out = np.empty(2 * values.size)
    out[0::2] = values.real
    out[1::2] = values.imag
    return out


def _complex_rows_to_real(matrix):
    """Complex sparse matrix -> real matrix on interleaved rows and columns."""
    coo = matrix.tocoo()
    re, im = coo.data.real, coo.data.imag
    rows = np.concatenate([2 * coo.row, 2 * coo.row, 2 * coo.row + 1, 2 * coo.row + 1])
    cols = np.concatenate([2 * coo.col, 2 * coo.col + 1, 2 * coo.col, 2 * coo.col + 1])
    vals = np.concatenate([re, -im, im, re])
    return sp.coo_matrix((vals, (rows, cols)),
                         shape=(2 * matrix.shape[0], 2 * matrix.shape[1]))


def build_program(op, snapshots, eta, radius):
    """Build the recovery SOCP for a lifted operator and observed snapshots.

    ``radius`` is the grid half-interval in radians (the bound on the
    off-grid offsets); it only enters through the v-coupling rows, which are
    omitted for an on-grid (steering-only) operator.  The program is feasible
    for any eta > 0; the zero candidate Xt = 0 is feasible iff
    eta >= ||Y||_F.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if radius <= 0:
        raise ValueError("radius must be positive")
    y = np.asarray(snapshots.observations if hasattr(snapshots, "observations")
                   else snapshots, dtype=complex)
    n_sens, n_snap = op.observation_shape
    if y.shape != (n_sens, n_snap):
        raise ValueError(f"observations must have shape {(n_sens, n_snap)}")
    m = op.num_coeffs
    n_bins = op.num_bins
    width = op.block_width
    n_cols = n_snap * width            # lifted columns (complex)
    n_blocks = n_cols // n_bins        # column blocks of width N
    n_xt = 2 * m * n_cols
    n_z = 2 * n_sens * n_snap

    var_map = VariableMap(
        xt=slice(0, n_xt),
        v=slice(n_xt, n_xt + n_cols),
        b=slice(n_xt + n_cols, n_xt + n_cols + n_bins),
        q=slice(n_xt + n_cols + n_bins, n_xt + n_cols + n_bins + 1),
        z=slice(n_xt + n_cols + n_bins + 1, n_xt + n_cols + n_bins + 1 + n_z))
    n = var_map.total
    if n > MAX_VARIABLES:
        raise ValueError(f"program would have {n} variables (limit {MAX_VARIABLES})")

    def xt_real_index(col, row):
        return 2 * (col * m + row)

    rows, cols, vals, rhs, cones = [], [], [], [], []
    row_at = 0

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    # zero cone: Phi vec(Xt) - z = vec(Y^T), interleaved reals
    phi_real = _complex_rows_to_real(op.matrix_sparse())
    coo = phi_real.tocoo()
    rows.extend(coo.row)
    cols.extend(coo.col)
    vals.extend(coo.data)
    for t in range(n_z):
        add(t, var_map.z.start + t, -1.0)
    rhs.extend(_interleave(y.reshape(-1)))  # row-major: sensor-major snapshot order
    cones.append(("zero", n_z))
    row_at = n_z

    # orthant: v >= 0, off-grid coupling, 1^T b <= q
    for k in range(n_cols):
        add(row_at, var_map.v.start + k, -1.0)
        rhs.append(0.0)
        row_at += 1
    n_orth = n_cols
    if op.off_grid:
        for l in range(n_snap):
            for i in range(n_bins):
                add(row_at, var_map.v.start + l * width + i, -radius)
                add(row_at, var_map.v.start + l * width + n_bins + i, 1.0)
                rhs.append(0.0)
                row_at += 1
        n_orth += n_snap * n_bins
    for i in range(n_bins):
        add(row_at, var_map.b.start + i, 1.0)
    add(row_at, var_map.q.start, -1.0)
    rhs.append(0.0)
    row_at += 1
    n_orth += 1
    cones.append(("nonneg", n_orth))

    # residual cone ||z|| <= eta
    rhs.append(float(eta))
    row_at += 1
    for t in range(n_z):
        add(row_at, var_map.z.start + t, -1.0)
        rhs.append(0.0)
        row_at += 1
    cones.append(("soc", n_z + 1))

    # column cones ||Xt_{:,k}|| <= v_k
    for k in range(n_cols):
        add(row_at, var_map.v.start + k, -1.0)
        rhs.append(0.0)
        row_at += 1
        for a in range(m):
            for part in range(2):
                add(row_at, xt_real_index(k, a) + part, -1.0)
                rhs.append(0.0)
                row_at += 1
        cones.append(("soc", 2 * m + 1))

    # group cones sqrt(sum_j v_{i+jN}^2) <= b_i.  Binding the groups through v
    # rather than the raw matrix columns keeps the column norms tied to the
    # objective, so the off-grid coupling rows above actually constrain the
    # derivative blocks; with equality in the column cones the two coincide.
    for i in range(n_bins):
        add(row_at, var_map.b.start + i, -1.0)
        rhs.append(0.0)
        row_at += 1
        for j in range(n_blocks):
            add(row_at, var_map.v.start + j * n_bins + i, -1.0)
            rhs.append(0.0)
            row_at += 1
        cones.append(("soc", n_blocks + 1))

    c = np.zeros(n)
    c[var_map.q.start] = 1.0
    a_eq = sp.coo_matrix((vals, (rows, cols)), shape=(row_at, n)).tocsc()
    dims = {"num_sensors": n_sens, "num_coeffs": m, "num_bins": n_bins,
            "num_snapshots": n_snap, "block_width": width}
    return ConicProgram(c=c, A_eq=a_eq, b_eq=np.asarray(rhs), cones=tuple(cones),
                        var_map=var_map, eta=float(eta), radius=float(radius),
                        dims=dims, data_norm=float(np.linalg.norm(y)))


def extract_lifted(program, primal):
    """Recover the complex lifted matrix from a primal solution vector."""
    d = program.dims
    reals = np.asarray(primal)[program.var_map.xt]
    comp = reals[0::2] + 1j * reals[1::2]
    n_cols = d["num_snapshots"] * d["block_width"]
    return comp.reshape(n_cols, d["num_coeffs"]).T


def pack_feasible_point(program, op, observations, xt, margin=0.0):
    """Map a lifted matrix (plus implied auxiliaries) to a program point.

    ``v``/``b``/``q`` are set to the tight values implied by ``xt`` plus
    ``margin``; ``z`` to the actual data residual.  Used to cross-check the
    constraint encoding against direct evaluation of the model.
    """
    d = program.dims
    x = np.zeros(program.var_map.total)
    x[program.var_map.xt] = _interleave(np.asarray(xt, dtype=complex).T.reshape(-1))
    col_norms = np.linalg.norm(xt, axis=0)
    v = col_norms + margin
    x[program.var_map.v] = v
    groups = np.sqrt(np.sum(v.reshape(-1, d["num_bins"]) ** 2, axis=0))
    x[program.var_map.b] = groups + margin
    x[program.var_map.q.start] = np.sum(groups + margin) + margin
    resid = op.apply_forward(xt) - np.asarray(observations, dtype=complex)
    x[program.var_map.z] = _interleave(resid.reshape(-1))
    return x


def cone_violations(program, x):
    """Worst constraint violation per cone kind for slack s = b_eq - A x."""
    s = program.b_eq - program.A_eq @ x
    worst = {"zero": 0.0, "nonneg": 0.0, "soc": 0.0}
    at = 0
    for kind, dim in program.cones:
        blk = s[at: at + dim]
        if kind == "zero":
            worst["zero"] = max(worst["zero"], float(np.max(np.abs(blk), initial=0.0)))
        elif kind == "nonneg":
            worst["nonneg"] = max(worst["nonneg"], float(max(0.0, -np.min(blk, initial=0.0))))
        else:
            worst["soc"] = max(worst["soc"], float(np.linalg.norm(blk[1:]) - blk[0]))
        at += dim
    return worst


def dump_program(program, path):
    """Write the plain-text conic-program format (see module docstring of
    the loader for the layout: header, objective, rhs, matrix triplets,
    cone list, variable map)."""
    coo = program.A_eq.tocoo()
    with open(path, "w") as fh:
        fh.write("liftdoa-socp 1\n")
        fh.write(f"vars {program.c.size}\n")
        fh.write(f"rows {program.b_eq.size}\n")
        fh.write(f"eta {program.eta!r}\n")
        fh.write(f"radius {program.radius!r}\n")
        vm = program.var_map
        fh.write("varmap " + " ".join(
            f"{name} {sl.start} {sl.stop}"
            for name, sl in (("xt", vm.xt), ("v", vm.v), ("b", vm.b),
                             ("q", vm.q), ("z", vm.z))) + "\n")
        nz = np.nonzero(program.c)[0]
        fh.write(f"objective {nz.size}\n")
        for i in nz:
            fh.write(f"{i} {float(program.c[i])!r}\n")
        nz = np.nonzero(program.b_eq)[0]
        fh.write(f"rhs {nz.size}\n")
        for i in nz:
            fh.write(f"{i} {float(program.b_eq[i])!r}\n")
        fh.write(f"matrix {coo.nnz}\n")
        for r, cidx, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {cidx} {float(v)!r}\n")
        fh.write(f"cones {len(program.cones)}\n")
        for kind, dim in program.cones:
            fh.write(f"{kind} {dim}\n")
        fh.write("end\n")


def load_program(path):
    """Read a program written by :func:`dump_program`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    it = iter(lines)
    if next(it).split() != ["liftdoa-socp", "1"]:
        raise ValueError("not a liftdoa conic-program file")
    n = int(next(it).split()[1])
    m_rows = int(next(it).split()[1])
    eta = float(next(it).split()[1])
    radius = float(next(it).split()[1])
    vm_tok = next(it).split()[1:]
    slices = {vm_tok[i]: slice(int(vm_tok[i + 1]), int(vm_tok[i + 2]))
              for i in range(0, len(vm_tok), 3)}
    var_map = VariableMap(**slices)
    c = np.zeros(n)
    for _ in range(int(next(it).split()[1])):
        i, v = next(it).split()
        c[int(i)] = float(v)
    b = np.zeros(m_rows)
    for _ in range(int(next(it).split()[1])):
        i, v = next(it).split()
        b[int(i)] = float(v)
    nnz = int(next(it).split()[1])
    rows = np.empty(nnz, dtype=int)
    cols = np.empty(nnz, dtype=int)
    vals = np.empty(nnz)
    for k in range(nnz):
        r, cidx, v = next(it).split()
        rows[k], cols[k], vals[k] = int(r), int(cidx), float(v)
    cones = []
    for _ in range(int(next(it).split()[1])):
        kind, dim = next(it).split()
        cones.append((kind, int(dim)))
    if next(it) != "end":
        raise ValueError("truncated conic-program file")
    a_eq = sp.coo_matrix((vals, (rows, cols)), shape=(m_rows, n)).tocsc()
    return ConicProgram(c=c, A_eq=a_eq, b_eq=b, cones=tuple(cones),
                        var_map=var_map, eta=eta, radius=radius, dims=None)
