"""Primal-dual interior-point solver for second-order cone programs.

Solves the conic standard form

    minimize    c^T x
    subject to  A x + s = b,    s in K,

where K is an ordered product of zero cones (equality rows), nonnegative
orthants, and second-order cones.  The method is a homogeneous self-dual
embedding with Nesterov-Todd scaling and a Mehrotra-style
predictor-corrector, so it needs no feasible start and produces
infeasibility certificates.

Per iteration one symmetric quasi-definite KKT system is factorized.  Each
second-order cone's scaling block W^2 = eta^2 (I + 2 w w^T - 2 e0 e0^T) is
kept sparse by expanding its two rank-one terms into a pair of extra
rows/columns per cone, which keeps fill-in low under a symmetric
minimum-degree ordering.  A small static regularization on the KKT diagonal
(removed again by iterative refinement) survives rank-deficient equality
blocks.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = ["SolverSettings", "ConicSolution", "solve", "project_soc"]

_KINDS = ("zero", "nonneg", "soc")


@dataclass(frozen=True)
class SolverSettings:
    feas_tol: float = 1e-7
    gap_tol: float = 1e-7
    max_iters: int = 100
    step_fraction: float = 0.99
    kkt_reg: float = 1e-8
    refine_steps: int = 2
    dense_threshold: int = 800
    log_path: str = None

    def __post_init__(self):
        if self.feas_tol <= 0 or self.gap_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 < self.step_fraction < 1:
            raise ValueError("step_fraction must lie in (0, 1)")


@dataclass
class ConicSolution:
    primal: np.ndarray
    dual: np.ndarray
    slacks: np.ndarray
    status: str
    primal_residual: float
    dual_residual: float
    duality_gap: float
    iterations: int
    primal_objective: float = np.nan
    dual_objective: float = np.nan
    detail: str = ""
    log: list = field(default_factory=list)


def project_soc(point):
    """Euclidean projection onto the second-order cone {(t, u): ||u|| <= t}."""
    point = np.asarray(point, dtype=float)
    if point.size < 1:
        raise ValueError("point must have at least one entry")
    t, u = point[0], point[1:]
    nu = np.linalg.norm(u)
    if nu <= t:
        return point.copy()
    if nu <= -t:
        return np.zeros_like(point)
    out = np.empty_like(point)
    scale = (t + nu) / 2.0
    out[0] = scale
    out[1:] = scale * u / nu
    return out


class _Cones:
    """Row layout of the cone product, with second-order cones batched by size."""

    def __init__(self, cones, m_rows):
        zero_idx, nonneg_idx = [], []
        soc_by_dim = {}
        soc_starts = []
        offset = 0
        for kind, dim in cones:
            if kind not in _KINDS:
                raise ValueError(f"unknown cone kind '{kind}'")
            if dim < 1:
                raise ValueError("cone dimensions must be positive")
            if kind == "zero":
                zero_idx.extend(range(offset, offset + dim))
            elif kind == "nonneg":
                nonneg_idx.extend(range(offset, offset + dim))
            else:
                if dim < 2:
                    raise ValueError("second-order cones need dimension >= 2")
                soc_by_dim.setdefault(dim, []).append(offset)
                soc_starts.append(offset)
            offset += dim
        if offset != m_rows:
            raise ValueError("cone dimensions must sum to the row count")
        self.m = m_rows
        self.zero = np.asarray(zero_idx, dtype=int)
        self.nonneg = np.asarray(nonneg_idx, dtype=int)
        # one (count, dim) index matrix per distinct cone size
        self.soc_batches = []
        for dim in sorted(soc_by_dim):
            starts = np.asarray(soc_by_dim[dim], dtype=int)
            self.soc_batches.append(starts[:, None] + np.arange(dim)[None, :])
        self.num_soc = len(soc_starts)
        self.degree = len(nonneg_idx) + self.num_soc
        # expansion column order: batches in ascending dim, rows ascending
        self.soc_order = np.concatenate(
            [b[:, 0] for b in self.soc_batches]) if self.num_soc else np.empty(0, int)

    def identity(self):
        e = np.zeros(self.m)
        e[self.nonneg] = 1.0
        for idx in self.soc_batches:
            e[idx[:, 0]] = 1.0
        return e

    def margin(self, v):
        """Distance of v to the boundary of the proper-cone product (min over blocks)."""
        vals = [np.inf]
        if self.nonneg.size:
            vals.append(np.min(v[self.nonneg]))
        for idx in self.soc_batches:
            blk = v[idx]
            vals.append(np.min(blk[:, 0] - np.linalg.norm(blk[:, 1:], axis=1)))
        return min(vals)

    def inside(self, v, tol=0.0):
        return self.margin(v) > tol


def _soc_jdot(blk):
    return blk[:, 0] ** 2 - np.sum(blk[:, 1:] ** 2, axis=1)


class _Scaling:
    """Nesterov-Todd scaling state for one iterate (s, y)."""

    def __init__(self, cones, s, y):
        self.cones = cones
        self.w_nonneg = None
        self.lam = np.zeros(cones.m)
        if cones.nonneg.size:
            sn, yn = s[cones.nonneg], y[cones.nonneg]
            if np.any(sn <= 0) or np.any(yn <= 0):
                raise FloatingPointError("orthant iterate left the interior")
            self.w_nonneg = np.sqrt(sn / yn)
            self.lam[cones.nonneg] = np.sqrt(sn * yn)
        self.soc = []  # per batch: dict(eta, wbar, vhalf)
        for idx in cones.soc_batches:
            sb, yb = s[idx], y[idx]
            sj, yj = _soc_jdot(sb), _soc_jdot(yb)
            if np.any(sj <= 0) or np.any(sb[:, 0] <= 0) or np.any(yj <= 0) or np.any(yb[:, 0] <= 0):
                raise FloatingPointError("cone iterate left the interior")
            sbar = sb / np.sqrt(sj)[:, None]
            ybar = yb / np.sqrt(yj)[:, None]
            gamma = np.sqrt((1.0 + np.sum(sbar * ybar, axis=1)) / 2.0)
            jybar = ybar.copy()
            jybar[:, 1:] *= -1.0
            wbar = (sbar + jybar) / (2.0 * gamma[:, None])
            eta = (sj / yj) ** 0.25
            # Jordan square root of wbar: W = eta (2 v v^T - J) needs the half
            # point v, while W^2 = eta^2 (2 wbar wbar^T - J) uses wbar itself
            vhalf = wbar.copy()
            vhalf[:, 0] += 1.0
            vhalf /= np.sqrt(2.0 * vhalf[:, :1])
            lam_b = self._w_mult_batch(eta, vhalf, yb)
            self.soc.append({"eta": eta, "wbar": wbar, "vhalf": vhalf})
            self.lam[idx] = lam_b

    @staticmethod
    def _w_mult_batch(eta, wbar, v):
        jv = v.copy()
        jv[:, 1:] *= -1.0
        return eta[:, None] * (2.0 * wbar * np.sum(wbar * v, axis=1)[:, None] - jv)

    @staticmethod
    def _w_inv_mult_batch(eta, wbar, v):
        jw = wbar.copy()
        jw[:, 1:] *= -1.0
        jv = v.copy()
        jv[:, 1:] *= -1.0
        return (2.0 * jw * np.sum(jw * v, axis=1)[:, None] - jv) / eta[:, None]

    def w_mult(self, v):
        """W v on proper-cone rows; zero elsewhere."""
        out = np.zeros(self.cones.m)
        if self.w_nonneg is not None:
            out[self.cones.nonneg] = self.w_nonneg * v[self.cones.nonneg]
        for idx, st in zip(self.cones.soc_batches, self.soc):
            out[idx] = self._w_mult_batch(st["eta"], st["vhalf"], v[idx])
        return out

    def w_inv_mult(self, v):
        out = np.zeros(self.cones.m)
        if self.w_nonneg is not None:
            out[self.cones.nonneg] = v[self.cones.nonneg] / self.w_nonneg
        for idx, st in zip(self.cones.soc_batches, self.soc):
            out[idx] = self._w_inv_mult_batch(st["eta"], st["vhalf"], v[idx])
        return out

    def h_mult(self, v):
        """W^2 v (zero on zero-cone rows); used for refinement residuals."""
        out = np.zeros(self.cones.m)
        if self.w_nonneg is not None:
            out[self.cones.nonneg] = self.w_nonneg ** 2 * v[self.cones.nonneg]
        for idx, st in zip(self.cones.soc_batches, self.soc):
            blk = v[idx]
            wb = st["wbar"]
            hv = blk + 2.0 * wb * np.sum(wb * blk, axis=1)[:, None]
            hv[:, 0] -= 2.0 * blk[:, 0]
            out[idx] = st["eta"][:, None] ** 2 * hv
        return out

    def lam_sq(self):
        out = np.zeros(self.cones.m)
        if self.w_nonneg is not None:
            out[self.cones.nonneg] = self.lam[self.cones.nonneg] ** 2
        for idx in self.cones.soc_batches:
            lb = self.lam[idx]
            out[idx[:, 0]] = np.sum(lb * lb, axis=1)
            out[idx[:, 1:]] = 2.0 * lb[:, :1] * lb[:, 1:]
        return out

    def jordan_mul(self, a, b):
        out = np.zeros(self.cones.m)
        if self.cones.nonneg.size:
            out[self.cones.nonneg] = a[self.cones.nonneg] * b[self.cones.nonneg]
        for idx in self.cones.soc_batches:
            ab, bb = a[idx], b[idx]
            out[idx[:, 0]] = np.sum(ab * bb, axis=1)
            out[idx[:, 1:]] = ab[:, :1] * bb[:, 1:] + bb[:, :1] * ab[:, 1:]
        return out

    def lam_div(self, d):
        """Solve lambda o u = d for u on the proper cones."""
        out = np.zeros(self.cones.m)
        if self.cones.nonneg.size:
            out[self.cones.nonneg] = d[self.cones.nonneg] / self.lam[self.cones.nonneg]
        for idx in self.cones.soc_batches:
            lb, db = self.lam[idx], d[idx]
            det = _soc_jdot(lb)
            u0 = (lb[:, 0] * db[:, 0] - np.sum(lb[:, 1:] * db[:, 1:], axis=1)) / det
            out[idx[:, 0]] = u0
            out[idx[:, 1:]] = (db[:, 1:] - u0[:, None] * lb[:, 1:]) / lb[:, :1]
        return out

    def mu(self, s, y, tau, kappa):
        return (float(s @ y) + tau * kappa) / (self.cones.degree + 1)


def _step_quadratic(a, b, c):
    """Vectorized largest feasible step for c + b*t + a*t^2 >= 0 given c > 0."""
    out = np.full(a.shape, np.inf)
    disc = b * b - 4.0 * a * c
    crosses = ~((a >= 0) & (b >= 0)) & (disc >= 0)
    if np.any(crosses):
        denom = -b[crosses] + np.sqrt(disc[crosses])
        with np.errstate(divide="ignore"):
            out[crosses] = np.where(denom > 0, 2.0 * c[crosses] / denom, np.inf)
    return out


def _max_step(cones, v, dv):
    """sup {alpha : v + alpha dv stays in the proper-cone product}."""
    alpha = np.inf
    if cones.nonneg.size:
        vn, dn = v[cones.nonneg], dv[cones.nonneg]
        neg = dn < 0
        if np.any(neg):
            alpha = min(alpha, float(np.min(-vn[neg] / dn[neg])))
    for idx in cones.soc_batches:
        p, d = v[idx], dv[idx]
        a = d[:, 0] ** 2 - np.sum(d[:, 1:] ** 2, axis=1)
        b = 2.0 * (p[:, 0] * d[:, 0] - np.sum(p[:, 1:] * d[:, 1:], axis=1))
        c = _soc_jdot(p)
        steps = _step_quadratic(a, b, c)
        if steps.size:
            alpha = min(alpha, float(np.min(steps)))
    return alpha


class _KKT:
    """Factorization of the expanded quasi-definite KKT system.

        [ delta I   A^T        0        0   ] [dx]   [r1]
        [ A         -D-delta   U        V   ] [dy] = [r2]
        [ 0         U^T        I        0   ] [..]   [0 ]
        [ 0         V^T        0       -I   ] [..]   [0 ]

    with D diagonal (scaling values per row) and one (U, V) column pair per
    second-order cone carrying its rank-one terms.  Eliminating the
    expansion variables reproduces A, -(W^2) on the original blocks.
    """

    def __init__(self, a_csc, cones, settings):
        self.cones = cones
        self.settings = settings
        self.n = a_csc.shape[1]
        self.m = a_csc.shape[0]
        self.dim = self.n + self.m + 2 * cones.num_soc
        a_coo = a_csc.tocoo()
        rows = [np.arange(self.n), a_coo.col, a_coo.row + self.n]
        cols = [np.arange(self.n), a_coo.row + self.n, a_coo.col]
        fixed_vals = [np.full(self.n, settings.kkt_reg), a_coo.data, a_coo.data]
        ptr = self.n * 1 + 2 * a_coo.nnz

        # diagonal of the (2,2) block, one entry per row
        diag_idx = np.arange(self.m) + self.n
        rows.append(diag_idx)
        cols.append(diag_idx)
        fixed_vals.append(np.zeros(self.m))
        self._diag_at = ptr + np.arange(self.m)
        ptr += self.m

        # expansion columns: U (dense per cone) then V (single entry per cone)
        self._u_at, self._v_at = [], []
        col0 = self.n + self.m
        ci = 0
        for idx in cones.soc_batches:
            cnt, d = idx.shape
            ucols = np.repeat(col0 + ci + np.arange(cnt), d)
            urows = idx.ravel() + self.n
            rows.extend([urows, ucols])
            cols.extend([ucols, urows])
            fixed_vals.extend([np.zeros(cnt * d), np.zeros(cnt * d)])
            self._u_at.append((ptr, cnt, d))
            ptr += 2 * cnt * d
            vcols = col0 + cones.num_soc + ci + np.arange(cnt)
            vrows = idx[:, 0] + self.n
            rows.extend([vrows, vcols])
            cols.extend([vcols, vrows])
            fixed_vals.extend([np.zeros(cnt), np.zeros(cnt)])
            self._v_at.append((ptr, cnt))
            ptr += 2 * cnt
            ci += cnt
        rows.append(col0 + np.arange(cones.num_soc))
        cols.append(col0 + np.arange(cones.num_soc))
        fixed_vals.append(np.ones(cones.num_soc))
        ptr += cones.num_soc
        rows.append(col0 + cones.num_soc + np.arange(cones.num_soc))
        cols.append(col0 + cones.num_soc + np.arange(cones.num_soc))
        fixed_vals.append(-np.ones(cones.num_soc))
        ptr += cones.num_soc

        self._rows = np.concatenate(rows)
        self._cols = np.concatenate(cols)
        self._vals = np.concatenate(fixed_vals)
        self._reg_mask = np.zeros(self._vals.size, dtype=bool)
        self._reg_mask[: self.n] = True
        self._reg_sign = np.ones(self.n)
        self._lu = None
        self._k0 = None

    def factor(self, scaling, identity_init=False, reg=None):
        """Refresh scaling-dependent values and factorize; True on success."""
        reg = self.settings.kkt_reg if reg is None else reg
        vals = self._vals
        cones = self.cones
        diag = np.zeros(self.m)
        if identity_init:
            diag[cones.nonneg] = 1.0
            for idx in cones.soc_batches:
                diag[idx.ravel()] = 1.0
            for (uptr, cnt, d), (vptr, vcnt) in zip(self._u_at, self._v_at):
                vals[uptr: uptr + 2 * cnt * d] = 0.0
                vals[vptr: vptr + 2 * vcnt] = 0.0
        else:
            if scaling.w_nonneg is not None:
                diag[cones.nonneg] = scaling.w_nonneg ** 2
            for idx, st, (uptr, cnt, d), (vptr, vcnt) in zip(
                    cones.soc_batches, scaling.soc, self._u_at, self._v_at):
                eta2 = st["eta"] ** 2
                diag[idx.ravel()] = np.repeat(eta2, idx.shape[1])
                ucol = (np.sqrt(2.0) * st["eta"][:, None] * st["wbar"]).ravel()
                vals[uptr: uptr + cnt * d] = ucol
                vals[uptr + cnt * d: uptr + 2 * cnt * d] = ucol
                vcol = np.sqrt(2.0) * st["eta"]
                vals[vptr: vptr + vcnt] = vcol
                vals[vptr + vcnt: vptr + 2 * vcnt] = vcol
        vals[: self.n] = reg
        vals[self._diag_at] = -diag - reg
        shape = (self.dim, self.dim)
        self._k0 = None
        kreg = sp.coo_matrix((vals, (self._rows, self._cols)), shape=shape).tocsc()
        try:
            if self.dim <= self.settings.dense_threshold:
                self._lu = sla.lu_factor(kreg.toarray())
                self._dense = True
            else:
                self._lu = spla.splu(kreg, permc_spec="MMD_AT_PLUS_A",
                                     options={"SymmetricMode": True,
                                              "DiagPivotThresh": 0.001})
                self._dense = False
        except (RuntimeError, ValueError, sla.LinAlgError):
            return False
        # unregularized matrix for iterative refinement
        vals0 = vals.copy()
        vals0[: self.n] = 0.0
        vals0[self._diag_at] += reg
        self._k0 = sp.coo_matrix((vals0, (self._rows, self._cols)), shape=shape).tocsr()
        return True

    def solve(self, r1, r2):
        rhs = np.zeros(self.dim)
        rhs[: self.n] = r1
        rhs[self.n: self.n + self.m] = r2
        x = self._solve_raw(rhs)
        for _ in range(self.settings.refine_steps):
            resid = rhs - self._k0 @ x
            if np.linalg.norm(resid) <= 1e-14 * (1.0 + np.linalg.norm(rhs)):
                break
            x = x + self._solve_raw(resid)
        return x[: self.n], x[self.n: self.n + self.m]

    def _solve_raw(self, rhs):
        if self._dense:
            return sla.lu_solve(self._lu, rhs)
        return self._lu.solve(rhs)


def _validate(program):
    c = np.asarray(program.c, dtype=float).ravel()
    a = program.A_eq
    a = a.tocsc() if sp.issparse(a) else sp.csc_matrix(np.asarray(a, dtype=float))
    b = np.asarray(program.b_eq, dtype=float).ravel()
    if a.shape != (b.size, c.size):
        raise ValueError("constraint matrix shape does not match c and b")
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(b)) and np.all(np.isfinite(a.data))):
        raise ValueError("program data must be finite")
    cones = _Cones(list(program.cones), b.size)
    return c, a, b, cones


def solve(program, settings=None):
    """Solve a conic program; returns a :class:`ConicSolution`, never raises
    for numerical trouble (only for structurally invalid input)."""
    settings = settings or SolverSettings()
    c, a, b, cones = _validate(program)
    n, m = c.size, b.size
    norm_b, norm_c = np.linalg.norm(b), np.linalg.norm(c)
    kkt = _KKT(a, cones, settings)
    log = []

    def finish(status, x, y, s, tau, it, pres, dres, relgap, pobj, dobj, detail=""):
        scale = tau if tau > 1e-300 else 1.0
        sol = ConicSolution(primal=x / scale, dual=y / scale, slacks=s / scale,
                            status=status, primal_residual=pres, dual_residual=dres,
                            duality_gap=relgap, iterations=it,
                            primal_objective=pobj, dual_objective=dobj,
                            detail=detail, log=log)
        if settings.log_path:
            with open(settings.log_path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["iteration", "gap", "primal_residual",
                                 "dual_residual", "relative_gap", "step", "tau", "kappa"])
                writer.writerows(log)
        return sol

    # initial point: least-squares primal/dual pushed into the cone interior
    if not kkt.factor(None, identity_init=True):
        return finish("numerical-failure", np.zeros(n), np.zeros(m), np.zeros(m),
                      1.0, 0, np.inf, np.inf, np.inf, np.nan, np.nan,
                      "initial KKT factorization failed")
    xh, yh = kkt.solve(np.zeros(n), b)
    s = -yh
    s[cones.zero] = 0.0
    marg = cones.margin(s)
    if marg <= 0:
        s = s + (1.0 - marg) * cones.identity()
    x = xh
    xt, yh = kkt.solve(-c, np.zeros(m))
    y = yh
    marg = cones.margin(y)
    if marg <= 0:
        y = y + (1.0 - marg) * cones.identity()
    tau, kappa = 1.0, 1.0

    best = None
    status, detail = "max-iters", ""
    it = 0
    for it in range(settings.max_iters + 1):
        r_d = a.T @ y + c * tau
        r_p = a @ x + s - b * tau
        r_g = kappa + float(c @ x) + float(b @ y)
        pobj = float(c @ x) / tau
        dobj = -float(b @ y) / tau
        pres = np.linalg.norm(r_p) / tau / (1.0 + norm_b)
        dres = np.linalg.norm(r_d) / tau / (1.0 + norm_c)
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj))
        merit = max(pres, dres, relgap)
        if best is None or merit < best[0]:
            best = (merit, x.copy(), y.copy(), s.copy(), tau, pres, dres, relgap, pobj, dobj)
        log.append([it, float(s @ y) / tau ** 2, pres, dres, relgap, 0.0, tau, kappa])

        if pres <= settings.feas_tol and dres <= settings.feas_tol and relgap <= settings.gap_tol:
            return finish("optimal", x, y, s, tau, it, pres, dres, relgap, pobj, dobj)

        # infeasibility certificates (tau -> 0 regime)
        by, cx = float(b @ y), float(c @ x)
        if by < 0 and np.linalg.norm(a.T @ y) <= settings.feas_tol * (1.0 + norm_c) * (-by):
            return finish("infeasible-detected", x, y / -by, s, 1.0, it,
                          pres, dres, relgap, pobj, dobj, "primal infeasibility certificate")
        if cx < 0 and np.linalg.norm(a @ x + s) <= settings.feas_tol * (1.0 + norm_b) * (-cx):
            return finish("infeasible-detected", x / -cx, y, s / -cx, 1.0, it,
                          pres, dres, relgap, pobj, dobj,
                          "dual infeasibility certificate (primal unbounded)")
        if it == settings.max_iters:
            break

        try:
            scaling = _Scaling(cones, s, y)
        except FloatingPointError as exc:
            status, detail = "numerical-failure", str(exc)
            break
        mu = scaling.mu(s, y, tau, kappa)

        ok = kkt.factor(scaling)
        if not ok:
            ok = kkt.factor(scaling, reg=settings.kkt_reg * 1e4)
        if not ok:
            status, detail = "numerical-failure", "KKT factorization failed"
            break
        x1, y1 = kkt.solve(-c, b)
        denom = float(c @ x1) + float(b @ y1) - kappa / tau

        def direction(rx, rz, rg, ds, dk):
            g = scaling.lam_div(ds)
            wg = scaling.w_mult(g)
            x2, y2 = kkt.solve(rx, rz - wg)
            dtau = (rg - dk / tau - float(c @ x2) - float(b @ y2)) / denom
            dx = x2 + dtau * x1
            dy = y2 + dtau * y1
            dsv = wg - scaling.h_mult(dy)
            dsv[cones.zero] = 0.0
            dkappa = (dk - kappa * dtau) / tau
            return dx, dy, dsv, dtau, dkappa

        lam2 = scaling.lam_sq()
        dxa, dya, dsa, dtaua, dkappaa = direction(-r_d, -r_p, -r_g, -lam2, -tau * kappa)
        alpha_aff = min(_max_step(cones, s, dsa), _max_step(cones, y, dya), 1.0)
        if dtaua < 0:
            alpha_aff = min(alpha_aff, -tau / dtaua)
        if dkappaa < 0:
            alpha_aff = min(alpha_aff, -kappa / dkappaa)
        sigma = float(np.clip((1.0 - alpha_aff) ** 3, 0.0, 1.0))

        corr = scaling.jordan_mul(scaling.w_inv_mult(dsa), scaling.w_mult(dya))
        ds_comb = sigma * mu * cones.identity() - lam2 - corr
        dk_comb = sigma * mu - tau * kappa - dtaua * dkappaa
        eta_r = 1.0 - sigma
        dx, dy, dsv, dtau, dkappa = direction(-eta_r * r_d, -eta_r * r_p, -eta_r * r_g,
                                              ds_comb, dk_comb)
        if not all(np.all(np.isfinite(v)) for v in (dx, dy, dsv)) or not np.isfinite(dtau):
            status, detail = "numerical-failure", "non-finite search direction"
            break

        alpha = min(_max_step(cones, s, dsv), _max_step(cones, y, dy))
        if dtau < 0:
            alpha = min(alpha, -tau / dtau)
        if dkappa < 0:
            alpha = min(alpha, -kappa / dkappa)
        alpha = min(1.0, settings.step_fraction * alpha)
        if alpha <= 1e-13:
            status, detail = "numerical-failure", "step length collapsed"
            break
        log[-1][5] = alpha

        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * dsv
        s[cones.zero] = 0.0
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa
        # the embedding is homogeneous: renormalize to tau = 1 so the iterate
        # cannot drift along the scale ray and lose precision
        x /= tau
        y /= tau
        s /= tau
        kappa /= tau
        tau = 1.0

    _, bx, by_, bs, btau, pres, dres, relgap, pobj, dobj = best
    return finish(status, bx, by_, bs, btau, it, pres, dres, relgap, pobj, dobj, detail)
