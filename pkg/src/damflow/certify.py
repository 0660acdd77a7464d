"""Numerical uniqueness certificate for pairs of computed trajectories.

Given two trajectories of the same discrete problem, form the difference
pair w = u1 - u2 and eta = alpha*w + chi1 - chi2, solve the dual elliptic
problem ``div(a grad v) = -eta`` with v = 0 on the pervious boundary at each
time, and monitor the energy E(t) = integral a grad(v).grad(v) together with
its Gronwall functional F(t).  Small sup-energy certifies that the two
trajectories agree; the cross term w*(chi1 - chi2) must stay nonnegative.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .assembly import Q1Assembler, apply_dirichlet_matrix, solve_direct
from .errors import InvalidArgument

TOL_UNIQUE = 1e-6
TOL_SIGN = 1e-8


@dataclass
class DifferencePair:
    """Difference fields of two solutions at one time."""

    w: np.ndarray
    eta: np.ndarray
    time: float


@dataclass
class EnergySeries:
    """Dual energies E(t), their running integral F(t) and the fitted rate."""

    times: np.ndarray
    E: np.ndarray
    F: np.ndarray
    C_fit: float


@dataclass
class CertificateReport:
    sup_E: float
    F_final: float
    C_fit: float
    cross_term_min: float
    sign_min: float
    ordering_violations: dict = dc_field(default_factory=dict)
    scale: float = 1.0
    tol: float = TOL_UNIQUE
    passed: bool = False

    def as_dict(self):
        return {"sup_E": self.sup_E, "F_final": self.F_final, "C_fit": self.C_fit,
                "cross_term_min": self.cross_term_min, "sign_min": self.sign_min,
                "ordering_violations": self.ordering_violations, "scale": self.scale,
                "tol": self.tol, "passed": self.passed}


class DualSolver:
    """Factorized dual solve reusing the forward assembly with v=0 on the
    pervious boundary and the natural condition on the bottom."""

    def __init__(self, field, grid, tags, asm=None):
        import scipy.sparse as sp
        import scipy.sparse.linalg as spla

        self.grid = grid
        self.asm = asm if asm is not None else Q1Assembler(grid, field)
        # the whole pervious boundary is homogeneous Dirichlet, wet or dry
        self.dmask = tags.dirichlet_mask
        self.dflat = self.dmask.ravel()
        self.A = self.asm.stiffness()
        self.A_dir = apply_dirichlet_matrix(self.A, self.dflat)
        self.M = self.asm.mass()
        self._lu = spla.splu(sp.csc_matrix(self.A_dir))

    def solve(self, eta):
        """Nodal dual potential for a nodal source; direct solve keeps the
        discrete energy identity at machine precision."""
        eta_flat = self.grid.flatten(np.asarray(eta, dtype=float))
        rhs = self.M @ eta_flat
        rhs[self.dflat] = 0.0
        v = self._lu.solve(rhs)
        return v.reshape(self.grid.shape)

    def energy(self, v):
        return self.asm.energy(self.grid.flatten(v))

    def source_pairing(self, eta, v):
        """integral eta*v via the consistent mass matrix."""
        return float(self.grid.flatten(np.asarray(eta, dtype=float))
                     @ (self.M @ self.grid.flatten(v)))

    def stability_ratio(self, eta, v, lambda_est):
        """A-priori bound check: integral |grad v|^2 vs (1/lambda^2) integral eta^2.

        The bound as printed folds a Poincare constant into 1/lambda^2, so
        the ratio is reported rather than asserted; values well above 1 mean
        an order-of-magnitude breach.
        """
        from .permeability import identity_field
        if not hasattr(self, "_laplace"):
            self._laplace = Q1Assembler(self.grid, identity_field()).stiffness()
        v_flat = self.grid.flatten(v)
        eta_flat = self.grid.flatten(np.asarray(eta, dtype=float))
        grad2 = float(v_flat @ (self._laplace @ v_flat))
        eta2 = float(eta_flat @ (self.M @ eta_flat))
        bound = eta2 / lambda_est ** 2
        ratio = grad2 / bound if bound > 0 else 0.0
        return {"grad_sq": grad2, "eta_sq": eta2, "bound": bound, "ratio": ratio,
                "ok": bool(ratio <= 1.0 + 1e-9)}


def solve_dual(eta, field, grid, tags):
    """One-off dual solve; prefer DualSolver for time series."""
    return DualSolver(field, grid, tags).solve(eta)


def energy(v, field, grid, asm=None):
    """Quadrature of a grad(v).grad(v) over the rectangle."""
    if asm is None:
        asm = Q1Assembler(grid, field)
    return asm.energy(grid.flatten(np.asarray(v, dtype=float)))


def steklov_average(times, values, h_avg):
    """Forward time mean (1/h) integral_t^{t+h} of the piecewise-linear
    interpolant, integrated exactly; the domain shrinks to [0, T-h].

    ``values`` may be scalars or fields, time along the leading axis.
    Returns (new_times, averaged_values).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    T = times[-1] - times[0]
    if not (0.0 < h_avg <= T + 1e-15):
        raise InvalidArgument(f"averaging window {h_avg} outside (0, {T}]")
    keep = times + h_avg <= times[-1] + 1e-12 * max(T, 1.0)
    new_times = times[keep]
    out = np.empty((new_times.size,) + values.shape[1:])
    for idx, t in enumerate(new_times):
        out[idx] = _integrate_pl(times, values, t, t + h_avg) / h_avg
    return new_times, out


def steklov_derivative(times, values, h_avg):
    """Exact time derivative of the Steklov mean: (g(t+h) - g(t))/h."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = times + h_avg <= times[-1] + 1e-12 * max(times[-1] - times[0], 1.0)
    new_times = times[keep]
    out = np.empty((new_times.size,) + values.shape[1:])
    for idx, t in enumerate(new_times):
        out[idx] = (_eval_pl(times, values, t + h_avg) - _eval_pl(times, values, t)) / h_avg
    return new_times, out


def _eval_pl(times, values, t):
    t = min(max(t, times[0]), times[-1])
    k = int(np.searchsorted(times, t, side="right")) - 1
    k = min(max(k, 0), times.size - 2)
    frac = (t - times[k]) / (times[k + 1] - times[k])
    return (1.0 - frac) * values[k] + frac * values[k + 1]


def _integrate_pl(times, values, a, b):
    """Exact integral of the piecewise-linear interpolant over [a, b]."""
    total = np.zeros(values.shape[1:])
    ka = int(np.searchsorted(times, a, side="right")) - 1
    kb = int(np.searchsorted(times, b, side="left"))
    ka = min(max(ka, 0), times.size - 2)
    kb = min(max(kb, 1), times.size - 1)
    for k in range(ka, kb):
        lo, hi = max(a, times[k]), min(b, times[k + 1])
        if hi <= lo:
            continue
        # trapezoid of the linear segment restricted to [lo, hi]
        glo = _eval_pl(times, values, lo)
        ghi = _eval_pl(times, values, hi)
        total = total + 0.5 * (glo + ghi) * (hi - lo)
    return total


def sign_check(pairs_or_traj1, traj2=None):
    """Minimum over all snapshots and nodes of w*(chi1 - chi2).

    Accepts either a sequence of (w, dchi) arrays or two trajectories.
    Nonnegative whenever both trajectories use the same penalty (the
    saturation is then a monotone function of the pressure).
    """
    if traj2 is not None:
        pairs = ((s1.u - s2.u, s1.chi - s2.chi)
                 for s1, s2 in zip(pairs_or_traj1.snapshots, traj2.snapshots))
    else:
        pairs = pairs_or_traj1
    return min(float(np.min(w * dchi)) for w, dchi in pairs)


def check_sandwich(u, lower, upper, tol):
    """Pointwise order check lower <= u <= upper up to tol."""
    from .problem_data import OrderingReport
    below = float(np.max(np.asarray(lower) - np.asarray(u), initial=0.0))
    above = float(np.max(np.asarray(u) - np.asarray(upper), initial=0.0))
    return OrderingReport(max_below_lower=below, max_above_upper=above, tol=tol)


def extract_free_boundary(solution, grid, level=0.5):
    """Per-column interface height: largest x2 where chi crosses ``level``.

    Returns (heights, status) with status in {"wet", "dry", "interface"};
    fully wet columns report height K, fully dry columns 0.
    """
    if not (0.0 < level < 1.0):
        raise InvalidArgument(f"level must lie in (0, 1), got {level}")
    chi = np.asarray(solution.chi, dtype=float)
    K = grid.geometry.K
    heights = np.empty(grid.nx + 1)
    status = []
    x2 = np.arange(grid.ny + 1) * grid.h2
    for i in range(grid.nx + 1):
        col = chi[:, i]
        crossing = None
        for j in range(grid.ny - 1, -1, -1):
            lo, hi = col[j] - level, col[j + 1] - level
            if lo == hi:
                continue
            if (lo >= 0.0 >= hi) or (lo <= 0.0 <= hi):
                frac = lo / (lo - hi)
                crossing = x2[j] + frac * grid.h2
                break
        if crossing is not None:
            heights[i] = crossing
            status.append("interface")
        elif np.all(col >= level):
            heights[i] = K
            status.append("wet")
        else:
            heights[i] = 0.0
            status.append("dry")
    return heights, status


def difference_pairs(traj1, traj2, alpha):
    """DifferencePair sequence for two aligned trajectories."""
    _check_aligned(traj1, traj2)
    out = []
    for s1, s2 in zip(traj1.snapshots, traj2.snapshots):
        w = s1.u - s2.u
        out.append(DifferencePair(w=w, eta=alpha * w + (s1.chi - s2.chi), time=s1.time))
    return out


def _check_aligned(traj1, traj2):
    if len(traj1.snapshots) != len(traj2.snapshots):
        raise InvalidArgument("trajectories have different lengths")
    t1 = np.asarray(traj1.times)
    t2 = np.asarray(traj2.times)
    if not np.allclose(t1, t2, rtol=0, atol=1e-12 * max(1.0, float(t1[-1]))):
        raise InvalidArgument("trajectories are sampled at different times")
    if traj1.snapshots[0].u.shape != traj2.snapshots[0].u.shape:
        raise InvalidArgument("trajectories live on different grids")


def gronwall_monitor(traj1, traj2, field, grid, tags, alpha, M=None,
                     tol_unique=TOL_UNIQUE, tol_sign=TOL_SIGN, dual=None):
    """Dual-energy monitor of the uniqueness estimate for two trajectories.

    Returns (EnergySeries, CertificateReport).  The certificate passes iff
    sup_t E(t) <= tol_unique * (alpha*M + 1)^2 * |Omega|, the discrete
    expression of "zero dual energy forces equal solutions".
    """
    pairs = difference_pairs(traj1, traj2, alpha)
    if dual is None:
        dual = DualSolver(field, grid, tags)

    times = np.asarray(traj1.times, dtype=float)
    E = np.empty(times.size)
    cross = np.empty(times.size)
    sign_min = np.inf
    for k, pair in enumerate(pairs):
        v = dual.solve(pair.eta)
        E[k] = dual.energy(v)
        dchi = traj1.snapshots[k].chi - traj2.snapshots[k].chi
        prod = pair.w * dchi
        sign_min = min(sign_min, float(np.min(prod)))
        cross[k] = float(grid.flatten(pair.w) @ (dual.M @ grid.flatten(dchi)))

    F = _cumtrapz(times, E)
    X = _cumtrapz(times, cross)
    C_fit = _fit_growth_rate(times, F)

    if M is None:
        M = max(float(np.max(np.abs(s.u))) for s in traj1.snapshots + traj2.snapshots)
    scale = (alpha * M + 1.0) ** 2 * grid.geometry.area
    sup_E = float(np.max(E))
    report = CertificateReport(
        sup_E=sup_E, F_final=float(F[-1]), C_fit=C_fit,
        cross_term_min=float(np.min(X)), sign_min=sign_min,
        scale=scale, tol=tol_unique,
        passed=bool(sup_E <= tol_unique * scale))
    return EnergySeries(times=times, E=E, F=F, C_fit=C_fit), report


def _cumtrapz(times, y):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(times))
    return out


def _fit_growth_rate(times, F):
    """Least-squares slope of log F where F is meaningfully positive."""
    floor = 1e3 * np.finfo(float).eps * max(float(np.max(F)), np.finfo(float).tiny)
    mask = F > floor
    if np.count_nonzero(mask) < 2:
        return 0.0
    t, logF = times[mask], np.log(F[mask])
    slope = np.polyfit(t, logF, 1)[0]
    return float(slope)
