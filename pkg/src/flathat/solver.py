"""Regularized damped Newton and warm-started continuation in lam.

The reaction f(u) = lam*u^beta - u^alpha has unbounded slope at u = 0, so
plain Newton is ill-posed on any field with a free boundary.  Each solve
walks a decreasing schedule of regularizations

    f_eps(u) = lam*(u+ + eps)^(beta-1)*u+  -  (u+ + eps)^(alpha-1)*u+,

warm-starting every stage, with damped Newton inside each stage:

- Newton systems are solved by Jacobi-preconditioned conjugate gradients
  with a negative-curvature (Steihaug) exit;
- steps are backtracked until the residual norm shows sufficient decrease.
  Energy-descent acceptance is deliberately not used: the compact-support
  states of interest sit in razor-thin energy basins (their amplitude
  barrier vanishes as the support fills its inscribed ball) and a descent
  line search reliably expels the iterate from them.  The discrete residual
  is still the exact gradient of the stage energy, and the per-iterate
  stage energies are recorded so the damping audit can inspect them.

The continuation driver seeds the first parameter value with a transplanted
radial flat-hat, adds seeded random multistart perturbations, records the
least-energy nonzero candidate per lam, and warm-starts the next lam from
it.  "Least energy" here means least among the candidates this solver
found: a numerical method cannot certify the global least-action property,
and every report downstream carries the label ``least-energy-found``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import Assembly, DiscreteField
from .profiles import RadialProfile


_CONE_FLOOR = 1e-300    # branch guard only; far below any physical value


class SolveFailure(RuntimeError):
    """Newton failed; carries the regularization stage that was active."""

    def __init__(self, message, eps_stage=None, kind="nonconvergence"):
        super().__init__(message)
        self.eps_stage = eps_stage
        self.kind = kind


class NoNonzeroSolution(RuntimeError):
    """Every candidate collapsed to the zero solution."""


@dataclass
class SolveConfig:
    epsilon_schedule: tuple = (1e-2, 1e-4, 1e-6, 1e-8, 1e-10)
    newton_tol: float = 1e-10
    max_newton_iters: int = 60
    max_backtracks: int = 30
    armijo: float = 1e-4
    cg_tol: float = 1e-10
    cg_maxiter: int = 2000
    multistart_count: int = 4
    prng_seed: int = 2025
    nonzero_threshold: float = 1e-6
    nonmonotone_memory: int = 6

    def __post_init__(self):
        eps = tuple(self.epsilon_schedule)
        if any(b >= a for a, b in zip(eps, eps[1:])) or not eps:
            raise ValueError("epsilon_schedule must be strictly decreasing")
        if eps[-1] > 1e-10:
            raise ValueError("final regularization must be <= 1e-10")
        if self.newton_tol <= 0:
            raise ValueError("newton_tol must be positive")


@dataclass
class SolutionRecord:
    lam: float
    field: DiscreteField
    energy: float
    residual_norm: float
    iterations: int
    eps_path: tuple
    provenance: str
    stage_energies: list = dc_field(default_factory=list)
    classification_ref: str | None = None


# ---------------------------------------------------------------------------
# nonlinearity and energies
# ---------------------------------------------------------------------------

def _f_eps(u, lam, alpha, beta, eps):
    up = np.maximum(u, 0.0)
    return lam * (up + eps) ** (beta - 1.0) * up - (up + eps) ** (alpha - 1.0) * up


def _f_eps_prime(u, lam, alpha, beta, eps):
    up = np.maximum(u, 0.0)
    d = (lam * ((beta - 1.0) * (up + eps) ** (beta - 2.0) * up + (up + eps) ** (beta - 1.0))
         - ((alpha - 1.0) * (up + eps) ** (alpha - 2.0) * up + (up + eps) ** (alpha - 1.0)))
    # slope of the u <= 0 branch is zero; keep the right-limit on the zero set
    # itself so free-boundary nodes stay pinned
    return np.where(u < 0.0, 0.0, d)


def _phi_eps(u, lam, alpha, beta, eps):
    """Antiderivative of f_eps vanishing at 0 (zero on u <= 0)."""
    up = np.maximum(u, 0.0)

    def G(p):
        return (((up + eps) ** (p + 1.0) - eps ** (p + 1.0)) / (p + 1.0)
                - eps * ((up + eps) ** p - eps ** p) / p)

    return lam * G(beta) - G(alpha)


def energy(field: DiscreteField, lam: float, assembly: Assembly) -> float:
    """True (unregularized) energy of a nodal field."""
    p = assembly.params
    u = field.values
    uq = np.abs(assembly.interpolate(u))
    grad = 0.5 * assembly.grad_energy(u)
    focus = lam / (p.beta + 1.0) * assembly.integrate(uq ** (p.beta + 1.0))
    defocus = 1.0 / (p.alpha + 1.0) * assembly.integrate(uq ** (p.alpha + 1.0))
    return grad - focus + defocus


def _stage_energy(u, lam, eps, assembly):
    p = assembly.params
    uq = assembly.interpolate(u)
    return (0.5 * assembly.grad_energy(u)
            - assembly.integrate(_phi_eps(uq, lam, p.alpha, p.beta, eps)))


def _residual(u, lam, eps, assembly):
    p = assembly.params
    uq = assembly.interpolate(u)
    b = assembly.load(_f_eps(uq, lam, p.alpha, p.beta, eps))
    return assembly.K @ u - b, b


def _scaled_norm(r, b, Ku, free):
    scale = 1.0 + np.linalg.norm(b[free]) + np.linalg.norm(Ku[free])
    return float(np.linalg.norm(r[free]) / scale)


def _scatter(d_f, free, n):
    d = np.zeros(n)
    d[free] = d_f
    return d


# ---------------------------------------------------------------------------
# support-skirt relaxation
# ---------------------------------------------------------------------------
#
# Near the discrete free boundary the nodal balances are power laws
# u_i^alpha ~ (coupling), so consecutive skirt values drop by many orders of
# magnitude per mesh layer; a linear-scale Newton step cannot move a node
# across that range.  Each such node instead gets an exact scalar solve of
# its own residual equation, bracketed in log scale, swept Gauss-Seidel
# style from the largest skirt values outward.

def _node_env(assembly, i):
    cache = getattr(assembly, "_node_env_cache", None)
    if cache is None:
        cache = assembly._node_env_cache = {}
    env = cache.get(i)
    if env is None:
        env = cache[i] = assembly.node_environment(i)
    return env


def _node_residual(assembly, env, u, i, ui, lam, eps):
    k_cols, k_vals, _, partners, qw = env
    p = assembly.params
    uu = u[k_cols].copy()
    uu[k_cols == i] = ui
    lin = float(k_vals @ uu)
    umid = 0.5 * (ui + u[partners])
    return lin - float(qw @ _f_eps(umid, lam, p.alpha, p.beta, eps))


def _solve_skirt_node(assembly, u, i, lam, eps, deadband, target):
    """Root of the scalar residual r_i(u_i) on [0, deadband], in log scale."""
    env = _node_env(assembly, i)
    r0 = _node_residual(assembly, env, u, i, 0.0, lam, eps)
    if r0 >= -target:
        return 0.0          # equation satisfied (or pressed against zero)
    r_hi = _node_residual(assembly, env, u, i, deadband, lam, eps)
    if r_hi <= 0.0:
        return deadband     # wants above the deadband; Newton takes over
    lo, hi = math.log(1e-320), math.log(deadband)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if _node_residual(assembly, env, u, i, math.exp(mid), lam, eps) < 0.0:
            lo = mid
        else:
            hi = mid
    ui = math.exp(0.5 * (lo + hi))
    if abs(_node_residual(assembly, env, u, i, ui, lam, eps)) > \
            abs(_node_residual(assembly, env, u, i, 0.0, lam, eps)):
        return 0.0
    return ui


def _tail_relax(u, lam, eps, assembly, deadband, target, max_sweeps=40):
    """Gauss-Seidel sweeps of exact scalar solves over the support skirt."""
    free = assembly.free
    for _ in range(max_sweeps):
        r, _ = _residual(u, lam, eps, assembly)
        tiny = free & (u < deadband)
        bad = np.where(tiny & (np.abs(r) > target))[0]
        if bad.size == 0:
            return u, True
        bad = bad[np.argsort(-u[bad])]
        for i in bad:
            u[i] = _solve_skirt_node(assembly, u, int(i), lam, eps,
                                     deadband, target)
    return u, False


# ---------------------------------------------------------------------------
# preconditioned conjugate gradients with negative-curvature detection
# ---------------------------------------------------------------------------

def pcg(A: sp.spmatrix, rhs: np.ndarray, rel_tol: float, maxiter: int,
        precond=None):
    """Preconditioned CG on a symmetric system.

    Returns ``(x, status, extra)`` with status one of ``'converged'``,
    ``'maxiter'`` or ``'negcurv'``.  On non-positive curvature ``extra``
    carries the Rayleigh data ``(p_A_p, p_M_p)`` of the offending direction
    so the caller can pick a Levenberg shift; otherwise it is the iteration
    count.
    """
    if precond is None:
        diag = A.diagonal()
        diag = np.where(np.abs(diag) > 0.0, np.abs(diag), 1.0)
        minv = 1.0 / diag
        apply_m = lambda v: minv * v
    else:
        apply_m = precond
    x = np.zeros_like(rhs)
    r = rhs.copy()
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return x, "converged", 0
    z = apply_m(r)
    p = z.copy()
    rz = float(r @ z)
    for it in range(maxiter):
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            return x, "negcurv", (pAp, p)
        a = rz / pAp
        x += a * p
        r -= a * Ap
        if np.linalg.norm(r) <= rel_tol * rhs_norm:
            return x, "converged", it + 1
        z = apply_m(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, "maxiter", maxiter


def _amg_preconditioner(A: sp.csr_matrix):
    """Smoothed-aggregation V-cycle; the rho^(N-2) weight degenerates at the
    axis and defeats plain Jacobi preconditioning.  Symmetric smoothing
    sweeps keep the cycle a valid (symmetric) preconditioner for CG."""
    import pyamg

    sym = ("gauss_seidel", {"sweep": "symmetric"})
    ml = pyamg.smoothed_aggregation_solver(A, max_coarse=64,
                                           presmoother=sym, postsmoother=sym)
    op = ml.aspreconditioner(cycle="V")
    return lambda v: op @ v


def newton_direction(Jff: sp.csr_matrix, rhs: np.ndarray,
                     rel_tol: float, maxiter: int):
    """Newton step: AMG-preconditioned CG, direct solve as fallback.

    Near the marginal compact-support states the Jacobian, while exactly
    symmetric, carries a soft mode whose curvature can dip below zero at
    the discrete level; CG then exits on negative curvature.  The exact
    Newton direction is a residual-descent direction regardless of the
    Jacobian's signature, so those (rare) steps are delegated to a sparse
    factorization.  Returns (direction, how) with how in {'pcg', 'direct'}.
    """
    try:
        mop = _amg_preconditioner(Jff)
    except Exception:
        mop = None
    d, status, _ = pcg(Jff, rhs, rel_tol, maxiter, precond=mop)
    if status == "converged":
        return d, "pcg"
    d = spla.spsolve(Jff.tocsc(), rhs)
    return d, "direct"


# ---------------------------------------------------------------------------
# Newton
# ---------------------------------------------------------------------------

def newton_solve(lam: float, initial: DiscreteField, cfg: SolveConfig,
                 assembly: Assembly, provenance: str = "seed") -> SolutionRecord:
    """Solve the discrete problem at ``lam`` from the given initial field.

    Raises
    ------
    SolveFailure
        With the active regularization stage, on iteration-cap
        nonconvergence or on line-search breakdown (divergence).
    """
    p = assembly.params
    free = assembly.free
    u = initial.values.copy()
    u[assembly.dirichlet] = 0.0
    total_iters = 0
    stage_energies = []
    rnorm = math.inf
    # the schedule is relative to the field scale: the reaction is scale
    # covariant, and an eps comparable to max(u) would swamp the state
    eps_scale = max(float(np.abs(u).max()), cfg.nonzero_threshold)
    for eps_rel in cfg.epsilon_schedule:
        eps = eps_rel * eps_scale
        # the zero state is linearly pinned when lam*eps^(b-a) < 1; only then
        # is the sub-zero branch a trap worth guarding against
        pinned = lam * eps ** (p.beta - p.alpha) < 1.0
        energies = [_stage_energy(u, lam, eps, assembly)]
        rn_hist = []
        r, b = _residual(u, lam, eps, assembly)
        rnorm = _scaled_norm(r, b, assembly.K @ u, free)
        for _ in range(cfg.max_newton_iters):
            if rnorm <= cfg.newton_tol:
                break
            uq = assembly.interpolate(u)
            J = assembly.K - assembly.load_jacobian(
                _f_eps_prime(uq, lam, p.alpha, p.beta, eps))
            Jff = J[free][:, free].tocsr()
            lin_tol = min(0.1, max(cfg.cg_tol, 0.01 * math.sqrt(max(rnorm, 1e-16))))
            d_f, _ = newton_direction(Jff, -r[free], lin_tol, cfg.cg_maxiter)
            # damping on the residual norm, with a short nonmonotone memory:
            # free-boundary formation makes the residual map semismooth and a
            # strictly monotone search stalls at the kink, while energy-descent
            # acceptance would expel the iterate from the razor-thin basins of
            # the near-marginal states.  Stage energies are recorded for audit.
            rn_free = float(np.linalg.norm(r[free]))
            rn_hist.append(rn_free)
            rn_ref = max(rn_hist[-cfg.nonmonotone_memory:])
            t = 1.0
            accepted = False
            for _ in range(cfg.max_backtracks):
                u_try = u + t * _scatter(d_f, free, u.size)
                if pinned:
                    # keep iterates in the open positive cone: with pinned
                    # zeros the sub-zero branch is a semismooth trap, while
                    # the true eps-solution has a tiny positive tail
                    np.maximum(u_try, _CONE_FLOOR, out=u_try)
                    u_try[assembly.dirichlet] = 0.0
                r_try, b_try = _residual(u_try, lam, eps, assembly)
                if np.linalg.norm(r_try[free]) <= (1.0 - cfg.armijo * t) * rn_ref:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                raise SolveFailure(
                    f"line search stalled at eps={eps} (residual {rn_free})",
                    eps_stage=eps, kind="divergence")
            u, r, b = u_try, r_try, b_try
            rnorm = _scaled_norm(r, b, assembly.K @ u, free)
            energies.append(_stage_energy(u, lam, eps, assembly))
            total_iters += 1
        else:
            raise SolveFailure(
                f"Newton iteration cap at eps={eps}, residual {rnorm}",
                eps_stage=eps, kind="nonconvergence")
        stage_energies.append(energies)
    # clamp tiny negative excursions (and cone-floor markers) to an exact
    # zero and re-verify at the final stage
    u = np.maximum(u, 0.0)
    u[u <= 2.0 * _CONE_FLOOR] = 0.0
    u[assembly.dirichlet] = 0.0
    eps_last = cfg.epsilon_schedule[-1] * eps_scale
    r, b = _residual(u, lam, eps_last, assembly)
    rnorm = _scaled_norm(r, b, assembly.K @ u, free)
    if rnorm > 10.0 * cfg.newton_tol:
        raise SolveFailure(
            f"clamping invalidated convergence (residual {rnorm})",
            eps_stage=eps_last, kind="nonconvergence")
    fld = DiscreteField(assembly.mesh, u)
    return SolutionRecord(lam=lam, field=fld, energy=energy(fld, lam, assembly),
                          residual_norm=rnorm, iterations=total_iters,
                          eps_path=tuple(cfg.epsilon_schedule),
                          provenance=provenance, stage_energies=stage_energies)


# ---------------------------------------------------------------------------
# seeding and continuation
# ---------------------------------------------------------------------------

def transplant(profile: RadialProfile, assembly: Assembly,
               amplitude: float = 1.0) -> DiscreteField:
    """Radial profile -> nodal field centred at the origin of the meridian."""
    radii = assembly.mesh.vertex_radii()
    vals = amplitude * profile(radii)
    vals[assembly.dirichlet] = 0.0
    return DiscreteField(assembly.mesh, np.maximum(vals, 0.0))


def _smooth_bump(assembly: Assembly, rng: np.random.Generator,
                 scale: float) -> np.ndarray:
    """Random smooth perturbation field vanishing on the Dirichlet set."""
    mesh = assembly.mesh
    raw = rng.standard_normal(mesh.n_vertices)
    # cheap smoothing: average over triangle neighbourhoods a few times
    adj = sp.csr_matrix((np.ones(mesh.triangles.size),
                         (np.repeat(mesh.triangles.ravel(), 1),
                          np.roll(mesh.triangles, 1, axis=1).ravel())),
                        shape=(mesh.n_vertices, mesh.n_vertices))
    adj = adj + adj.T
    deg = np.asarray(adj.sum(axis=1)).ravel()
    deg[deg == 0.0] = 1.0
    for _ in range(10):
        raw = (adj @ raw) / deg
    raw[assembly.dirichlet] = 0.0
    m = np.abs(raw).max()
    return scale * raw / m if m > 0 else raw


def multistart_candidates(base: DiscreteField, assembly: Assembly,
                          cfg: SolveConfig, lam_index: int):
    """Warm start plus seeded smooth perturbations of it."""
    rng = np.random.default_rng(cfg.prng_seed + 7919 * lam_index)
    out = [("warm", base)]
    amp = 0.3 * max(base.max_abs(), cfg.nonzero_threshold)
    for k in range(cfg.multistart_count):
        bump = _smooth_bump(assembly, rng, amp)
        vals = np.maximum(base.values + bump, 0.0)
        vals[assembly.dirichlet] = 0.0
        out.append((f"multistart-{k}", DiscreteField(assembly.mesh, vals)))
    return out


def least_energy_select(records) -> SolutionRecord:
    """Minimum-energy record among nonzero converged candidates."""
    nonzero = [r for r in records if r.field.max_abs() >= 1e-6]
    if not nonzero:
        raise NoNonzeroSolution("all candidates collapsed to zero")
    return min(nonzero, key=lambda r: r.energy)


@dataclass
class SweepEntry:
    lam: float
    record: SolutionRecord | None
    competitors: int
    failures: list


def continuation_sweep(lam_schedule, cfg: SolveConfig, assembly: Assembly,
                       seed_profile: RadialProfile):
    """Warm-started sweep along a decreasing lam schedule.

    The first lam is seeded from the transplanted flat-hat profile; each
    later lam warm-starts from the previous converged field.  A failed step
    is retried once from a half-step solve; remaining failures are recorded
    and the sweep continues from the last success.
    """
    lams = list(lam_schedule)
    if any(b >= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lam schedule must be strictly decreasing")
    entries = []
    current = transplant(seed_profile, assembly)
    lam_prev = None
    for i, lam in enumerate(lams):
        entry = _solve_one_lam(lam, current, cfg, assembly, i)
        if entry.record is None and lam_prev is not None:
            # retry via a halved step from the last success
            mid = 0.5 * (lam_prev + lam)
            bridge = _solve_one_lam(mid, current, cfg, assembly, i)
            if bridge.record is not None:
                entry = _solve_one_lam(lam, bridge.record.field, cfg, assembly, i)
                entry.failures = ["retried-after-halved-step"] + entry.failures
        entries.append(entry)
        if entry.record is not None:
            current = entry.record.field
            lam_prev = lam
    return entries


def _solve_one_lam(lam, warm_field, cfg, assembly, lam_index) -> SweepEntry:
    candidates = multistart_candidates(warm_field, assembly, cfg, lam_index)
    records, failures = [], []
    for name, fld in candidates:
        try:
            records.append(newton_solve(lam, fld, cfg, assembly, provenance=name))
        except SolveFailure as exc:
            failures.append(f"{name}: {exc.kind} at eps={exc.eps_stage}")
    try:
        best = least_energy_select(records)
    except NoNonzeroSolution:
        best = None
    return SweepEntry(lam=lam, record=best, competitors=len(records),
                      failures=failures)


def geometric_lambda_schedule(lam_star: float, lam_start: float, n_steps: int = 12):
    """lam_n = lam_star + (lam_start - lam_star) * 2^-n, n = 0..n_steps-1."""
    if lam_start <= lam_star:
        raise ValueError("lam_start must exceed lam_star")
    return [lam_star + (lam_start - lam_star) * 2.0 ** (-n) for n in range(n_steps)]
