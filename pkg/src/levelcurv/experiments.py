"""Verification pipelines behind the command line.

Each function computes tables, JSON documents and named pass/fail checks
for one experiment and leaves file handling to the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import concavity as cv
from . import radial as rd
from . import ring2d as rg
from .errors import NoCriticalPoint
from .support_geometry import SupportSlice, build_grid, codazzi_residual, ellipsoid_support


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": self.value,
                "threshold": self.threshold, "detail": self.detail}


@dataclass
class Outcome:
    instance: str
    tables: dict = field(default_factory=dict)      # name -> (header, rows)
    documents: dict = field(default_factory=dict)   # name -> JSON-able object
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name, passed, value, threshold, detail=""):
        self.checks.append(Check(name, bool(passed), float(value), float(threshold), detail))


def _le(outcome, name, value, threshold, detail=""):
    outcome.check(name, value <= threshold, value, threshold, detail)


def _ge(outcome, name, value, threshold, detail=""):
    outcome.check(name, value >= threshold, value, threshold, detail)


# --------------------------------------------------------------------------
# shared report pieces
# --------------------------------------------------------------------------

def concavity_document(instance, n, profile, margin, eps, inequality_worst=None,
                       remark_residual_max=None, extra=None) -> dict:
    doc = {
        "instance": instance,
        "n": n,
        "t_grid": profile.t,
        "f": profile.f,
        "d2f": profile.d2f,
        "concave": bool(profile.max_d2f <= eps),
        "corollary_margin_min": margin.min_margin,
        "inequality_worst": inequality_worst,
        "remark_residual_max": remark_residual_max,
        "eps_grid": eps,
    }
    if extra:
        doc.update(extra)
    return doc


def concavity_table(profile, margin):
    d2 = np.concatenate([[np.nan], profile.d2f, [np.nan]])
    rows = [(t, f, "" if np.isnan(d) else d, m, "" if np.isnan(a) else a)
            for t, f, d, m, a in zip(profile.t, profile.f, d2, margin.margin, profile.argmin)]
    return ["t", "f", "d2f", "corollary_margin", "argmin_theta"], rows


def radial_profile_table(sol: rd.RadialSolution, t):
    r = sol.r_of_t(t)
    phi = cv.phi_from_radial(sol, t)
    rows = zip(t, r, t, sol.grad_norm(r), sol.K(r), sol.sigma1(r), phi.phi_level)
    return ["t", "r", "u", "grad_norm", "K", "sigma1", "phi"], list(rows)


def radial_analysis(sol: rd.RadialSolution, n_t: int):
    t = np.linspace(0.0, sol.config.height, n_t + 1)
    prof = cv.f_profile(cv.phi_from_radial(sol, t), t)
    return t, prof


# --------------------------------------------------------------------------
# catenoid and radial runs
# --------------------------------------------------------------------------

ASYMPTOTIC_RADII = (10.0, 20.0, 40.0, 80.0)


def catenoid_experiment(n: int, r_max: float, n_t: int = 128,
                        convention: str = "verbatim", affine_tol: float = 0.01,
                        eps_cap: float = 1e-5, margin_tol: float = 1e-6) -> Outcome:
    sol = rd.catenoid_solution(n, r_max)
    out = Outcome(f"catenoid-n{n}-r{r_max:g}")
    t, prof = radial_analysis(sol, n_t)
    _, coarse = radial_analysis(sol, n_t // 2)
    eps = min(cv.calibrate_eps(prof.d2f, coarse.d2f), eps_cap)
    margin = cv.corollary_margin(prof, n)
    out.tables["catenoid_profile"] = radial_profile_table(sol, t)
    out.tables["concavity"] = concavity_table(prof, margin)

    # closed forms on the exported profile
    r = sol.r_of_t(t)
    g, K, phi = rd.catenoid_invariants(r, n)
    inner = r > rd.CATENOID_BASE * (1 + 1e-12)
    rel = max(np.max(np.abs(sol.grad_norm(r[inner]) / g[inner] - 1)),
              np.max(np.abs(sol.K(r) / K - 1)),
              np.max(np.abs(prof.f / phi - 1)))
    _le(out, "closed_forms", rel, 1e-10, "grad_norm, K, phi against the catenoid closed forms")
    _le(out, "concave", prof.max_d2f, eps, "max centered second difference of f")
    if n == 2:
        _le(out, "sharp_case", float(np.max(np.abs(prof.f - 1.0))), 1e-10, "f == 1")
        _le(out, "corollary_equality", float(np.max(np.abs(margin.margin))), 1e-10)
    else:
        _ge(out, "corollary", margin.min_margin, -margin_tol)
        # affine behaviour on the outer half of the band
        sub = rd.catenoid_solution(n, r_max)
        H = sub.config.height
        t_lo = H - float(rd.catenoid_u(r_max, n)[0] - rd.catenoid_u(r_max / 2, n)[0])
        ts = np.linspace(0.0, max(t_lo, 0.0), 65)
        fs = cv.phi_from_radial(sub, ts).phi_level
        chord = fs[0] + (fs[-1] - fs[0]) * (ts - ts[0]) / (ts[-1] - ts[0])
        dev = float(np.max(np.abs(fs - chord)))
        _le(out, "affine_outer_half", dev, affine_tol * float(np.ptp(fs)),
            f"r in [{r_max / 2:g}, {r_max:g}]")

        tail = rd.catenoid_tail(np.array(ASYMPTOTIC_RADII), n)
        res_v = rd.asymptotic_residual(np.array(ASYMPTOTIC_RADII), n, "verbatim")
        res_m = rd.asymptotic_residual(np.array(ASYMPTOTIC_RADII), n, "magnitude")
        scale = np.array(ASYMPTOTIC_RADII) ** (4 - 3 * n)
        rows = list(zip(ASYMPTOTIC_RADII, tail, res_v, res_v / scale, res_m, res_m / scale))
        out.tables["asymptotics"] = (["r", "R_minus_u", "residual_verbatim",
                                      "scaled_verbatim", "residual_magnitude",
                                      "scaled_magnitude"], rows)
        scaled = (res_v if convention == "verbatim" else res_m) / scale
        spread = float(np.max(np.abs(scaled)) / np.min(np.abs(scaled)))
        _le(out, f"asymptotic_bounded_{convention}", spread, 3.0,
            "max/min of residual / r^(4-3n) over r = 10, 20, 40, 80")
    doc = concavity_document(out.instance, n, prof, margin, eps,
                             extra={"c": sol.c, "R": rd.catenoid_R(n) if n >= 3 else None,
                                    "max_d2f": prof.max_d2f})
    out.documents["concavity"] = doc
    return out


def radial_experiment(n: int, r_outer: float, r_inner: float, height: float = 1.0,
                      n_t: int = 128, eps_cap: float = 1e-5,
                      margin_tol: float = 1e-6) -> Outcome:
    cfg = rd.RadialConfig(n, r_outer, r_inner, height)
    sol = rd.solve_flux(cfg)
    out = Outcome(f"radial-n{n}-{r_outer:g}-{r_inner:g}")
    t, prof = radial_analysis(sol, n_t)
    _, coarse = radial_analysis(sol, n_t // 2)
    eps = min(cv.calibrate_eps(prof.d2f, coarse.d2f), eps_cap)
    margin = cv.corollary_margin(prof, n)
    out.tables["radial_profile"] = radial_profile_table(sol, t)
    out.tables["concavity"] = concavity_table(prof, margin)
    _le(out, "height_residual", abs(sol.residual), 1e-10)
    rs = np.geomspace(r_inner * (1 + 1e-9), r_outer, 50)
    _le(out, "first_integral", float(np.max(np.abs(sol.first_integral(rs) / sol.c - 1))), 1e-10)
    _le(out, "concave", prof.max_d2f, eps)
    _ge(out, "corollary", margin.min_margin, -margin_tol)
    out.documents["summary"] = {"c": sol.c, "concave": bool(prof.max_d2f <= eps),
                                "max_second_difference": prof.max_d2f, "eps_grid": eps,
                                "max_height_drop": rd.max_height_drop(cfg)}
    out.documents["concavity"] = concavity_document(out.instance, n, prof, margin, eps)
    return out


# --------------------------------------------------------------------------
# planar rings
# --------------------------------------------------------------------------

@dataclass
class RingAnalysis:
    solution: rg.GridSolution
    report: rg.SolverReport
    profile: cv.HeightProfile
    margin: cv.InequalityReport
    remark: cv.CriticalValues
    inequality: cv.InequalityCheck
    wrong_sign: float


def analyse_ring(problem: rg.RingProblem, tol=1e-10, max_iter=40) -> RingAnalysis:
    sol, rep = rg.solve(problem, tol=tol, max_iter=max_iter)
    clean = sol.band_limited()
    prof = cv.f_profile(cv.phi_from_grid(clean), clean.t)
    return RingAnalysis(sol, rep, prof, cv.corollary_margin(prof, 2),
                        cv.remark_identity_residual(clean),
                        cv.differential_inequality_check(clean),
                        cv.wrong_sign_grid(clean))


def solution_table(sol: rg.GridSolution):
    T, TH = np.meshgrid(sol.t, sol.theta, indexing="ij")
    rows = zip(T.ravel(), TH.ravel(), sol.h.ravel(), sol.h_t.ravel(), sol.b11.ravel())
    return ["t", "theta", "h", "h_t", "b11"], list(rows)


def ring_experiment(problem: rg.RingProblem, instance: str = "ring2d", tol=1e-10,
                    max_iter=40, oracle=None, d2f_tol=1e-6, margin_tol=1e-6,
                    remark_tol=1e-6, ineq_tol=1e-6, physical=True) -> Outcome:
    """Solve one ring and run the single-resolution checks.

    ``oracle`` optionally maps the t grid and theta grid to a reference h.
    """
    out = Outcome(instance)
    ra = analyse_ring(problem, tol, max_iter)
    sol, rep = ra.solution, ra.report
    if physical:
        pr = rg.physical_residual(sol)
        rep.physical_residual = pr.max_residual
        out.check("boundary_heights", pr.boundary_ok, pr.boundary_mismatch, 1e-8)
    out.tables["solution"] = solution_table(sol)
    out.tables["concavity"] = concavity_table(ra.profile, ra.margin)
    out.documents["solver_report"] = rep.to_dict()
    _le(out, "converged_residual", rep.residual_norm, tol)
    _ge(out, "convexity_margin", rep.convexity_margin, 0.0)
    _le(out, "orientation_margin", rep.orientation_margin, 0.0)
    if oracle is not None:
        err = float(np.max(np.abs(sol.h - oracle(sol.t, sol.theta))))
        _le(out, "radial_oracle", err, 1e-6)
    _le(out, "concave", ra.profile.max_d2f, d2f_tol)
    _ge(out, "corollary", ra.margin.min_margin, -margin_tol)
    _le(out, "remark_identity", ra.remark.max_abs, remark_tol,
        f"{ra.remark.values.size} critical points")
    _le(out, "differential_inequality", ra.inequality.worst, ineq_tol)
    out.documents["concavity"] = concavity_document(
        instance, 2, ra.profile, ra.margin, d2f_tol, ra.inequality.worst, ra.remark.max_abs)
    return out


def ring_verify(problem: rg.RingProblem, instance: str = "verify", tol=1e-10,
                max_iter=40, eps_cap=1e-5, margin_tol=1e-6, remark_ratio=3.0,
                remark_floor=1e-10) -> Outcome:
    """Resolution-doubling verification of one ring instance.

    ``problem`` fixes the fine grid; the coarse run halves both sizes.
    """
    out = Outcome(instance)
    coarse_p = rg.resample_problem(problem, problem.n_theta // 2, problem.n_t // 2)
    fine = analyse_ring(problem, tol, max_iter)
    coarse = analyse_ring(coarse_p, tol, max_iter)
    eps = cv.calibrate_eps(fine.profile.d2f, coarse.profile.d2f)
    eps_ineq = 4 * abs(fine.inequality.worst - coarse.inequality.worst) + 1e-9
    out.tables["concavity"] = concavity_table(fine.profile, fine.margin)
    _le(out, "concave", fine.profile.max_d2f, min(eps, eps_cap),
        f"eps_grid = {eps:.3e}, capped at {eps_cap:g}")
    _ge(out, "corollary", fine.margin.min_margin, -margin_tol)
    rc, rf = coarse.remark.max_abs, fine.remark.max_abs
    ratio = rc / rf if rf > 0 else np.inf
    floor = max(remark_floor, cv.remark_roundoff_floor(fine.solution.band_limited()))
    out.check("remark_identity_refinement", ratio >= remark_ratio or rf <= floor,
              ratio, remark_ratio,
              f"coarse {rc:.3e}, fine {rf:.3e}, roundoff floor {floor:.3e}")
    _le(out, "differential_inequality", fine.inequality.worst, eps_ineq,
        f"eps_grid = {eps_ineq:.3e}")
    out.check("wrong_sign_control", fine.wrong_sign > 0, fine.wrong_sign, 0.0,
              "L(e^{+phi_aux}) must be positive somewhere")
    verdict = cv.max_convexity_check(fine.solution.band_limited(),
                                     -cv.phi_from_grid(fine.solution.band_limited()).phi_level,
                                     eps=eps_ineq, eps_grid=eps, mod_gradient=True)
    out.check("max_principle", verdict.passed, verdict.worst_d2, -eps)
    out.documents["concavity"] = concavity_document(
        instance, 2, fine.profile, fine.margin, eps, fine.inequality.worst, rf,
        {"eps_inequality": eps_ineq, "remark_residual_coarse": rc,
         "wrong_sign_max": fine.wrong_sign, "remark_roundoff_floor": floor,
         "argmin_jump_cells": fine.profile.argmin_jump(problem.n_theta)})
    return out


def radial_verify(sol: rd.RadialSolution, n_t: int = 128, instance: str = "verify",
                  eps_cap=1e-5, margin_tol=1e-6, ineq_tol=1e-8) -> Outcome:
    n = sol.dim_n
    out = Outcome(instance)
    t, prof = radial_analysis(sol, n_t)
    _, coarse = radial_analysis(sol, n_t // 2)
    eps = cv.calibrate_eps(prof.d2f, coarse.d2f)
    margin = cv.corollary_margin(prof, n)
    _, LG = cv.radial_inequality_values(sol, n_t)
    _le(out, "concave", prof.max_d2f, min(eps, eps_cap))
    _ge(out, "corollary", margin.min_margin, -margin_tol)
    _le(out, "differential_inequality", float(LG.max()), ineq_tol)
    _, W = cv.radial_inequality_values(sol, n_t, beta=1.0 / (n - 1))
    if n > 2:
        out.check("wrong_sign_control", W.max() > 0, float(W.max()), 0.0)
    out.tables["concavity"] = concavity_table(prof, margin)
    out.documents["concavity"] = concavity_document(instance, n, prof, margin, eps,
                                                    float(LG.max()), None,
                                                    {"wrong_sign_max": float(W.max())})
    return out


# --------------------------------------------------------------------------
# convergence studies
# --------------------------------------------------------------------------

def observed_orders(sizes, errors, floor: float = 0.0):
    """Pairwise orders and a least-squares order over errors above ``floor``."""
    sizes = np.asarray(sizes, dtype=float)
    errors = np.asarray(errors, dtype=float)
    pair = np.log(errors[:-1] / errors[1:]) / np.log(sizes[1:] / sizes[:-1])
    use = errors > floor
    if use.sum() < 2:
        return pair, np.nan
    slope = np.polyfit(np.log(sizes[use]), np.log(errors[use]), 1)[0]
    return pair, float(-slope)


def convergence_experiment(study: str, base: int, doublings: int, declared=None,
                           t_order: int = 2, problem_factory=None,
                           floor: float = 1e-11) -> Outcome:
    if doublings < 1:
        raise ValueError("a convergence study needs at least one doubling")
    sizes = [base * 2**k for k in range(doublings + 1)]
    errors = []
    if study == "ring2d_radial":
        r_out = math.cosh(math.acosh(1.2) + 1.0)
        declared = t_order if declared is None else declared
        for N in sizes:
            p = rg.circles_problem(r_out, 1.2, n_theta=16, n_t=N, t_order=t_order)
            sol, _ = rg.solve(p)
            exact = np.cosh(np.arccosh(r_out) - p.t)
            errors.append(float(np.max(np.abs(sol.h - exact[:, None]))))
    elif study == "physical":
        declared = 1 if declared is None else declared
        for N in sizes:
            p = problem_factory(N) if problem_factory else rg.circles_problem(
                math.cosh(math.acosh(1.2) + 1.0), 1.2, (0.2, 0.0), n_theta=N, n_t=N)
            sol, _ = rg.solve(p)
            errors.append(rg.physical_residual(sol).max_residual)
    elif study == "codazzi":
        declared = 2 if declared is None else declared
        for M in sizes:
            grid = build_grid(3, M)
            slc = SupportSlice(grid, ellipsoid_support(grid.Y, (2.0, 1.5, 1.0)))
            errors.append(codazzi_residual(slc))
    else:
        raise ValueError(f"unknown convergence study {study!r}")
    pair, order = observed_orders(sizes, errors, floor)
    out = Outcome(f"convergence-{study}")
    rows = [(s, e, "" if k == 0 else pair[k - 1]) for k, (s, e) in enumerate(zip(sizes, errors))]
    out.tables["orders"] = (["resolution", "error", "observed_order"], rows)
    out.documents["summary"] = {"study": study, "sizes": sizes, "errors": errors,
                                "pairwise_orders": pair, "fitted_order": order,
                                "declared_order": declared}
    _ge(out, "observed_order", order, declared - 0.3)
    return out


# --------------------------------------------------------------------------
# elementary quadratic bound
# --------------------------------------------------------------------------

def lemma32_experiment(trials: int = 10_000, seed: int = 0, dims=(2, 3, 4, 5, 6),
                       tol: float = 1e-12) -> Outcome:
    rng = np.random.default_rng(seed)
    rows = []
    worst_excess = -np.inf
    worst_gap = 0.0
    for k in range(trials):
        d = dims[k % len(dims)]
        lam = rng.uniform(0.0, 2.0)
        mu = rng.uniform(-1.0, 1.0)
        b = rng.uniform(0.5, 3.0, d)
        c = rng.uniform(-1.0, 1.0, d)
        gamma, bound = cv.quadratic_bound(lam, mu, b, c)
        q, _ = cv.maximize_Q_bruteforce(lam, mu, b, c)
        worst_excess = max(worst_excess, q - bound)
        worst_gap = max(worst_gap, bound - q)
        rows.append((k, d, lam, mu, gamma, bound, q, q - bound))
    out = Outcome(f"lemma32-seed{seed}")
    out.tables["lemma32"] = (["trial", "dim", "lambda", "mu", "gamma", "bound",
                              "q_max_found", "excess"], rows)
    out.documents["summary"] = {"trials": trials, "seed": seed, "dims": list(dims),
                                "worst_excess": worst_excess,
                                "worst_attainment_gap": worst_gap, "tol": tol}
    _le(out, "bound_never_exceeded", worst_excess, tol)
    return out
