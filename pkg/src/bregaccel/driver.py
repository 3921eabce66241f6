"""Outer Bregman loops: accelerated (sbsa), accelerated with a forced final
subspace step (sbsa_lsa), and the plain variant (sb).

Each outer iteration shifts the subproblem right-hand side by the current
constraint residual, then either solves the subproblem by FISTA or, when the
switching test fires after the warmstart phase, takes a subspace step
(restricted CG plus projected line search) guarded by the safeguard policy.
Termination is on the two constraint-violation norms, checked at the top of
every iteration before the shift update.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import model, prox, subspace
from .errors import EmptyFaceError, LineSearchError, NumericalError

MODES = ("sbsa", "sbsa_lsa", "sb")
SAFEGUARDS = ("heuristic_accept", "strict_reject")


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances, caps and policy constants of the outer loops."""

    lam: float = 1.0
    tol_b: float = 1e-4
    max_outer: int = 10000
    warmstart_iters: int = 5
    eta: float = 0.1
    gamma0: float = 10.0
    fista: prox.FistaConfig = field(default_factory=prox.FistaConfig)
    tol_cg: float = 1e-2
    mode: str = "sbsa"
    safeguard: str = "heuristic_accept"
    admm_max_outer: int = 25000
    keep_trace: bool = True

    def __post_init__(self):
        if self.lam <= 0 or self.tol_b <= 0 or self.tol_cg <= 0:
            raise ValueError("lam, tol_b and tol_cg must be positive")
        if self.max_outer < 1 or self.admm_max_outer < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.warmstart_iters < 0:
            raise ValueError("warmstart_iters must be nonnegative")
        if self.eta <= 0 or self.gamma0 <= 0:
            raise ValueError("eta and gamma0 must be positive")
        if self.mode not in MODES + ("admm",):
            raise ValueError(f"mode must be one of {MODES + ('admm',)}")
        if self.safeguard not in SAFEGUARDS:
            raise ValueError(f"safeguard must be one of {SAFEGUARDS}")


@dataclass(frozen=True)
class IterationRecord:
    """Per-outer-iteration diagnostics (measured at the top, on x_k)."""

    k: int
    branch: str
    viol_constraint: float
    viol_split: float
    stacked_violation: float
    gamma: float
    inner_iters: int = 0
    h_value: float = float("nan")


@dataclass(frozen=True)
class SafeguardDecision:
    accept: bool
    force_fista_next: bool
    violation_increased: bool


@dataclass
class SolveReport:
    """Outcome of one solver run."""

    solver: str
    x_final: np.ndarray
    outer_iters: int
    accel_steps_taken: int
    accel_steps_rejected: int
    inner_iter_totals: dict
    termination: str
    wall_time: float
    objective: float
    trace: list = None
    final_state: object = None
    details: dict = field(default_factory=dict)


def safeguard(sp, x_prev, x_candidate, cfg):
    """Acceptance rule for an accelerated iterate.

    Compares the stacked constraint violation ||M x - s|| before and after.
    strict_reject refuses any increase; heuristic_accept (default) always
    accepts but asks for an unconditional FISTA step next time the violation
    grew.
    """
    return _safeguard_from(model.stacked_violation(sp, x_prev), sp,
                           x_candidate, cfg)


def _safeguard_from(viol_prev, sp, x_candidate, cfg):
    increased = model.stacked_violation(sp, x_candidate) > viol_prev
    if cfg.safeguard == "strict_reject":
        return SafeguardDecision(
            accept=not increased, force_fista_next=False, violation_increased=increased
        )
    return SafeguardDecision(
        accept=True, force_fista_next=increased, violation_increased=increased
    )


def _accel_candidate(sp, state, x, cfg, totals):
    """CG on the face restriction plus line search; returns the new point."""
    part = subspace.partition(x)
    reduced = subspace.restricted_problem(sp, state, part, x)
    w, cg_iters, _ = subspace.cg_solve(reduced, cfg.tol_cg)
    totals["cg"] += cg_iters
    z = np.zeros(sp.n_x)
    z[reduced.free] = w
    return subspace.line_search(sp, state, x, z, cfg.eta)


def solve(sp, cfg):
    """Run the configured outer loop on a stacked problem."""
    if cfg.mode not in MODES:
        raise ValueError(f"solve handles modes {MODES}; got {cfg.mode!r}")
    t0 = time.perf_counter()
    totals = {"fista": 0, "cg": 0}
    trace = [] if cfg.keep_trace else None
    details = {"violation_increase_accepts": 0, "linesearch_fallbacks": 0}
    gs = subspace.GammaState(gamma=cfg.gamma0)
    accel_taken = 0
    accel_rejected = 0
    force_fista = False
    last_was_accel = False
    termination = "max_outer"

    state = model.initial_state(sp, cfg.lam)
    x = np.zeros(sp.n_x)
    state_of_x = state
    outer = 0
    try:
        res = prox.fista_minimize(sp, state, x, cfg.fista)
        x = res.x
        totals["fista"] += res.iters
        outer = 1

        m_rows = sp.n_s - sp.q
        while True:
            # one residual against the original right-hand side feeds the
            # stopping test, the safeguard reference and the shift update
            resid = model.mat_vec(sp, x) - sp.s
            viol_a = float(np.linalg.norm(resid[:m_rows]))
            viol_d = float(np.linalg.norm(resid[m_rows:]))
            stacked = float(np.hypot(viol_a, viol_d))
            if viol_a <= cfg.tol_b and viol_d <= cfg.tol_b:
                termination = "converged"
                if cfg.mode == "sbsa_lsa" and not last_was_accel:
                    # polish with one forced subspace step before returning;
                    # keep it only if the stopping test still holds afterwards
                    # (a converged report must satisfy it at x_final)
                    state = model.advance_state(sp, state, x)
                    try:
                        cand, _ = _accel_candidate(sp, state, x, cfg, totals)
                    except (EmptyFaceError, LineSearchError):
                        details["final_accel_skipped"] = True
                    else:
                        va2, vd2 = model.constraint_violations(sp, cand)
                        decision = safeguard(sp, x, cand, cfg)
                        feasible = va2 <= cfg.tol_b and vd2 <= cfg.tol_b
                        if decision.accept and feasible:
                            x = cand
                            state_of_x = state
                            outer += 1
                            accel_taken += 1
                            if trace is not None:
                                trace.append(
                                    IterationRecord(
                                        k=outer,
                                        branch="accel_final",
                                        viol_constraint=viol_a,
                                        viol_split=viol_d,
                                        stacked_violation=stacked,
                                        gamma=gs.gamma,
                                    )
                                )
                        else:
                            if not decision.accept:
                                accel_rejected += 1
                            details["final_accel_skipped"] = True
                if trace is not None:
                    va, vd = model.constraint_violations(sp, x)
                    trace.append(
                        IterationRecord(
                            k=outer,
                            branch="converged",
                            viol_constraint=va,
                            viol_split=vd,
                            stacked_violation=model.stacked_violation(sp, x),
                            gamma=gs.gamma,
                        )
                    )
                break
            if outer >= cfg.max_outer:
                termination = "max_outer"
                break

            state = model.SubproblemState(s_k=state.s_k - resid, lam=state.lam)
            branch = "fista"
            accelerate = False
            if cfg.mode in ("sbsa", "sbsa_lsa") and outer > cfg.warmstart_iters:
                _, grad_g = model.smooth_value_grad(sp, state, x)
                meas = subspace.compute_beta_phi(grad_g, sp.delta, x)
                accelerate = subspace.switching_test(meas, gs)
                if force_fista:
                    accelerate = False
                    branch = "fista_forced"
                force_fista = False
                if accelerate and not np.any(x != 0.0):
                    accelerate = False

            inner = 0
            if accelerate:
                cg_before = totals["cg"]
                try:
                    cand, _ = _accel_candidate(sp, state, x, cfg, totals)
                except LineSearchError:
                    details["linesearch_fallbacks"] += 1
                    res = prox.fista_minimize(sp, state, x, cfg.fista)
                    x = res.x
                    totals["fista"] += res.iters
                    inner = res.iters
                    branch = "fista_after_linesearch_fail"
                    last_was_accel = False
                else:
                    decision = _safeguard_from(stacked, sp, cand, cfg)
                    inner = totals["cg"] - cg_before
                    if decision.accept:
                        x = cand
                        branch = "accel"
                        last_was_accel = True
                        accel_taken += 1
                        if decision.force_fista_next:
                            force_fista = True
                            details["violation_increase_accepts"] += 1
                    else:
                        accel_rejected += 1
                        res = prox.fista_minimize(sp, state, x, cfg.fista)
                        x = res.x
                        totals["fista"] += res.iters
                        inner += res.iters
                        branch = "accel_rejected_fista"
                        last_was_accel = False
            else:
                res = prox.fista_minimize(sp, state, x, cfg.fista)
                x = res.x
                totals["fista"] += res.iters
                inner = res.iters
                last_was_accel = False

            if trace is not None:
                trace.append(
                    IterationRecord(
                        k=outer,
                        branch=branch,
                        viol_constraint=viol_a,
                        viol_split=viol_d,
                        stacked_violation=stacked,
                        gamma=gs.gamma,
                        inner_iters=inner,
                        h_value=model.composite_value(sp, state, x),
                    )
                )
            outer += 1
            state_of_x = state
    except NumericalError as exc:
        return SolveReport(
            solver=cfg.mode,
            x_final=x,
            outer_iters=outer,
            accel_steps_taken=accel_taken,
            accel_steps_rejected=accel_rejected,
            inner_iter_totals=totals,
            termination="numerical_error",
            wall_time=time.perf_counter() - t0,
            objective=float("nan"),
            trace=trace,
            final_state=None,
            details={**details, "error": str(exc)},
        )

    return SolveReport(
        solver=cfg.mode,
        x_final=x,
        outer_iters=outer,
        accel_steps_taken=accel_taken,
        accel_steps_rejected=accel_rejected,
        inner_iter_totals=totals,
        termination=termination,
        wall_time=time.perf_counter() - t0,
        objective=model.original_objective(sp, x),
        trace=trace,
        final_state=state_of_x,
        details=details,
    )
