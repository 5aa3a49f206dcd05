"""Equilibrium coefficient solver for the three cooperation modes.

Two backends are available. "residual" collects the power-of-H balances of
each mode's substituted stationarity equations from first principles and
solves them numerically with stable-root selection; it is the authoritative
path. "paper-closed-form" evaluates the published closed-form coefficient
expressions verbatim for discrepancy reporting (see closed_form.py); several
of those printed expressions are internally inconsistent, which is exactly
what that backend is for measuring.

Conventions for the Stackelberg follower:

* "standard-cost-share" (default): the follower's first-order condition keeps
  the (1 - x_f) cost-share factor, E_f = (eta*H + mu_f*V_f')/((1 - x_f)*
  lambda_f). This is the convention consistent with the subsidy-ratio formula
  x_f = (2*V_r' - V_f' - eta*H/mu_f)/(2*V_r' + V_f' + eta*H/mu_f).
* "paper-printed": solves the published substituted equations exactly as
  printed (they carry an extra mu_f factor on the quadratic revenue terms)
  and uses the published follower rule without the cost-share factor,
  selectable for comparison via residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import optimize

from .model import (
    DerivedConstants,
    FeedbackPolicy,
    GameMode,
    GameSolution,
    ModelParams,
    QuadraticValue,
    SolutionDiagnostics,
    derive_constants,
    validate_params,
)

__all__ = [
    "SolverConfig",
    "CoefficientSystem",
    "SolverError",
    "ComplexRootError",
    "UnstableModelError",
    "solve",
    "solve_decentralized",
    "solve_stackelberg",
    "solve_centralized",
    "select_stable_root",
    "hjb_residual",
    "residual_scan",
    "decentralized_system",
    "stackelberg_system",
    "centralized_system",
]

BACKEND_RESIDUAL = "residual"
BACKEND_CLOSED_FORM = "paper-closed-form"
CONVENTION_STANDARD = "standard-cost-share"
CONVENTION_PRINTED = "paper-printed"

_BACKEND_ALIASES = {"residual": BACKEND_RESIDUAL,
                    "paper": BACKEND_CLOSED_FORM,
                    "paper-closed-form": BACKEND_CLOSED_FORM}


class SolverError(RuntimeError):
    """Base class for equilibrium-solver failures."""


class ComplexRootError(SolverError):
    """The coefficient discriminant is negative; no real branch exists."""

    def __init__(self, label: str, discriminant: float):
        self.label = label
        self.discriminant = discriminant
        super().__init__(
            f"complex root: discriminant {label} = {discriminant:.6g} < 0")


class UnstableModelError(SolverError):
    """No candidate branch yields a stable closed loop (alpha < 0)."""

    def __init__(self, alphas: Sequence[float]):
        self.alphas = list(alphas)
        super().__init__(
            "unstable model: no branch with alpha < 0, candidate drift slopes "
            + ", ".join(f"{a:.6g}" for a in self.alphas))


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    tolerance bounds the infinity norm of the collected balance residuals,
    measured against 1 + |rho*V coefficient| per equation so money-scale
    balances stay representable in floating point. hjb_tolerance bounds the
    normalized stationarity-equation residual scan recorded in diagnostics.
    """

    backend: str = BACKEND_RESIDUAL
    tolerance: float = 1e-12
    hjb_tolerance: float = 1e-8
    follower_convention: str = CONVENTION_STANDARD
    max_iter: int = 100

    def __post_init__(self):
        if self.backend not in _BACKEND_ALIASES:
            raise ValueError(f"backend must be one of {sorted(set(_BACKEND_ALIASES))}, "
                             f"got {self.backend!r}")
        object.__setattr__(self, "backend", _BACKEND_ALIASES[self.backend])
        if self.follower_convention not in (CONVENTION_STANDARD, CONVENTION_PRINTED):
            raise ValueError("follower_convention must be "
                             f"{CONVENTION_STANDARD!r} or {CONVENTION_PRINTED!r}, "
                             f"got {self.follower_convention!r}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if not self.hjb_tolerance > 0:
            raise ValueError(f"hjb_tolerance must be > 0, got {self.hjb_tolerance}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class CoefficientSystem:
    """Collected power-of-H balances of one mode's substituted equations.

    One residual per (role, power) pair, each mapping the full coefficient
    vector to (left side - right side) of that balance.
    """

    mode: GameMode
    names: tuple
    labels: tuple
    equations: tuple

    def residuals(self, coeffs) -> np.ndarray:
        v = np.asarray(coeffs, dtype=float)
        return np.array([eq(v) for eq in self.equations], dtype=float)

    def scales(self, coeffs) -> np.ndarray:
        """Per-equation normalization 1 + |rho*V coefficient|."""
        v = np.asarray(coeffs, dtype=float)
        return np.array([1.0 + abs(s(v)) for s in self._lhs], dtype=float)


def _system(mode, names, labels, equations, lhs):
    sys = CoefficientSystem(mode=mode, names=tuple(names), labels=tuple(labels),
                            equations=tuple(equations))
    object.__setattr__(sys, "_lhs", tuple(lhs))
    return sys


# ---------------------------------------------------------------------------
# collected balance systems
# ---------------------------------------------------------------------------

def decentralized_system(params: ModelParams) -> CoefficientSystem:
    """Balances for farmer (A, B, C quadratic) and retailer (M, N linear)."""
    c = derive_constants(params)
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    d, r = params.delta, params.rho
    eta, k1, k2 = c.eta, c.k1, c.k2
    pf, pr, pc = params.p_f, params.p_r, params.p_c

    def f2(v):
        A = v[0]
        return r * A - (eta ** 2 / (2 * lf) + 2 * A * (mf * eta / lf - d)
                        + 2 * A ** 2 * mf ** 2 / lf)

    def f1(v):
        A, B, M = v[0], v[1], v[3]
        return r * B - ((pf + pc) * k1
                        + B * (mf * eta / lf + 2 * A * mf ** 2 / lf - d)
                        + 2 * A * M * mr ** 2 / lr)

    def f0(v):
        B, C, M = v[1], v[2], v[3]
        return r * C - (mf ** 2 * B ** 2 / (2 * lf) + B * M * mr ** 2 / lr)

    def r1(v):
        A, M = v[0], v[3]
        return r * M - (pr * k2 + M * (mf * eta / lf + 2 * A * mf ** 2 / lf - d))

    def r0(v):
        A, B, M, N = v[0], v[1], v[3], v[4]
        return r * N - (M * mf ** 2 * B / lf + mr ** 2 * M ** 2 / (2 * lr))

    lhs = [lambda v: params.rho * v[0], lambda v: params.rho * v[1],
           lambda v: params.rho * v[2], lambda v: params.rho * v[3],
           lambda v: params.rho * v[4]]
    return _system(GameMode.DECENTRALIZED, ("A", "B", "C", "M", "N"),
                   ("farmer H^2", "farmer H^1", "farmer H^0",
                    "retailer H^1", "retailer H^0"),
                   (f2, f1, f0, r1, r0), lhs)


def stackelberg_system(params: ModelParams,
                       convention: str = CONVENTION_STANDARD) -> CoefficientSystem:
    """Balances for farmer (A, B, C) and leader (M, N, F), both quadratic.

    Under "paper-printed" the quadratic revenue constants eta^2/(4 lambda_f)
    and eta^2/(8 lambda_f) carry the published extra mu_f factor.
    """
    c = derive_constants(params)
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    d, r = params.delta, params.rho
    eta, k1, k2 = c.eta, c.k1, c.k2
    pf, pr, pc = params.p_f, params.p_r, params.p_c
    s = mf if convention == CONVENTION_PRINTED else 1.0

    def f2(v):
        A, M = v[0], v[3]
        return r * A - (s * eta ** 2 / (4 * lf) + mf * eta * (A + M) / lf
                        + mf ** 2 * (A ** 2 + 2 * A * M) / lf
                        + 4 * A * M * mr ** 2 / lr - 2 * d * A)

    def f1(v):
        A, B, M, N = v[0], v[1], v[3], v[4]
        return r * B - ((pf + pc) * k1
                        + mf * ((eta + 2 * mf * A) * (B + N) + 2 * mf * M * B) / (2 * lf)
                        + 2 * mr ** 2 * (A * N + M * B) / lr - d * B)

    def f0(v):
        B, C, N = v[1], v[2], v[4]
        return r * C - (mf ** 2 * B * (B + 2 * N) / (4 * lf) + mr ** 2 * B * N / lr)

    def l2(v):
        A, M = v[0], v[3]
        return r * M - (s * eta ** 2 / (8 * lf) + mf * eta * (A + 2 * M) / (2 * lf)
                        + mf ** 2 * (A + 2 * M) ** 2 / (2 * lf)
                        + 2 * mr ** 2 * M ** 2 / lr - 2 * d * M)

    def l1(v):
        A, B, M, N = v[0], v[1], v[3], v[4]
        phi1 = eta + 2 * mf * (A + 2 * M)
        return r * N - (pr * k2 + mf * phi1 * (B + 2 * N) / (4 * lf)
                        + 2 * mr ** 2 * M * N / lr - d * N)

    def l0(v):
        B, N, F = v[1], v[4], v[5]
        return r * F - (mf ** 2 * (B + 2 * N) ** 2 / (8 * lf)
                        + mr ** 2 * N ** 2 / (2 * lr))

    lhs = [lambda v, i=i: params.rho * v[i] for i in (0, 1, 2, 3, 4, 5)]
    return _system(GameMode.STACKELBERG, ("A", "B", "C", "M", "N", "F"),
                   ("farmer H^2", "farmer H^1", "farmer H^0",
                    "retailer H^2", "retailer H^1", "retailer H^0"),
                   (f2, f1, f0, l2, l1, l0), lhs)


def centralized_system(params: ModelParams) -> CoefficientSystem:
    """Balances for the joint quadratic value (A, B, C)."""
    c = derive_constants(params)
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    d, r = params.delta, params.rho
    eta, k1, k2 = c.eta, c.k1, c.k2
    pf, pr, pc = params.p_f, params.p_r, params.p_c

    def j2(v):
        A = v[0]
        return r * A - ((eta + 2 * mf * A) ** 2 / (2 * lf)
                        + 2 * A ** 2 * mr ** 2 / lr - 2 * d * A)

    def j1(v):
        A, B = v[0], v[1]
        return r * B - ((pf + pc) * k1 + pr * k2
                        + B * ((eta + 2 * mf * A) * mf / lf + 2 * A * mr ** 2 / lr - d))

    def j0(v):
        B, C = v[1], v[2]
        return r * C - B ** 2 * (mf ** 2 / (2 * lf) + mr ** 2 / (2 * lr))

    lhs = [lambda v, i=i: params.rho * v[i] for i in (0, 1, 2)]
    return _system(GameMode.CENTRALIZED, ("A", "B", "C"),
                   ("joint H^2", "joint H^1", "joint H^0"), (j2, j1, j0), lhs)


# ---------------------------------------------------------------------------
# root machinery
# ---------------------------------------------------------------------------

def select_stable_root(candidates: Sequence, drift_slope: Callable):
    """Pick the unique candidate whose closed-loop drift slope is negative.

    If several candidates are stable the one with the smallest |leading
    coefficient| is returned (callers record the ambiguity). Raises
    UnstableModelError listing every candidate slope when none is stable.
    """
    if not candidates:
        raise SolverError("select_stable_root: no candidates")
    slopes = [float(drift_slope(c)) for c in candidates]
    stable = [(c, a) for c, a in zip(candidates, slopes) if a < 0.0]
    if not stable:
        raise UnstableModelError(slopes)
    chosen, _ = min(stable, key=lambda pair: abs(pair[0][0]))
    return chosen


def _stable_quadratic_roots(qa: float, qb: float, qc: float, label: str,
                            scale: float = 1.0):
    """Real roots of qa*x^2 + qb*x + qc = 0 via the cancellation-safe form.

    scale converts the raw discriminant to the published normalization for
    error reporting and diagnostics.
    """
    if qa == 0.0:
        if qb == 0.0:
            return ([0.0], 0.0) if qc == 0.0 else ([], 0.0)
        return [-qc / qb], 0.0
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        raise ComplexRootError(label, disc * scale)
    sq = math.sqrt(disc)
    if qb >= 0.0:
        q = -0.5 * (qb + sq)
    else:
        q = -0.5 * (qb - sq)
    roots = {q / qa}
    if q != 0.0:
        roots.add(qc / q)
    elif qc == 0.0:
        roots.add(0.0)
    return sorted(roots), disc


def _polish(system: CoefficientSystem, guess, tolerance: float):
    sol = optimize.root(system.residuals, np.asarray(guess, dtype=float),
                        method="hybr", tol=1e-14)
    cand = sol.x if sol.success else np.asarray(guess, dtype=float)
    res = system.residuals(cand)
    raw = system.residuals(np.asarray(guess, dtype=float))
    if np.max(np.abs(res)) > np.max(np.abs(raw)):
        cand, res = np.asarray(guess, dtype=float), raw
    bound = tolerance * system.scales(cand)
    if np.any(np.abs(res) > bound):
        worst = int(np.argmax(np.abs(res) / bound))
        raise SolverError(
            f"collected balance {system.labels[worst]} residual {res[worst]:.3e} "
            f"exceeds tolerance {tolerance:.1e}")
    return cand, float(np.max(np.abs(res) / system.scales(cand)))


# ---------------------------------------------------------------------------
# mode solvers (residual backend)
# ---------------------------------------------------------------------------

def _gd_candidates(params: ModelParams):
    c = derive_constants(params)
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    d, r, eta = params.delta, params.rho, c.eta
    qa = 2.0 * mf ** 2 / lf
    qb = 2.0 * mf * eta / lf - 2.0 * d - r
    qc = eta ** 2 / (2.0 * lf)
    scale = 4.0 * lf ** 2
    roots, disc = _stable_quadratic_roots(qa, qb, qc, "Delta^GD", scale)
    if not roots:
        raise SolverError("degenerate quadratic balance for A")
    candidates = []
    for A in roots:
        slope = mf * (eta + 2.0 * mf * A) / lf - d
        den = r - slope
        if abs(den) < 1e-14 * (1.0 + abs(r)):
            continue
        M = params.p_r * c.k2 / den
        B = ((params.p_f + params.p_c) * c.k1 + 2.0 * A * M * mr ** 2 / lr) / den
        C = (mf ** 2 * B ** 2 / (2.0 * lf) + B * M * mr ** 2 / lr) / r
        N = (M * mf ** 2 * B / lf + mr ** 2 * M ** 2 / (2.0 * lr)) / r
        candidates.append((A, B, C, M, N))
    # scaled to match the published branch expression (4 lambda_f^2 factor)
    return candidates, {"Delta^GD": disc * scale}


def _gd_alpha(params: ModelParams):
    c = derive_constants(params)

    def slope(cand):
        A = cand[0]
        return params.mu_f * (c.eta + 2.0 * params.mu_f * A) / params.lambda_f \
            - params.delta
    return slope


def _gd_assemble(params: ModelParams, coeffs, diag: SolutionDiagnostics):
    c = derive_constants(params)
    A, B, C, M, N = coeffs
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    pol_f = FeedbackPolicy(g1=(c.eta + 2.0 * A * mf) / lf, g0=mf * B / lf)
    pol_r = FeedbackPolicy(g1=0.0, g0=mr * M / lr)
    alpha = mf * pol_f.g1 + mr * pol_r.g1 - params.delta
    beta = mf * pol_f.g0 + mr * pol_r.g0
    values = {"farmer": QuadraticValue(A, B, C, role="farmer"),
              "retailer": QuadraticValue(0.0, M, N, role="retailer")}
    return GameSolution(mode=GameMode.DECENTRALIZED, params=params,
                        values=values, policies={"farmer": pol_f, "retailer": pol_r},
                        alpha=alpha, beta=beta, H_d=-beta / alpha,
                        diagnostics=diag)


def solve_decentralized(params: ModelParams,
                        cfg: SolverConfig = SolverConfig()) -> GameSolution:
    """Feedback equilibrium with simultaneous play and no cost sharing."""
    validate_params(params)
    if cfg.backend == BACKEND_CLOSED_FORM:
        from . import closed_form
        return closed_form.solve_printed(GameMode.DECENTRALIZED, params, cfg)
    system = decentralized_system(params)
    candidates, discs = _gd_candidates(params)
    alpha_of = _gd_alpha(params)
    chosen = select_stable_root(candidates, alpha_of)
    coeffs, worst = _polish(system, chosen, cfg.tolerance)
    diag = _diagnostics(cfg, candidates, alpha_of, chosen, discs, worst)
    sol = _gd_assemble(params, coeffs, diag)
    return _finish(sol, params, cfg)


def _gs_quartic_candidates(params: ModelParams, convention: str):
    """All real (A, M) branches of the coupled quadratic balances.

    The farmer H^2 balance is linear in M, so M = num(A)/den(A); substituting
    into the leader H^2 balance and clearing den(A)^2 leaves a quartic in A,
    enumerated through the companion matrix.
    """
    c = derive_constants(params)
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    d, r, eta = params.delta, params.rho, c.eta
    s = mf if convention == CONVENTION_PRINTED else 1.0

    # num, den as coefficient arrays (low order first)
    num = np.array([-s * eta ** 2 / (4 * lf),
                    (r + 2 * d) - mf * eta / lf,
                    -mf ** 2 / lf])
    den = np.array([mf * eta / lf, 2 * mf ** 2 / lf + 4 * mr ** 2 / lr])

    pmul, padd = npoly.polymul, npoly.polyadd
    A_poly = np.array([0.0, 1.0])
    aden_plus_2num = padd(pmul(A_poly, den), 2.0 * num)
    quartic = padd(
        padd((r + 2 * d) * pmul(num, den),
             -s * eta ** 2 / (8 * lf) * pmul(den, den)),
        padd(-mf * eta / (2 * lf) * pmul(aden_plus_2num, den),
             padd(-mf ** 2 / (2 * lf) * pmul(aden_plus_2num, aden_plus_2num),
                  -2 * mr ** 2 / lr * pmul(num, num))))

    coeffs = np.trim_zeros(quartic, "b")
    if coeffs.size <= 1:
        roots = np.array([0.0])
    else:
        roots = npoly.polyroots(coeffs)
    scale = 1.0 + np.abs(roots)
    real = np.unique(np.real(roots[np.abs(np.imag(roots)) <= 1e-9 * scale]))

    def f2_res(A, M):
        return (r + 2 * d) * A - s * eta ** 2 / (4 * lf) - mf * eta * (A + M) / lf \
            - mf ** 2 * (A ** 2 + 2 * A * M) / lf - 4 * A * M * mr ** 2 / lr

    def l2_res(A, M):
        return (r + 2 * d) * M - s * eta ** 2 / (8 * lf) \
            - mf * eta * (A + 2 * M) / (2 * lf) \
            - mf ** 2 * (A + 2 * M) ** 2 / (2 * lf) - 2 * mr ** 2 * M ** 2 / lr

    pairs = []
    for A in real:
        dval = npoly.polyval(A, den)
        if abs(dval) > 1e-12 * (1.0 + abs(A)):
            seeds = [npoly.polyval(A, num) / dval]
        else:
            # den(A) ~ 0: recover M from the leader balance, quadratic in M
            qa = -mf ** 2 * 2.0 / lf - 2.0 * mr ** 2 / lr
            qb = (r + 2 * d) - mf * eta / lf - mf ** 2 * 2.0 * A / lf
            qc = -s * eta ** 2 / (8 * lf) - mf * eta * A / (2 * lf) \
                - mf ** 2 * A ** 2 / (2 * lf)
            try:
                seeds, _ = _stable_quadratic_roots(qa, qb, qc, "Delta^GS(M|A)")
            except ComplexRootError:
                continue
        for M0 in seeds:
            sol = optimize.root(lambda v: [f2_res(v[0], v[1]), l2_res(v[0], v[1])],
                                [A, M0], method="hybr", tol=1e-14)
            # hybr reports failure when the seed is already at the root; the
            # residual gate below is the actual acceptance test
            A1, M1 = sol.x if sol.success else (A, M0)
            if abs(f2_res(A1, M1)) > 1e-8 * (1 + abs(A1)) or \
               abs(l2_res(A1, M1)) > 1e-8 * (1 + abs(M1)):
                continue
            if any(np.allclose((A1, M1), p, rtol=1e-8, atol=1e-10) for p in pairs):
                continue
            pairs.append((A1, M1))
    return pairs


def _gs_full_candidate(params: ModelParams, A: float, M: float):
    """Chain (B, N) from the linear balances, then (C, F)."""
    c = derive_constants(params)
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    d, r, eta = params.delta, params.rho, c.eta
    phi1 = eta + 2.0 * mf * (A + 2.0 * M)
    a11 = (r + d) - mf * (eta + 2.0 * mf * A) / (2.0 * lf) \
        - mf ** 2 * M / lf - 2.0 * mr ** 2 * M / lr
    a12 = -mf * (eta + 2.0 * mf * A) / (2.0 * lf) - 2.0 * mr ** 2 * A / lr
    a21 = -mf * phi1 / (4.0 * lf)
    a22 = (r + d) - mf * phi1 / (2.0 * lf) - 2.0 * mr ** 2 * M / lr
    rhs = np.array([(params.p_f + params.p_c) * c.k1, params.p_r * c.k2])
    mat = np.array([[a11, a12], [a21, a22]])
    if abs(np.linalg.det(mat)) < 1e-12 * (1.0 + np.abs(mat).max() ** 2):
        return None
    B, N = np.linalg.solve(mat, rhs)
    C = (mf ** 2 * B * (B + 2.0 * N) / (4.0 * lf) + mr ** 2 * B * N / lr) / r
    F = (mf ** 2 * (B + 2.0 * N) ** 2 / (8.0 * lf) + mr ** 2 * N ** 2 / (2.0 * lr)) / r
    return (A, B, C, M, N, F)


def _gs_alpha(params: ModelParams, convention: str):
    c = derive_constants(params)
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r

    def slope(cand):
        A, M = cand[0], cand[3]
        if convention == CONVENTION_PRINTED:
            g1f = (c.eta + 2.0 * mf * A) / lf
        else:
            g1f = (c.eta + 2.0 * mf * (A + 2.0 * M)) / (2.0 * lf)
        return mf * g1f + mr * (2.0 * mr * M / lr) - params.delta
    return slope


def _gs_assemble(params: ModelParams, convention: str, coeffs,
                 diag: SolutionDiagnostics):
    c = derive_constants(params)
    A, B, C, M, N, F = coeffs
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    if convention == CONVENTION_PRINTED:
        pol_f = FeedbackPolicy(g1=(c.eta + 2.0 * mf * A) / lf, g0=mf * B / lf)
    else:
        pol_f = FeedbackPolicy(g1=(c.eta + 2.0 * mf * (A + 2.0 * M)) / (2.0 * lf),
                               g0=mf * (B + 2.0 * N) / (2.0 * lf))
    pol_r = FeedbackPolicy(g1=2.0 * mr * M / lr, g0=mr * N / lr,
                           n1=4.0 * M - 2.0 * A - c.eta / mf, n0=2.0 * N - B,
                           d1=4.0 * M + 2.0 * A + c.eta / mf, d0=2.0 * N + B)
    alpha = mf * pol_f.g1 + mr * pol_r.g1 - params.delta
    beta = mf * pol_f.g0 + mr * pol_r.g0
    values = {"farmer": QuadraticValue(A, B, C, role="farmer"),
              "retailer": QuadraticValue(M, N, F, role="retailer")}
    return GameSolution(mode=GameMode.STACKELBERG, params=params,
                        values=values, policies={"farmer": pol_f, "retailer": pol_r},
                        alpha=alpha, beta=beta, H_d=-beta / alpha,
                        diagnostics=diag)


def solve_stackelberg(params: ModelParams,
                      cfg: SolverConfig = SolverConfig()) -> GameSolution:
    """Leader-follower equilibrium with the retailer's cost-share subsidy."""
    validate_params(params)
    if cfg.backend == BACKEND_CLOSED_FORM:
        from . import closed_form
        return closed_form.solve_printed(GameMode.STACKELBERG, params, cfg)
    convention = cfg.follower_convention
    system = stackelberg_system(params, convention)
    pairs = _gs_quartic_candidates(params, convention)
    if not pairs:
        raise SolverError("no real (A, M) branch of the coupled quadratic balances")
    candidates = []
    for A, M in pairs:
        full = _gs_full_candidate(params, A, M)
        if full is not None:
            candidates.append(full)
    if not candidates:
        raise SolverError("all (A, M) branches lead to singular linear balances")
    alpha_of = _gs_alpha(params, convention)
    chosen = select_stable_root(candidates, alpha_of)
    coeffs, worst = _polish(system, chosen, cfg.tolerance)
    diag = _diagnostics(cfg, candidates, alpha_of, chosen, {}, worst)
    sol = _gs_assemble(params, convention, coeffs, diag)
    _attach_printed_gs_discriminants(sol, params, coeffs)
    _flag_subsidy_range(sol, diag)
    return _finish(sol, params, cfg)


def _attach_printed_gs_discriminants(sol: GameSolution, params: ModelParams,
                                     coeffs):
    """House the published discriminant expressions, evaluated at this
    solution's coefficients, in the diagnostics (informational only: the
    leader-follower branch structure is resolved by root enumeration, not by
    those expressions)."""
    from . import closed_form
    A, B, C, M, N, F = coeffs
    printed = closed_form.printed_stackelberg(
        params, {"A": A, "B": B, "C": C, "M": M, "N": N, "F": F})
    sol.diagnostics.discriminants["Delta^GS1"] = float(printed["Delta^GS1"])
    sol.diagnostics.discriminants["Delta^GS2"] = float(printed["Delta^GS2"])


def _flag_subsidy_range(sol: GameSolution, diag: SolutionDiagnostics,
                        n: int = 81):
    """Flag, without failing, states where x_f leaves [0, 1)."""
    pol = sol.policies["retailer"]
    hi = 2.0 * sol.H_d if sol.H_d > 0 else 1.0
    grid = np.linspace(0.0, hi, n)
    den = pol.d1 * grid + pol.d0
    if np.all(np.abs(den) < 1e-12):
        diag.flags.append("subsidy rule is 0/0 at every state (undefined subsidy)")
        return
    with np.errstate(divide="ignore", invalid="ignore"):
        x = (pol.n1 * grid + pol.n0) / den
    bad = ~((x >= 0.0) & (x < 1.0))
    if np.any(bad):
        lo_bad, hi_bad = grid[bad][0], grid[bad][-1]
        diag.flags.append(
            f"x_f outside [0, 1) on part of [0, {hi:.4g}] "
            f"(first at H = {lo_bad:.4g}, last at H = {hi_bad:.4g})")


def _gc_candidates(params: ModelParams):
    c = derive_constants(params)
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    d, r, eta = params.delta, params.rho, c.eta
    qa = 2.0 * (mf ** 2 / lf + mr ** 2 / lr)
    qb = 2.0 * mf * eta / lf - 2.0 * d - r
    qc = eta ** 2 / (2.0 * lf)
    scale = (lf * lr) ** 2
    roots, disc = _stable_quadratic_roots(qa, qb, qc, "Delta^GC", scale)
    candidates = []
    for A in roots:
        slope = mf * eta / lf + A * qa - d
        den = r - slope
        if abs(den) < 1e-14 * (1.0 + abs(r)):
            continue
        B = ((params.p_f + params.p_c) * c.k1 + params.p_r * c.k2) / den
        C = B ** 2 * (mf ** 2 / (2.0 * lf) + mr ** 2 / (2.0 * lr)) / r
        candidates.append((A, B, C))
    # scaled to the published-branch normalization (lambda_f^2 lambda_r^2 factor)
    return candidates, {"Delta^GC": disc * scale}


def _gc_alpha(params: ModelParams):
    c = derive_constants(params)
    qa = 2.0 * (params.mu_f ** 2 / params.lambda_f
                + params.mu_r ** 2 / params.lambda_r)

    def slope(cand):
        return params.mu_f * c.eta / params.lambda_f + cand[0] * qa - params.delta
    return slope


def _gc_assemble(params: ModelParams, coeffs, diag: SolutionDiagnostics):
    c = derive_constants(params)
    A, B, C = coeffs
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    pol_f = FeedbackPolicy(g1=(c.eta + 2.0 * A * mf) / lf, g0=mf * B / lf)
    pol_r = FeedbackPolicy(g1=2.0 * mr * A / lr, g0=mr * B / lr)
    alpha = mf * pol_f.g1 + mr * pol_r.g1 - params.delta
    beta = mf * pol_f.g0 + mr * pol_r.g0
    values = {"joint": QuadraticValue(A, B, C, role="joint")}
    return GameSolution(mode=GameMode.CENTRALIZED, params=params,
                        values=values, policies={"farmer": pol_f, "retailer": pol_r},
                        alpha=alpha, beta=beta, H_d=-beta / alpha,
                        diagnostics=diag)


def solve_centralized(params: ModelParams,
                      cfg: SolverConfig = SolverConfig()) -> GameSolution:
    """Joint profit maximization of the whole chain."""
    validate_params(params)
    if cfg.backend == BACKEND_CLOSED_FORM:
        from . import closed_form
        return closed_form.solve_printed(GameMode.CENTRALIZED, params, cfg)
    system = centralized_system(params)
    candidates, discs = _gc_candidates(params)
    if not candidates:
        raise SolverError("degenerate quadratic balance for A")
    alpha_of = _gc_alpha(params)
    chosen = select_stable_root(candidates, alpha_of)
    coeffs, worst = _polish(system, chosen, cfg.tolerance)
    diag = _diagnostics(cfg, candidates, alpha_of, chosen, discs, worst)
    sol = _gc_assemble(params, coeffs, diag)
    return _finish(sol, params, cfg)


_SOLVERS = {GameMode.DECENTRALIZED: solve_decentralized,
            GameMode.STACKELBERG: solve_stackelberg,
            GameMode.CENTRALIZED: solve_centralized}


def solve(mode, params: ModelParams, cfg: SolverConfig = SolverConfig()) -> GameSolution:
    """Solve one mode; ``mode`` may be a GameMode or its short string."""
    if not isinstance(mode, GameMode):
        mode = GameMode.from_string(str(mode))
    return _SOLVERS[mode](params, cfg)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def hjb_residual(solution: GameSolution, params: ModelParams, H):
    """Per-role signed residuals rho*V(H) - RHS(H) of the stationarity equations.

    The right-hand side is rebuilt from the instantaneous payoffs and the
    solution's own policies (the maximized form), so residual-backend
    solutions are near zero by construction while corrupted or printed-form
    coefficients show up immediately. Solutions solved under the
    "paper-printed" convention are measured against the printed substituted
    equations, which is the system they solve. Accepts scalar or array H.
    """
    H = np.asarray(H, dtype=float)
    c = derive_constants(params)
    mode = solution.mode
    convention = solution.diagnostics.convention
    e_f = solution.policies["farmer"].effort(H)
    e_r = solution.policies["retailer"].effort(H)
    drift = params.mu_f * e_f + params.mu_r * e_r - params.delta * H
    out = {}
    if mode is GameMode.CENTRALIZED:
        V = solution.values["joint"]
        rate = ((params.p_f + params.p_c) * c.k1 * H + params.p_r * c.k2 * H
                + c.eta * H * e_f
                - 0.5 * params.lambda_f * e_f ** 2 - 0.5 * params.lambda_r * e_r ** 2)
        out["joint"] = params.rho * V.value(H) - rate - V.marginal(H) * drift
        return out
    Vf, Vr = solution.values["farmer"], solution.values["retailer"]
    if mode is GameMode.DECENTRALIZED:
        rate_f = ((params.p_f + params.p_c) * c.k1 * H + c.eta * H * e_f
                  - 0.5 * params.lambda_f * e_f ** 2)
        rate_r = params.p_r * c.k2 * H - 0.5 * params.lambda_r * e_r ** 2
        out["farmer"] = params.rho * Vf.value(H) - rate_f - Vf.marginal(H) * drift
        out["retailer"] = params.rho * Vr.value(H) - rate_r - Vr.marginal(H) * drift
        return out
    if convention == CONVENTION_PRINTED:
        return _printed_substituted_residual(solution, params, H)
    x = solution.policies["retailer"].subsidy(H)
    cost_f = 0.5 * params.lambda_f * e_f ** 2
    # an undefined share of a zero cost transfers zero
    shared = np.where(cost_f == 0.0, 0.0, x * cost_f)
    rate_f = ((params.p_f + params.p_c) * c.k1 * H + c.eta * H * e_f
              - (cost_f - shared))
    rate_r = (params.p_r * c.k2 * H - 0.5 * params.lambda_r * e_r ** 2
              - shared)
    out["farmer"] = params.rho * Vf.value(H) - rate_f - Vf.marginal(H) * drift
    out["retailer"] = params.rho * Vr.value(H) - rate_r - Vr.marginal(H) * drift
    return out


def _printed_substituted_residual(solution: GameSolution, params: ModelParams, H):
    c = derive_constants(params)
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    eta = c.eta
    Vf, Vr = solution.values["farmer"], solution.values["retailer"]
    vfp, vrp = Vf.marginal(H), Vr.marginal(H)
    rhs_f = (mf * eta ** 2 / (4 * lf) * H ** 2
             + ((params.p_f + params.p_c) * c.k1 - params.delta * vfp
                + mf * eta * (vfp + vrp) / (2 * lf)) * H
             + mr ** 2 * vfp * vrp / lr
             + mf ** 2 * (2 * vrp * vfp + vfp ** 2) / (4 * lf))
    rhs_r = (mf * eta ** 2 / (8 * lf) * H ** 2
             + (params.p_r * c.k2 + mf * eta * (vfp + 2 * vrp) / (4 * lf)
                - params.delta * vrp) * H
             + mr ** 2 * vrp ** 2 / (2 * lr)
             + mf ** 2 * (vfp + 2 * vrp) ** 2 / (8 * lf))
    return {"farmer": params.rho * Vf.value(H) - rhs_f,
            "retailer": params.rho * Vr.value(H) - rhs_r}


def residual_scan(solution: GameSolution, params: ModelParams,
                  n: int = 100) -> float:
    """Max normalized |residual| over n states in [0, 2*H_d]."""
    hi = 2.0 * solution.H_d if solution.H_d > 0 else 1.0
    H = np.linspace(0.0, hi, n)
    worst = 0.0
    res = hjb_residual(solution, params, H)
    for role, r in res.items():
        V = solution.values[role]
        norm = np.abs(r) / (1.0 + np.abs(params.rho * V.value(H)))
        worst = max(worst, float(np.max(norm)))
    return worst


# ---------------------------------------------------------------------------
# shared assembly helpers
# ---------------------------------------------------------------------------

def _diagnostics(cfg: SolverConfig, candidates, alpha_of, chosen, discs,
                 worst_balance: float) -> SolutionDiagnostics:
    cand_info = [{"coefficients": [float(x) for x in c],
                  "alpha": float(alpha_of(c))} for c in candidates]
    stable = [c for c in candidates if alpha_of(c) < 0.0]
    diag = SolutionDiagnostics(
        backend=BACKEND_RESIDUAL,
        convention=cfg.follower_convention,
        root_branch="negative square-root branch (stable, alpha < 0)",
        discriminants={k: float(v) for k, v in discs.items()},
        candidates=cand_info,
        ambiguous_stable_roots=len(stable) > 1,
    )
    if len(stable) > 1:
        diag.notes.append(
            f"{len(stable)} stable branches; picked smallest |leading coefficient|")
    diag.notes.append(f"max collected-balance residual (normalized) {worst_balance:.3e}")
    return diag


def _finish(sol: GameSolution, params: ModelParams, cfg: SolverConfig) -> GameSolution:
    if not sol.alpha < 0.0:
        raise UnstableModelError([sol.alpha])
    scan = residual_scan(sol, params)
    sol.diagnostics.max_hjb_residual = scan
    if scan > cfg.hjb_tolerance:
        raise SolverError(
            f"stationarity-equation residual scan {scan:.3e} exceeds "
            f"configured bound {cfg.hjb_tolerance:.1e}")
    if sol.beta < 0.0:
        sol.diagnostics.flags.append(
            f"beta = {sol.beta:.6g} < 0 despite nonnegative payoff prices"
            if _prices_nonnegative(params) else f"beta = {sol.beta:.6g} < 0")
    _flag_negative_efforts(sol)
    return sol


def _prices_nonnegative(params: ModelParams) -> bool:
    return min(params.p_f, params.p_r, params.p_c, params.p) >= 0.0


def _flag_negative_efforts(sol: GameSolution, n: int = 81):
    hi = 2.0 * sol.H_d if sol.H_d > 0 else 1.0
    grid = np.linspace(0.0, hi, n)
    for role, pol in sol.policies.items():
        e = pol.effort(grid)
        if np.any(e < 0.0):
            sol.diagnostics.flags.append(
                f"{role} effort negative on part of [0, {hi:.4g}] (unclamped)")
