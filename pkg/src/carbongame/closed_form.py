"""Published closed-form coefficient expressions, evaluated for comparison.

This module powers the "paper-closed-form" backend. The published coefficient
expressions are transcribed as printed, including their internal
inconsistencies, so that the gap between them and the residual backend is
measurable instead of silently patched. Numerically that means:

* Simultaneous-play mode: the printed chain A -> M -> B -> C -> N is complete
  and evaluates to finite values, but the printed M denominator carries sign
  errors that make the retailer's value negative at typical parameters, and
  downstream values inherit the damage. Symbols that the source never defines
  (lambda_s, mu_s, lambda_m, mu_m, p_m, us) are read as the farmer/retailer
  parameters they visually shadow; that mapping is recorded in the output.
* Leader-follower mode: the printed expressions are self-referential (A needs
  M, M needs A, B references a coefficient from the centralized mode), so
  they are evaluated one-shot at an anchor solution produced by the residual
  backend. Both printed discriminants are negative at the reference
  parameters, so the printed A and M are not real there; non-finite printed
  values fall back to the anchor so the assembled comparison solution stays
  evaluable, and every printed value is preserved in the diagnostics.
* Centralized mode: the printed A numerator and discriminant are garbled
  (the discriminant is negative at the reference parameters) and the printed
  B denominator flips a sign, but the derivation they summarize is internally
  consistent. The corrected transcription below restores the three slips and
  then agrees with the residual backend to machine precision; the verbatim
  values are still evaluated and reported alongside.
"""

from __future__ import annotations

import math

import numpy as np

from .model import (
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
    "printed_decentralized",
    "printed_stackelberg",
    "printed_centralized",
    "corrected_centralized",
    "solve_printed",
]


def _sqrt_or_nan(x: float) -> float:
    return math.sqrt(x) if x >= 0.0 else float("nan")


def printed_decentralized(params: ModelParams) -> dict:
    """Chained verbatim evaluation of the published simultaneous-play forms.

    Returns every printed quantity plus both printed discriminant variants
    (the main-text one, which is consistent with the printed A, and the
    appendix one, which drops a factor of 2 on the rho term).
    """
    c = derive_constants(params)
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    d, r, eta = params.delta, params.rho, c.eta
    k1, k2 = c.k1, c.k2
    pf, pr, pc = params.p_f, params.p_r, params.p_c

    delta_main = (4 * mf * eta - 4 * lf * d - 2 * r * lf) ** 2 - (4 * mf * eta) ** 2
    delta_appendix = (4 * mf * eta - 4 * lf * d - r * lf) ** 2 - (4 * mf * eta) ** 2
    A = (2 * r * lf + 4 * lf * d - 4 * mf * eta - _sqrt_or_nan(delta_main)) / (8 * mf ** 2)
    # undefined symbols read as: p_m -> p_r, lambda_s -> lambda_f, mu_s/us -> mu_f,
    # lambda_m -> lambda_r, mu_m -> mu_r
    M = pr * k2 * lf / (eta * mf + 2 * A * mf ** 2 + lf * r - d * lf)
    B = -((2 * lr ** 2 * A * M + k1 * lr * pc + k1 * lr * pf) * lf) \
        / (lr * (eta * mf + 2 * A * mf ** 2 - lf * r - d * lf))
    C = B * (lf ** 2 * lr * B + 2 * M * lr ** 2 * lf) / (2 * lr * lf * r)
    N = M * (2 * lr * mf ** 2 * B + M * mr ** 2 * lf) / (2 * lr * lf * r)
    H_d = (lr * mf * B + lf * mr * M) / (lf * lr * d - 2 * A * mf * lr - eta * mf * lr)
    return {"A": A, "B": B, "C": C, "M": M, "N": N,
            "Delta^GD": delta_main, "Delta^GD appendix variant": delta_appendix,
            "H_d printed formula": H_d,
            "symbol mapping": "p_m->p_r, lambda_s->lambda_f, mu_s/us->mu_f, "
                              "lambda_m->lambda_r, mu_m->mu_r"}


def printed_stackelberg(params: ModelParams, anchor: dict) -> dict:
    """One-shot verbatim evaluation of the published leader-follower forms.

    anchor supplies the coefficient values (keys A, B, C, M, N, F) plugged
    into the right-hand sides, since the printed expressions reference each
    other; the stray centralized-mode token in the printed B denominator is
    read as the anchor's A. Square roots of negative printed discriminants
    yield NaN rather than an error so the report stays total.
    """
    c = derive_constants(params)
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    d, r, eta = params.delta, params.rho, c.eta
    k1, k2 = c.k1, c.k2
    pf, pr, pc = params.p_f, params.p_r, params.p_c
    om = params.omega
    Aa, Ba = anchor["A"], anchor["B"]
    Ma, Na = anchor["M"], anchor["N"]

    delta_gs1 = (2 * (mf * om * k1 * pc * r) ** 2
                 + 2 * k1 * pc * om * lf * mf * r ** 2 * (r ** 2 - 2 * d)
                 + lf * r ** 3 * (lf * r ** 3 + 4 * Ma * mf ** 2 - 4 * lf * r * d)
                 + 4 * Ma ** 2 * mf ** 4 - 8 * Ma * lf * r * d * mf ** 2
                 + 4 * lf ** 2 + 4 * (lf * r * d) ** 2
                 + 8 * Ma * mr ** 2 * lf * (lr * r * om * pc * k1 + lf * lr * r ** 3
                                            + 2 * Ma * mf ** 2 * lr
                                            + 2 * Ma * mr ** 2 * lf
                                            - 2 * lr * lf * r * d))
    delta_gs2 = (2 * lr * (k2 * pc * r * om) ** 2 * (lr * mf ** 2 + lf)
                 + 2 * k2 * lr * lf * pc * r * om * (lr * r ** 3 * mf
                                                     - 2 * Aa * mr ** 2
                                                     - 2 * lr * r * d)
                 + 4 * lr * lf * r ** 2 * (r ** 3 + r ** 2 * d + d ** 2)
                 + 4 * Aa * lr * lf * mf ** 2 * (lr * r ** 3 - Aa * mr ** 2
                                                 - 2 * lr * r * d))
    A = (2 * lr * lf * r * d - eta * lr * r * mf - lr * lf * r ** 3
         - 2 * mf ** 2 * lr * Ma - 4 * mr ** 2 * lf * Ma
         - _sqrt_or_nan(delta_gs1)) / (2 * mf ** 2 * lr)
    M = (2 * lf * lr * r * d - eta * r * lr * mf - lf * lr * r ** 3
         - 2 * Aa * lr * mf ** 2 - _sqrt_or_nan(delta_gs2)) \
        / (4 * (lr * mf ** 2 + lf * mr ** 2))
    B = lf * lr * ((pc + pf) * k1 + pr * k2) \
        / (lf * lr * (r - d) - eta * lr * mf - 2 * Aa * (lr * mf ** 2 + lf * mr ** 2))
    C = (Ba ** 2 * mf ** 2 * lr + Ba * Na * (4 * mr ** 2 * lf + 2 * mf ** 2 * lr)) \
        / (4 * r ** 3 * lf * lr)
    N = (2 * lr * mf ** 2 * Ba * (Aa + 2 * Ma - 4 * lr * lf * pr * r ** 2 * k2
                                  - eta * lr * mf * r * Ba)) \
        / (4 * r ** 3 * lf * lr - 2 * eta * mf * r * lr + 4 * lf * lr * d * r
           + 4 * mf ** 2 * lr * (Aa + 2 * Ma) + 8 * mr ** 2 * lf * Ma)
    F = (mf ** 2 * lr * (Ba ** 2 + 4 * Na * Ba)
         + 4 * Na ** 2 * (lr * mf ** 2 + lf * mr ** 2)) / (8 * r ** 3 * lr * lf)
    H_d = (2 * (lf * r * mr + lr * mf) * Na + lr * mf * Ba) \
        / (4 * lr * mf * Ma - r * lr * eta - 4 * lf * mr * r * Ma
           - 2 * lr * mf * Aa + 2 * lr * lf * r * d)
    return {"A": A, "B": B, "C": C, "M": M, "N": N, "F": F,
            "Delta^GS1": delta_gs1, "Delta^GS2": delta_gs2,
            "H_d printed formula": H_d,
            "anchor": dict(anchor),
            "note": "one-shot evaluation; right-hand-side coefficients taken "
                    "from the anchor solution; stray centralized-mode token in "
                    "the B denominator read as the anchor A"}


def printed_centralized(params: ModelParams) -> dict:
    """Verbatim evaluation of the published centralized forms."""
    c = derive_constants(params)
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    d, r, eta = params.delta, params.rho, c.eta
    k1, k2 = c.k1, c.k2
    pf, pr, pc = params.p_f, params.p_r, params.p_c

    delta = 4 * lr * eta ** 2 * (2 * lr * mf ** 2 + lf * mr ** 2
                                 + lr ** 2 * lf * (r - 2 * d)
                                 * (4 * eta * mf + r - 2 * d))
    A = (2 * d * lf - r * lf - 2 * lr * mf * eta - _sqrt_or_nan(delta)) \
        / (4 * lr * mf ** 2 + 4 * lf * mr ** 2)
    B = lf * lr * ((pc + pf) * k1 + pr * k2) \
        / (lf * lr * (r - d) - eta * lr * mf
           - 2 * A * (lr * mf ** 2 + lf * mr ** 2))
    C = B ** 2 * (lr * mf ** 2 + lf * mr ** 2) / (2 * lr * lf * r)
    H_d = (lf * mr + lr * mf) * B / (lf * lr * d - lr * eta
                                     - 2 * (lf * mr + lr * mf) * A)
    return {"A": A, "B": B, "C": C, "Delta^GC": delta,
            "H_d printed formula": H_d}


def corrected_centralized(params: ModelParams) -> dict:
    """The centralized closed forms with the three transcription slips undone.

    Restorations relative to the verbatim print: the A numerator gains the
    dropped lambda_r factor and the rho sign flips positive (making it the
    stable branch of the quadratic the derivation sets up), the discriminant
    is the actual discriminant of that quadratic, and B's denominator uses
    rho + delta. The C expression is correct as printed and kept as is.
    """
    c = derive_constants(params)
    lf, lr = params.lambda_f, params.lambda_r
    mf, mr = params.mu_f, params.mu_r
    d, r, eta = params.delta, params.rho, c.eta
    k1, k2 = c.k1, c.k2
    pf, pr, pc = params.p_f, params.p_r, params.p_c

    delta = lr * (lr * ((2 * d + r) * lf - 2 * mf * eta) ** 2
                  - 4 * eta ** 2 * (lr * mf ** 2 + lf * mr ** 2))
    A = ((2 * d + r) * lf * lr - 2 * lr * mf * eta - _sqrt_or_nan(delta)) \
        / (4 * (lr * mf ** 2 + lf * mr ** 2))
    B = lf * lr * ((pc + pf) * k1 + pr * k2) \
        / (lf * lr * (r + d) - eta * lr * mf
           - 2 * A * (lr * mf ** 2 + lf * mr ** 2))
    C = B ** 2 * (lr * mf ** 2 + lf * mr ** 2) / (2 * lr * lf * r)
    return {"A": A, "B": B, "C": C, "Delta^GC": delta}


# ---------------------------------------------------------------------------
# paper-closed-form backend
# ---------------------------------------------------------------------------

def _relative_gap(printed: float, reference: float) -> float:
    if not (np.isfinite(printed) and np.isfinite(reference)):
        return float("nan")
    return abs(printed - reference) / (1.0 + abs(reference))


def solve_printed(mode: GameMode, params: ModelParams, cfg) -> GameSolution:
    """Assemble a comparison solution from the published closed forms.

    The returned solution is a measurement instrument, not an equilibrium
    claim: stationarity-equation residuals are recorded but not enforced,
    instability is flagged instead of raised, and the full printed-versus-
    residual comparison lives in diagnostics.printed_comparison.
    """
    from . import solver as _solver

    validate_params(params)
    residual_cfg = _solver.SolverConfig(
        backend=_solver.BACKEND_RESIDUAL, tolerance=cfg.tolerance,
        hjb_tolerance=cfg.hjb_tolerance,
        follower_convention=cfg.follower_convention, max_iter=cfg.max_iter)
    if mode is GameMode.DECENTRALIZED:
        sol = _printed_gd_solution(params, residual_cfg, _solver)
    elif mode is GameMode.STACKELBERG:
        sol = _printed_gs_solution(params, residual_cfg, _solver)
    else:
        sol = _printed_gc_solution(params, residual_cfg, _solver)
    diag = sol.diagnostics
    diag.max_hjb_residual = _solver.residual_scan(sol, params)
    if not sol.alpha < 0.0:
        diag.flags.append(f"alpha = {sol.alpha:.6g} >= 0 (no attracting steady state)")
    if sol.H_d < 0.0:
        diag.flags.append(f"H_d = {sol.H_d:.6g} < 0")
    return sol


def _base_diag(convention, comparison: dict, root_branch: str) -> SolutionDiagnostics:
    discs = {k: float(v) for k, v in comparison.items()
             if isinstance(v, float) and k.startswith("Delta")}
    diag = SolutionDiagnostics(
        backend="paper-closed-form", convention=convention,
        root_branch=root_branch, discriminants=discs,
        printed_comparison=comparison)
    return diag


def _printed_gd_solution(params, residual_cfg, _solver) -> GameSolution:
    printed = printed_decentralized(params)
    if printed["Delta^GD"] < 0.0:
        raise _solver.ComplexRootError("Delta^GD", printed["Delta^GD"])
    c = derive_constants(params)
    A, B, C = printed["A"], printed["B"], printed["C"]
    M, N = printed["M"], printed["N"]
    reference = _solver.solve_decentralized(params, residual_cfg)
    comparison = dict(printed)
    comparison["residual backend"] = {
        "A": reference.values["farmer"].A, "B": reference.values["farmer"].B,
        "C": reference.values["farmer"].C, "M": reference.values["retailer"].B,
        "N": reference.values["retailer"].C}
    comparison["relative gaps"] = {
        k: _relative_gap(printed[k], comparison["residual backend"][k])
        for k in ("A", "B", "C", "M", "N")}
    diag = _base_diag(None, comparison,
                      "printed negative square-root branch")
    lf, lr, mf, mr = params.lambda_f, params.lambda_r, params.mu_f, params.mu_r
    pol_f = FeedbackPolicy(g1=(c.eta + 2.0 * A * mf) / lf, g0=mf * B / lf)
    pol_r = FeedbackPolicy(g1=0.0, g0=mr * M / lr)
    alpha = mf * pol_f.g1 - params.delta
    beta = mf * pol_f.g0 + mr * pol_r.g0
    return GameSolution(
        mode=GameMode.DECENTRALIZED, params=params,
        values={"farmer": QuadraticValue(A, B, C, role="farmer"),
                "retailer": QuadraticValue(0.0, M, N, role="retailer")},
        policies={"farmer": pol_f, "retailer": pol_r},
        alpha=alpha, beta=beta, H_d=-beta / alpha, diagnostics=diag)


def _printed_gs_solution(params, residual_cfg, _solver) -> GameSolution:
    anchor_sol = _solver.solve_stackelberg(params, residual_cfg)
    anchor = {"A": anchor_sol.values["farmer"].A,
              "B": anchor_sol.values["farmer"].B,
              "C": anchor_sol.values["farmer"].C,
              "M": anchor_sol.values["retailer"].A,
              "N": anchor_sol.values["retailer"].B,
              "F": anchor_sol.values["retailer"].C}
    printed = printed_stackelberg(params, anchor)
    comparison = dict(printed)
    comparison["relative gaps"] = {
        k: _relative_gap(printed[k], anchor[k]) for k in anchor}
    # keep the assembled solution finite: printed values where real, anchor
    # values where the printed discriminants went negative
    used, fallbacks = {}, []
    for k in anchor:
        if np.isfinite(printed[k]):
            used[k] = float(printed[k])
        else:
            used[k] = anchor[k]
            fallbacks.append(k)
    comparison["assembled from"] = {
        k: ("printed" if k not in fallbacks else "anchor (printed not real)")
        for k in anchor}
    diag = _base_diag(residual_cfg.follower_convention, comparison,
                      "printed negative square-root branch")
    if fallbacks:
        diag.flags.append(
            "printed discriminant negative; anchor values retained for "
            + ", ".join(fallbacks))
    c = derive_constants(params)
    lf, lr, mf, mr = params.lambda_f, params.lambda_r, params.mu_f, params.mu_r
    A, B, M, N = used["A"], used["B"], used["M"], used["N"]
    pol_f = FeedbackPolicy(g1=(c.eta + 2.0 * mf * A) / lf, g0=mf * B / lf)
    pol_r = FeedbackPolicy(g1=2.0 * mr * M / lr, g0=mr * N / lr,
                           n1=4.0 * M - 2.0 * A - c.eta / mf, n0=2.0 * N - B,
                           d1=4.0 * M + 2.0 * A + c.eta / mf, d0=2.0 * N + B)
    alpha = mf * pol_f.g1 + mr * pol_r.g1 - params.delta
    beta = mf * pol_f.g0 + mr * pol_r.g0
    return GameSolution(
        mode=GameMode.STACKELBERG, params=params,
        values={"farmer": QuadraticValue(A, B, used["C"], role="farmer"),
                "retailer": QuadraticValue(M, N, used["F"], role="retailer")},
        policies={"farmer": pol_f, "retailer": pol_r},
        alpha=alpha, beta=beta, H_d=-beta / alpha, diagnostics=diag)


def _printed_gc_solution(params, residual_cfg, _solver) -> GameSolution:
    corrected = corrected_centralized(params)
    if corrected["Delta^GC"] < 0.0:
        raise _solver.ComplexRootError("Delta^GC", corrected["Delta^GC"])
    printed = printed_centralized(params)
    comparison = {"corrected": corrected, "verbatim": printed,
                  "Delta^GC": corrected["Delta^GC"],
                  "Delta^GC verbatim": printed["Delta^GC"],
                  "relative gaps (verbatim vs corrected)": {
                      k: _relative_gap(printed[k], corrected[k])
                      for k in ("A", "B", "C")},
                  "note": "strategies follow the derivation (carbon-sink term "
                          "on the farmer); the main-text strategy line attaches "
                          "it to the retailer with the demand multiplier, which "
                          "contradicts the first-order condition"}
    diag = _base_diag(None, comparison,
                      "corrected negative square-root branch (verbatim "
                      "discriminant reported alongside)")
    c = derive_constants(params)
    lf, lr, mf, mr = params.lambda_f, params.lambda_r, params.mu_f, params.mu_r
    A, B, C = corrected["A"], corrected["B"], corrected["C"]
    pol_f = FeedbackPolicy(g1=(c.eta + 2.0 * A * mf) / lf, g0=mf * B / lf)
    pol_r = FeedbackPolicy(g1=2.0 * mr * A / lr, g0=mr * B / lr)
    alpha = mf * pol_f.g1 + mr * pol_r.g1 - params.delta
    beta = mf * pol_f.g0 + mr * pol_r.g0
    return GameSolution(
        mode=GameMode.CENTRALIZED, params=params,
        values={"joint": QuadraticValue(A, B, C, role="joint")},
        policies={"farmer": pol_f, "retailer": pol_r},
        alpha=alpha, beta=beta, H_d=-beta / alpha, diagnostics=diag)
