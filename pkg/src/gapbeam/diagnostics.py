"""Energy, decay, observability and contact diagnostics over trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discretize import SemiDiscreteSystem, recover_stress
from .model import (
    MultiplierSpec,
    NoContact,
    contact_potential,
    multiplier_q,
    multiplier_q0,
)
from .timestep import (
    Laws,
    SchemeConfig,
    State,
    Trajectory,
    _gauss_eval,
    initial_state,
    integrate_primitive,
    simulate,
    state_norm,
    total_energy,
)


@dataclass
class EnergyReport:
    """Itemized Lyapunov functional; E_total is the sum of the parts."""

    E_total: float
    kinetic: float
    potential_shear: float
    potential_bend: float
    N_p: float
    tip_energy: float
    Fhat_int: float
    Ghat_int: float
    dissipation_rate: float = 0.0
    dissipated_cum: float = 0.0


def energy(system: SemiDiscreteSystem, state: State, laws: Laws) -> EnergyReport:
    """Evaluate the energy functional of one state, itemized."""
    u, w = state.pack(system)
    ix = np.ix_(system.free, system.free)
    kin_total = 0.5 * float(w @ system.M @ w)
    shear = 0.5 * float(u @ system.K_shear_full[ix] @ u)
    bend = 0.5 * float(u @ system.K_bend_full[ix] @ u)
    tip = system.tip
    tip_e = 0.0
    if tip.enabled:
        tip_e = 0.5 * tip.epsilon * (state.v**2 + state.v_t**2)
        kin_total -= 0.5 * tip.epsilon * state.v_t**2
    n_p = contact_potential(state.v, laws.contact)
    fhat = integrate_primitive(system.mesh, state.phi, laws.force_f)
    ghat = integrate_primitive(system.mesh, state.psi, laws.force_g)
    rate = float(w @ system.D @ w)
    total = kin_total + shear + bend + tip_e + n_p + fhat + ghat
    return EnergyReport(
        E_total=total,
        kinetic=kin_total,
        potential_shear=shear,
        potential_bend=bend,
        N_p=n_p,
        tip_energy=tip_e,
        Fhat_int=fhat,
        Ghat_int=ghat,
        dissipation_rate=rate,
    )


def energy_series(system: SemiDiscreteSystem, traj: Trajectory,
                  laws: Laws) -> list[EnergyReport]:
    """Energy reports at every sample, with the running dissipation filled in."""
    reports = []
    for state, diss in zip(traj.states, traj.dissipated_cum):
        rep = energy(system, state, laws)
        rep.dissipated_cum = diss
        reports.append(rep)
    return reports


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential fit E ~ c * exp(-gamma_E t) on a window."""

    gamma_E: float
    gamma_state: float
    c: float
    window: tuple[float, float]
    r2: float


def fit_decay(times, energies, window: tuple[float, float] | None = None) -> DecayFit:
    """Fit log E linearly over the window (default: the last 60% of the run).

    The energy decays at twice the state-norm rate, so both gamma_E and
    gamma_state = gamma_E / 2 are reported.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies, dtype=float)
    if window is None:
        window = (t[0] + 0.4 * (t[-1] - t[0]), t[-1])
    ta, tb = window
    mask = (t >= ta) & (t <= tb)
    if mask.sum() < 10:
        raise ValueError("decay window holds fewer than 10 samples")
    if np.any(e[mask] <= 0.0):
        raise ValueError("nonpositive energies in the decay window")
    tw, lw = t[mask], np.log(e[mask])
    slope, intercept = np.polyfit(tw, lw, 1)
    pred = slope * tw + intercept
    ss_res = float(np.sum((lw - pred) ** 2))
    ss_tot = float(np.sum((lw - lw.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else max(0.0, 1.0 - ss_res / ss_tot)
    gamma_e = -float(slope)
    return DecayFit(gamma_E=gamma_e, gamma_state=gamma_e / 2.0,
                    c=float(np.exp(intercept)), window=(float(ta), float(tb)), r2=r2)


@dataclass
class ObservabilityReport:
    """Boundary observability functionals along a trajectory.

    The defects compare the weighted boundary time-integrals against the
    interior functional; their size relative to the initial energy is
    reported, not asserted (the comparison constant is not quantified).
    """

    times: np.ndarray
    I_ell: np.ndarray
    I_0: np.ndarray
    L_series: np.ndarray
    L0_series: np.ndarray
    defect_ell: float
    defect_0: float
    ratio_to_E0: tuple[float, float]
    c0_measured: float
    c1_measured: float


def _boundary_intensity(system, state, x, side):
    beam = system.beam
    S, Mb = recover_stress(system, state, x, side=side)
    node = 0 if x == 0.0 else system.mesh.nn - 1
    return (beam.rho2 * beam.b * state.psi_t[node] ** 2 + Mb**2
            + beam.rho1 * beam.k * state.phi_t[node] ** 2 + S**2)


def _interior_functionals(system, state, spec):
    """(L with q, L with q0, unweighted integral of the intensity)."""
    mesh = system.mesh
    beam = system.beam
    nodes = mesh.nodes
    h = mesh.widths
    phi_x = np.diff(state.phi) / h
    psi_mid = 0.5 * (state.psi[:-1] + state.psi[1:])
    S_el = beam.k * (phi_x + psi_mid)
    M_el = beam.b * np.diff(state.psi) / h
    phit_g, weights = _gauss_eval(mesh, state.phi_t)
    psit_g, _ = _gauss_eval(mesh, state.psi_t)
    xg = np.outer(nodes[:-1], (1 - np.array([-1, 1]) / math.sqrt(3)) / 2) \
        + np.outer(nodes[1:], (1 + np.array([-1, 1]) / math.sqrt(3)) / 2)
    intensity = (beam.rho2 * beam.b * psit_g**2 + M_el[:, None] ** 2
                 + beam.rho1 * beam.k * phit_g**2 + S_el[:, None] ** 2)
    cross = (beam.rho1 * beam.k * phit_g * psit_g
             - (S_el * M_el)[:, None] * np.ones_like(phit_g))
    out = []
    for qfun in (multiplier_q, multiplier_q0):
        q, qx = qfun(xg, spec)
        out.append(float(np.sum(weights * (qx * intensity - q * cross))))
    out.append(float(np.sum(weights * intensity)))
    return out


def observability(system: SemiDiscreteSystem, traj: Trajectory,
                  spec: MultiplierSpec, laws: Laws | None = None) -> ObservabilityReport:
    """Evaluate the boundary/interior observability functionals along a run."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if len(traj) > 1 and traj.dt > 0.0:
        spacing = traj.times[1] - traj.times[0]
        if spacing > 10.0 * traj.dt + 1e-12:
            raise ValueError("trajectory sampled too coarsely (stride > 10 steps)")
    laws = laws or Laws()
    times = np.asarray(traj.times)
    n = len(traj)
    I_ell = np.empty(n)
    I_0 = np.empty(n)
    L_q = np.empty(n)
    L_q0 = np.empty(n)
    I_int = np.empty(n)
    ell = system.mesh.ell
    for i, state in enumerate(traj.states):
        I_ell[i] = _boundary_intensity(system, state, ell, "left")
        I_0[i] = _boundary_intensity(system, state, 0.0, "right")
        L_q[i], L_q0[i], I_int[i] = _interior_functionals(system, state, spec)

    q_ell = multiplier_q(ell, spec)[0]
    q0_0 = multiplier_q0(0.0, spec)[0]
    int_bd_ell = float(np.trapezoid(q_ell * I_ell, times))
    int_bd_0 = float(np.trapezoid(q0_0 * I_0, times))
    int_L = float(np.trapezoid(L_q, times))
    int_L0 = float(np.trapezoid(L_q0, times))
    defect_ell = abs(int_bd_ell - int_L)
    defect_0 = abs(int_bd_0 - int_L0)
    e0 = total_energy(system, traj.states[0], laws)
    ratio = (defect_ell / e0 if e0 > 0 else math.inf,
             defect_0 / e0 if e0 > 0 else math.inf)

    live = I_int > 1e-14 * max(I_int.max(), 1e-300)
    ratios = L_q[live] / I_int[live]
    c0 = float(ratios.min()) if ratios.size else math.nan
    c1 = float(ratios.max()) if ratios.size else math.nan
    return ObservabilityReport(
        times=times, I_ell=I_ell, I_0=I_0, L_series=L_q, L0_series=L_q0,
        defect_ell=defect_ell, defect_0=defect_0, ratio_to_E0=ratio,
        c0_measured=c0, c1_measured=c1,
    )


def constraint_violation(traj: Trajectory, g_lo: float, g_hi: float) -> float:
    """Worst excursion of the end deflection beyond the stops (0 if admissible)."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    v = traj.v_series()
    return float(max(0.0, (v - g_hi).max(), (g_lo - v).max()))


@dataclass
class ComplementarityReport:
    """Per-sample sign-pattern classification of (v, S(ell)).

    interior: |S| below tol_S while v is inside the gap; upper/lower: v at a
    stop with the admissible traction sign; anything else is a violation.
    """

    counts: dict[str, int]
    worst: tuple[float, float, float] | None   # (t, v, S) of the worst violation
    tol_S: float
    tol_g: float
    n_samples: int

    @property
    def violations(self) -> int:
        return self.counts["violation"]


def complementarity_report(system: SemiDiscreteSystem, traj: Trajectory,
                           law, tol_S: float | None = None,
                           tol_g: float | None = None,
                           t_start: float | None = None) -> ComplementarityReport:
    """Classify each sample against the unilateral sign conditions.

    Tolerances default to 1e-6 of the shear stiffness / beam length; pass
    scale-aware values for penalty runs (the one-sided stress trace carries
    O(h) recovery error during fast transients).  t_start restricts the
    classification to the settled part of the run.
    """
    if isinstance(law, NoContact):
        raise ValueError("complementarity needs an active contact law")
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    beam = system.beam
    tol_S = 1e-6 * beam.k if tol_S is None else tol_S
    tol_g = 1e-6 * beam.ell if tol_g is None else tol_g
    counts = {"interior": 0, "upper": 0, "lower": 0, "violation": 0}
    worst = None
    worst_mag = -1.0
    n = 0
    for t, state in zip(traj.times, traj.states):
        if t_start is not None and t < t_start:
            continue
        n += 1
        v = state.v
        S, _ = recover_stress(system, state, beam.ell, side="left")
        if law.g_lo + tol_g < v < law.g_hi - tol_g:
            ok = abs(S) <= tol_S
        elif v >= law.g_hi - tol_g:
            ok = S <= tol_S
        else:
            ok = S >= -tol_S
        if ok:
            if law.g_lo + tol_g < v < law.g_hi - tol_g:
                counts["interior"] += 1
            elif v >= law.g_hi - tol_g:
                counts["upper"] += 1
            else:
                counts["lower"] += 1
        else:
            counts["violation"] += 1
            if abs(S) > worst_mag:
                worst_mag = abs(S)
                worst = (float(t), float(v), float(S))
    return ComplementarityReport(counts=counts, worst=worst, tol_S=tol_S,
                                 tol_g=tol_g, n_samples=n)


@dataclass
class AbsorbingReport:
    """Evidence of a bounded absorbing set from an ensemble of forced runs."""

    t0_observed: float | None
    radius_observed: float
    plateau_radius: float
    c2_est: float
    f0_norm: float
    converged: bool
    times: np.ndarray = field(repr=False, default=None)
    norms: np.ndarray = field(repr=False, default=None)   # (ensemble, samples)


def forcing_norm(system: SemiDiscreteSystem, laws: Laws) -> float:
    """Phase-space norm of the constant forcing vector."""
    beam = system.beam
    ell = system.mesh.ell
    return math.sqrt(laws.force_f.f0**2 * ell / beam.rho1
                     + laws.force_g.f0**2 * ell / beam.rho2)


def absorbing_probe(system: SemiDiscreteSystem, laws: Laws, cfg: SchemeConfig,
                    *, radius: float, t_final: float, n_ensemble: int = 8,
                    sample_stride: int = 10, seed: int = 0,
                    plateau_frac: float = 0.2) -> AbsorbingReport:
    """Drive an ensemble from a ball of initial data and watch it contract.

    Reports the plateau radius of the late-time norms and the first time all
    trajectories enter (and stay in) a ball of twice that radius.  Evidence,
    not proof: a missing plateau is flagged, not raised.
    """
    if n_ensemble < 8:
        raise ValueError("ensemble must hold at least 8 trajectories")
    norm_rows = []
    times = None
    for j in range(n_ensemble):
        s0 = initial_state(system, "random_ball", radius=radius, seed=seed + j)
        traj = simulate(system, s0, laws, cfg, t_final, sample_stride=sample_stride)
        norm_rows.append([state_norm(system, s) for s in traj.states])
        times = np.asarray(traj.times)
    norms = np.asarray(norm_rows)

    n_tail = max(2, int(plateau_frac * norms.shape[1]))
    plateau = float(norms[:, -n_tail:].max())
    detect = 2.0 * plateau
    f0n = forcing_norm(system, laws)
    c2 = plateau / f0n if f0n > 0 else math.nan

    outside = (norms > detect).any(axis=0)
    if outside.any():
        last_out = int(np.nonzero(outside)[0][-1])
        if last_out + 1 >= norms.shape[1]:
            return AbsorbingReport(None, detect, plateau, c2, f0n, False,
                                   times=times, norms=norms)
        t0 = float(times[last_out + 1])
    else:
        t0 = 0.0
    converged = t0 <= times[-1] * (1.0 - plateau_frac) + 1e-12
    return AbsorbingReport(t0_observed=t0, radius_observed=detect,
                           plateau_radius=plateau, c2_est=c2, f0_norm=f0n,
                           converged=converged, times=times, norms=norms)
