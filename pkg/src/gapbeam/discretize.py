"""Mesh and semi-discrete operators of the transmission beam.

Linear elements for both fields with one-point (midpoint) integration of the
shear term, the standard cure for shear locking at small thickness.  The
pointwise dampers become single diagonal entries at the interface node, which
is exactly the weak form of the force-jump conditions there.  The tip body is
coupled by identifying the end deflection dof with the tip coordinate and
adding epsilon to mass, damping and stiffness at that slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import BeamParams, TipParams


class AssemblyError(RuntimeError):
    """Inconsistent dof bookkeeping or a singular assembled operator."""


@dataclass(frozen=True)
class Mesh:
    """Nodes on [0, ell] with the damper location xi held exactly at a node."""

    nodes: np.ndarray
    xi_index: int

    @property
    def ne(self) -> int:
        return len(self.nodes) - 1

    @property
    def nn(self) -> int:
        return len(self.nodes)

    @property
    def ell(self) -> float:
        return float(self.nodes[-1])

    @property
    def xi(self) -> float:
        return float(self.nodes[self.xi_index])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)


def build_mesh(ell: float, xi: float, ne: int) -> Mesh:
    """Mesh with ne elements, uniform on each side of xi.

    Element counts are split proportionally to the subinterval lengths
    (rounded, at least one per side) so xi is a node for any location.
    """
    if ne < 2:
        raise ValueError("need at least 2 elements")
    if not 0.0 < xi < ell:
        raise ValueError(f"xi={xi} must lie strictly inside (0, {ell})")
    n_left = int(round(ne * xi / ell))
    n_left = min(max(n_left, 1), ne - 1)
    n_right = ne - n_left
    nodes = np.concatenate(
        [np.linspace(0.0, xi, n_left + 1), np.linspace(xi, ell, n_right + 1)[1:]]
    )
    nodes[0] = 0.0
    nodes[n_left] = xi
    nodes[-1] = ell
    if np.any(np.diff(nodes) <= 0.0):
        raise AssemblyError("mesh nodes not strictly increasing")
    return Mesh(nodes=nodes, xi_index=n_left)


@dataclass(frozen=True)
class SemiDiscreteSystem:
    """Assembled operators plus dof bookkeeping.

    Full operators act on the stacked nodal vector [phi_0..phi_N, psi_0..psi_N];
    the reduced ones have the essential dofs phi(0) and psi(ell) eliminated.
    K splits into shear / bending (+ tip) parts so energy reports can itemize.
    The quadratic form u.K.u equals the potential part of the phase-space norm;
    w.M.w the kinetic part.
    """

    mesh: Mesh
    beam: BeamParams
    tip: TipParams
    M_full: np.ndarray
    K_full: np.ndarray
    D_full: np.ndarray
    K_shear_full: np.ndarray
    K_bend_full: np.ndarray
    free: np.ndarray            # free dof indices into the full vector
    tip_slot: int               # position of phi(ell) in the reduced numbering
    xi_phi_slot: int            # position of phi(xi) in the reduced numbering
    xi_psi_slot: int            # position of psi(xi) in the reduced numbering
    M: np.ndarray = field(repr=False, default=None)
    K: np.ndarray = field(repr=False, default=None)
    D: np.ndarray = field(repr=False, default=None)

    @property
    def n_free(self) -> int:
        return len(self.free)

    def reduce(self, full_vec: np.ndarray) -> np.ndarray:
        return full_vec[self.free]

    def expand(self, reduced_vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Reduced vector -> (phi, psi) full nodal arrays with essential zeros."""
        nn = self.mesh.nn
        full = np.zeros(2 * nn)
        full[self.free] = reduced_vec
        return full[:nn], full[nn:]

    def stack(self, phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
        return np.concatenate([phi, psi])


def assemble(mesh: Mesh, beam: BeamParams, tip: TipParams) -> SemiDiscreteSystem:
    """Galerkin assembly of the mass/stiffness/damping operators.

    Shear uses the one-point midpoint rule, bending and mass are exact.
    Dampers are lumped diagonal entries at the xi node.  With the tip enabled,
    epsilon is added to M, D, K at the phi(ell) slot; disabled, the end is
    traction free by the natural boundary condition.
    """
    if np.any(mesh.widths <= 0.0):
        raise AssemblyError("mesh has empty or inverted elements")
    nn = mesh.nn
    nd = 2 * nn
    M = np.zeros((nd, nd))
    K_sh = np.zeros((nd, nd))
    K_bd = np.zeros((nd, nd))
    D = np.zeros((nd, nd))

    for e in range(nn - 1):
        h = mesh.nodes[e + 1] - mesh.nodes[e]
        m_e = h / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
        iphi = [e, e + 1]
        ipsi = [nn + e, nn + e + 1]
        M[np.ix_(iphi, iphi)] += beam.rho1 * m_e
        M[np.ix_(ipsi, ipsi)] += beam.rho2 * m_e
        K_bd[np.ix_(ipsi, ipsi)] += beam.b / h * np.array([[1.0, -1.0], [-1.0, 1.0]])
        # midpoint shear strain phi_x + psi_mid as a single constraint row
        g = np.array([-1.0 / h, 1.0 / h, 0.5, 0.5])
        K_sh[np.ix_(iphi + ipsi, iphi + ipsi)] += beam.k * h * np.outer(g, g)

    D[mesh.xi_index, mesh.xi_index] += beam.gamma1
    D[nn + mesh.xi_index, nn + mesh.xi_index] += beam.gamma2

    K = K_sh + K_bd
    tip_full = nn - 1
    if tip.enabled:
        M[tip_full, tip_full] += tip.epsilon
        K[tip_full, tip_full] += tip.epsilon
        if tip.damping_on:
            D[tip_full, tip_full] += tip.epsilon

    essential = (0, nd - 1)  # phi(0) and psi(ell)
    free = np.array([i for i in range(nd) if i not in essential], dtype=int)
    if mesh.xi_index in essential or nn + mesh.xi_index == nd - 1:
        raise AssemblyError("damper node collides with an essential dof")

    free_pos = {dof: i for i, dof in enumerate(free)}
    sys = SemiDiscreteSystem(
        mesh=mesh,
        beam=beam,
        tip=tip,
        M_full=M,
        K_full=K,
        D_full=D,
        K_shear_full=K_sh,
        K_bend_full=K_bd,
        free=free,
        tip_slot=free_pos[tip_full],
        xi_phi_slot=free_pos[mesh.xi_index],
        xi_psi_slot=free_pos[nn + mesh.xi_index],
        M=M[np.ix_(free, free)],
        K=K[np.ix_(free, free)],
        D=D[np.ix_(free, free)],
    )
    try:
        np.linalg.cholesky(sys.M)
    except np.linalg.LinAlgError as exc:
        raise AssemblyError("reduced mass operator is not positive definite") from exc
    return sys


def _element_for(mesh: Mesh, x: float, side: str) -> int:
    nodes = mesh.nodes
    tol = 1e-12 * mesh.ell
    if x < -tol or x > mesh.ell + tol:
        raise ValueError(f"position {x} outside [0, {mesh.ell}]")
    hits = np.nonzero(np.abs(nodes - x) <= tol)[0]
    if hits.size:
        i = int(hits[0])
        if side == "left" and i > 0:
            return i - 1
        if side == "right" and i < mesh.ne:
            return i
        if side == "auto":
            return i - 1 if i > 0 else 0
        raise ValueError(f"no element on side {side!r} of x={x}")
    return int(np.searchsorted(nodes, x) - 1)


def recover_stress(system: SemiDiscreteSystem, state, x: float,
                   side: str = "auto") -> tuple[float, float]:
    """Element-wise shear force and bending moment at x.

    Shear is k*(phi_x + psi_mid), the constant conjugate to the reduced strain;
    bending is b*psi_x, also constant per element.  At nodes the value is
    one-sided; pass side='left'/'right' to pick the element, e.g. to measure
    the force jump across the damper node.  `state` is anything carrying full
    nodal `phi` and `psi` arrays.
    """
    phi, psi = state.phi, state.psi
    e = _element_for(system.mesh, x, side)
    nodes = system.mesh.nodes
    h = nodes[e + 1] - nodes[e]
    phi_x = (phi[e + 1] - phi[e]) / h
    psi_mid = 0.5 * (psi[e] + psi[e + 1])
    S = system.beam.k * (phi_x + psi_mid)
    M_bend = system.beam.b * (psi[e + 1] - psi[e]) / h
    return float(S), float(M_bend)
