"""
Semi-implicit convex-splitting time stepping for the coupled system.

One step solves the phase-field block (phi, mu) and the MHD block
(u, p, B) alternately until the Picard increments fall below tolerance.
Coefficients, the capillary kernel, the convecting velocity and the
magnetic field in the coupling terms are lagged at the previous time
level, so the MHD matrix is assembled and factored once per step and
reused by every Picard iteration.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
import structlog
from numpy.typing import NDArray

from forms.service import FormAssembler
from linalg.schemas import BlockLayout, BlockSystem
from linalg.service import Factorization, compose_block, lu_factor, solve_block, solve_checked
from scheme.schemas import FieldState, SchemeParams, Sources, StepDiagnostics
from shared.exceptions import DimensionMismatchError, PicardConvergenceError
from space.schemas import DofMap, FieldKind, MixedSpace
from space.service import interpolate
from verify.service import energy, weak_divergence

logger = structlog.get_logger(__name__)

InitialData = Union[Callable[..., object], NDArray[np.float64]]


@dataclass(frozen=True)
class StepOperators:
    """Matrices and loads of one time step that do not change under Picard."""

    prev: FieldState
    t: float
    mass_q: sp.csr_matrix
    mass_x: sp.csr_matrix
    stiffness: sp.csr_matrix
    a_kappa: sp.csr_matrix
    a_f: sp.csr_matrix
    a_b: sp.csr_matrix
    k1: sp.csr_matrix
    k2: sp.csr_matrix
    load_phi: NDArray[np.float64]
    load_u: NDArray[np.float64]
    load_b: NDArray[np.float64]
    mhd_system: BlockSystem
    mhd_factors: Factorization


def _relative_change(new: NDArray[np.float64], old: NDArray[np.float64]) -> float:
    return float(np.linalg.norm(new - old) / max(np.linalg.norm(new), 1.0))


class SchemeSolver:
    """
    Time stepper on one mixed space.

    Args:
        space: Mixed finite element space with its constraints
        params: Physical and iteration parameters
        assembler: Form assembler; built from ``space`` when omitted
        check_residuals: Enforce the relative residual guard on every solve
    """

    def __init__(
        self,
        space: MixedSpace,
        params: SchemeParams,
        assembler: Optional[FormAssembler] = None,
        check_residuals: bool = True,
    ):
        self.space = space
        self.params = params
        self.assembler = assembler if assembler is not None else FormAssembler(space)
        self.tolerance: Optional[float] = None if check_residuals else float("inf")
        sizes = space.sizes
        self.ch_layout = BlockLayout((("phi", sizes["phi"]), ("mu", sizes["mu"])))
        self.mhd_layout = BlockLayout((("u", sizes["u"]), ("p", sizes["p"]), ("B", sizes["B"])))
        self.reference_mass: Optional[float] = None

    # -- state handling ------------------------------------------------------------

    def _initial_vector(self, data: InitialData, dofmap: DofMap, name: str) -> NDArray[np.float64]:
        if callable(data):
            return interpolate(self.space.mesh, dofmap, data)
        values = np.array(data, dtype=float)
        if values.shape != (dofmap.n_dofs,):
            raise DimensionMismatchError(
                f"initial {name} needs {dofmap.n_dofs} values, got shape {values.shape}"
            )
        return values

    def initialize(
        self, phi0: InitialData, u0: InitialData, b0: InitialData, t: float = 0.0
    ) -> FieldState:
        """Interpolate initial data; mu and p start at zero."""
        space = self.space
        u = self._initial_vector(u0, space.x_map, "u")
        b = self._initial_vector(b0, space.w_map, "B")
        u[space.velocity_bc.dofs] = 0.0
        b[space.magnetic_bc.dofs] = 0.0
        state = FieldState(
            t=t,
            phi=self._initial_vector(phi0, space.q_map, "phi"),
            mu=np.zeros(space.q_map.n_dofs),
            u=u,
            p=np.zeros(space.m_map.n_dofs),
            B=b,
        )
        self.reference_mass = self.mass(state.phi)
        logger.debug("state initialized", t=t, mass=self.reference_mass)
        return state

    def mass(self, phi: NDArray[np.float64]) -> float:
        """Integral of a P2 phase field."""
        return float(np.sum(self.assembler.assemble_mass(FieldKind.SCALAR_P2) @ phi))

    # -- per-step operators --------------------------------------------------------

    def operators(self, prev: FieldState, sources: Optional[Sources] = None) -> StepOperators:
        """Assemble everything lagged at the previous level and factor the MHD block."""
        sources = sources or Sources()
        params, asm, space = self.params, self.assembler, self.space
        t = prev.t + params.dt
        inv_dt = 1.0 / params.dt

        mass_x = asm.assemble_mass(FieldKind.VECTOR_P2)
        a_f = asm.assemble_a_f(params.nu, prev.phi)
        a_b = asm.assemble_a_B(params.eta, prev.phi)
        d = asm.assemble_d()
        k1, k2 = asm.assemble_capillary(prev.phi, params.lam)

        blocks = {
            ("u", "u"): inv_dt * mass_x + a_f + asm.assemble_b(prev.u),
            ("u", "p"): -d.T,
            ("u", "B"): params.s_c * asm.assemble_c_hat(prev.B),
            ("p", "u"): d,
            ("B", "u"): -asm.assemble_c_tilde(prev.B),
            ("B", "B"): inv_dt * mass_x + a_b,
        }
        system = compose_block(
            self.mhd_layout,
            blocks,
            bcs={"u": space.velocity_bc.dofs, "B": space.magnetic_bc.dofs},
            mean_constraint=("p", space.mean.weights),
        )
        return StepOperators(
            prev=prev,
            t=t,
            mass_q=asm.assemble_mass(FieldKind.SCALAR_P2),
            mass_x=mass_x,
            stiffness=asm.assemble_stiffness(),
            a_kappa=asm.assemble_a_phi(params.kappa, prev.phi),
            a_f=a_f,
            a_b=a_b,
            k1=k1,
            k2=k2,
            load_phi=asm.assemble_load(sources.g_phi, FieldKind.SCALAR_P2, t),
            load_u=asm.assemble_load(sources.g_u, FieldKind.VECTOR_P2, t),
            load_b=asm.assemble_load(sources.g_B, FieldKind.VECTOR_P2, t),
            mhd_system=system,
            mhd_factors=lu_factor(system.matrix),
        )

    # -- block solves --------------------------------------------------------------

    def _solve_ch(
        self, ops: StepOperators, u_current: NDArray[np.float64], phi_iterate: NDArray[np.float64]
    ) -> tuple[NDArray[np.float64], NDArray[np.float64], float]:
        params = self.params
        inv_dt, inv_eps = 1.0 / params.dt, 1.0 / params.eps
        prev = ops.prev

        cubic = self.assembler.assemble_cubic(phi_iterate)
        rhs_mu = inv_eps * (ops.mass_q @ prev.phi)
        if params.cubic_linearization == "newton":
            # phi^3 ~ 3 phi_k^2 phi - 2 phi_k^3
            rhs_mu = rhs_mu + 2.0 * inv_eps * (cubic @ phi_iterate)
            cubic = 3.0 * cubic

        system = compose_block(
            self.ch_layout,
            {
                ("phi", "phi"): inv_dt * ops.mass_q,
                ("phi", "mu"): params.eps * ops.a_kappa,
                ("mu", "phi"): params.eps * ops.stiffness + inv_eps * cubic,
                ("mu", "mu"): -ops.mass_q,
            },
            rhs={
                "phi": inv_dt * (ops.mass_q @ prev.phi) - ops.k2 @ u_current + ops.load_phi,
                "mu": rhs_mu,
            },
        )
        fields, residual, _ = solve_block(system, tolerance=self.tolerance)
        return fields["phi"], fields["mu"], residual

    def ch_block_solve(
        self,
        prev: FieldState,
        u_current: NDArray[np.float64],
        picard_phi: NDArray[np.float64],
        sources: Optional[Sources] = None,
    ) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """
        Solve the phase-field block for (phi, mu) at t_n = prev.t + dt.

        The velocity enters the right-hand side through the capillary kernel
        grad(phi^{n-1}); the cubic is linearized at ``picard_phi``.

        With the default ``cubic_linearization="newton"`` the cubic is
        replaced by its tangent, 3 (phi^k)^2 phi - 2 (phi^k)^3, rather than
        the plain lagged form (phi^k)^2 phi, which ``"picard"`` selects.
        Both share the same converged fixed point.
        """
        phi, mu, _ = self._solve_ch(self.operators(prev, sources), u_current, picard_phi)
        return phi, mu

    def _solve_mhd(
        self, ops: StepOperators, mu: NDArray[np.float64]
    ) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64], float]:
        inv_dt = 1.0 / self.params.dt
        prev = ops.prev
        rhs = ops.mhd_system.assemble_rhs(
            {
                "u": ops.k1 @ mu + inv_dt * (ops.mass_x @ prev.u) + ops.load_u,
                "B": inv_dt * (ops.mass_x @ prev.B) + ops.load_b,
            }
        )
        x, residual = solve_checked(ops.mhd_factors, rhs, self.tolerance)
        fields = ops.mhd_system.split(x)
        return fields["u"], fields["p"], fields["B"], residual

    def mhd_block_solve(
        self,
        prev: FieldState,
        mu_new: NDArray[np.float64],
        sources: Optional[Sources] = None,
    ) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
        """
        Solve the MHD block for (u, p, B) at t_n = prev.t + dt.

        Only mu^n of the new phase-field iterate enters: every other coupling
        is lagged at the previous level.
        """
        u, p, b, _ = self._solve_mhd(self.operators(prev, sources), mu_new)
        return u, p, b

    # -- time stepping -------------------------------------------------------------

    def step(
        self,
        prev: FieldState,
        sources: Optional[Sources] = None,
        index: Optional[int] = None,
    ) -> tuple[FieldState, StepDiagnostics]:
        """
        Advance one step with block Gauss-Seidel Picard iteration.

        Raises:
            PicardConvergenceError: If the iteration cap is reached and the
                non-convergence policy is ``abort``
        """
        params = self.params
        index = index if index is not None else int(round(prev.t / params.dt)) + 1
        if self.reference_mass is None:
            self.reference_mass = self.mass(prev.phi)
        ops = self.operators(prev, sources)

        phi_k, mu_k, u_k, p_k, b_k = prev.phi, prev.mu, prev.u, prev.p, prev.B
        residuals: list[float] = []
        increment = float("inf")
        converged = False
        iterations = 0
        for iterations in range(1, params.picard_max + 1):
            phi, mu, r_ch = self._solve_ch(ops, u_k, phi_k)
            u, p, b, r_mhd = self._solve_mhd(ops, mu)
            residuals.extend((r_ch, r_mhd))
            increment = max(
                _relative_change(phi, phi_k),
                _relative_change(mu, mu_k),
                _relative_change(u, u_k),
                _relative_change(p, p_k),
                _relative_change(b, b_k),
            )
            logger.debug("picard iteration", step=index, iteration=iterations, increment=increment)
            phi_k, mu_k, u_k, p_k, b_k = phi, mu, u, p, b
            if increment < params.picard_tol:
                converged = True
                break

        if not converged:
            message = (
                f"Picard iteration did not converge in step {index} after "
                f"{params.picard_max} iterations (increment {increment:.3e})"
            )
            if params.on_nonconvergence == "abort":
                logger.error("picard not converged", step=index, increment=increment)
                raise PicardConvergenceError(message, increment=increment, step=index)
            logger.warning("picard not converged", step=index, increment=increment)

        state = FieldState(t=ops.t, phi=phi_k, mu=mu_k, u=u_k, p=p_k, B=b_k)
        dissipation = params.dt * (
            params.lam * params.eps * float(mu_k @ (ops.a_kappa @ mu_k))
            + float(u_k @ (ops.a_f @ u_k))
            + params.s_c * float(b_k @ (ops.a_b @ b_k))
        )
        diagnostics = StepDiagnostics(
            step=index,
            t=state.t,
            picard_iterations=iterations,
            increment=increment,
            converged=converged,
            energy=energy(state, params, self.assembler),
            max_weak_div=weak_divergence(state.u, self.assembler),
            mass_drift=abs(self.mass(state.phi) - self.reference_mass),
            dissipation=dissipation,
            residuals=residuals,
        )
        logger.info(
            "step completed",
            step=index,
            t=state.t,
            picard_iters=iterations,
            increment=increment,
            energy=diagnostics.energy,
            max_weak_div=diagnostics.max_weak_div,
            max_residual=diagnostics.max_residual,
            mass_drift=diagnostics.mass_drift,
        )
        return state, diagnostics

    def run(
        self,
        state: FieldState,
        n_steps: int,
        sources: Optional[Sources] = None,
        on_step: Optional[Callable[[FieldState, StepDiagnostics], None]] = None,
    ) -> tuple[FieldState, list[StepDiagnostics]]:
        """Take ``n_steps`` steps, calling ``on_step`` after each accepted one."""
        history: list[StepDiagnostics] = []
        for index in range(1, n_steps + 1):
            state, diagnostics = self.step(state, sources, index)
            history.append(diagnostics)
            if on_step is not None:
                on_step(state, diagnostics)
        return state, history

    # -- verification --------------------------------------------------------------

    def scheme_residuals(
        self, prev: FieldState, state: FieldState, sources: Optional[Sources] = None
    ) -> dict[str, float]:
        """
        Infinity norms of the algebraic residuals of the nonlinear step equations.

        Assembled afresh with the exact cubic, not the Picard linearization.
        Rows of essentially constrained dofs are excluded.
        """
        sources = sources or Sources()
        params, asm, space = self.params, self.assembler, self.space
        inv_dt = 1.0 / params.dt
        t = prev.t + params.dt
        mass_q = asm.assemble_mass(FieldKind.SCALAR_P2)
        mass_x = asm.assemble_mass(FieldKind.VECTOR_P2)
        d = asm.assemble_d()
        k1, k2 = asm.assemble_capillary(prev.phi, params.lam)

        r_phi = (
            inv_dt * (mass_q @ (state.phi - prev.phi))
            + params.eps * (asm.assemble_a_phi(params.kappa, prev.phi) @ state.mu)
            + k2 @ state.u
            - asm.assemble_load(sources.g_phi, FieldKind.SCALAR_P2, t)
        )
        r_mu = (
            params.eps * (asm.assemble_stiffness() @ state.phi)
            + (asm.assemble_cubic(state.phi) @ state.phi - mass_q @ prev.phi) / params.eps
            - mass_q @ state.mu
        )
        r_u = (
            inv_dt * (mass_x @ (state.u - prev.u))
            + asm.assemble_a_f(params.nu, prev.phi) @ state.u
            + asm.assemble_b(prev.u) @ state.u
            + params.s_c * (asm.assemble_c_hat(prev.B) @ state.B)
            - d.T @ state.p
            - k1 @ state.mu
            - asm.assemble_load(sources.g_u, FieldKind.VECTOR_P2, t)
        )
        r_b = (
            inv_dt * (mass_x @ (state.B - prev.B))
            + asm.assemble_a_B(params.eta, prev.phi) @ state.B
            - asm.assemble_c_tilde(prev.B) @ state.u
            - asm.assemble_load(sources.g_B, FieldKind.VECTOR_P2, t)
        )
        r_u[space.velocity_bc.dofs] = 0.0
        r_b[space.magnetic_bc.dofs] = 0.0
        return {
            "phi": float(np.linalg.norm(r_phi, np.inf)),
            "mu": float(np.linalg.norm(r_mu, np.inf)),
            "u": float(np.linalg.norm(r_u, np.inf)),
            "p": float(np.linalg.norm(d @ state.u, np.inf)),
            "B": float(np.linalg.norm(r_b, np.inf)),
        }
