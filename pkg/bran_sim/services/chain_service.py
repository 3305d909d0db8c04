import warnings
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from bran_sim.config.logging_config import logger
from bran_sim.config.settings import settings
from bran_sim.exceptions.chain_errors import CapacityError, SolveFailedError, TruncationWarning
from bran_sim.models.chain import ChainMetrics, StateSpace, SteadyState
from bran_sim.models.system import SystemParams
from bran_sim.services.model_service import ModelService, get_model_service

RESIDUAL_TOLERANCE = 1e-9
NEGATIVE_TOLERANCE = 1e-8


class ChainService:
    """Steady state of the two-queue chain on a truncated rectangle of states.

    Moves that would leave the rectangle are dropped (blocking truncation); the
    probability left on the boundary tells how much the truncation matters.
    """

    def __init__(
        self,
        model_service: ModelService,
        max_states: int = 4_000_000,
        direct_solve_limit: int = 20_000,
        initial_truncation: int = 16,
        target_boundary_mass: float = 1e-8,
        truncation_warning_mass: float = 1e-6,
    ):
        self.model_service = model_service
        self.max_states = max_states
        self.direct_solve_limit = direct_solve_limit
        self.initial_truncation = initial_truncation
        self.target_boundary_mass = target_boundary_mass
        self.truncation_warning_mass = truncation_warning_mass

    def build_generator(self, space: StateSpace, params: SystemParams) -> sp.csr_matrix:
        """Sparse rate matrix Q; the same moves as ModelService.transitions, vectorised over the rectangle."""
        self.model_service.validate(params)
        if space.size > self.max_states:
            raise CapacityError(space.size, self.max_states)

        i, j = space.grid()
        width = space.j_max + 1
        index = np.arange(space.size)
        rows, cols, rates = [], [], []

        def add(mask: np.ndarray, target: np.ndarray, rate: np.ndarray) -> None:
            rows.append(index[mask])
            cols.append(target[mask])
            rates.append(np.broadcast_to(rate, index.shape)[mask].astype(float))

        if params.lambda_a > 0:
            add(i < space.i_max, index + width, np.asarray(params.lambda_a))

        mined = np.minimum(i, params.k)
        # a block moves `mined` requests from i to j, so the flat index shifts by mined * (width - 1)
        add((i > 0) & (j + mined <= space.j_max), index - mined * width + mined, np.asarray(params.lambda_b))

        add(j > 0, index - 1, np.minimum(j, params.s) * params.lambda_c)

        if params.lambda_r > 0:
            dropped = np.minimum(i, params.r)
            add(i > 0, index - dropped * width, np.asarray(params.lambda_r))

        row = np.concatenate(rows) if rows else np.empty(0, dtype=int)
        col = np.concatenate(cols) if cols else np.empty(0, dtype=int)
        rate = np.concatenate(rates) if rates else np.empty(0)

        off_diagonal = sp.csr_matrix((rate, (row, col)), shape=(space.size, space.size))
        exit_rates = np.asarray(off_diagonal.sum(axis=1)).ravel()
        generator = (off_diagonal - sp.diags(exit_rates)).tocsr()
        logger.debug("generator built: %d states, %d transitions", space.size, rate.size)
        return generator

    def steady_state(self, generator: sp.spmatrix, space: Optional[StateSpace] = None) -> SteadyState:
        """Solve pi Q = 0, sum(pi) = 1 with the first balance equation replaced by normalisation."""
        size = generator.shape[0]
        if space is None:
            space = StateSpace(i_max=size - 1, j_max=0)
        if space.size != size:
            raise ValueError(f"generator has {size} states but the space has {space.size}")

        system = generator.T.tolil()
        system[0, :] = np.ones(size)
        system = system.tocsc()
        rhs = np.zeros(size)
        rhs[0] = 1.0

        if size < self.direct_solve_limit:
            method = "direct"
            pi = np.atleast_1d(spla.spsolve(system, rhs))
        else:
            method = "iterative"
            pi = self._solve_iterative(system, rhs)

        if not np.all(np.isfinite(pi)):
            raise SolveFailedError(float("nan"), "solution contains non-finite entries")
        if pi.min() < -NEGATIVE_TOLERANCE:
            raise SolveFailedError(float(-pi.min()), "solution has negative probabilities")
        pi = np.clip(pi, 0.0, None)
        pi /= pi.sum()

        scale = max(1.0, float(np.abs(generator.diagonal()).max(initial=0.0)))
        residual = float(np.abs(generator.T @ pi).max(initial=0.0))
        if residual > RESIDUAL_TOLERANCE * scale:
            raise SolveFailedError(residual)

        i, j = space.grid()
        boundary = (i == space.i_max) | (j == space.j_max)
        mass_at_boundary = float(pi[boundary].sum())
        logger.info("steady state solved (%s): %d states, residual %.2e, boundary mass %.2e", method, size, residual, mass_at_boundary)
        return SteadyState(space=space, pi=pi, mass_at_boundary=mass_at_boundary, residual=residual, method=method)

    def _solve_iterative(self, system: sp.csc_matrix, rhs: np.ndarray) -> np.ndarray:
        preconditioner = spla.spilu(system, drop_tol=1e-6, fill_factor=20)
        operator = spla.LinearOperator(system.shape, preconditioner.solve)
        pi, info = spla.gmres(system, rhs, M=operator, rtol=1e-12, atol=0.0, restart=100, maxiter=2000)
        if info != 0:
            residual = float(np.abs(system @ pi - rhs).max())
            raise SolveFailedError(residual, f"gmres did not converge (info={info})")
        return pi

    def metrics(self, ss: SteadyState, space: StateSpace, params: SystemParams) -> ChainMetrics:
        i, j = space.grid()
        pi = ss.pi
        e_i = float(pi @ i)
        e_j = float(pi @ j)
        p_pending = float(pi[i > 0].sum())
        rejection_throughput = params.lambda_r * float(pi @ np.minimum(i, params.r))
        # arrivals blocked at the truncation edge never enter
        accepted = params.lambda_a * (1.0 - float(pi[i == space.i_max].sum()))
        effective_rate = accepted - rejection_throughput

        little_latency = 0.0 if effective_rate <= 0 else (e_i + e_j) / effective_rate

        if ss.mass_at_boundary > self.truncation_warning_mass:
            logger.warning("boundary mass %.3e exceeds %.1e; enlarge the truncation", ss.mass_at_boundary, self.truncation_warning_mass)
            message = f"boundary mass {ss.mass_at_boundary:.3e} on a {space.i_max}x{space.j_max} truncation"
            warnings.warn(message, TruncationWarning, stacklevel=2)

        return ChainMetrics(
            e_i=e_i,
            e_j=e_j,
            little_latency=little_latency,
            boundary_mass=ss.mass_at_boundary,
            p_pending_nonempty=p_pending,
            rejection_throughput=rejection_throughput,
            effective_arrival_rate=effective_rate,
        )

    def solve(self, space: StateSpace, params: SystemParams) -> Tuple[SteadyState, ChainMetrics]:
        ss = self.steady_state(self.build_generator(space, params), space)
        return ss, self.metrics(ss, space, params)

    def solve_adaptive(self, params: SystemParams) -> Tuple[SteadyState, ChainMetrics]:
        """Double the truncation until the boundary mass is below target or the state budget runs out."""
        bound = max(self.initial_truncation, 2 * params.k)
        last: Optional[SteadyState] = None
        while True:
            space = StateSpace(i_max=bound, j_max=bound)
            if space.size > self.max_states:
                if last is None:
                    raise CapacityError(space.size, self.max_states)
                logger.warning("state budget reached at truncation %d; keeping boundary mass %.3e", last.space.i_max, last.mass_at_boundary)
                break
            last = self.steady_state(self.build_generator(space, params), space)
            logger.debug("truncation %d: boundary mass %.3e", bound, last.mass_at_boundary)
            if last.mass_at_boundary < self.target_boundary_mass:
                break
            bound *= 2

        return last, self.metrics(last, last.space, params)


def get_chain_service() -> ChainService:
    return ChainService(
        get_model_service(),
        max_states=settings.max_states,
        direct_solve_limit=settings.direct_solve_limit,
        initial_truncation=settings.initial_truncation,
        target_boundary_mass=settings.target_boundary_mass,
        truncation_warning_mass=settings.truncation_warning_mass,
    )
