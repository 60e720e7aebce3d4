"""
Poisson Demo

Solves the discretised Poisson problem

    sum_mu [phi(x+mu) + phi(x-mu)] - 6 phi(x) = f(x),   f(x) = A sin(2 pi x1 / L1)

for a 2x2 complex matrix field phi on a periodic 3D lattice, by Jacobi
iteration starting from phi = 0. Each sweep reads only pre-sweep values, so the
result does not depend on how the lattice is split across ranks.
"""

import contextlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import numpy as np

from src.field.element import MatrixElement
from src.field.field import Field
from src.lattice.lattice import Lattice, LatticeSpec
from src.lattice.site import Site
from src.linalg.matrix import Matrix
from src.shared.errors import ConfigurationError
from src.shared.settings import GlobalSettings
from src.transport.collectives import allreduce_max
from src.transport.endpoint import Backend, TransportEndpoint

logger = logging.getLogger(__name__)

Dims = Tuple[int, ...]


def default_amplitude() -> Matrix:
    """The source amplitude [[1, i], [3, 1]]."""
    values = [complex(re, im) for re, im in GlobalSettings.SolverDefaults.AMPLITUDE]
    return Matrix.from_rows([values[0:2], values[2:4]])


def default_output_path() -> Path:
    return GlobalSettings.FIELDS_DIR / GlobalSettings.SolverDefaults.OUTPUT_FILE_NAME


@dataclass
class PoissonConfig:
    """
    Everything one run of the demo needs.

    Attributes:
        dims: Lattice extents, exactly three
        iterations: Maximum number of sweeps
        nranks: Number of ranks sharing the lattice
        backend: Transport backend
        seed: Lattice seed (per-site random streams)
        output_path: Where the final field is saved
        amplitude: 2x2 source amplitude A
        tolerance: Stop early once the residual drops below this
        checkpoint_every: Sweeps between reported residuals
        rank: This process's rank (tcp backend)
        coordinator: Rank 0 "host:port" (tcp backend)
        listen_host: Address this worker listens on and advertises (tcp backend)
        listen_port: Worker listen port (tcp backend, 0 = any)
    """
    dims: Dims = GlobalSettings.SolverDefaults.DIMS
    iterations: int = GlobalSettings.SolverDefaults.ITERATIONS
    nranks: int = GlobalSettings.SolverDefaults.NRANKS
    backend: Backend = Backend(GlobalSettings.SolverDefaults.BACKEND)
    seed: int = GlobalSettings.SolverDefaults.SEED
    output_path: Path = field(default_factory=default_output_path)
    amplitude: Matrix = field(default_factory=default_amplitude)
    tolerance: Optional[float] = None
    checkpoint_every: int = GlobalSettings.SolverDefaults.CHECKPOINT_EVERY
    rank: int = 0
    coordinator: Optional[str] = None
    listen_host: str = GlobalSettings.TransportSettings.LISTEN_HOST
    listen_port: int = 0

    def validate(self):
        """
        Raises:
            ConfigurationError: If any setting is out of range
        """
        if len(self.dims) != 3:
            raise ConfigurationError(f"The Poisson demo needs exactly 3 dims, got {len(self.dims)}")
        if any(d < 1 for d in self.dims):
            raise ConfigurationError(f"Every extent must be >= 1, got {self.dims}")
        if self.iterations < 0:
            raise ConfigurationError(f"iterations must be >= 0, got {self.iterations}")
        if self.nranks < 1:
            raise ConfigurationError(f"nranks must be >= 1, got {self.nranks}")
        if self.checkpoint_every < 1:
            raise ConfigurationError(f"checkpoint_every must be >= 1, got {self.checkpoint_every}")
        if self.tolerance is not None and not self.tolerance > 0:
            raise ConfigurationError(f"tolerance must be positive, got {self.tolerance}")
        if self.amplitude.shape != (2, 2):
            raise ConfigurationError(f"Amplitude must be 2x2, got {self.amplitude.rows}x{self.amplitude.cols}")
        if not self.listen_host:
            raise ConfigurationError("listen_host must not be empty")
        if not 0 <= self.rank < self.nranks:
            raise ConfigurationError(f"Rank {self.rank} outside 0..{self.nranks - 1}")
        try:
            backend = Backend(self.backend)
        except ValueError:
            raise ConfigurationError(f"Unknown backend {self.backend!r}")
        if backend is Backend.TCP and self.nranks > 1 and not self.coordinator:
            raise ConfigurationError("The tcp backend needs --coordinator host:port")

    def lattice_spec(self) -> LatticeSpec:
        return LatticeSpec(dims=tuple(self.dims), nranks=self.nranks, seed=self.seed)


@dataclass(frozen=True)
class Checkpoint:
    iteration: int
    residual: float


@dataclass
class ConvergenceReport:
    """
    Attributes:
        checkpoints: Residual after selected sweeps, in iteration order
        max_error: Largest entry deviation from the analytic solution
        iterations: Sweeps actually performed
        converged: True if a tolerance was given and reached
        output_path: File the final field was written to
    """
    checkpoints: List[Checkpoint] = field(default_factory=list)
    max_error: float = math.inf
    iterations: int = 0
    converged: bool = False
    output_path: Optional[Path] = None

    @property
    def final_residual(self) -> float:
        return self.checkpoints[-1].residual if self.checkpoints else math.inf


# Pointwise definitions ----------------------------------------------------

def _source_scale(x1: int, length: int) -> float:
    return math.sin(2.0 * math.pi * x1 / length)


def _solution_scale(x1: int, length: int) -> float:
    denominator = 2.0 * math.cos(2.0 * math.pi / length) - 2.0
    if denominator == 0.0:
        return 0.0
    return _source_scale(x1, length) / denominator


def source_term(site: Site, amplitude: Matrix, dims: Dims) -> Matrix:
    """f(x) = A sin(2 pi x1 / L1)."""
    if len(site.coords) != 3:
        raise ConfigurationError(f"source_term needs a 3D site, got {site.coords}")
    return amplitude * _source_scale(site.x(1), dims[1])


def analytic_solution(site: Site, amplitude: Matrix, dims: Dims) -> Matrix:
    """phi*(x) = A sin(2 pi x1 / L1) / (2 cos(2 pi / L1) - 2)."""
    return amplitude * _solution_scale(site.x(1), dims[1])


def _profile(amplitude: Matrix, length: int, scale: Callable[[int, int], float]) -> np.ndarray:
    """One 2x2 value per x1, shape (length, 2, 2)."""
    base = amplitude.to_array()
    return np.stack([base * scale(x1, length) for x1 in range(length)])


def _max_magnitude(values: np.ndarray) -> float:
    # hypot on the parts gives the same rounding whatever the array length
    if values.size == 0:
        return 0.0
    return float(np.hypot(values.real, values.imag).max())


# Stencil ------------------------------------------------------------------

class PoissonStencil:
    """
    Slot tables for one rank's share of the lattice.

    ``up[mu]`` and ``down[mu]`` hold, for every owned site in canonical order,
    the storage slot of its neighbour in direction mu, so a sweep is a handful
    of fancy-indexed numpy operations over ``field.array()``.
    """

    def __init__(self, phi: Field, amplitude: Matrix):
        lattice = phi.lattice
        local = lattice.local_sites
        self.phi = phi
        self.ndim = lattice.ndim
        self.up = [phi.slots_of(lattice.up[local, mu]) for mu in range(self.ndim)]
        self.down = [phi.slots_of(lattice.down[local, mu]) for mu in range(self.ndim)]

        length = lattice.dims[1]
        x1 = lattice.coordinate_table()[local, 1]
        self.source = _profile(amplitude, length, _source_scale)[x1]
        self.solution = _profile(amplitude, length, _solution_scale)[x1]

    def neighbour_sum(self, values: np.ndarray) -> np.ndarray:
        """phi(x+0) + phi(x-0) + phi(x+1) + ... summed in that order."""
        total = values[self.up[0]] + values[self.down[0]]
        for mu in range(1, self.ndim):
            total = total + values[self.up[mu]]
            total = total + values[self.down[mu]]
        return total

    def sweep(self):
        values = self.phi.array()
        updated = (self.neighbour_sum(values) - self.source) / (2 * self.ndim)
        values[:self.phi.n_local] = updated

    def local_residual(self) -> float:
        values = self.phi.array()
        local = values[:self.phi.n_local]
        residual = self.neighbour_sum(values) - (2 * self.ndim) * local - self.source
        return _max_magnitude(residual)

    def local_error(self) -> float:
        deviation = self.phi.local_array() - self.solution
        return _max_magnitude(deviation)


def jacobi_sweep(phi: Field, amplitude: Matrix, stencil: Optional[PoissonStencil] = None):
    """
    Replace every owned site by (sum of the 6 neighbours - f) / 6.

    All reads see pre-sweep values. The halo must be current; call
    ``phi.update()`` afterwards before the next sweep.
    """
    (stencil or PoissonStencil(phi, amplitude)).sweep()


def residual(phi: Field, endpoint: TransportEndpoint, stencil: PoissonStencil) -> float:
    """Global max entry magnitude of the equation residual."""
    return allreduce_max(endpoint, stencil.local_residual())


def max_error(phi: Field, endpoint: TransportEndpoint, stencil: PoissonStencil) -> float:
    """Global max entry magnitude of phi - phi*."""
    return allreduce_max(endpoint, stencil.local_error())


# Driver -------------------------------------------------------------------

CheckpointCallback = Callable[[Checkpoint], None]


def solve_on_endpoint(
    config: PoissonConfig,
    endpoint: TransportEndpoint,
    on_checkpoint: Optional[CheckpointCallback] = None,
) -> ConvergenceReport:
    """
    Run the demo as one rank; every rank of the job must call this.

    ``on_checkpoint`` is only invoked on rank 0.
    """
    config.validate()
    lattice = Lattice.build(config.lattice_spec(), endpoint.rank)
    phi = Field(lattice, MatrixElement(2, 2))
    phi.update(endpoint)
    stencil = PoissonStencil(phi, config.amplitude)
    report = ConvergenceReport(output_path=Path(config.output_path))

    def checkpoint(iteration: int, value: float):
        point = Checkpoint(iteration, value)
        report.checkpoints.append(point)
        logger.info(f"Checkpoint iter={iteration} residual={value!r}")
        if on_checkpoint is not None and endpoint.rank == 0:
            on_checkpoint(point)

    checkpoint(0, residual(phi, endpoint, stencil))
    iteration = 0
    while iteration < config.iterations:
        stencil.sweep()
        phi.update(endpoint)
        iteration += 1

        due = iteration % config.checkpoint_every == 0 or iteration == config.iterations
        if config.tolerance is not None:
            value = residual(phi, endpoint, stencil)
            if value < config.tolerance:
                report.converged = True
                checkpoint(iteration, value)
                break
            if due:
                checkpoint(iteration, value)
        elif due:
            checkpoint(iteration, residual(phi, endpoint, stencil))

    report.iterations = iteration
    if endpoint.rank == 0:
        # A missing directory surfaces as a file error from the collective save
        with contextlib.suppress(OSError):
            report.output_path.parent.mkdir(parents=True, exist_ok=True)
    phi.save(report.output_path, endpoint)
    report.max_error = max_error(phi, endpoint, stencil)
    logger.info(
        f"Rank {endpoint.rank} finished after {iteration} sweeps, max_error={report.max_error!r}"
    )
    return report
