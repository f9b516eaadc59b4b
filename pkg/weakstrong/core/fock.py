"""
Numeric qubit x truncated-Fock engine.

The joint state is stored qubit-major: index ``q * N + n`` with q = 0 for |down>
and q = 1 for |up>. Hamiltonians are built divided by hbar (rad/s) from the
carrier and sideband couplings, and evolved exactly through the eigendecomposition
of the Hermitian matrix. Motional operators are dimensionless: z = a + a^dag in
units of delta_z and p = i(a^dag - a)/2 in units of hbar / delta_z.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from .analytic import DEFAULT_ETA, DEFAULT_OMEGA_RABI, MeasurementConfig, make_cat_state
from .exceptions import (
    DegenerateState,
    DimensionTooSmall,
    PostSelectionFailed,
    TruncationOverflow,
    ValidationError,
)

logger = logging.getLogger(__name__)

MIN_DIMENSION = 8
TAIL_WIDTH = 4
TAIL_TOLERANCE = 1e-8
POSTSELECTION_FLOOR = 1e-15
HERMITICITY_TOLERANCE = 1e-12

HAMILTONIAN_KINDS = ("carrier", "red_sideband", "blue_sideband", "bichromatic")

# Qubit operators in the (down, up) basis; sigma_plus = |up><down|
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.conj().T
SIGMA_X = SIGMA_PLUS + SIGMA_MINUS
SIGMA_Y = -1j * (SIGMA_PLUS - SIGMA_MINUS)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
for _matrix in (SIGMA_PLUS, SIGMA_MINUS, SIGMA_X, SIGMA_Y, SIGMA_Z):
    _matrix.setflags(write=False)


def annihilation(dimension: int) -> np.ndarray:
    """Truncated lowering operator a."""
    return np.diag(np.sqrt(np.arange(1, dimension, dtype=float)), k=1).astype(complex)


def creation(dimension: int) -> np.ndarray:
    """Truncated raising operator a^dag."""
    return annihilation(dimension).conj().T


def position_operator(dimension: int) -> np.ndarray:
    """z / delta_z = a + a^dag."""
    return annihilation(dimension) + creation(dimension)


def momentum_operator(dimension: int) -> np.ndarray:
    """p delta_z / hbar = i (a^dag - a) / 2."""
    return 0.5j * (creation(dimension) - annihilation(dimension))


@dataclass(frozen=True)
class JointState:
    """Immutable qubit x Fock amplitude vector of length 2N."""

    amplitudes: np.ndarray
    truncation_dim: int

    def __post_init__(self) -> None:
        amplitudes = np.array(self.amplitudes, dtype=complex)
        if amplitudes.shape != (2 * self.truncation_dim,):
            raise ValidationError(
                f"expected {2 * self.truncation_dim} amplitudes, got {amplitudes.shape}",
                field="amplitudes",
            )
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def product(cls, qubit: np.ndarray, motional: np.ndarray) -> "JointState":
        """Tensor product of a qubit vector (down, up) and a motional vector."""
        motional = np.asarray(motional, dtype=complex)
        return cls(np.kron(np.asarray(qubit, dtype=complex), motional), motional.size)

    @property
    def down(self) -> np.ndarray:
        return self.amplitudes[: self.truncation_dim]

    @property
    def up(self) -> np.ndarray:
        return self.amplitudes[self.truncation_dim :]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tail_mass(self) -> float:
        """Population in the top TAIL_WIDTH Fock levels of both qubit branches."""
        start = self.truncation_dim - TAIL_WIDTH
        return float(
            np.sum(np.abs(self.down[start:]) ** 2) + np.sum(np.abs(self.up[start:]) ** 2)
        )

    def sigma_z(self) -> float:
        """<sigma_z> = P(up) - P(down)."""
        return float(np.vdot(self.up, self.up).real - np.vdot(self.down, self.down).real)


@dataclass(frozen=True)
class HamiltonianSpec:
    """
    One of the laser couplings, with phases reduced mod 2 pi.

    ``phases`` is (phi_car,) for the carrier, (phi_red,) or (phi_blue,) for a
    single sideband and (phi_red, phi_blue) for the bichromatic field.
    """

    kind: str
    phases: Tuple[float, ...]
    rabi: float
    lamb_dicke: float

    def __post_init__(self) -> None:
        if self.kind not in HAMILTONIAN_KINDS:
            raise ValidationError(f"unknown Hamiltonian kind {self.kind!r}", field="kind")
        expected = 2 if self.kind == "bichromatic" else 1
        if len(self.phases) != expected:
            raise ValidationError(
                f"{self.kind} takes {expected} phase(s), got {len(self.phases)}",
                field="phases",
            )
        if not self.rabi > 0.0:
            raise ValidationError(f"rabi must be > 0, got {self.rabi!r}", field="rabi")
        if not 0.0 < self.lamb_dicke < 0.3:
            raise ValidationError(
                f"lamb_dicke must lie in (0, 0.3), got {self.lamb_dicke!r}",
                field="lamb_dicke",
            )
        reduced = tuple(float(np.mod(phase, 2.0 * math.pi)) for phase in self.phases)
        object.__setattr__(self, "phases", reduced)

    @classmethod
    def bichromatic(
        cls,
        phi_plus: float,
        phi_minus: float,
        rabi: float = DEFAULT_OMEGA_RABI,
        lamb_dicke: float = DEFAULT_ETA,
    ) -> "HamiltonianSpec":
        """Bichromatic field from the sum/difference phases phi_+ and phi_-."""
        return cls(
            "bichromatic", (phi_plus + phi_minus, phi_plus - phi_minus), rabi, lamb_dicke
        )

    @property
    def phi_plus(self) -> float:
        """Sum phase, recovered mod pi from the reduced pair."""
        return 0.5 * (self.phases[0] + self.phases[1])

    @property
    def phi_minus(self) -> float:
        """Difference phase, recovered mod pi from the reduced pair."""
        return 0.5 * (self.phases[0] - self.phases[1])


def _sideband(
    qubit: np.ndarray, motion: np.ndarray, phase: float, strength: float
) -> np.ndarray:
    # i * strength * (qubit (x) motion e^{i phase}) + h.c.
    term = 1j * strength * np.exp(1j * phase) * np.kron(qubit, motion)
    return term + term.conj().T


def build_hamiltonian(spec: HamiltonianSpec, dimension: int) -> np.ndarray:
    """
    Build H / hbar for a carrier, sideband or bichromatic drive.

    Args:
        spec: Coupling description
        dimension: Fock truncation N

    Returns:
        Hermitian (2N x 2N) matrix in rad/s
    """
    _check_dimension(dimension)
    a = annihilation(dimension)
    if spec.kind == "carrier":
        term = 0.5 * spec.rabi * np.exp(1j * spec.phases[0]) * np.kron(
            SIGMA_PLUS, np.eye(dimension)
        )
        return term + term.conj().T

    strength = 0.5 * spec.lamb_dicke * spec.rabi
    if spec.kind == "red_sideband":
        return _sideband(SIGMA_PLUS, a, spec.phases[0], strength)
    if spec.kind == "blue_sideband":
        return _sideband(SIGMA_PLUS, a.conj().T, spec.phases[0], strength)
    phi_red, phi_blue = spec.phases
    return _sideband(SIGMA_PLUS, a, phi_red, strength) + _sideband(
        SIGMA_PLUS, a.conj().T, phi_blue, strength
    )


def operator_decomposition(hamiltonian: np.ndarray, dimension: int) -> Dict[str, float]:
    """
    Project H onto {sigma_x, sigma_y} x {a + a^dag, i(a^dag - a)}.

    Coefficients are real for the sideband family and are returned keyed as
    ``"x_z"``, ``"x_p"``, ``"y_z"``, ``"y_p"``.
    """
    a = annihilation(dimension)
    motion = {"z": a + a.conj().T, "p": 1j * (a.conj().T - a)}
    qubit = {"x": SIGMA_X, "y": SIGMA_Y}
    coefficients: Dict[str, float] = {}
    for q_name, q_op in qubit.items():
        for m_name, m_op in motion.items():
            basis = np.kron(q_op, m_op)
            weight = np.vdot(basis, basis).real
            coefficients[f"{q_name}_{m_name}"] = float(
                (np.vdot(basis, hamiltonian) / weight).real
            )
    return coefficients


class Propagator:
    """
    Spectral form of exp(-i H t) for a fixed Hermitian H.

    Diagonalizing once lets the same coupling be applied for many durations,
    as the readout does for every readout wavenumber.
    """

    def __init__(self, hamiltonian: np.ndarray):
        hamiltonian = np.asarray(hamiltonian, dtype=complex)
        if not np.allclose(
            hamiltonian, hamiltonian.conj().T, rtol=0.0, atol=HERMITICITY_TOLERANCE
        ):
            raise ValidationError("Hamiltonian is not Hermitian", field="hamiltonian")
        self.energies, self.vectors = linalg.eigh(hamiltonian)

    def matrix(self, t: float) -> np.ndarray:
        """Full unitary exp(-i H t)."""
        return (self.vectors * np.exp(-1j * self.energies * t)) @ self.vectors.conj().T

    def apply(self, state: JointState, t: float, check_tail: bool = True) -> JointState:
        """Evolve ``state`` for time t (negative t runs backwards)."""
        if state.amplitudes.size != self.energies.size:
            raise ValidationError("state and Hamiltonian dimensions differ", field="state")
        coefficients = self.vectors.conj().T @ state.amplitudes
        evolved = JointState(
            self.vectors @ (np.exp(-1j * self.energies * t) * coefficients),
            state.truncation_dim,
        )
        if check_tail:
            _guard_tail(evolved)
        return evolved


def _check_dimension(dimension: int) -> None:
    if dimension < MIN_DIMENSION:
        raise DimensionTooSmall(
            f"truncation dimension must be >= {MIN_DIMENSION}, got {dimension}",
            field="truncation_dim",
        )


def _guard_tail(state: JointState) -> None:
    tail = state.tail_mass()
    logger.debug("Fock tail mass %.3e (N=%d)", tail, state.truncation_dim)
    if tail >= TAIL_TOLERANCE:
        raise TruncationOverflow(
            f"tail mass {tail:.3e} in the top {TAIL_WIDTH} Fock levels; "
            f"increase the truncation above N={state.truncation_dim}"
        )


def ground_joint_state(dimension: int) -> JointState:
    """|down> (x) |n=0>."""
    _check_dimension(dimension)
    amplitudes = np.zeros(2 * dimension, dtype=complex)
    amplitudes[0] = 1.0
    return JointState(amplitudes, dimension)


def evolve(state: JointState, hamiltonian: np.ndarray, t: float) -> JointState:
    """
    Apply exp(-i H t) to a joint state.

    Raises:
        TruncationOverflow: If the evolved state reaches the top of the basis
    """
    return Propagator(hamiltonian).apply(state, t)


def carrier_rotation(
    angle: float, rabi: float = DEFAULT_OMEGA_RABI, lamb_dicke: float = DEFAULT_ETA
) -> Tuple[HamiltonianSpec, float]:
    """Carrier spec and duration that realize R_y(angle) = exp(-i angle sigma_y / 2)."""
    # phi = -pi/2 gives H = (Omega/2) sigma_y; the opposite phase reverses the sense
    phase = -0.5 * math.pi if angle >= 0.0 else 0.5 * math.pi
    return HamiltonianSpec("carrier", (phase,), rabi, lamb_dicke), abs(angle) / rabi


def rotate_qubit_y(
    state: JointState, angle: float, rabi: float = DEFAULT_OMEGA_RABI
) -> JointState:
    """Apply R_y(angle) to the qubit with a resonant carrier pulse."""
    if angle == 0.0:
        return state
    spec, duration = carrier_rotation(angle, rabi)
    return evolve(state, build_hamiltonian(spec, state.truncation_dim), duration)


def project_up(state: JointState) -> Tuple[np.ndarray, float]:
    """Keep the |up> branch; returns (normalized motional vector, probability)."""
    return _normalize_branch(state.up)


def post_select(state: JointState, theta: float) -> Tuple[np.ndarray, float]:
    """
    Project onto |f> = cos(theta)|up> - sin(theta)|down>.

    Returns:
        Tuple of (normalized motional vector, success probability)

    Raises:
        PostSelectionFailed: When the probability is below 1e-15
    """
    branch = math.cos(theta) * state.up - math.sin(theta) * state.down
    return _normalize_branch(branch)


def _normalize_branch(branch: np.ndarray) -> Tuple[np.ndarray, float]:
    probability = float(np.vdot(branch, branch).real)
    if probability < POSTSELECTION_FLOOR:
        raise PostSelectionFailed(f"post-selection probability {probability:.3e}")
    return branch / math.sqrt(probability), probability


def expectation_z(motional: np.ndarray, delta_z: float = 1.0) -> float:
    """<z> = delta_z * sum_n 2 Re(c_n^* c_{n+1}) sqrt(n + 1)."""
    motional = np.asarray(motional, dtype=complex)
    ladder = np.sqrt(np.arange(1, motional.size, dtype=float))
    return float(
        delta_z * 2.0 * np.sum((np.conj(motional[:-1]) * motional[1:]).real * ladder)
    )


def von_neumann_hamiltonian(config: MeasurementConfig, dimension: int) -> np.ndarray:
    """Bichromatic coupling with phi_+ = phi_- = pi/2, i.e. gamma0 sigma_x p."""
    spec = HamiltonianSpec.bichromatic(
        0.5 * math.pi, 0.5 * math.pi, config.omega_rabi, config.eta
    )
    return build_hamiltonian(spec, dimension)


def run_protocol(
    config: MeasurementConfig, dimension: int = 128
) -> Tuple[np.ndarray, float]:
    """
    Pre-select, couple, rotate and post-select, as in the experiment.

    Args:
        config: Operating point
        dimension: Fock truncation N

    Returns:
        Tuple of (normalized motional state, post-selection probability)
    """
    state = ground_joint_state(dimension)
    state = evolve(state, von_neumann_hamiltonian(config, dimension), config.t)
    state = rotate_qubit_y(state, 2.0 * config.theta, config.omega_rabi)
    return project_up(state)


def coherent_state(alpha: complex, dimension: int) -> np.ndarray:
    """Fock amplitudes e^{-|alpha|^2/2} alpha^n / sqrt(n!)."""
    amplitudes = np.empty(dimension, dtype=complex)
    amplitudes[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, dimension):
        amplitudes[n] = amplitudes[n - 1] * alpha / math.sqrt(n)
    return amplitudes


def cat_state_fock(config: MeasurementConfig, dimension: int) -> np.ndarray:
    """Fock expansion of the normalized analytic cat state."""
    cat = make_cat_state(config)
    half = 0.5 * config.gamma_big
    # phi(z + gamma0 t) sits at -gamma0 t, i.e. coherent amplitude -Gamma/2
    vector = cat.coeff_plus * coherent_state(-half, dimension) + cat.coeff_minus * (
        coherent_state(half, dimension)
    )
    return vector / np.linalg.norm(vector)


def fidelity(first: np.ndarray, second: np.ndarray) -> float:
    """|<first|second>|^2 for (not necessarily normalized) vectors."""
    overlap = np.vdot(first, second)
    return float(
        abs(overlap) ** 2 / (np.vdot(first, first).real * np.vdot(second, second).real)
    )


def motional_density(
    motional: np.ndarray, z: np.ndarray, delta_z: float = 1.0
) -> np.ndarray:
    """
    Position density of a Fock vector via Hermite functions.

    Args:
        motional: Fock amplitudes
        z: Positions in length units
        delta_z: Ground-state width

    Returns:
        |psi(z)|^2 per unit length
    """
    x = np.asarray(z, dtype=float) / (math.sqrt(2.0) * delta_z)
    previous = np.zeros_like(x)
    current = math.pi**-0.25 * np.exp(-0.5 * x * x)
    amplitude = motional[0] * current
    for n in range(1, len(motional)):
        following = (
            math.sqrt(2.0 / n) * x * current - math.sqrt((n - 1) / n) * previous
        )
        previous, current = current, following
        amplitude = amplitude + motional[n] * current
    return np.abs(amplitude) ** 2 / (math.sqrt(2.0) * delta_z)


def protocol_shift(
    config: MeasurementConfig, dimension: int = 128
) -> Tuple[float, Optional[float]]:
    """Centroid of the Fock-engine pointer (length units) and its fidelity."""
    motional, _ = run_protocol(config, dimension)
    shift = expectation_z(motional, config.delta_z)
    try:
        match = fidelity(cat_state_fock(config, dimension), motional)
    except DegenerateState:
        match = None
    return shift, match
