"""Single-shot runs of the hidden-bit guessing protocol and its baselines.

A run prepares the device, couples it to the mode register holding the
hidden bit through a control-gate channel, and measures the device. The
guess probability is reported next to the optimal two-state discrimination
value so optimality can be checked per run, and the labeled-particle
baseline shows the same procedure learning nothing when the objects are
distinguishable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gates import GeneralizedControlGate, apply_gate, ideal_gate
from .linalg import (
    TensorFactorization,
    as_complex_matrix,
    hermitian_eigen,
    partial_trace_b,
    require_density,
    trace_distance,
    trace_norm,
)
from .spaces import (
    DeviceBasis,
    TargetBasis,
    distinguishable_joint_state,
    position_swap,
    target_state,
    uniform_device_state,
)

_MEASUREMENT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MeasurementSpec:
    """Measurement on the device: PSD effects summing to the identity.

    With ``projective=True`` each effect must additionally be idempotent.
    """

    effects: tuple[np.ndarray, ...]
    projective: bool = True

    def __post_init__(self) -> None:
        if not self.effects:
            raise ValueError("a measurement needs at least one effect")
        checked = []
        dim = None
        for idx, e in enumerate(self.effects):
            a = as_complex_matrix(e, f"effects[{idx}]")
            if a.shape[0] != a.shape[1]:
                raise ValueError(f"effects[{idx}] is not square")
            if dim is None:
                dim = a.shape[0]
            elif a.shape[0] != dim:
                raise ValueError("effects must share one dimension")
            if np.abs(a - a.conj().T).max() > _MEASUREMENT_TOL:
                raise ValueError(f"effects[{idx}] is not Hermitian")
            if np.linalg.eigvalsh(a).min() < -_MEASUREMENT_TOL:
                raise ValueError(f"effects[{idx}] is not positive semidefinite")
            if self.projective and np.abs(a @ a - a).max() > _MEASUREMENT_TOL:
                raise ValueError(f"effects[{idx}] is not idempotent")
            a = a.copy()
            a.setflags(write=False)
            checked.append(a)
        total = sum(checked)
        if np.abs(total - np.eye(dim)).max() > _MEASUREMENT_TOL:
            raise ValueError("effects do not sum to the identity (incomplete)")
        object.__setattr__(self, "effects", tuple(checked))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]


def _device_preparation(n: int) -> np.ndarray:
    phi = uniform_device_state(DeviceBasis(n))
    return np.outer(phi, phi.conj())


def run_protocol(n: int, gate: GeneralizedControlGate, rho_d_init, k: int) -> np.ndarray:
    """Joint device-register state after one interaction with hidden bit k."""
    if gate.n_settings != n:
        raise ValueError(f"gate has {gate.n_settings} settings, expected {n}")
    if gate.target_dim != n + 1:
        raise ValueError(
            f"gate target dimension {gate.target_dim} does not match register "
            f"dimension {n + 1}"
        )
    ket = target_state(TargetBasis(n), k)
    return apply_gate(gate, rho_d_init, np.outer(ket, ket.conj()))


def reduced_device_states(
    n: int, gate: GeneralizedControlGate, rho_d_init
) -> tuple[np.ndarray, np.ndarray]:
    """Device marginals of the run for k = 0 and k = 1."""
    f = TensorFactorization(n, gate.target_dim)
    out = []
    for k in (0, 1):
        joint = run_protocol(n, gate, rho_d_init, k)
        out.append(partial_trace_b(joint, f))
    return out[0], out[1]


def success_probability(rho0, rho1, measurement: MeasurementSpec, prior: float = 0.5) -> float:
    """Guess probability: prior Tr(E0 rho0) + (1 - prior) Tr(E1 rho1).

    ``measurement`` must have exactly two effects, the first meaning
    "guess 0"; ``prior`` is the probability that the hidden bit is 0.
    """
    if len(measurement.effects) != 2:
        raise ValueError(
            f"two-hypothesis guessing needs exactly 2 effects, got "
            f"{len(measurement.effects)}"
        )
    if not 0.0 <= prior <= 1.0:
        raise ValueError(f"prior must be in [0, 1], got {prior}")
    rho0 = require_density(rho0, name="rho0")
    rho1 = require_density(rho1, name="rho1")
    e0, e1 = measurement.effects
    p = prior * np.trace(e0 @ rho0).real + (1.0 - prior) * np.trace(e1 @ rho1).real
    return float(p)


def helstrom_bound(rho0, rho1, prior: float = 0.5) -> float:
    """Best achievable guess probability for discriminating rho0 vs rho1.

    1/2 + (1/2) || prior rho0 - (1 - prior) rho1 ||_1; no measurement does
    better, and :func:`helstrom_measurement` attains it.
    """
    rho0 = require_density(rho0, name="rho0")
    rho1 = require_density(rho1, name="rho1")
    if rho0.shape != rho1.shape:
        raise ValueError(f"shape mismatch: {rho0.shape} vs {rho1.shape}")
    if not 0.0 <= prior <= 1.0:
        raise ValueError(f"prior must be in [0, 1], got {prior}")
    return 0.5 + 0.5 * trace_norm(prior * rho0 - (1.0 - prior) * rho1)


def helstrom_measurement(rho0, rho1, prior: float = 0.5) -> MeasurementSpec:
    """Optimal projective measurement for the two-state guessing problem.

    Projects onto the strictly positive eigenspace of
    prior rho0 - (1 - prior) rho1 for the guess-0 effect; eigenvalue-zero
    directions are assigned to the guess-1 effect (the tie does not affect
    the success probability).
    """
    rho0 = require_density(rho0, name="rho0")
    rho1 = require_density(rho1, name="rho1")
    if rho0.shape != rho1.shape:
        raise ValueError(f"shape mismatch: {rho0.shape} vs {rho1.shape}")
    if not 0.0 <= prior <= 1.0:
        raise ValueError(f"prior must be in [0, 1], got {prior}")
    delta = prior * rho0 - (1.0 - prior) * rho1
    evals, evecs = hermitian_eigen(delta)
    pos = evecs[:, evals > 0.0]
    p0 = pos @ pos.conj().T
    return MeasurementSpec((p0, np.eye(rho0.shape[0]) - p0))


def canonical_measurement(n: int, rho_d_init) -> MeasurementSpec:
    """Projector onto the pure initial device state plus its complement.

    Raises if the supplied state is mixed: the canonical guess rule is
    defined only for a pure preparation, so callers with mixed devices must
    supply their own measurement.
    """
    rho = require_density(rho_d_init, name="rho_d_init")
    if rho.shape[0] != n:
        raise ValueError(f"rho_d_init has dimension {rho.shape[0]}, expected {n}")
    evals, evecs = hermitian_eigen(rho)
    if abs(evals[-1] - 1.0) > 1e-10:
        raise ValueError(
            "rho_d_init is mixed (largest eigenvalue "
            f"{evals[-1]:.12g}); supply a custom measurement"
        )
    phi = evecs[:, -1]
    p0 = np.outer(phi, phi.conj())
    return MeasurementSpec((p0, np.eye(n) - p0))


def setting_outcome_distribution(rho_joint, n: int) -> np.ndarray:
    """Probabilities of each device-setting outcome on a joint state."""
    a = as_complex_matrix(rho_joint, "rho_joint")
    if a.shape[0] % n != 0:
        raise ValueError(f"joint dimension {a.shape[0]} not divisible by {n}")
    t = a.shape[0] // n
    blocks = a.reshape(n, t, n, t)
    return np.einsum("iaia->i", blocks).real


def location_guess_probability(
    n: int, gate: GeneralizedControlGate, rho_d_init, measurement: MeasurementSpec
) -> float:
    """Probability of naming the excited site after measuring the device.

    Runs the protocol with the bit set to 1, applies the device
    measurement, and per outcome guesses the most likely site from the
    conditional register state (maximum-likelihood rule).
    """
    joint = run_protocol(n, gate, rho_d_init, 1)
    t = gate.target_dim
    blocks = joint.reshape(n, t, n, t)
    total = 0.0
    for e in measurement.effects:
        conditional = np.einsum("kl,lakc->ac", e, blocks)
        site_probs = np.diagonal(conditional).real[1:]
        total += float(site_probs.max())
    return total


def location_tradeoff(n: int) -> tuple[float, float]:
    """Endpoint measurements of the value/location trade-off (ideal run).

    Returns ``(setting_basis_location_prob, post_value_location_prob)``:
    measuring the device in the setting basis pins the excitation site with
    certainty (first entry 1) while its outcome statistics carry no
    information about the bit, whereas after the canonical value
    measurement the site can only be guessed with probability 1/n.
    """
    if n < 2:
        raise ValueError(f"the trade-off needs n >= 2, got {n}")
    gate = ideal_gate(n)
    rho_d = _device_preparation(n)
    joint1 = run_protocol(n, gate, rho_d, 1)
    joint0 = run_protocol(n, gate, rho_d, 0)

    p0 = setting_outcome_distribution(joint0, n)
    p1 = setting_outcome_distribution(joint1, n)
    deviation = float(np.abs(p0 - p1).max())
    if deviation > 1e-12:
        raise RuntimeError(
            f"setting-basis outcomes depend on the hidden bit (dev {deviation:.3g})"
        )

    t = gate.target_dim
    blocks = joint1.reshape(n, t, n, t)
    setting_prob = 0.0
    for i in range(n):
        conditional = blocks[i, :, i, :]
        setting_prob += float(np.diagonal(conditional).real[1:].max())

    value_measurement = canonical_measurement(n, rho_d)
    value_prob = location_guess_probability(n, gate, rho_d, value_measurement)
    return float(setting_prob), float(value_prob)


def distinguishable_baseline(n: int, k: int) -> np.ndarray:
    """Device marginal of the same run with labeled (distinguishable) objects.

    The joint state stays a pure superposition of one labeled configuration
    per setting; the configurations are mutually orthogonal because the
    labels record which object went where, so the device marginal is
    maximally mixed for either bit value.
    """
    init = distinguishable_joint_state(n, k)
    branches = [position_swap(init, j) for j in range(1, n + 1)]
    amp = 1.0 / np.sqrt(n)
    rho = np.zeros((n, n), dtype=complex)
    for i, bi in enumerate(branches):
        for j, bj in enumerate(branches):
            if bi == bj:
                rho[i, j] = amp * amp
    return rho


@dataclass(frozen=True, eq=False)
class ProtocolReport:
    """Per-run record: guess probability, its optimum, and the marginals."""

    n_objects: int
    gate_family: str
    p_success: float
    helstrom_bound: float
    trace_distance_device: float
    rho_d_final_k0: np.ndarray
    rho_d_final_k1: np.ndarray
    location_guess_prob: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_success <= 1.0:
            raise ValueError(f"p_success {self.p_success} outside [0, 1]")
        if self.p_success > self.helstrom_bound + 1e-10:
            raise ValueError(
                f"p_success {self.p_success!r} exceeds the optimum "
                f"{self.helstrom_bound!r}"
            )


def build_report(
    n: int,
    gate: GeneralizedControlGate,
    gate_family: str,
    rho_d_init=None,
    prior: float = 0.5,
) -> ProtocolReport:
    """Run the full protocol for one gate and assemble the report.

    Uses the uniform pure device preparation by default and the canonical
    measurement when the preparation is pure, falling back to the optimal
    measurement otherwise.
    """
    if rho_d_init is None:
        rho_d_init = _device_preparation(n)
    rho0, rho1 = reduced_device_states(n, gate, rho_d_init)
    try:
        measurement = canonical_measurement(n, rho_d_init)
    except ValueError:
        measurement = helstrom_measurement(rho0, rho1, prior)
    p = success_probability(rho0, rho1, measurement, prior)
    bound = helstrom_bound(rho0, rho1, prior)
    if prior == 0.5 and p < 0.5 - 1e-12:
        raise ArithmeticError(
            f"guess rule fell below chance under the uniform prior: {p!r}"
        )
    return ProtocolReport(
        n_objects=n,
        gate_family=gate_family,
        p_success=p,
        helstrom_bound=bound,
        trace_distance_device=trace_distance(rho0, rho1),
        rho_d_final_k0=rho0,
        rho_d_final_k1=rho1,
        location_guess_prob=location_guess_probability(n, gate, rho_d_init, measurement),
    )
