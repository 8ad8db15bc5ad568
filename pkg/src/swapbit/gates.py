"""Control-gate channels driven by a device register of swap settings.

A channel in this family is fixed, up to a unitary change of Kraus
representation, by one unit "overlap vector" in C^M per device setting
together with the per-setting target unitary. On a product input the
channel scales each device coherence ``rho_d[k, l]`` by the dot product of
the k-th and l-th overlap vectors while the matching unitaries act on the
target factor, so the Gram matrix of the vectors is the only
gauge-invariant content.

Two named members bracket the family: :func:`ideal_gate` (all vectors
equal) is plain conjugation by the controlled unitary, and
:func:`classical_gate` (orthonormal vectors) keeps only the diagonal device
populations, i.e. it fully dephases the control register.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import TensorFactorization, as_complex_matrix, require_density
from .spaces import TargetBasis, swap_operators

#: Overlap vectors must be unit norm within this tolerance.
UNIT_NORM_TOL = 1e-12

#: Target unitaries must satisfy U^dag U = I within this tolerance.
UNITARY_TOL = 1e-10

#: Kraus completeness: sum_j K_j^dag K_j = I within this tolerance.
COMPLETENESS_TOL = 1e-10

#: Block tolerance for membership verification (looser than the arithmetic
#: tolerances to absorb accumulated error in block extraction).
MEMBERSHIP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class GeneralizedControlGate:
    """Channel parameters: per-setting overlap vectors and target unitaries.

    ``overlap_vectors`` is an (n_settings, kraus_rank) complex array whose
    rows are unit vectors; ``target_unitaries`` holds one unitary per
    setting, all of equal dimension. Instances are immutable (arrays are
    marked read-only) and safe to share across threads.
    """

    overlap_vectors: np.ndarray
    target_unitaries: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        v = np.array(self.overlap_vectors, dtype=complex)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"overlap_vectors must be (n, m) 2-D, got {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("overlap_vectors contain NaN or Inf entries")
        norms = np.linalg.norm(v, axis=1)
        if np.abs(norms - 1.0).max() > UNIT_NORM_TOL:
            raise ValueError(
                f"overlap vectors must be unit norm within {UNIT_NORM_TOL}, "
                f"worst deviation {np.abs(norms - 1.0).max():.3g}"
            )
        if len(self.target_unitaries) != v.shape[0]:
            raise ValueError(
                f"need one target unitary per setting: {len(self.target_unitaries)}"
                f" unitaries for {v.shape[0]} settings"
            )
        us = []
        dim = None
        for idx, u in enumerate(self.target_unitaries):
            a = as_complex_matrix(u, f"target_unitaries[{idx}]")
            if a.shape[0] != a.shape[1]:
                raise ValueError(f"target_unitaries[{idx}] is not square")
            if dim is None:
                dim = a.shape[0]
            elif a.shape[0] != dim:
                raise ValueError("target unitaries must share one dimension")
            dev = np.abs(a.conj().T @ a - np.eye(dim)).max()
            if dev > UNITARY_TOL:
                raise ValueError(
                    f"target_unitaries[{idx}] is not unitary (deviation {dev:.3g})"
                )
            a = a.copy()
            a.setflags(write=False)
            us.append(a)
        v.setflags(write=False)
        object.__setattr__(self, "overlap_vectors", v)
        object.__setattr__(self, "target_unitaries", tuple(us))

    @property
    def n_settings(self) -> int:
        return self.overlap_vectors.shape[0]

    @property
    def kraus_rank(self) -> int:
        return self.overlap_vectors.shape[1]

    @property
    def target_dim(self) -> int:
        return self.target_unitaries[0].shape[0]

    def gram(self) -> np.ndarray:
        """Pairwise dot products gram[k, l] = v_k . conj(v_l).

        Hermitian with unit diagonal; this matrix alone determines the
        channel for a fixed list of target unitaries.
        """
        v = self.overlap_vectors
        return v @ v.conj().T


def _protocol_swaps(n: int) -> tuple[np.ndarray, ...]:
    return swap_operators(TargetBasis(n))


def ideal_gate(n: int) -> GeneralizedControlGate:
    """Coherence-preserving gate: conjugation by sum_k |k><k| (x) S_k."""
    return GeneralizedControlGate(np.ones((n, 1), dtype=complex), _protocol_swaps(n))


def classical_gate(n: int) -> GeneralizedControlGate:
    """Fully dephasing gate: orthonormal overlap vectors, one per setting."""
    return GeneralizedControlGate(np.eye(n, dtype=complex), _protocol_swaps(n))


def random_gate(n: int, m: int, seed) -> GeneralizedControlGate:
    """Sample a gate with overlap vectors uniform on the unit sphere of C^m.

    Components are drawn i.i.d. complex Gaussian from a PCG64 stream and
    each row is normalized, which is the uniform sphere distribution.
    ``seed`` may be a 64-bit integer, a ``SeedSequence`` or an existing
    ``numpy.random.Generator``; a fixed integer seed reproduces the gate
    exactly.
    """
    if m < 1:
        raise ValueError(f"kraus rank m must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return GeneralizedControlGate(v, _protocol_swaps(n))


def random_density_operator(dim: int, seed, rank: int | None = None) -> np.ndarray:
    """Wishart-sampled density operator; ``rank=1`` gives a Haar-random pure state."""
    rng = np.random.default_rng(seed)
    r = dim if rank is None else rank
    if not 1 <= r <= dim:
        raise ValueError(f"rank must be in 1..{dim}, got {r}")
    a = rng.standard_normal((dim, r)) + 1j * rng.standard_normal((dim, r))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def apply_gate(gate: GeneralizedControlGate, rho_d, rho_t) -> np.ndarray:
    """Apply the channel to the product input rho_d (x) rho_t.

    Returns the joint output on device (x) target, whose (k, l) device
    block is ``gram[k, l] * rho_d[k, l] * U_k rho_t U_l^dag``. Inputs must
    be valid density operators of the gate's dimensions.
    """
    n, t = gate.n_settings, gate.target_dim
    rho_d = require_density(rho_d, name="rho_d")
    rho_t = require_density(rho_t, name="rho_t")
    if rho_d.shape[0] != n:
        raise ValueError(f"rho_d has dimension {rho_d.shape[0]}, gate expects {n}")
    if rho_t.shape[0] != t:
        raise ValueError(f"rho_t has dimension {rho_t.shape[0]}, gate expects {t}")

    coeff = gate.gram() * rho_d
    u = np.stack(gate.target_unitaries)
    left = (u @ rho_t).reshape(n * t, t)
    right = u.conj().transpose(2, 0, 1).reshape(t, n * t)
    joint = left @ right
    blocks = joint.reshape(n, t, n, t)
    blocks *= coeff[:, None, :, None]
    tr = complex(np.trace(joint))
    if abs(tr - 1.0) > 1e-8:
        raise ArithmeticError(f"channel output trace drifted to {tr:.6g}")
    return joint


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Operator-sum representation of a CPTP map; completeness-checked."""

    operators: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not self.operators:
            raise ValueError("a Kraus set needs at least one operator")
        ops = []
        dim = None
        for idx, k in enumerate(self.operators):
            a = as_complex_matrix(k, f"operators[{idx}]")
            if a.shape[0] != a.shape[1]:
                raise ValueError(f"operators[{idx}] is not square")
            if dim is None:
                dim = a.shape[0]
            elif a.shape[0] != dim:
                raise ValueError("Kraus operators must share one dimension")
            a = a.copy()
            a.setflags(write=False)
            ops.append(a)
        acc = np.zeros((dim, dim), dtype=complex)
        for a in ops:
            acc += a.conj().T @ a
        dev = np.abs(acc - np.eye(dim)).max()
        if dev > COMPLETENESS_TOL:
            raise ValueError(
                f"completeness violated: max |sum K^dag K - I| = {dev:.6g}"
            )
        object.__setattr__(self, "operators", tuple(ops))

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def __len__(self) -> int:
        return len(self.operators)

    def evolve(self, rho) -> np.ndarray:
        """Operator-sum action sum_j K_j rho K_j^dag on a joint operator."""
        rho = as_complex_matrix(rho, "rho")
        out = np.zeros_like(rho)
        for k in self.operators:
            out += k @ rho @ k.conj().T
        return out


def kraus_set(gate: GeneralizedControlGate) -> KrausSet:
    """Kraus operators K_j = sum_s v_j^(s) |s><s| (x) U_s of the gate.

    Block diagonal in the device index; completeness follows from the unit
    norm of the overlap vectors.
    """
    n, t = gate.n_settings, gate.target_dim
    v = gate.overlap_vectors
    ops = []
    for j in range(gate.kraus_rank):
        k = np.zeros((n * t, n * t), dtype=complex)
        for s in range(n):
            k[s * t:(s + 1) * t, s * t:(s + 1) * t] = v[s, j] * gate.target_unitaries[s]
        ops.append(k)
    return KrausSet(tuple(ops))


@dataclass(frozen=True, eq=False)
class MembershipVerdict:
    """Outcome of checking whether a Kraus set is a control gate.

    On success ``overlap_vectors`` holds the recovered (n, m) vector rows;
    these are only defined up to a joint unitary on C^m, so compare their
    Gram matrix, not the rows. On failure ``witness`` names the first
    violating block as (operator index, row setting, column setting) with
    the operator 0-indexed and settings 1-indexed, and ``reason`` says
    which structural requirement broke.
    """

    is_member: bool
    overlap_vectors: np.ndarray | None = None
    witness: tuple[int, int, int] | None = None
    reason: str | None = None
    max_deviation: float = 0.0

    def gram(self) -> np.ndarray:
        if self.overlap_vectors is None:
            raise ValueError("no overlap vectors: verdict is not_member")
        v = self.overlap_vectors
        return v @ v.conj().T


def verify_membership(
    kraus: KrausSet,
    n_settings: int,
    target_unitaries: tuple[np.ndarray, ...] | None = None,
    tol: float = MEMBERSHIP_TOL,
) -> MembershipVerdict:
    """Decide whether a Kraus set implements a control gate for the settings.

    Decomposes each operator into device-indexed blocks and demands that
    every off-diagonal block vanishes and that each diagonal block is a
    scalar multiple of that setting's target unitary (the swap operators by
    default). The recovered scalars assemble into the overlap vectors.
    """
    if n_settings < 1:
        raise ValueError(f"n_settings must be >= 1, got {n_settings}")
    dim = kraus.dim
    if dim % n_settings != 0:
        raise ValueError(
            f"operator dimension {dim} is not divisible by n_settings {n_settings}"
        )
    t = dim // n_settings
    if target_unitaries is None:
        if t != n_settings + 1:
            raise ValueError(
                f"default swap family needs target dimension n+1 = {n_settings + 1}, "
                f"got {t}; pass target_unitaries explicitly"
            )
        target_unitaries = _protocol_swaps(n_settings)
    if len(target_unitaries) != n_settings:
        raise ValueError("need one target unitary per setting")

    m = len(kraus)
    vectors = np.zeros((n_settings, m), dtype=complex)
    for j, op in enumerate(kraus.operators):
        blocks = op.reshape(n_settings, t, n_settings, t)
        for s in range(n_settings):
            for a in range(n_settings):
                block = blocks[s, :, a, :]
                if s != a:
                    dev = float(np.abs(block).max())
                    if dev > tol:
                        return MembershipVerdict(
                            False,
                            witness=(j, s + 1, a + 1),
                            reason="off_diagonal_block",
                            max_deviation=dev,
                        )
                else:
                    u = target_unitaries[s]
                    scalar = complex(np.trace(u.conj().T @ block)) / t
                    dev = float(np.abs(block - scalar * u).max())
                    if dev > tol:
                        return MembershipVerdict(
                            False,
                            witness=(j, s + 1, s + 1),
                            reason="diagonal_block_mismatch",
                            max_deviation=dev,
                        )
                    vectors[s, j] = scalar
    norm_dev = float(np.abs(np.linalg.norm(vectors, axis=1) - 1.0).max())
    if norm_dev > tol:
        # Unreachable for a completeness-checked set with fitting blocks;
        # kept so a tampered verdict cannot claim recovered unit vectors.
        return MembershipVerdict(
            False, reason="vector_norm", max_deviation=norm_dev
        )
    return MembershipVerdict(True, overlap_vectors=vectors)


def overlap_matrix(gate: GeneralizedControlGate, rho_d) -> np.ndarray:
    """Entrywise product alpha[k, l] = gram[k, l] * rho_d[k, l].

    Hermitian, with the device populations on the diagonal. Its
    off-diagonal part governs both the information gain about the hidden
    bit and the entanglement of the excited-bit output.
    """
    rho_d = require_density(rho_d, name="rho_d")
    if rho_d.shape[0] != gate.n_settings:
        raise ValueError(
            f"rho_d has dimension {rho_d.shape[0]}, gate expects {gate.n_settings}"
        )
    return gate.gram() * rho_d


def postselected_target(rho_joint, setting: int, f: TensorFactorization) -> np.ndarray:
    """Unnormalized target state after finding the device in ``setting``.

    Returns Tr_D[(P_setting (x) 1) rho_joint], i.e. the (setting, setting)
    device block; its trace is the outcome probability. Settings are
    1-indexed.
    """
    a = as_complex_matrix(rho_joint, "rho_joint")
    if a.shape[0] != f.dim or a.shape[0] != a.shape[1]:
        raise ValueError(f"rho_joint has shape {a.shape}, expected {f.dim} square")
    if not 1 <= setting <= f.dim_a:
        raise ValueError(f"setting must be in 1..{f.dim_a}, got {setting}")
    i = setting - 1
    t = f.dim_b
    return a[i * t:(i + 1) * t, i * t:(i + 1) * t].copy()
