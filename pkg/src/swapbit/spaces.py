"""Bases and swap operators for the mode register and the control device.

Mode picture: ``n`` sites, where site 1 initially holds the object carrying
the unknown bit and sites 2..n hold reference objects prepared in 0. The
objects carry no identity beyond their location, so the joint register
collapses to ``n + 1`` effective basis states: index 0 means every site
reads 0, and index i >= 1 means the single excitation sits at site i.

The control device has one basis state per swap setting, indexed 1..n;
setting j exchanges the contents of sites 1 and j (setting 1 is a no-op).
Swapping indistinguishable objects therefore fixes the no-excitation state
and only moves the excitation label.

The distinguishable-particle picture instead keeps a label per object, so a
position swap always lands on an orthogonal basis state no matter what the
bits are. That bookkeeping lives in :class:`DistinguishableState` and feeds
the baseline that provably cannot reveal the bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TargetBasis:
    """Effective basis of the n-site register with at most one excitation."""

    n_objects: int

    def __post_init__(self) -> None:
        if self.n_objects < 1:
            raise ValueError(f"n_objects must be >= 1, got {self.n_objects}")

    @property
    def dimension(self) -> int:
        return self.n_objects + 1


@dataclass(frozen=True)
class DeviceBasis:
    """Setting basis of the control device, one state per swap setting."""

    n_settings: int

    def __post_init__(self) -> None:
        if self.n_settings < 1:
            raise ValueError(f"n_settings must be >= 1, got {self.n_settings}")


def target_state(basis: TargetBasis, k: int) -> np.ndarray:
    """Initial register ket for hidden bit ``k``.

    k = 0 is the no-excitation state, k = 1 puts the excitation at site 1.
    """
    if k not in (0, 1):
        raise ValueError(f"k must be 0 or 1, got {k}")
    e = np.zeros(basis.dimension, dtype=complex)
    e[k] = 1.0
    return e


def swap_operator(basis: TargetBasis, j: int) -> np.ndarray:
    """Permutation matrix exchanging the site-1 and site-j excitation states.

    Fixes the no-excitation state and every excitation label other than
    1 and j. Hermitian and involutive; j = 1 gives the identity.
    """
    if not 1 <= j <= basis.n_objects:
        raise ValueError(f"setting j must be in 1..{basis.n_objects}, got {j}")
    s = np.eye(basis.dimension, dtype=complex)
    if j != 1:
        s[[1, j]] = s[[j, 1]]
    return s


def swap_operators(basis: TargetBasis) -> tuple[np.ndarray, ...]:
    """All swap operators for settings 1..n, in setting order."""
    return tuple(swap_operator(basis, j) for j in range(1, basis.n_objects + 1))


def uniform_device_state(basis: DeviceBasis) -> np.ndarray:
    """Equal superposition of all swap settings, (1/sqrt(n)) sum_j |j>."""
    n = basis.n_settings
    return np.full(n, 1.0 / np.sqrt(n), dtype=complex)


@dataclass(frozen=True)
class DistinguishableState:
    """Labeled product basis state for distinguishable objects.

    ``occupants[p]`` is the object sitting at site p+1 and ``bits[o]`` the
    internal bit carried by object ``o``; bits travel with their object.
    Object 0 is the one that carries the unknown bit. Two labeled states
    are orthogonal unless both tuples coincide.
    """

    occupants: tuple[int, ...]
    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.occupants)
        if n < 1 or len(self.bits) != n:
            raise ValueError("occupants and bits must have equal positive length")
        if sorted(self.occupants) != list(range(n)):
            raise ValueError(f"occupants must be a permutation of 0..{n - 1}")


def distinguishable_joint_state(n: int, k: int) -> DistinguishableState:
    """Initial labeled configuration: object 0 at site 1 with bit k, rest 0."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if k not in (0, 1):
        raise ValueError(f"k must be 0 or 1, got {k}")
    return DistinguishableState(tuple(range(n)), (k,) + (0,) * (n - 1))


def position_swap(state: DistinguishableState, j: int) -> DistinguishableState:
    """Exchange the occupants of sites 1 and j; internal bits stay attached."""
    n = len(state.occupants)
    if not 1 <= j <= n:
        raise ValueError(f"setting j must be in 1..{n}, got {j}")
    occ = list(state.occupants)
    occ[0], occ[j - 1] = occ[j - 1], occ[0]
    return DistinguishableState(tuple(occ), state.bits)
