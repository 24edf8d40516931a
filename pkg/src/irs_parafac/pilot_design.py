"""Training protocol: pilots, IRS phase schedule and the sensing operator.

During each block the UE sends ``T`` pilot vectors (columns of ``Z``) while
the IRS cycles through ``T`` phase configurations (columns of ``S``). The
stacked received block is linear in ``u_k = vec(H_k^T kr G)`` through

    Omega = (S kr Z)^T (x) I_M        (MT x MQN)
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.linalg

from .errors import DimMismatch, NExceedsT, NotPowerOfTwo, QExceedsT
from .tensor_core import khatri_rao, pinv


def hadamard_pilots(Q: int, T: int) -> np.ndarray:
    """First ``Q`` rows of the ``T x T`` Sylvester-Hadamard matrix."""
    if T < 1 or T & (T - 1):
        raise NotPowerOfTwo(f"T must be a power of two, got {T}")
    if Q > T:
        raise QExceedsT(f"Q={Q} pilots cannot be orthogonal over T={T} slots")
    return scipy.linalg.hadamard(T)[:Q].astype(complex)


def dft_phase_schedule(N: int, T: int) -> np.ndarray:
    """First ``N`` rows of the ``T x T`` DFT matrix, entries ``exp(-2j pi n t / T)``."""
    if N > T:
        raise NExceedsT(f"N={N} IRS elements cannot be orthogonal over T={T} slots")
    n = np.arange(N)[:, None]
    t = np.arange(T)[None, :]
    return np.exp(-2j * np.pi * ((n * t) % T) / T)


def build_omega(S, Z, M: int) -> np.ndarray:
    S = np.atleast_2d(S)
    Z = np.atleast_2d(Z)
    if S.shape[1] != Z.shape[1]:
        raise DimMismatch(f"S has {S.shape[1]} slots but Z has {Z.shape[1]}")
    return np.kron(khatri_rao(S, Z).T, np.eye(M))


@dataclass(frozen=True)
class PilotDesign:
    S: np.ndarray  # N x T, unit modulus
    Z: np.ndarray  # Q x T
    M: int

    def __post_init__(self):
        if self.S.shape[1] != self.Z.shape[1]:
            raise DimMismatch(f"S has {self.S.shape[1]} slots but Z has {self.Z.shape[1]}")
        if not np.allclose(np.abs(self.S), 1.0, atol=1e-12):
            raise ValueError("IRS phase schedule must be unit modulus")

    @property
    def N(self) -> int:
        return self.S.shape[0]

    @property
    def Q(self) -> int:
        return self.Z.shape[0]

    @property
    def T(self) -> int:
        return self.S.shape[1]

    @property
    def identifiable(self) -> bool:
        return self.T >= self.Q * self.N

    @cached_property
    def omega(self) -> np.ndarray:
        return build_omega(self.S, self.Z, self.M)

    @cached_property
    def omega_pinv(self) -> np.ndarray:
        return pinv(self.omega)


@lru_cache(maxsize=8)
def standard_design(M: int, Q: int, N: int, T: int) -> PilotDesign:
    """Hadamard pilots with a DFT phase schedule, cached per dimension set."""
    return PilotDesign(dft_phase_schedule(N, T), hadamard_pilots(Q, T), M)


@dataclass(frozen=True)
class ReceivedBlock:
    k: int
    y: np.ndarray  # length M*T
    snr_db: float
    noise_var: float


def noiseless_output(G, H_k, design: PilotDesign) -> np.ndarray:
    """Slot-by-slot ``G diag(s_t) H_k z_t`` collected as an M x T matrix."""
    G = np.atleast_2d(G)
    H_k = np.atleast_2d(H_k)
    if G.shape != (design.M, design.N) or H_k.shape != (design.N, design.Q):
        raise DimMismatch(
            f"G {G.shape} / H {H_k.shape} do not fit M={design.M}, N={design.N}, Q={design.Q}"
        )
    return G @ (design.S * (H_k @ design.Z))


def noise_variance(clean: np.ndarray, snr_db: float, M: int) -> float:
    """Per-antenna noise power for the requested training SNR.

    Signal power is the mean received energy per slot of the actual
    noiseless block divided by ``M``.
    """
    if np.isposinf(snr_db):
        return 0.0
    n_slots = clean.size // M
    return float(np.vdot(clean, clean).real) / (n_slots * M * 10.0 ** (snr_db / 10.0))


def simulate_block(
    G,
    H_k,
    design: PilotDesign,
    snr_db: float,
    rng: np.random.Generator,
    k: int = 0,
    noise_var: float | None = None,
) -> ReceivedBlock:
    """Received block ``y_k`` (length MT, slot-major) with AWGN.

    The noise power follows from ``snr_db`` unless ``noise_var`` is given.
    """
    clean = noiseless_output(G, H_k, design)
    var = noise_variance(clean, snr_db, design.M) if noise_var is None else float(noise_var)
    y = clean.reshape(-1, order="F")
    if var > 0:
        y = y + np.sqrt(var / 2) * (
            rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
        )
    return ReceivedBlock(k=k, y=y, snr_db=float(snr_db), noise_var=var)
