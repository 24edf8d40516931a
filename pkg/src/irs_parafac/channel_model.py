"""Geometric mmWave channels for the UE -> IRS -> BS uplink.

The BS-IRS channel ``G`` (M x N) is fixed over the training frame, while the
IRS-UE channel ``H_k`` (N x Q) ages from block to block through first-order
autoregressive path gains. The BS and UE carry uniform linear arrays; the IRS
is a uniform rectangular panel whose steering vector is the Kronecker product
of two ULA vectors.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DimMismatch, NonFactorableArray
from .tensor_core import khatri_rao


def ula_steering(mu: float, n_elems: int) -> np.ndarray:
    """ULA response ``[1, e^{-j mu}, ..., e^{-j (n-1) mu}]`` as a 1-D array."""
    if n_elems < 1:
        raise ValueError("n_elems must be >= 1")
    return np.exp(-1j * mu * np.arange(n_elems))


def ura_steering(mu: float, psi: float, n1: int, n2: int, n_total: int | None = None) -> np.ndarray:
    if n_total is not None and n1 * n2 != n_total:
        raise DimMismatch(f"{n1}x{n2} panel does not have {n_total} elements")
    return np.kron(ula_steering(mu, n1), ula_steering(psi, n2))


def ura_shape(n: int) -> tuple[int, int]:
    """Most-square factorization ``n = n1 * n2`` with ``n1 <= n2``."""
    if n < 1:
        raise NonFactorableArray(f"cannot lay out {n} IRS elements")
    n1 = math.isqrt(n)
    while n % n1:
        n1 -= 1
    return n1, n // n1


@dataclass(frozen=True)
class GeometryParams:
    """Spatial frequencies (radians) of every propagation path.

    ``mu_irs_d``/``psi_irs_d`` are the IRS departure pair for each of the
    ``L1`` BS-IRS paths; ``mu_irs_a``/``psi_irs_a`` are the IRS arrival pair
    for each of the ``L2`` IRS-UE paths.
    """

    mu_bs: np.ndarray
    mu_ue: np.ndarray
    mu_irs_d: np.ndarray
    psi_irs_d: np.ndarray
    mu_irs_a: np.ndarray
    psi_irs_a: np.ndarray

    def __post_init__(self):
        for name in ("mu_bs", "mu_ue", "mu_irs_d", "psi_irs_d", "mu_irs_a", "psi_irs_a"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if np.any(np.abs(arr) > np.pi + 1e-12):
                raise ValueError(f"{name} has spatial frequencies outside [-pi, pi]")
            object.__setattr__(self, name, arr)
        if not (len(self.mu_bs) == len(self.mu_irs_d) == len(self.psi_irs_d)):
            raise DimMismatch("BS-IRS path arrays disagree on L1")
        if not (len(self.mu_ue) == len(self.mu_irs_a) == len(self.psi_irs_a)):
            raise DimMismatch("IRS-UE path arrays disagree on L2")

    @property
    def L1(self) -> int:
        return len(self.mu_bs)

    @property
    def L2(self) -> int:
        return len(self.mu_ue)


@dataclass(frozen=True)
class ArFadingConfig:
    lam: float = 0.75
    K: int = 5

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"AR correlation must lie in [0, 1], got {self.lam}")
        if self.K < 1:
            raise ValueError("K must be >= 1")


@dataclass(frozen=True)
class ChannelRealization:
    A_rx: np.ndarray  # M x L1
    A_tx: np.ndarray  # Q x L2
    B_rx: np.ndarray  # N x L2
    B_tx: np.ndarray  # N x L1
    alpha: np.ndarray  # L1
    beta: np.ndarray  # K x L2
    G: np.ndarray  # M x N
    H: np.ndarray  # K x N x Q
    geometry: GeometryParams | None = field(default=None, compare=False)

    @property
    def K(self) -> int:
        return self.H.shape[0]

    def combined(self, k: int) -> np.ndarray:
        """Khatri-Rao combined channel ``H_k^T kr G`` (MQ x N) of block ``k`` (0-based)."""
        return khatri_rao(self.H[k].T, self.G)

    def combined_tensor(self) -> np.ndarray:
        """All K combined channels stacked as frontal slices, shape (MQ, N, K)."""
        return np.stack([self.combined(k) for k in range(self.K)], axis=2)


def draw_geometry(rng: np.random.Generator, L1: int, L2: int) -> GeometryParams:
    if L1 < 1 or L2 < 1:
        raise ValueError("path counts must be >= 1")
    phi_bs = rng.uniform(-np.pi, np.pi, L1)
    phi_ue = rng.uniform(-np.pi, np.pi, L2)
    az_d, el_d = rng.uniform(-np.pi / 2, np.pi / 2, (2, L1))
    az_a, el_a = rng.uniform(-np.pi / 2, np.pi / 2, (2, L2))
    return GeometryParams(
        mu_bs=np.pi * np.cos(phi_bs),
        mu_ue=np.pi * np.cos(phi_ue),
        mu_irs_d=np.pi * np.cos(az_d) * np.sin(el_d),
        psi_irs_d=np.pi * np.cos(az_d),
        mu_irs_a=np.pi * np.cos(az_a) * np.sin(el_a),
        psi_irs_a=np.pi * np.cos(az_a),
    )


def draw_gains(rng: np.random.Generator, L: int, size=None) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian gains."""
    if L < 1:
        raise ValueError("L must be >= 1")
    shape = (L,) if size is None else tuple(np.atleast_1d(size)) + (L,)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def ar_step(beta_prev, cfg: ArFadingConfig, rng: np.random.Generator) -> np.ndarray:
    """One AR(1) ageing step ``beta_k = lam * beta_{k-1} + xi_k``.

    ``xi_k`` has per-entry variance ``1 - lam**2`` so a unit-variance process
    stays unit-variance.
    """
    beta_prev = np.asarray(beta_prev)
    innovation = draw_gains(rng, beta_prev.shape[-1], size=beta_prev.shape[:-1] or None)
    return cfg.lam * beta_prev + np.sqrt(1.0 - cfg.lam**2) * innovation


def ar_sequence(rng: np.random.Generator, L2: int, cfg: ArFadingConfig) -> np.ndarray:
    """K x L2 gains; the first block is a fresh draw, the rest follow :func:`ar_step`."""
    beta = np.empty((cfg.K, L2), dtype=complex)
    beta[0] = draw_gains(rng, L2)
    for k in range(1, cfg.K):
        beta[k] = ar_step(beta[k - 1], cfg, rng)
    return beta


def build_channels(
    geom: GeometryParams,
    alpha,
    beta,
    M: int,
    Q: int,
    N: int,
    ura: tuple[int, int] | None = None,
) -> ChannelRealization:
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    beta = np.atleast_2d(np.asarray(beta, dtype=complex))
    if alpha.shape != (geom.L1,):
        raise DimMismatch(f"alpha must have {geom.L1} entries, got {alpha.shape}")
    if beta.shape[1] != geom.L2:
        raise DimMismatch(f"beta must have {geom.L2} columns, got {beta.shape}")
    n1, n2 = ura if ura is not None else ura_shape(N)
    if n1 * n2 != N:
        raise NonFactorableArray(f"{n1}x{n2} panel does not have {N} elements")

    A_rx = np.stack([ula_steering(m, M) for m in geom.mu_bs], axis=1)
    A_tx = np.stack([ula_steering(m, Q) for m in geom.mu_ue], axis=1)
    B_rx = np.stack(
        [ura_steering(m, p, n1, n2) for m, p in zip(geom.mu_irs_a, geom.psi_irs_a)], axis=1
    )
    B_tx = np.stack(
        [ura_steering(m, p, n1, n2) for m, p in zip(geom.mu_irs_d, geom.psi_irs_d)], axis=1
    )
    G = (A_rx * alpha) @ B_tx.conj().T
    H = np.einsum("nl,kl,ql->knq", B_rx, beta, A_tx.conj())
    return ChannelRealization(A_rx, A_tx, B_rx, B_tx, alpha, beta, G, H, geom)


def draw_channel(
    rng: np.random.Generator,
    M: int,
    Q: int,
    N: int,
    L1: int,
    L2: int,
    ar: ArFadingConfig,
) -> ChannelRealization:
    """Draw geometry, gains and an aged gain sequence, then assemble the channels."""
    geom = draw_geometry(rng, L1, L2)
    alpha = draw_gains(rng, L1)
    beta = ar_sequence(rng, L2, ar)
    return build_channels(geom, alpha, beta, M, Q, N)
