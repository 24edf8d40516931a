"""Combined-channel estimators: plain LS, Khatri-Rao factorization, CP-ALS.

All three estimate the combined channels ``R_k = H_k^T kr G`` (MQ x N) of
the K training blocks. LS inverts the sensing operator block by block. KRF
projects every column of ``R_k`` onto the rank-one M x Q matrices it must
come from. ALS stacks the LS blocks into an MQ x N x K tensor and fits a CP
model of rank ``L1*L2`` to it.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimMismatch, IdentifiabilityError, SvdFailure, ZeroReference
from .pilot_design import PilotDesign
from .tensor_core import CPFactors, cp_build, khatri_rao, pinv, unfold, unvec


@dataclass(frozen=True)
class IdentifiabilityCheck:
    ls_ok: bool
    mode1_ok: bool
    mode2_ok: bool
    mode3_ok: bool

    @property
    def cp_ok(self) -> bool:
        return self.mode1_ok and self.mode2_ok and self.mode3_ok

    @property
    def ok(self) -> bool:
        return self.ls_ok and self.cp_ok

    def failures(self) -> list[str]:
        labels = {
            "ls_ok": "T >= Q*N",
            "mode1_ok": "L1*L2 <= N*K",
            "mode2_ok": "L1*L2 <= M*Q*K",
            "mode3_ok": "L1*L2 <= M*Q*N",
        }
        return [cond for name, cond in labels.items() if not getattr(self, name)]

    def require(self) -> None:
        if not self.ok:
            raise IdentifiabilityError("violated: " + ", ".join(self.failures()))


def check_identifiability(M: int, Q: int, N: int, K: int, T: int, L1: int, L2: int):
    for name, value in dict(M=M, Q=Q, N=N, K=K, T=T, L1=L1, L2=L2).items():
        if int(value) != value or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")
    rank = L1 * L2
    return IdentifiabilityCheck(
        ls_ok=T >= Q * N,
        mode1_ok=rank <= N * K,
        mode2_ok=rank <= M * Q * K,
        mode3_ok=rank <= M * Q * N,
    )


def ls_combined(y_k, design: PilotDesign) -> tuple[np.ndarray, np.ndarray]:
    """LS estimate ``u_hat = pinv(Omega) y_k`` and its MQ x N reshaping."""
    if not design.identifiable:
        raise IdentifiabilityError(
            f"LS needs T >= Q*N, got T={design.T} < {design.Q * design.N}"
        )
    y_k = np.asarray(y_k).reshape(-1)
    if y_k.size != design.M * design.T:
        raise DimMismatch(f"received block has {y_k.size} samples, expected {design.M * design.T}")
    u_hat = design.omega_pinv @ y_k
    return u_hat, unvec(u_hat, design.M * design.Q, design.N)


def stack_blocks(blocks) -> np.ndarray:
    """Stack equally-shaped matrices as frontal slices of a third-order tensor."""
    blocks = [np.atleast_2d(b) for b in blocks]
    if not blocks:
        raise DimMismatch("no blocks to stack")
    if any(b.shape != blocks[0].shape for b in blocks):
        raise DimMismatch("blocks differ in shape")
    return np.stack(blocks, axis=2)


@dataclass(frozen=True)
class CombinedChannelEstimate:
    R_hat: np.ndarray  # MQ x N x K

    @property
    def blocks(self) -> list[np.ndarray]:
        return [self.R_hat[:, :, k] for k in range(self.R_hat.shape[2])]


def ls_estimate(received, design: PilotDesign) -> CombinedChannelEstimate:
    return CombinedChannelEstimate(stack_blocks([ls_combined(y, design)[1] for y in received]))


@dataclass
class AlsReport:
    factors: CPFactors
    iterations: int
    error_trace: list[float]
    converged: bool
    initial_error: float = float("nan")
    scale: float = 1.0

    def reconstruct(self) -> np.ndarray:
        return cp_build(self.factors)


def _cn(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def svd_init(R, rank: int, rng: np.random.Generator | None = None) -> CPFactors:
    """Starting point from the dominant left singular vectors of two unfoldings.

    A and B take the leading ``rank`` left singular vectors of the mode-1 and
    mode-2 unfoldings (columns beyond the unfolding's row count are drawn
    CN(0, 1)); F is then the exact LS solution given A and B.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    R = np.asarray(R)
    A = np.linalg.svd(unfold(R, 1), full_matrices=False)[0][:, :rank]
    B = np.linalg.svd(unfold(R, 2), full_matrices=False)[0][:, :rank]
    if A.shape[1] < rank:
        A = np.hstack([A, _cn(rng, A.shape[0], rank - A.shape[1])])
    if B.shape[1] < rank:
        B = np.hstack([B, _cn(rng, B.shape[0], rank - B.shape[1])])
    F = (unfold(R, 3) @ pinv(khatri_rao(B, A)).T).T
    return CPFactors(A, B, F)


def als_fit(
    R,
    rank: int,
    eps: float = 1e-5,
    i_max: int = 100,
    rng: np.random.Generator | None = None,
    init: CPFactors | str = "svd",
) -> AlsReport:
    """Fit a rank-``rank`` CP model to ``R`` by alternating least squares.

    Each sweep solves three exact LS problems, for A, B and F in turn, with
    the other two factors held at their latest values. ``e(i)`` is the
    squared Frobenius residual after sweep ``i``; the loop stops once
    ``|e(i) - e(i-1)| <= eps`` (``e(0)`` being the residual of the starting
    point) or after ``i_max`` sweeps.

    ``init`` is ``"random"`` (i.i.d. CN(0, 1) factors), ``"svd"`` (see
    :func:`svd_init`) or explicit :class:`CPFactors`.
    """
    R = np.asarray(R, dtype=complex)
    if R.ndim != 3:
        raise DimMismatch(f"ALS needs a third-order tensor, got shape {R.shape}")
    I1, I2, I3 = R.shape
    if rank < 1 or rank > I2 * I3 or rank > I1 * I3 or rank > I1 * I2:
        raise IdentifiabilityError(f"rank {rank} not identifiable for tensor {R.shape}")
    rng = np.random.default_rng() if rng is None else rng

    if isinstance(init, CPFactors):
        start = init
    elif init == "random":
        start = CPFactors(_cn(rng, I1, rank), _cn(rng, I2, rank), _cn(rng, rank, I3))
    elif init == "svd":
        start = svd_init(R, rank, rng)
    else:
        raise ValueError(f"unknown ALS initialization {init!r}")
    if start.dims != R.shape or start.rank != rank:
        raise DimMismatch(f"initial factors {start.dims} rank {start.rank} do not fit {R.shape}")
    A, B, F = start.A, start.B, start.F

    R1, R2, R3 = unfold(R, 1), unfold(R, 2), unfold(R, 3)
    e_prev = float(np.linalg.norm(R3 - F.T @ khatri_rao(B, A).T) ** 2)
    initial = e_prev
    trace: list[float] = []
    converged = False
    for _ in range(i_max):
        A = R1 @ pinv(khatri_rao(F.T, B)).T
        B = R2 @ pinv(khatri_rao(F.T, A)).T
        BA = khatri_rao(B, A)
        F = (R3 @ pinv(BA).T).T
        e = float(np.linalg.norm(R3 - F.T @ BA.T) ** 2)
        if not np.isfinite(e):
            raise SvdFailure("ALS residual became non-finite")
        trace.append(e)
        if abs(e - e_prev) <= eps:
            converged = True
            break
        e_prev = e
    return AlsReport(CPFactors(A, B, F), len(trace), trace, converged, initial)


def als_fit_normalized(
    R, rank: int, eps: float = 1e-5, i_max: int = 100, rng=None, init="svd"
) -> AlsReport:
    """Run :func:`als_fit` on ``R / ||R||_F`` and fold the scale back into ``A``.

    Makes ``eps`` a threshold on the relative squared fit, independent of the
    channel's absolute power. The error trace stays in normalized units.
    """
    scale = float(np.linalg.norm(np.asarray(R).ravel()))
    if scale == 0:
        raise ZeroReference("cannot normalize an all-zero tensor")
    rep = als_fit(np.asarray(R) / scale, rank, eps=eps, i_max=i_max, rng=rng, init=init)
    f = rep.factors
    rep.factors = CPFactors(f.A * scale, f.B, f.F)
    rep.scale = scale
    return rep


class KrfEstimate(NamedTuple):
    G: np.ndarray  # M x N
    Ht: np.ndarray  # Q x N, estimate of H_k^T
    R: np.ndarray  # MQ x N, equals khatri_rao(Ht, G)
    svd_calls: int


def krf_baseline(R_k, M: int, Q: int, N: int) -> KrfEstimate:
    """Split every column of ``R_k`` into its closest Kronecker pair.

    Column ``n`` is reshaped (column-major) to an M x Q matrix, which equals
    ``g_n h_n^T`` in the noiseless case. Its dominant singular triplet gives
    ``g_n = sqrt(s) u`` and ``h_n = sqrt(s) conj(v)``; only their Khatri-Rao
    product is identifiable, so the sqrt split is a convention.
    """
    R_k = np.atleast_2d(R_k)
    if R_k.shape != (M * Q, N):
        raise DimMismatch(f"combined channel has shape {R_k.shape}, expected {(M * Q, N)}")
    mats = R_k.T.reshape(N, Q, M).transpose(0, 2, 1)  # mats[n] = unvec_{MxQ}(R_k[:, n])
    G_hat = np.zeros((M, N), dtype=complex)
    Ht_hat = np.zeros((Q, N), dtype=complex)
    live = np.flatnonzero(np.any(mats != 0, axis=(1, 2)))
    if live.size:
        try:
            u, s, vh = np.linalg.svd(mats[live], full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise SvdFailure(str(exc)) from exc
        root = np.sqrt(s[:, 0])
        G_hat[:, live] = (u[:, :, 0] * root[:, None]).T
        Ht_hat[:, live] = (vh[:, 0, :] * root[:, None]).T
    return KrfEstimate(G_hat, Ht_hat, khatri_rao(Ht_hat, G_hat), int(live.size))


def krf_estimate(ls: CombinedChannelEstimate, M: int, Q: int, N: int) -> CombinedChannelEstimate:
    return CombinedChannelEstimate(stack_blocks([krf_baseline(b, M, Q, N).R for b in ls.blocks]))


def nmse(R_true, R_est) -> float:
    R_true = np.asarray(R_true)
    R_est = np.asarray(R_est)
    if R_true.shape != R_est.shape:
        raise DimMismatch(f"shape mismatch {R_true.shape} vs {R_est.shape}")
    ref = float(np.vdot(R_true, R_true).real)
    if ref == 0:
        raise ZeroReference("NMSE undefined for an all-zero reference")
    d = R_true - R_est
    return float(np.vdot(d, d).real) / ref


def nmse_per_block(R_true, R_est) -> float:
    """Mean over frontal slices of the per-block NMSE."""
    R_true = np.asarray(R_true)
    return float(np.mean([nmse(R_true[:, :, k], R_est[:, :, k]) for k in range(R_true.shape[2])]))


__all__ = [
    "AlsReport",
    "CombinedChannelEstimate",
    "IdentifiabilityCheck",
    "KrfEstimate",
    "als_fit",
    "als_fit_normalized",
    "check_identifiability",
    "krf_baseline",
    "krf_estimate",
    "ls_combined",
    "ls_estimate",
    "nmse",
    "nmse_per_block",
    "stack_blocks",
    "svd_init",
]
