"""Invertibility analysis of augmentation operators on finite toy spaces.

An augmentation that stochastically picks among group elements acts on
probability distributions as a linear Markov operator.  Matching augmented
distributions pins down the original exactly when that operator is
invertible; a null-space direction is a concrete leak.  For mixtures over a
finite cyclic group the spectrum is the DFT of the mixture weights, so the
zero check and the explicit operator's SVD must agree, and both are provided.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-9
DTFT_SAMPLES = 4096


@dataclass(frozen=True)
class MixtureSpec:
    """Probability weights over group elements; index 0 is the identity.

    group_order is the cyclic-group order N, or the string "integer-line" for
    translations by nonnegative integer offsets (index k = shift by k), where
    invertibility is judged on the discrete-time Fourier transform instead of
    the length-N DFT.
    """

    group_order: int | str
    probs: tuple

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty 1-D vector")
        if np.any(probs < 0.0):
            raise ValueError("probs must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probs must sum to 1, got {probs.sum()!r}")
        if isinstance(self.group_order, str):
            if self.group_order != "integer-line":
                raise ValueError(f"unknown group {self.group_order!r}")
        elif self.group_order != probs.size:
            raise ValueError(f"group order {self.group_order} does not match "
                             f"{probs.size} probabilities")
        object.__setattr__(self, "probs", tuple(float(x) for x in probs))

    def prob_vector(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)


@dataclass(frozen=True)
class MarkovOperator:
    """Explicit transition matrix on a finite state space.

    Group mixtures are exactly column-stochastic.  Coordinate-zeroing
    projection mixtures annihilate mass on the masked states, so their
    columns may sum to less than 1; columns must never exceed 1.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator matrix must be square")
        if np.any(m < -1e-12):
            raise ValueError("operator entries must be nonnegative")
        colsums = m.sum(axis=0)
        if np.max(colsums) > 1.0 + 1e-10:
            raise ValueError("operator columns must sum to at most 1")
        object.__setattr__(self, "matrix", m)

    def is_stochastic(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.matrix.sum(axis=0) - 1.0)) <= tol)


@dataclass
class LeakVerdict:
    invertible: bool
    min_measure: float
    condition: float
    witness: np.ndarray | None = None

    def to_dict(self, spec=None) -> dict:
        return {
            "spec": spec,
            "invertible": bool(self.invertible),
            "min_measure": float(self.min_measure),
            "condition": (float(self.condition) if np.isfinite(self.condition)
                          else "inf"),
            "witness": None if self.witness is None else [float(x) for x in self.witness],
        }


def dft_zero_check(spec: MixtureSpec, tol: float = DEFAULT_TOL) -> LeakVerdict:
    """Invertible iff the Fourier transform of the weights has no zeros.

    Cyclic groups use the length-N DFT; the integer line uses the DTFT
    sampled densely over [0, 2*pi).
    """
    probs = spec.prob_vector()
    if spec.group_order == "integer-line":
        omega = np.linspace(0.0, 2.0 * np.pi, DTFT_SAMPLES, endpoint=False)
        spectrum = np.exp(-1j * np.outer(omega, np.arange(probs.size))) @ probs
    else:
        spectrum = np.fft.fft(probs)
    mags = np.abs(spectrum)
    lo = float(mags.min())
    hi = float(mags.max())
    condition = np.inf if lo == 0.0 else hi / lo
    return LeakVerdict(invertible=lo > tol, min_measure=lo, condition=condition)


def spectrum_zero_count(spec: MixtureSpec, tol: float = DEFAULT_TOL) -> int:
    """Number of (sampled) frequencies at which the transform vanishes."""
    probs = spec.prob_vector()
    if spec.group_order == "integer-line":
        omega = np.linspace(0.0, 2.0 * np.pi, DTFT_SAMPLES, endpoint=False)
        spectrum = np.exp(-1j * np.outer(omega, np.arange(probs.size))) @ probs
    else:
        spectrum = np.fft.fft(probs)
    return int(np.count_nonzero(np.abs(spectrum) <= tol))


def gated_uniform_mixture(N: int, p: float) -> MixtureSpec:
    """Uniform over Z_N applied with probability p, identity otherwise.

    The spectrum is 1 at frequency zero and 1 - p elsewhere, so the condition
    number is exactly 1 / (1 - p).
    """
    if N < 1:
        raise ValueError("group order must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    probs = np.full(N, p / N)
    probs[0] += 1.0 - p
    return MixtureSpec(group_order=N, probs=tuple(probs))


# ---------------------------------------------------------------------------
# Explicit operators.

def cyclic_shift_action(N: int, K: int) -> np.ndarray:
    """(N, K, K) permutation matrices: Z_N acting on Z_K by cyclic shift.

    Requires N to divide K so the assignment is a group action.
    """
    if K % N != 0:
        raise ValueError(f"cyclic action of Z_{N} on {K} states needs N | K")
    step = K // N
    mats = np.zeros((N, K, K))
    idx = np.arange(K)
    for i in range(N):
        mats[i, (idx + i * step) % K, idx] = 1.0
    return mats


def build_group_operator(spec: MixtureSpec, K: int,
                         action: np.ndarray) -> MarkovOperator:
    """Sum of probs[i] * P_i for a permutation representation of Z_N."""
    if spec.group_order == "integer-line":
        return _line_operator(spec, K)
    N = int(spec.group_order)
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (N, K, K):
        raise ValueError(f"action must have shape ({N}, {K}, {K}), got {action.shape}")
    for i in range(N):
        P = action[i]
        if not np.array_equal(P @ np.ones(K), np.ones(K)) or \
           not np.array_equal(P.T @ np.ones(K), np.ones(K)) or \
           not np.all(np.isin(P, (0.0, 1.0))):
            raise ValueError(f"action element {i} is not a permutation matrix")
    for i in range(N):
        for j in range(N):
            if not np.array_equal(action[i] @ action[j], action[(i + j) % N]):
                raise ValueError(
                    f"action violates the group law: P_{i} P_{j} != P_{(i + j) % N}")
    matrix = np.tensordot(spec.prob_vector(), action, axes=(0, 0))
    return MarkovOperator(matrix)


def _line_operator(spec: MixtureSpec, K: int) -> MarkovOperator:
    # Truncated integer translations; shifts past the boundary are absorbed
    # at the edge state so columns stay stochastic.
    probs = spec.prob_vector()
    matrix = np.zeros((K, K))
    idx = np.arange(K)
    for k, w in enumerate(probs):
        matrix[np.minimum(idx + k, K - 1), idx] += w
    return MarkovOperator(matrix)


def build_projection_mixture(p0: float, projections, weights,
                             tol: float = DEFAULT_TOL):
    """Mixture p0 * I + sum_j w_j * P_j of orthogonal 0/1 projections.

    Any p0 > 0 makes the mixture invertible with smallest singular value at
    least p0 (inner products with orthogonal projections are nonnegative);
    that bound is verified against the numerically computed spectrum.
    """
    p0 = float(p0)
    weights = np.asarray(weights, dtype=np.float64)
    if p0 < 0.0 or np.any(weights < 0.0):
        raise ValueError("probabilities must be nonnegative")
    if abs(p0 + weights.sum() - 1.0) > 1e-12:
        raise ValueError("p0 and weights must sum to 1")
    projections = [np.asarray(P, dtype=np.float64) for P in projections]
    if len(projections) != weights.size:
        raise ValueError("one weight per projection required")
    K = projections[0].shape[0]
    for j, P in enumerate(projections):
        if P.shape != (K, K) or not np.all(np.isin(P, (0.0, 1.0))):
            raise ValueError(f"projection {j} must be a 0/1 matrix of shape ({K}, {K})")
        if not np.array_equal(P @ P, P):
            raise ValueError(f"projection {j} is not idempotent")
        if not np.array_equal(P, P.T):
            raise ValueError(f"projection {j} is not symmetric (orthogonal)")
    matrix = p0 * np.eye(K)
    for w, P in zip(weights, projections):
        matrix = matrix + w * P
    op = MarkovOperator(matrix)
    verdict = null_space_witness(op, tol=tol)
    if p0 > tol and verdict.min_measure < p0 - 1e-9:
        raise AssertionError(
            f"singular value {verdict.min_measure} fell below the p0 bound {p0}")
    return op, verdict


def null_space_witness(op: MarkovOperator, tol: float = DEFAULT_TOL) -> LeakVerdict:
    """SVD verdict; when singular, returns a unit null vector (the leak)."""
    matrix = op.matrix
    _, svals, vt = np.linalg.svd(matrix)
    smin = float(svals[-1])
    smax = float(svals[0])
    condition = np.inf if smin == 0.0 else smax / smin
    if smin > tol:
        return LeakVerdict(invertible=True, min_measure=smin, condition=condition)
    witness = vt[-1]
    residual = float(np.linalg.norm(matrix @ witness))
    if residual > 10.0 * max(tol, smin):
        raise AssertionError(
            f"null-space witness fails verification: |T n| = {residual}")
    return LeakVerdict(invertible=False, min_measure=smin,
                       condition=condition, witness=witness)


def product_noise_cf(omega, skip_prob: float = 0.0) -> float:
    """Characteristic function of gated Gaussian product noise at frequency omega.

    Per-pixel Gaussian noise scaled by one (half-)Gaussian magnitude has the
    radially symmetric characteristic function 1 / sqrt(|omega|^2 + 1);
    skipping with probability `skip_prob` blends it toward 1.  The result is
    strictly positive everywhere, which is what makes the noise non-leaking.
    """
    if not 0.0 <= skip_prob < 1.0:
        raise ValueError(f"skip_prob must be in [0, 1), got {skip_prob}")
    omega = np.asarray(omega, dtype=np.float64)
    radius2 = float(np.sum(omega * omega))
    apply_prob = 1.0 - skip_prob
    value = skip_prob + apply_prob / np.sqrt(radius2 + 1.0)
    if not value > 0.0:
        raise AssertionError("characteristic function must be strictly positive")
    return float(value)
