"""Critical-scale weight-stack generation, plain and candidate-sampled.

The plain generator computes the zero-exponent scale for the requested
ensemble and draws one stack.  The sampled variant draws several candidate
stacks at that scale and keeps the one whose expected output norm over the
probe inputs sits closest to one; even at the critical scale the finite-depth
log norm fluctuates on the order of sqrt(depth), and picking the best of
roughly 2*sqrt(depth) candidates collapses most of that spread.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .analytic import (
    GAUSSIAN,
    ORTHOGONAL,
    EnsembleSpec,
    critical_eta,
    critical_sigma,
)
from .dynamics import _phi
from .ensembles import RngStream, WeightStack, draw_stack_matrices, sample_stack
from .errors import DomainError
from .quad import DEFAULT_SETTINGS, ActivationSlopes, QuadSettings

__all__ = [
    "InputDistribution",
    "CandidateDiagnostics",
    "lyapunov_init",
    "sampled_lyapunov_init",
]

# Per-probe log norms beyond this are folded into the score as +-infinity
# rather than overflowing the norm-domain average.
_LOG_NORM_GUARD = 700.0


@dataclass(frozen=True)
class InputDistribution:
    """Probe-input law used by the candidate-selection step."""

    kind: str
    d: int
    low: Optional[np.ndarray] = None
    high: Optional[np.ndarray] = None
    vectors: Optional[np.ndarray] = None

    @classmethod
    def uniform_sphere(cls, d: int) -> "InputDistribution":
        return cls(kind="sphere", d=int(d))

    @classmethod
    def uniform_box(cls, low, high) -> "InputDistribution":
        low = np.atleast_1d(np.asarray(low, dtype=np.float64))
        high = np.atleast_1d(np.asarray(high, dtype=np.float64))
        if low.shape != high.shape or low.ndim != 1:
            raise DomainError("box bounds must be matching 1-d arrays")
        if not (np.all(np.isfinite(low)) and np.all(np.isfinite(high))):
            raise DomainError("box bounds must be finite")
        if np.any(low >= high):
            raise DomainError("box bounds must satisfy low < high per coordinate")
        return cls(kind="box", d=len(low), low=low, high=high)

    @classmethod
    def fixed_set(cls, vectors) -> "InputDistribution":
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] < 1:
            raise DomainError("fixed set must be a nonempty (n, d) array of vectors")
        if not np.all(np.isfinite(vectors)):
            raise DomainError("fixed-set vectors must be finite")
        if np.any(np.linalg.norm(vectors, axis=1) == 0.0):
            raise DomainError("fixed-set vectors must be nonzero")
        return cls(kind="fixed", d=vectors.shape[1], vectors=vectors)

    def sample(self, count: int, gen: np.random.Generator) -> np.ndarray:
        if self.kind == "sphere":
            v = gen.standard_normal((count, self.d))
            return v / np.linalg.norm(v, axis=1, keepdims=True)
        if self.kind == "box":
            return gen.uniform(self.low, self.high, size=(count, self.d))
        picks = gen.integers(0, len(self.vectors), size=count)
        return self.vectors[picks]


@dataclass
class CandidateDiagnostics:
    """Selection record of one sampled-initialization run.

    ``per_candidate_norm_estimate`` holds the mean output norm of each
    candidate over unit-normalized probes; ``per_candidate_raw_norm_mean``
    keeps the average raw probe-input norm so the unnormalized scale of the
    inputs is not lost.
    """

    candidate_count: int
    per_candidate_norm_estimate: np.ndarray
    per_candidate_score: np.ndarray
    per_candidate_raw_norm_mean: np.ndarray
    selected_index: int
    selection_score: float
    probe_inputs: int
    metric: str

    def as_dict(self) -> dict:
        return {
            "candidate_count": self.candidate_count,
            "per_candidate_norm_estimate": self.per_candidate_norm_estimate.tolist(),
            "per_candidate_score": self.per_candidate_score.tolist(),
            "per_candidate_raw_norm_mean": self.per_candidate_raw_norm_mean.tolist(),
            "selected_index": self.selected_index,
            "selection_score": self.selection_score,
            "probe_inputs": self.probe_inputs,
            "metric": self.metric,
        }


def _critical_spec(d: int, alpha: float, kind: str, settings: QuadSettings) -> EnsembleSpec:
    if kind == GAUSSIAN:
        scale = critical_sigma(d, alpha, settings)
    elif kind == ORTHOGONAL:
        scale = critical_eta(d, alpha, settings)
    else:
        raise DomainError(f"kind must be {GAUSSIAN!r} or {ORTHOGONAL!r}, got {kind!r}")
    return EnsembleSpec(kind, d, scale)


def lyapunov_init(
    d: int,
    depth: int,
    alpha: float,
    kind: str,
    rng: RngStream,
    settings: QuadSettings = DEFAULT_SETTINGS,
) -> WeightStack:
    """One stack of ``depth`` matrices at the zero-exponent scale.

    Biases are implicitly zero; the stack stores none.
    """
    spec = _critical_spec(d, alpha, kind, settings)
    return sample_stack(spec, depth, rng)


def _mean_output_norm(
    matrices: np.ndarray,
    probes_unit: np.ndarray,
    slopes: ActivationSlopes,
) -> float:
    """E[|X_depth|] over unit probes, accumulated in log space."""
    a1, a2 = slopes.alpha1, slopes.alpha2
    directions = probes_unit
    acc = np.zeros(len(probes_unit))
    for w in matrices:
        v = _phi(directions @ w.T, a1, a2)
        norms = np.linalg.norm(v, axis=1)
        acc += np.log(norms)
        directions = v / norms[:, None]
    clipped = np.clip(acc, -_LOG_NORM_GUARD, _LOG_NORM_GUARD)
    mean = float(np.mean(np.exp(clipped)))
    if np.any(acc > _LOG_NORM_GUARD):
        return math.inf
    return mean


def sampled_lyapunov_init(
    d: int,
    depth: int,
    alpha: float,
    kind: str,
    rng: RngStream,
    input_dist: Optional[InputDistribution] = None,
    candidate_count: Optional[int] = None,
    probe_inputs: int = 256,
    linear_metric: bool = False,
    settings: QuadSettings = DEFAULT_SETTINGS,
) -> Tuple[WeightStack, CandidateDiagnostics]:
    """Best of several critical-scale stacks by expected output norm.

    Candidate i owns stream ``rng.offset(i)`` and draws its matrices first,
    probe inputs second.  Probes are normalized to unit length before the
    forward pass (the network is positively homogeneous, so the score would
    otherwise just absorb the input scale); raw norms are kept in the
    diagnostics.  The default score |log m| treats overshoot and undershoot
    symmetrically; ``linear_metric`` switches to |m - 1|.
    """
    if probe_inputs < 1:
        raise DomainError("probe_inputs must be at least 1")
    if input_dist is None:
        input_dist = InputDistribution.uniform_sphere(d)
    if input_dist.d != d:
        raise DomainError(f"input distribution is {input_dist.d}-dimensional, expected {d}")
    if candidate_count is None:
        candidate_count = math.ceil(2.0 * math.sqrt(depth))
    if candidate_count < 1:
        raise DomainError("candidate_count must be at least 1")

    spec = _critical_spec(d, alpha, kind, settings)
    slopes = ActivationSlopes.leaky_relu(alpha)

    streams = [rng.offset(i) for i in range(candidate_count)]
    matrices = []
    norm_estimates = np.empty(candidate_count)
    raw_norm_means = np.empty(candidate_count)
    for i, stream in enumerate(streams):
        gen = stream.generator()
        mats = draw_stack_matrices(spec, depth, gen)
        probes = input_dist.sample(probe_inputs, gen)
        raw_norms = np.linalg.norm(probes, axis=1)
        probes_unit = probes / raw_norms[:, None]
        norm_estimates[i] = _mean_output_norm(mats, probes_unit, slopes)
        raw_norm_means[i] = float(raw_norms.mean())
        matrices.append(mats)

    with np.errstate(divide="ignore"):
        if linear_metric:
            scores = np.abs(norm_estimates - 1.0)
        else:
            scores = np.abs(np.log(norm_estimates))
    if not np.any(np.isfinite(scores)):
        raise RuntimeError("every candidate produced a non-finite norm estimate")

    selected = int(np.argmin(scores))
    diagnostics = CandidateDiagnostics(
        candidate_count=candidate_count,
        per_candidate_norm_estimate=norm_estimates,
        per_candidate_score=scores,
        per_candidate_raw_norm_mean=raw_norm_means,
        selected_index=selected,
        selection_score=float(scores[selected]),
        probe_inputs=probe_inputs,
        metric="linear" if linear_metric else "log",
    )
    chosen = WeightStack(
        d=d,
        depth=depth,
        matrices=matrices[selected],
        ensemble=spec,
        seed_info=streams[selected],
        diagnostics=diagnostics.as_dict(),
    )
    return chosen, diagnostics
