"""Seeded, stream-splittable samplers for weight matrices and directions.

Every sampler is a pure function of its stream and parameters: replaying
the same (master_seed, stream_id) reproduces the draw bit for bit, while
distinct stream ids under one master seed give statistically independent
sequences.  Monte Carlo drivers hand each unit of work its own stream so
results never depend on worker count or scheduling.
"""

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .analytic import GAUSSIAN, EnsembleSpec
from .errors import DomainError

__all__ = [
    "RngStream",
    "WeightStack",
    "as_generator",
    "sample_gaussian_matrix",
    "sample_haar_orthogonal",
    "sample_unit_sphere",
    "sample_uniform_positive_matrix",
    "draw_stack_matrices",
    "sample_stack",
    "weight_stack_to_dict",
    "weight_stack_from_dict",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Counter-addressed random stream.

    The pair (master_seed, stream_id) keys a Philox counter generator, so
    trial k of an experiment can own stream ``base.offset(k)`` and merged
    results are independent of execution order.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if int(value) != value or not (0 <= value <= _MASK64):
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = self.master_seed | (self.stream_id << 64)
        return np.random.Generator(np.random.Philox(key=key))

    def offset(self, k: int) -> "RngStream":
        """Stream k slots further along the counter axis (wraps at 2^64)."""
        return RngStream(self.master_seed, (self.stream_id + k) & _MASK64)

    def as_dict(self) -> dict:
        return {"master": self.master_seed, "stream": self.stream_id}


RngLike = Union[RngStream, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    """Materialize a generator; streams start fresh, generators pass through."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise DomainError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def sample_gaussian_matrix(d: int, sigma: float, rng: RngLike) -> np.ndarray:
    """d x d matrix of i.i.d. N(0, sigma^2) entries."""
    if sigma <= 0 or not math.isfinite(sigma):
        raise DomainError(f"sigma must be a finite positive real, got {sigma!r}")
    gen = as_generator(rng)
    return sigma * gen.standard_normal((d, d))


def _sign_corrected(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    # Fold the sign of R's diagonal into Q's columns.  Plain QR of a Gaussian
    # matrix is biased toward one sign convention; the correction restores
    # exact Haar measure on the full orthogonal group, both determinant signs.
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * np.where(diag < 0.0, -1.0, 1.0)[..., None, :]


def sample_haar_orthogonal(d: int, eta: float, rng: RngLike) -> np.ndarray:
    """eta times a Haar-distributed orthogonal d x d matrix."""
    if eta <= 0 or not math.isfinite(eta):
        raise DomainError(f"eta must be a finite positive real, got {eta!r}")
    gen = as_generator(rng)
    for _ in range(5):
        g = gen.standard_normal((d, d))
        q, r = np.linalg.qr(g)
        if np.all(np.diagonal(r) != 0.0):
            return eta * _sign_corrected(q, r)
    raise RuntimeError("QR factorization kept producing a zero pivot after 5 draws")


def haar_orthogonal_batch(count: int, d: int, eta: float, gen: np.random.Generator) -> np.ndarray:
    """(count, d, d) stack of independent scaled Haar orthogonal matrices."""
    g = gen.standard_normal((count, d, d))
    q, r = np.linalg.qr(g)
    return eta * _sign_corrected(q, r)


def sample_unit_sphere(d: int, rng: RngLike) -> np.ndarray:
    """Uniform point on the unit sphere via a normalized Gaussian draw."""
    gen = as_generator(rng)
    while True:
        v = gen.standard_normal(d)
        norm = float(np.linalg.norm(v))
        if norm > 1e-150:  # an underflowing draw is redrawn, never rescaled
            return v / norm


def unit_sphere_batch(count: int, d: int, gen: np.random.Generator) -> np.ndarray:
    """(count, d) rows uniform on the unit sphere."""
    v = gen.standard_normal((count, d))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    bad = norms[:, 0] <= 1e-150
    while np.any(bad):  # probability ~0, kept for the contract
        v[bad] = gen.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        bad = norms[:, 0] <= 1e-150
    return v / norms


def sample_uniform_positive_matrix(d: int, a: float, rng: RngLike) -> np.ndarray:
    """d x d matrix of i.i.d. Uniform[0, a] entries."""
    if a <= 0 or not math.isfinite(a):
        raise DomainError(f"a must be a finite positive real, got {a!r}")
    gen = as_generator(rng)
    return gen.uniform(0.0, a, size=(d, d))


@dataclass
class WeightStack:
    """Ordered layer matrices with provenance for exact replay."""

    d: int
    depth: int
    matrices: np.ndarray
    ensemble: EnsembleSpec
    seed_info: RngStream
    diagnostics: Optional[dict] = None

    def __post_init__(self):
        self.matrices = np.asarray(self.matrices, dtype=np.float64)
        if self.matrices.shape != (self.depth, self.d, self.d):
            raise DomainError(
                f"matrices must have shape ({self.depth}, {self.d}, {self.d}), "
                f"got {self.matrices.shape}"
            )
        if not np.all(np.isfinite(self.matrices)):
            raise DomainError("weight matrices must be finite")


def draw_stack_matrices(spec: EnsembleSpec, depth: int, gen: np.random.Generator) -> np.ndarray:
    """(depth, d, d) matrices drawn in layer order from a live generator."""
    if spec.kind == GAUSSIAN:
        return np.stack([sample_gaussian_matrix(spec.d, spec.scale, gen) for _ in range(depth)])
    return np.stack([sample_haar_orthogonal(spec.d, spec.scale, gen) for _ in range(depth)])


def sample_stack(
    spec: EnsembleSpec,
    depth: int,
    stream: RngStream,
    diagnostics: Optional[dict] = None,
) -> WeightStack:
    """Draw ``depth`` layer matrices from one stream, in layer order."""
    if int(depth) != depth or depth < 1:
        raise DomainError(f"depth must be a positive integer, got {depth!r}")
    depth = int(depth)
    mats = draw_stack_matrices(spec, depth, stream.generator())
    return WeightStack(
        d=spec.d,
        depth=depth,
        matrices=mats,
        ensemble=spec,
        seed_info=stream,
        diagnostics=diagnostics,
    )


def weight_stack_to_dict(stack: WeightStack) -> dict:
    """Wire format: matrices as row-major flat lists, one per layer."""
    return {
        "d": stack.d,
        "depth": stack.depth,
        "ensemble": {"kind": stack.ensemble.kind, "scale": stack.ensemble.scale},
        "seed": stack.seed_info.as_dict(),
        "matrices": [m.reshape(-1).tolist() for m in stack.matrices],
        "diagnostics": stack.diagnostics if stack.diagnostics is not None else {},
    }


def weight_stack_from_dict(payload: dict) -> WeightStack:
    d = int(payload["d"])
    depth = int(payload["depth"])
    mats = np.array(payload["matrices"], dtype=np.float64).reshape(depth, d, d)
    spec = EnsembleSpec(payload["ensemble"]["kind"], d, payload["ensemble"]["scale"])
    seed = RngStream(payload["seed"]["master"], payload["seed"]["stream"])
    diagnostics = payload.get("diagnostics") or None
    return WeightStack(d, depth, mats, spec, seed, diagnostics)
