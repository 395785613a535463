"""Reference numerical kernels: rotary position rotation (1D and 2D over a
patch grid), uniform slice subsampling, seeded prompt-variant mixing, and
the two-layer vision-to-language projector with analytic gradients.

All computation is float64; these are verification kernels, not a training
stack.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from crb.errors import DimensionMismatch, NonFiniteInput


@dataclass(frozen=True)
class RopeConfig:
    head_dim: int
    base: float = 10000.0

    def __post_init__(self):
        if self.head_dim <= 0 or self.head_dim % 2 != 0:
            raise ValueError(f"head_dim must be even and positive, got {self.head_dim}")

    def frequencies(self, dim: int | None = None) -> np.ndarray:
        """theta_i = base^(-2i/d) for pair index i = 0 .. d/2 - 1."""
        d = self.head_dim if dim is None else dim
        i = np.arange(d // 2, dtype=float)
        return self.base ** (-2.0 * i / d)


@dataclass(frozen=True)
class PatchGrid:
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be positive")

    def coords(self, k: int) -> tuple[int, int]:
        if not 0 <= k < self.rows * self.cols:
            raise ValueError(f"patch index {k} out of range")
        return divmod(k, self.cols)


def rope_rotate(vec: np.ndarray, position: int, cfg: RopeConfig) -> np.ndarray:
    """Rotate each adjacent feature pair (2i, 2i+1) by angle position*theta_i."""
    v = np.asarray(vec, dtype=float)
    if v.shape != (cfg.head_dim,):
        raise DimensionMismatch(f"expected shape ({cfg.head_dim},), got {v.shape}")
    theta = cfg.frequencies()
    angles = position * theta
    cos, sin = np.cos(angles), np.sin(angles)
    even, odd = v[0::2], v[1::2]
    out = np.empty_like(v)
    out[0::2] = cos * even - sin * odd
    out[1::2] = sin * even + cos * odd
    return out


def rope_2d(vec: np.ndarray, coords: tuple[int, int], cfg: RopeConfig) -> np.ndarray:
    """Blocked 2D variant: first half encodes the row coordinate, second half
    the column coordinate, each rotated as a standalone half-dimension."""
    v = np.asarray(vec, dtype=float)
    if cfg.head_dim % 4 != 0:
        raise DimensionMismatch("head_dim must be divisible by 4 for the 2D form")
    if v.shape != (cfg.head_dim,):
        raise DimensionMismatch(f"expected shape ({cfg.head_dim},), got {v.shape}")
    half = cfg.head_dim // 2
    sub = RopeConfig(head_dim=half, base=cfg.base)
    m, n = coords
    out = np.empty_like(v)
    out[:half] = rope_rotate(v[:half], m, sub)
    out[half:] = rope_rotate(v[half:], n, sub)
    return out


def sample_slices(scan_length: int, target: int) -> list[int]:
    """Uniform slice subsampling: all slices when the scan is short, else
    floor(k * S / N) for k = 0 .. N-1 (strictly increasing, starts at 0)."""
    if scan_length < 1 or target < 1:
        raise ValueError("scan_length and target must be positive")
    if scan_length <= target:
        return list(range(scan_length))
    return [k * scan_length // target for k in range(target)]


WITH_DIAGNOSIS = "with_diagnosis"
WITHOUT_DIAGNOSIS = "without"

_PROMPT_WITH = (
    "Clinical Diagnosis: {diagnosis}. Provide a complete clinical CBCT report "
    "integrating findings and impression based on this 3D medical image"
)
_PROMPT_WITHOUT = (
    "Provide a complete clinical CBCT report integrating findings and "
    "impression based on this 3D medical image"
)


def prompt_text(variant: str, diagnosis: str = "") -> str:
    if variant == WITH_DIAGNOSIS:
        return _PROMPT_WITH.format(diagnosis=diagnosis)
    return _PROMPT_WITHOUT


def mix_prompts(
    sample_ids: list, ratio: tuple[int, int], seed: int
) -> list[tuple[object, str]]:
    """Assign exactly round(n * a / (a+b)) samples the diagnosis-conditioned
    variant via a seeded shuffle; deterministic for a fixed seed."""
    a, b = ratio
    if a <= 0 or b <= 0:
        raise ValueError("ratio components must be positive")
    n = len(sample_ids)
    n_with = round(n * a / (a + b))
    order = list(range(n))
    random.Random(seed).shuffle(order)
    chosen = set(order[:n_with])
    return [
        (sid, WITH_DIAGNOSIS if i in chosen else WITHOUT_DIAGNOSIS)
        for i, sid in enumerate(sample_ids)
    ]


# ---------------------------------------------------------------------------
# projector


@dataclass(frozen=True)
class ProjectorParams:
    w1: np.ndarray  # [h, d_v]
    b1: np.ndarray  # [h]
    w2: np.ndarray  # [d, h]
    b2: np.ndarray  # [d]

    def __post_init__(self):
        h, d_v = self.w1.shape
        d, h2 = self.w2.shape
        if h2 != h or self.b1.shape != (h,) or self.b2.shape != (d,):
            raise DimensionMismatch("projector parameter shapes are inconsistent")
        for arr in (self.w1, self.b1, self.w2, self.b2):
            if not np.all(np.isfinite(arr)):
                raise NonFiniteInput("projector parameters contain non-finite values")


def _phi(u: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.vectorize(math.erf)(u / math.sqrt(2.0)))


def gelu(u: np.ndarray, tanh_approx: bool = False) -> np.ndarray:
    """GELU(u) = u * Phi(u) with the exact normal CDF; a tanh approximation
    is available behind the flag."""
    u = np.asarray(u, dtype=float)
    if tanh_approx:
        return 0.5 * u * (1.0 + np.tanh(math.sqrt(2.0 / math.pi) * (u + 0.044715 * u**3)))
    return u * _phi(u)


def gelu_grad(u: np.ndarray) -> np.ndarray:
    """d/du [u * Phi(u)] = Phi(u) + u * phi(u) (exact form only)."""
    u = np.asarray(u, dtype=float)
    pdf = np.exp(-0.5 * u**2) / math.sqrt(2.0 * math.pi)
    return _phi(u) + u * pdf


def projector_forward(
    x: np.ndarray, params: ProjectorParams, tanh_approx: bool = False
) -> np.ndarray:
    """Row-wise two-layer map: W2 * GELU(W1 * x + b1) + b2."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != params.w1.shape[1]:
        raise DimensionMismatch(
            f"expected input [N, {params.w1.shape[1]}], got {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("projector input contains non-finite values")
    u = x @ params.w1.T + params.b1
    return gelu(u, tanh_approx=tanh_approx) @ params.w2.T + params.b2


def projector_backward(
    x: np.ndarray, params: ProjectorParams, grad_out: np.ndarray
) -> dict[str, np.ndarray]:
    """Analytic gradients of sum(grad_out * forward(x)) w.r.t. input and
    parameters (exact GELU only)."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(grad_out, dtype=float)
    u = x @ params.w1.T + params.b1
    a = gelu(u)
    d_a = g @ params.w2
    d_u = d_a * gelu_grad(u)
    return {
        "x": d_u @ params.w1,
        "w1": d_u.T @ x,
        "b1": d_u.sum(axis=0),
        "w2": g.T @ a,
        "b2": g.sum(axis=0),
    }
