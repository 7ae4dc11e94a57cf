"""Block-streaming recovery of video frames and audio.

Both pipelines measure a random subset of samples (pixels or audio
samples) per block and recover the block's DCT coefficients. Blocks after
the first use weighted l1 with a support estimate taken from previously
decoded blocks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, DomainError
from .model import SupportSet, build_weights, round_half_up
from .operators import DCT1Synthesis, DCT2Synthesis, restriction_operator, dct_2d, idct_2d, dct_1d
from .solver import SolveOptions, solve_weighted_bpdn

__all__ = [
    "PSNR_CAP_DB",
    "FrameSequence",
    "AudioStream",
    "StreamingPolicy",
    "energy_support",
    "psnr_db",
    "video_pipeline",
    "VideoResult",
    "audio_pipeline",
    "AudioResult",
    "audio_lowfreq_bins",
    "synthetic_video",
    "synthetic_speech",
    "write_video_metrics",
    "write_audio_metrics",
]

PSNR_CAP_DB = 300.0


@dataclass(frozen=True)
class FrameSequence:
    """8-bit grayscale frames, shape ``(count, H, W)``."""

    frames: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frames)
        if f.ndim != 3:
            raise DimensionError(f"frames must have shape (count, H, W), got {f.shape}")
        if f.dtype != np.uint8:
            if np.any(f < 0) or np.any(f > 255):
                raise DomainError("pixel values must lie in [0, 255]")
            f = f.astype(np.uint8)
        f.setflags(write=False)
        object.__setattr__(self, "frames", f)

    @property
    def H(self):
        return self.frames.shape[1]

    @property
    def W(self):
        return self.frames.shape[2]

    def __len__(self):
        return self.frames.shape[0]


@dataclass(frozen=True)
class AudioStream:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).ravel()
        if not np.all(np.isfinite(s)):
            raise DomainError("audio samples must be finite")
        if not self.sample_rate > 0:
            raise DomainError("sample rate must be positive")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)


@dataclass(frozen=True)
class StreamingPolicy:
    n0_fraction: float = 0.5
    nj_fraction: float = 1 / 2.2
    omega: float = 0.5
    energy_fraction: float = 0.97
    lowfreq_cutoff_hz: float = 4000.0
    prev_topk_divisor: int = 16

    def __post_init__(self):
        for name in ("n0_fraction", "nj_fraction", "energy_fraction"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise DomainError(f"{name} must lie in (0, 1], got {v}")
        if not 0 <= self.omega <= 1:
            raise DomainError(f"omega must lie in [0, 1], got {self.omega}")
        if self.lowfreq_cutoff_hz < 0:
            raise DomainError("lowfreq_cutoff_hz must be nonnegative")
        if self.prev_topk_divisor < 1:
            raise DomainError("prev_topk_divisor must be at least 1")


def energy_support(coeffs, fraction, exclude: Optional[SupportSet] = None) -> SupportSet:
    """Fewest largest-energy indices holding ``fraction`` of the energy.

    Indices in ``exclude`` are ignored, both for selection and for the
    total. Ties go to the lower index.
    """
    c = np.asarray(coeffs, dtype=float).ravel()
    if not 0 < fraction <= 1:
        raise DomainError(f"fraction must lie in (0, 1], got {fraction}")
    e = c * c
    if exclude is not None:
        if exclude.ambient_dim != c.size:
            raise DimensionError("exclude set has the wrong ambient dimension")
        e[exclude.as_array()] = 0.0
    order = np.argsort(-e, kind="stable")
    cum = np.cumsum(e[order])
    total = cum[-1] if cum.size else 0.0
    if total == 0:
        return SupportSet((), c.size)
    count = int(np.searchsorted(cum, fraction * total, side="left")) + 1
    count = min(count, int(np.count_nonzero(e)))
    return SupportSet(order[:count], c.size)


def psnr_db(frame, recovered, N_pixels: Optional[int] = None) -> float:
    """``10 log10(N * 255^2 / ||x - x_hat||^2)``, capped at 300 dB."""
    x = np.asarray(frame, dtype=float)
    xh = np.asarray(recovered, dtype=float)
    if x.shape != xh.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {xh.shape}")
    N = x.size if N_pixels is None else int(N_pixels)
    err = float(np.sum((x - xh) ** 2))
    if err == 0:
        return PSNR_CAP_DB
    return min(10 * math.log10(N * 255.0**2 / err), PSNR_CAP_DB)


def _snr_db(x, xh, cap=PSNR_CAP_DB):
    sig = float(np.sum(np.asarray(x) ** 2))
    err = float(np.sum((np.asarray(x) - np.asarray(xh)) ** 2))
    if err == 0:
        return cap
    if sig == 0:
        return -cap
    return float(np.clip(10 * math.log10(sig / err), -cap, cap))


# ---------------------------------------------------------------------------
# video


@dataclass
class BlockRecord:
    frame: int
    block: int
    n_meas: int
    support: SupportSet
    kept: np.ndarray
    converged: bool


@dataclass
class VideoResult:
    psnr: list
    recovered: np.ndarray
    omega: float
    n_meas: list
    blocks: list = field(default_factory=list)

    def mean_psnr(self, start=1):
        return float(np.mean(self.psnr[start:]))


def _quadrants(H, W):
    if H % 2 or W % 2:
        raise DimensionError(f"frame size {H}x{W} must be even in both dimensions")
    h, w = H // 2, W // 2
    return [(slice(r * h, (r + 1) * h), slice(c * w, (c + 1) * w)) for r in (0, 1) for c in (0, 1)]


def video_support(prev1, prev2, fraction) -> SupportSet:
    """DC plus the high-energy AC coefficients of the last two decoded blocks."""
    N = prev1.size
    dc = SupportSet((0,), N)
    supp = dc | energy_support(prev1, fraction, exclude=dc)
    if prev2 is not None:
        supp = supp | energy_support(prev2, fraction, exclude=dc)
    return supp


def video_pipeline(seq: FrameSequence, policy: StreamingPolicy, seed,
                   opts: Optional[SolveOptions] = None, weighted: bool = True) -> VideoResult:
    """Recover every frame from random pixel subsets, block by block.

    Frame 0 uses standard l1 with ``n0`` pixels per block. Later frames use
    ``nj`` pixels and, when ``weighted`` is true, weight ``policy.omega``
    on the support estimate from the two previous decoded frames. With
    ``weighted=False`` every frame uses standard l1 (the comparison arm).
    Pixel subsets depend only on ``(seed, frame, block)``, so both arms see
    identical measurements.
    """
    H, W = seq.H, seq.W
    quads = _quadrants(H, W)
    bh, bw = H // 2, W // 2
    N = bh * bw
    transform = DCT2Synthesis(bh, bw)
    n0 = round_half_up(N * policy.n0_fraction)
    nj = round_half_up(N * policy.nj_fraction)
    history = [[None, None] for _ in quads]   # per block: (x_{j-1}, x_{j-2})
    recovered = np.zeros((len(seq), H, W))
    psnr, n_meas, blocks = [], [], []
    for j in range(len(seq)):
        frame = seq.frames[j].astype(float)
        total = 0
        for b, (rs, cs) in enumerate(quads):
            block = frame[rs, cs].ravel()
            m = n0 if j == 0 else nj
            rng = np.random.default_rng(np.random.SeedSequence([int(seed), j, b]))
            kept = np.sort(rng.choice(N, size=m, replace=False))
            A = restriction_operator(kept, transform)
            y = block[kept]
            prev1, prev2 = history[b]
            if j == 0 or not weighted:
                supp = SupportSet((), N)
                w = np.ones(N)
            else:
                supp = video_support(prev1, prev2, policy.energy_fraction)
                w = build_weights(supp, policy.omega, N)
            rep = solve_weighted_bpdn(A, y, w, 0.0, opts)
            coeffs = rep.solution
            history[b] = [coeffs, prev1]
            recovered[j, rs, cs] = transform.synthesize(coeffs).reshape(bh, bw)
            blocks.append(BlockRecord(j, b, m, supp, kept, rep.converged))
            total += m
        psnr.append(psnr_db(frame, recovered[j]))
        n_meas.append(total)
    return VideoResult(psnr=psnr, recovered=recovered,
                       omega=policy.omega if weighted else 1.0,
                       n_meas=n_meas, blocks=blocks)


def synthetic_video(H=32, W=32, count=30, sparsity=0.16, drift=0.04, seed=0) -> FrameSequence:
    """Frames whose block DCT supports are shared and drift slowly.

    Each quadrant holds ``round(sparsity * N)`` significant coefficients
    with power-law magnitudes biased toward low frequencies; per frame a
    fraction ``drift`` of the support moves and the amplitudes follow a
    slow random walk. Frames are quantized to 8 bits.
    """
    rng = np.random.default_rng(seed)
    quads = _quadrants(H, W)
    bh, bw = H // 2, W // 2
    N = bh * bw
    K = max(1, round_half_up(sparsity * N))
    p, q = np.meshgrid(np.arange(bh), np.arange(bw), indexing="ij")
    radius = np.hypot(p / bh, q / bw).ravel()
    prior = np.exp(-3.0 * radius)
    prior[0] = 0.0
    prior /= prior.sum()
    mags = 40.0 * np.arange(1, K + 1, dtype=float) ** -0.7
    state = []
    for _ in quads:
        supp = rng.choice(N, size=K, replace=False, p=prior)
        amps = mags * rng.choice([-1.0, 1.0], size=K)
        state.append([supp, amps])
    frames = np.zeros((count, H, W))
    n_move = max(1, round_half_up(drift * K))
    for j in range(count):
        for b, (rs, cs) in enumerate(quads):
            supp, amps = state[b]
            c = np.zeros(N)
            c[0] = 128.0 * math.sqrt(N)
            c[supp] = amps
            frames[j, rs, cs] = idct_2d(c.reshape(bh, bw))
            # evolve: amplitudes wander, a few locations jump
            amps = amps * (1 + 0.05 * rng.standard_normal(K))
            move = rng.choice(K, size=n_move, replace=False)
            free = np.setdiff1d(np.arange(1, N), supp)
            pr = prior[free] / prior[free].sum()
            supp = supp.copy()
            supp[move] = rng.choice(free, size=n_move, replace=False, p=pr)
            state[b] = [supp, amps]
    return FrameSequence(np.clip(np.round(frames), 0, 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# audio


@dataclass
class AudioResult:
    omega: float
    snr_db: float
    block_snr: list
    n_meas: list
    recovered: np.ndarray
    supports: list
    empty_blocks: list
    converged: list


def audio_lowfreq_bins(N, sample_rate, cutoff_hz) -> np.ndarray:
    """DCT bins ``i`` whose frequency ``i * fs / (2N)`` is at most the cutoff."""
    top = math.floor(cutoff_hz * 2 * N / sample_rate + 1e-12)
    return np.arange(min(top, N - 1) + 1)


def audio_kept_indices(length, fraction, seed) -> np.ndarray:
    """Uniformly drawn sample positions over the whole stream, sorted."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xA0D10]))
    m = round_half_up(length * fraction)
    return np.sort(rng.choice(length, size=m, replace=False))


def audio_pipeline(stream: AudioStream, block_len: int = 2048,
                   policy: Optional[StreamingPolicy] = None, seed=0,
                   opts: Optional[SolveOptions] = None) -> AudioResult:
    """Recover an audio stream from a random quarter of its samples.

    ``policy.nj_fraction`` sets the overall kept fraction. The stream is
    truncated to a whole number of blocks. Block ``j`` is recovered with
    weight ``policy.omega`` on the low-frequency bins plus the
    ``n_j // prev_topk_divisor`` largest coefficients of block ``j-1``.
    """
    policy = policy or StreamingPolicy(nj_fraction=0.25)
    N = int(block_len)
    s = stream.samples
    nblocks = s.size // N
    if nblocks == 0:
        raise DomainError(f"stream shorter than one block of {N} samples")
    s = s[: nblocks * N]
    kept_all = audio_kept_indices(s.size, policy.nj_fraction, seed)
    transform = DCT1Synthesis(N)
    low = SupportSet(audio_lowfreq_bins(N, stream.sample_rate, policy.lowfreq_cutoff_hz), N)
    recovered = np.zeros_like(s)
    prev = None
    block_snr, n_meas, supports, empty, conv = [], [], [], [], []
    for j in range(nblocks):
        lo, hi = j * N, (j + 1) * N
        kept = kept_all[(kept_all >= lo) & (kept_all < hi)] - lo
        nj = kept.size
        supp = low
        if prev is not None:
            top = nj // policy.prev_topk_divisor
            if top:
                order = np.argsort(-np.abs(prev), kind="stable")[:top]
                supp = supp | SupportSet(order, N)
        supports.append(supp)
        n_meas.append(nj)
        if nj == 0:
            coeffs = np.zeros(N)
            empty.append(j)
            conv.append(False)
        else:
            A = restriction_operator(kept, transform)
            w = build_weights(supp, policy.omega, N)
            rep = solve_weighted_bpdn(A, s[lo:hi][kept], w, 0.0, opts)
            coeffs = rep.solution
            conv.append(rep.converged)
        recovered[lo:hi] = transform.synthesize(coeffs)
        block_snr.append(_snr_db(s[lo:hi], recovered[lo:hi]))
        prev = coeffs
    return AudioResult(omega=policy.omega, snr_db=_snr_db(s, recovered), block_snr=block_snr,
                       n_meas=n_meas, recovered=recovered, supports=supports,
                       empty_blocks=empty, converged=conv)


def synthetic_speech(blocks=6, block_len=2048, sample_rate=44100.0, seed=0) -> AudioStream:
    """Speech-like test signal: slowly varying harmonic partials plus a weak tail.

    Each block has a fundamental between 100 and 250 Hz with decaying
    harmonics (most energy below 4 kHz), gliding slowly from block to
    block, plus low-level broadband noise so blocks are compressible rather
    than sparse.
    """
    rng = np.random.default_rng(seed)
    N = int(block_len)
    total = blocks * N
    t = np.arange(total) / sample_rate
    f0 = np.interp(np.arange(total), [0, total - 1], rng.uniform(100, 250, size=2))
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate
    sig = np.zeros(total)
    for h in range(1, 40):
        if h * f0.max() > sample_rate / 2:
            break
        amp = h ** -1.2 * (1.0 + 0.3 * np.sin(2 * np.pi * 0.5 * t * rng.uniform(0.5, 2)))
        sig += amp * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    sig += 0.01 * rng.standard_normal(total)
    sig *= 0.5 / np.max(np.abs(sig))
    return AudioStream(sig, sample_rate)


# ---------------------------------------------------------------------------
# metrics files


def write_video_metrics(result: VideoResult, path) -> None:
    """``index,n_meas,omega,psnr_db`` with 6-decimal reals."""
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("index,n_meas,omega,psnr_db\n")
        for i, (m, p) in enumerate(zip(result.n_meas, result.psnr)):
            fh.write(f"{i},{m},{result.omega:.6f},{p:.6f}\n")


def write_audio_metrics(results, path) -> None:
    """``block,n_meas,omega,snr_db`` for one or more pipeline runs."""
    if isinstance(results, AudioResult):
        results = [results]
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("block,n_meas,omega,snr_db\n")
        for res in results:
            for j, (m, s) in enumerate(zip(res.n_meas, res.block_snr)):
                fh.write(f"{j},{m},{res.omega:.6f},{s:.6f}\n")
