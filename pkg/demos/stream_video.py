"""
Streaming video recovery
========================

Each frame is split into four blocks and sampled at random pixels. The
first frame is decoded with plain l1. After that, the large DCT
coefficients of the two previous decoded frames become the support
estimate for the next one.

A synthetic sequence stands in for real footage; pass a raw 8-bit file to
the ``weightedcs video`` command to use your own.
"""
from weightedcs import synthetic_video, StreamingPolicy, video_pipeline

seq = synthetic_video(32, 32, count=8, seed=0)
policy = StreamingPolicy(omega=0.5)

weighted = video_pipeline(seq, policy, seed=1)
plain = video_pipeline(seq, policy, seed=1, weighted=False)

for j, (a, b) in enumerate(zip(weighted.psnr, plain.psnr)):
    print(f"frame {j:2d}  weighted {a:6.1f} dB   plain {b:6.1f} dB")
print("mean over frames 1..:", round(weighted.mean_psnr(), 2), round(plain.mean_psnr(), 2))
