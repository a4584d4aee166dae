"""spritesteer: real-time cursor-object interaction video generation.

A bidirectional video-diffusion teacher is distilled into a block-causal
autoregressive generator (self-forcing rollout + distribution matching +
adversarial refinement) that streams 4-frame blocks with a KV cache, driven
by synthetic cursor-object clips with physics ground truth.
"""

__version__ = "0.1.0"
