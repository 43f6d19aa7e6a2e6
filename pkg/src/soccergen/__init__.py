"""Real-time user-controllable soccer motion generation.

Two-stage pipeline: a single-step trajectory diffusion model turns coarse
control into a future root trajectory, and an autoregressive few-step motion
diffusion model generates full-body + ball motion along it, with inference-
time contact guidance for ball-foot interactions.
"""

__version__ = "0.1.0"
