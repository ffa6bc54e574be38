"""Convolution, rearrangement and sharp Young-type inequalities on modelled groups."""
from .constants import B, C_of, ExponentData, conjugate, hausdorff_young_bound, q_of
from .convexity import decompose, parse_convex, reconstruct
from .groups import MeasuredFunction, convolve, convolve_fft, hypothesis_holds, make_carrier
from .lab import VerificationReport, check_main, section4_family
from .piecewise import PiecewiseLinear, StepFunction, conv_steps, integrate_compose
from .rearrange import layer_cake, rearrange, rearranged_convolution

__version__ = "0.1.0"

__all__ = [
    "B", "C_of", "ExponentData", "MeasuredFunction", "PiecewiseLinear", "StepFunction",
    "VerificationReport", "check_main", "conjugate", "conv_steps", "convolve", "convolve_fft",
    "decompose", "hausdorff_young_bound", "hypothesis_holds", "integrate_compose", "layer_cake",
    "make_carrier", "parse_convex", "q_of", "rearrange", "rearranged_convolution", "reconstruct",
    "section4_family",
]
