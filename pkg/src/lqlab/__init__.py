"""Link-quality prediction under log-normal shadowing: channel simulation,
beacon datasets, randomness metrics, from-scratch learners and
prediction-gated reception."""

from .channel import ChannelParams, delivery_rate, distance_for_rate, draw_link, r_zero
from .dataset import FOUR_CLASS, TWO_CLASS, SampleSet, assemble, generate_trace, split
from .metrics import (analytic_mislabel, empirical_mislabel, label_entropy,
                      predictor_randomness, set_randomness)

__version__ = "0.1.0"

__all__ = [
    "ChannelParams", "delivery_rate", "distance_for_rate", "draw_link", "r_zero",
    "FOUR_CLASS", "TWO_CLASS", "SampleSet", "assemble", "generate_trace", "split",
    "analytic_mislabel", "empirical_mislabel", "label_entropy", "predictor_randomness",
    "set_randomness",
]
