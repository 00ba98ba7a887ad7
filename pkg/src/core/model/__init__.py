from .choice import (
    ChoiceDistribution,
    Offer,
    RoundFeatures,
    Theta,
    choice_probabilities,
    expected_revenue,
    sample_choice,
    smooth_choice_probabilities,
    z_matrix,
    z_vector,
)
from .noise import ActivationNoise, NoiseLaw
from .instance import Instance, generate_instance
