"""Coupled adversarial translation between seasonal domains, with
discriminator-feature place recognition."""

from .nets import Discriminator, DiscriminatorConfig, Generator, GeneratorConfig, init_networks
from .training import TrainerState, TrainingConfig, load_checkpoint, load_networks, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "Discriminator",
    "DiscriminatorConfig",
    "Generator",
    "GeneratorConfig",
    "TrainerState",
    "TrainingConfig",
    "init_networks",
    "load_checkpoint",
    "load_networks",
    "save_checkpoint",
    "train",
]
