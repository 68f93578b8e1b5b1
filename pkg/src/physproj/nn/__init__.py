"""Minimal dense feed-forward network engine with physics-regularized training."""

from physproj.nn.losses import (
    LtpResidualTerm,
    SpringEnergyTerm,
    mse,
    mse_gradient,
    physics_loss_ltp,
    physics_loss_springmass,
    total_loss,
)
from physproj.nn.network import (
    MAGIC_HEADER,
    Activation,
    Network,
    backward,
    forward,
    forward_cached,
    load_network,
    save_network,
    xavier_init,
)
from physproj.nn.optimizer import AdamState, adam_step
from physproj.nn.schedule import plateau_lr, pq_alpha_should_stop
from physproj.nn.training import (
    EarlyStopConfig,
    Ensemble,
    PlateauConfig,
    TrainConfig,
    TrainHistory,
    ensemble_predict,
    ensemble_train,
    train,
)

__all__ = [
    "MAGIC_HEADER",
    "Activation",
    "AdamState",
    "EarlyStopConfig",
    "Ensemble",
    "LtpResidualTerm",
    "Network",
    "PlateauConfig",
    "SpringEnergyTerm",
    "TrainConfig",
    "TrainHistory",
    "adam_step",
    "backward",
    "ensemble_predict",
    "ensemble_train",
    "forward",
    "forward_cached",
    "load_network",
    "mse",
    "mse_gradient",
    "physics_loss_ltp",
    "physics_loss_springmass",
    "plateau_lr",
    "pq_alpha_should_stop",
    "save_network",
    "total_loss",
    "train",
    "xavier_init",
]
