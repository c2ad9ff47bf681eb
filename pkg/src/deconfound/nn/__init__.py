"""Small numpy neural-network stack: layers, graph networks, Adam, losses."""
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import gradient_check, loss_gradient_check, numeric_gradient, relative_error
from .layers import (
    Broadcast2d,
    Concat,
    Conv2d,
    ConvTranspose2d,
    Dense,
    Flatten,
    L2Normalize,
    LeakyReLU,
    Sigmoid,
)
from .losses import (
    contrastive_loss,
    cross_entropy,
    cycle_l1,
    logistic_discriminator_loss,
    logistic_generator_loss,
    lsgan_discriminator_loss,
    lsgan_generator_loss,
    lsgan_losses,
    pairwise_contrastive,
    softmax,
)
from .network import Network
from .optim import Adam, adam_step

__all__ = [
    "Adam",
    "Broadcast2d",
    "Concat",
    "Conv2d",
    "ConvTranspose2d",
    "Dense",
    "Flatten",
    "L2Normalize",
    "LeakyReLU",
    "Network",
    "Sigmoid",
    "adam_step",
    "contrastive_loss",
    "cross_entropy",
    "cycle_l1",
    "gradient_check",
    "load_checkpoint",
    "logistic_discriminator_loss",
    "logistic_generator_loss",
    "loss_gradient_check",
    "lsgan_discriminator_loss",
    "lsgan_generator_loss",
    "lsgan_losses",
    "numeric_gradient",
    "pairwise_contrastive",
    "relative_error",
    "save_checkpoint",
    "softmax",
]
