"""Deterministic autoencoder link simulator with m-hot message encoding."""

from .analysis import (BlerRecord, MomentReport, bler_sweep, capacity_table,
                       receiver_map, snr_moments, snr_moments_mc,
                       trained_snr_study)
from .channel import ChannelSpec, RngStream, awgn, noise_variance
from .codec import INVALID_CODEWORD, GdrCodec, num_messages, rank_subset, \
    unrank_subset
from .errors import DivergenceError, ModelFileError, ShapeError
from .model import (ModelParams, TrainingConfig, build_model, count_params,
                    load_model, receive, save_model, train, transmit,
                    transmit_power)
from .nn import (AdamState, BatchNormLayer, DenseLayer, cross_entropy,
                 mean_cross_entropy, relu, softmax)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "BatchNormLayer", "BlerRecord", "ChannelSpec",
    "DenseLayer", "DivergenceError", "GdrCodec", "INVALID_CODEWORD",
    "ModelFileError", "ModelParams", "MomentReport", "RngStream",
    "ShapeError", "TrainingConfig", "awgn", "bler_sweep", "build_model",
    "capacity_table", "count_params", "cross_entropy", "load_model",
    "mean_cross_entropy", "noise_variance", "num_messages", "rank_subset",
    "receive", "receiver_map", "relu", "save_model", "snr_moments",
    "snr_moments_mc", "softmax", "train", "trained_snr_study", "transmit",
    "transmit_power", "unrank_subset",
]
