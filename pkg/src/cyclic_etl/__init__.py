"""Event-triggered state estimation and learning for cyclically excited systems."""
from .agents import EtlParams, Receiver, Sender, run_closed_loop
from .dynamics import (ScenarioConfig, Segment, SystemModel, generate_scenario, ingest_csv,
                       random_walk_model)
from .kernels import BACKEND
from .kstats import HypotheticalCdf, ks_one_sided, mc_hypothetical_cdf
from .predictor import ExcitationModel, Predictor
from .protocol import decode, encode

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "EtlParams", "ExcitationModel", "HypotheticalCdf", "Predictor", "Receiver",
    "ScenarioConfig", "Segment", "Sender", "SystemModel", "decode", "encode",
    "generate_scenario", "ingest_csv", "ks_one_sided", "mc_hypothetical_cdf",
    "random_walk_model", "run_closed_loop",
]
