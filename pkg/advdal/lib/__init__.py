"""
Library modules for advdal.

Numerical core (network, attacks, verifier), data loading, query
strategies, the active-learning engine and report emission.
"""

# Re-export key classes for easy importing
from .datasets import Dataset, DatasetSpec, load_dataset
from .engine import ExperimentConfig, ExperimentResult, RoundRecord, run_experiment
from .network import MlpModel, TrainConfig
from .verifier import HarvestParams, RobustnessQuery, Verdict, harvest, solve

__all__ = [
    'Dataset',
    'DatasetSpec',
    'load_dataset',
    'ExperimentConfig',
    'ExperimentResult',
    'RoundRecord',
    'run_experiment',
    'MlpModel',
    'TrainConfig',
    'HarvestParams',
    'RobustnessQuery',
    'Verdict',
    'harvest',
    'solve',
]
