"""
Verify-one command implementation.

Loads a serialized model and one input from the configured dataset, prints
the interval bound on the runner-up logit gap, harvests counterexamples
around the input and prints each one together with the per-call verdict
trace.
"""
from __future__ import annotations

import argparse
import logging
from dataclasses import replace

import numpy as np

from ..config import ConfigManager
from ..constants import DEFAULT_FIXED_QUERY_EPS, STRICTNESS_MARGIN
from ..errors import EXIT_SUCCESS, InvalidArgumentError
from ..lib.datasets import load_dataset
from ..lib.model_io import load_model
from ..lib.utils import resolve_config_value
from ..lib.verifier import Box, harvest, ranked_classes, symbolic_bounds
from .base import BaseCommand

logger = logging.getLogger(__name__)


class VerifyOneCommand(BaseCommand):
    """Harvest counterexamples around a single dataset input."""

    def __init__(self, args: argparse.Namespace, config_manager: ConfigManager):
        super().__init__(args, config_manager)

    def run(self) -> int:
        """Execute the verify-one command.

        Returns
        -------
        int
            ``0`` whenever the harvest completes, including when it finds no
            counterexample
        """
        k = self.args.k
        if k <= 0:
            raise InvalidArgumentError(f"k must be positive, got {k}")
        eps = float(resolve_config_value(
            self.args, self.config, "eps", "experiment.fixed_query_eps", str(DEFAULT_FIXED_QUERY_EPS)
        ))
        if not eps > 0:
            raise InvalidArgumentError(f"eps must be positive, got {eps}")

        model = load_model(self.args.model)
        config = self.load_configs()[0]
        train, test = load_dataset(config.dataset)
        dataset = test if self.args.split == "test" else train
        sample = dataset.sample(self.args.index)
        if sample.features.shape[0] != model.input_dim:
            raise InvalidArgumentError(
                f"model expects {model.input_dim} inputs but the dataset has {sample.features.shape[0]}"
            )

        params = replace(config.harvest, k=k)
        source, target = ranked_classes(model, sample.features)
        print(
            f"input {sample.id} ({self.args.split}): label={sample.true_label} "
            f"predicted={source} runner-up={target}"
        )
        bounds = symbolic_bounds(model, Box.around(sample.features, eps))
        gap = float(bounds.diff_upper[target, source])
        certified = " (robust by interval bounds)" if gap < STRICTNESS_MARGIN else ""
        print(f"interval bound at eps={eps:.6g}: f[{target}] - f[{source}] <= {gap:.6g}{certified}")
        result = harvest(model, sample.features, params, eps)

        for number, point in enumerate(result.points, 1):
            distance = float(np.max(np.abs(point - sample.features)))
            print(f"counterexample {number}: predicted={model.predict(point)} linf={distance:.6f}")
        print("trace:")
        for entry in result.trace:
            print(f"  eps={entry.epsilon:.6g} verdict={entry.verdict.value} nodes={entry.nodes} ms={entry.millis:.1f}")
        print(f"found {len(result.points)} counterexample(s), final eps={result.final_epsilon:.6g}")
        return EXIT_SUCCESS
