"""
Bench command implementation.

Times the verifier on seeded random networks and reports branch-and-bound
node throughput.
"""
from __future__ import annotations

import argparse
import logging
from collections import Counter

import numpy as np

from ..config import ConfigManager
from ..errors import EXIT_SUCCESS, InvalidArgumentError
from ..lib.network import MlpModel
from ..lib.utils import derive_seed
from ..lib.verifier import RobustnessQuery, solve
from .base import BaseCommand

logger = logging.getLogger(__name__)

BENCH_EPS_RANGE = (0.01, 0.2)


class BenchCommand(BaseCommand):
    """Measure solve() node throughput."""

    def __init__(self, args: argparse.Namespace, config_manager: ConfigManager):
        super().__init__(args, config_manager)

    def run(self) -> int:
        hidden, inputs, classes, queries = self.args.hidden, self.args.inputs, self.args.classes, self.args.queries
        for name, value, minimum in (("hidden", hidden, 1), ("inputs", inputs, 1), ("classes", classes, 2),
                                     ("queries", queries, 1)):
            if value < minimum:
                raise InvalidArgumentError(f"--{name} must be at least {minimum}, got {value}")

        verdicts: Counter = Counter()
        nodes = 0
        seconds = 0.0
        lp_calls = 0
        for q in range(queries):
            model = MlpModel.initialize(inputs, hidden, classes, derive_seed(self.args.seed, q, 0))
            rng = np.random.default_rng(derive_seed(self.args.seed, q, 1))
            x = rng.uniform(0.0, 1.0, inputs)
            query = RobustnessQuery.build(model, x, float(rng.uniform(*BENCH_EPS_RANGE)))
            verdict = solve(model, query, self.args.time_limit_secs)
            verdicts[verdict.kind.value] += 1
            nodes += verdict.nodes_explored
            seconds += verdict.wall_time
            lp_calls += verdict.lp_calls
            logger.debug(f"query {q}: {verdict.kind.value} after {verdict.nodes_explored} nodes")

        rate = nodes / seconds if seconds > 0 else float("inf")
        print(f"network {inputs}-{hidden}-{classes}, {queries} queries")
        print(f"verdicts: sat={verdicts['sat']} unsat={verdicts['unsat']} timeout={verdicts['timeout']}")
        print(f"nodes={nodes} lp_calls={lp_calls} seconds={seconds:.3f} nodes/s={rate:.0f}")
        return EXIT_SUCCESS
