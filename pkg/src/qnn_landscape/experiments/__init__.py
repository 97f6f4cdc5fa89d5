"""Experiment drivers reproducing the loss-curve, landscape-profile and
local-minimum-probability studies, plus the statistical verification suites."""

from .common import RunResult, cell_stream
from .config import ConfigError, ExperimentConfig, OptimizerConfig, load_config, parse_config
from .haar_checks import run_verify_haar
from .state_learning import run_landscape, run_prob_localmin, run_train
from .theory_checks import run_lemma1_check, run_local_loss_check, run_prop1_check
