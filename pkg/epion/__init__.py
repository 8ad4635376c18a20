"""Euler-Poisson ion lab"""

import sys
import logging
import argparse
from epion import misc, output
# Silence flake8 "imported but unused" warning
from epion import field, elliptic, unittest  # noqa
from epion import dispersion, resonance, paley, semigroup, solver

# Module's logger
LOGGER = logging.getLogger(__name__)

# Experiment functions and default outputs, by subcommand
EXPERIMENTS = dict(
    dispersion=(dispersion.experiment, "dispersion.csv"),
    resonance=(resonance.experiment, "report.json"),
    norms=(paley.experiment, "norms.json"),
    decay=(semigroup.experiment, "decay.csv"),
    simulate=(solver.experiment, "simulation"),
)

# Command-line tools, by subcommand
MAINS = dict(
    dispersion=dispersion.tabulate_main,
    resonance=resonance.verify_main,
    norms=paley.norms_main,
    decay=semigroup.decay_main,
    simulate=solver.simulate_main,
)

# Action words a subcommand accepts before its tool arguments
ACTIONS = dict(
    resonance=("verify",),
)

# JSON schema for experiment configurations
CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "subcommand": {"enum": list(EXPERIMENTS)},
        "parameters": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "out": {"type": "string", "minLength": 1},
    },
    "required": ["subcommand", "parameters"],
    "additionalProperties": False,
}


def run_experiment(config):
    """
    Run an experiment described by a JSON configuration.

    Args:
        config: The configuration (see CONFIG_SCHEMA): the "subcommand"
                naming the experiment family, its "parameters" (see the
                family's PARAMETERS_SCHEMA), the "seed" (default zero) and
                the "out" path (default depends on the family).

    Returns:
        The experiment's result.

    Raises:
        ConfigError if the configuration is invalid, GuardError if a numeric
        guard tripped, OutputError if writing failed.
    """
    misc.validate(config, CONFIG_SCHEMA)
    function, default_out = EXPERIMENTS[config["subcommand"]]
    seed = config.get("seed", 0)
    out = config.get("out", default_out)
    LOGGER.info("Running %r experiment with seed %r into %r",
                config["subcommand"], seed, output.output_path(out))
    return function(config["parameters"], seed, out)


@misc.main_function
def run_main():
    """Execute the epion command-line tool"""
    description = 'epion - Euler-Poisson ion lab: run an experiment ' \
        'configuration, or a subcommand tool'
    parser = misc.ArgumentParser(description=description)
    parser.add_argument(
        'command',
        choices=["run", *MAINS],
        help='"run" to execute a JSON experiment configuration, or the '
             'subcommand whose tool to execute with the remaining arguments'
    )
    parser.add_argument(
        'args',
        nargs=argparse.REMAINDER,
        help='The configuration path for "run", otherwise the tool '
             'arguments, optionally after an action word, as in '
             '"resonance verify"'
    )
    args = parser.parse_args()
    if args.command != "run":
        words, tool_args = ["epion", args.command], list(args.args)
        if tool_args[:1] and tool_args[0] in ACTIONS.get(args.command, ()):
            words.append(tool_args.pop(0))
        sys.argv = [" ".join(words), *tool_args]
        return MAINS[args.command]()
    if len(args.args) != 1:
        parser.error('"run" takes exactly one configuration path')
    config = misc.json_load(args.args[0])
    if isinstance(config, dict) and "seed" not in config:
        config["seed"] = args.seed
    run_experiment(config)
    return 0
