import os
import sys
import logging
from argparse import ArgumentParser

import numpy as np

from scenarios import SCENARIOS, ConfigError, ScenarioConfig, run, write_outputs
from tools import QbError, configure_logging, create_directory

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_ERROR = 0, 1, 2


def build_parser():
    parser = ArgumentParser(prog="qb-eit", description="charging simulations of EIT quantum batteries")
    parser.add_argument("-ls", "--list-scenarios", dest="list_scenarios", help="print the scenario ids and exit",
                        action="store_true")
    parser.add_argument("-v", "--verbose", dest="verbose", help="flag to log debug messages", action="store_true")
    subparsers = parser.add_subparsers(dest="command")

    run_parser = subparsers.add_parser("run", help="run the scenario described by a configuration file")
    run_parser.add_argument("config", help="path to the .cfg file")
    run_parser.add_argument("-o", "--out", dest="out", help="directory where to write the outputs "
                                                            "(defaults to results/<scenario>)", default=None)
    run_parser.add_argument("-j", "--jobs", dest="jobs", help="number of worker processes for the sweeps",
                            type=int, default=1)
    run_parser.add_argument("-c", "--validate-only", dest="validate_only",
                            help="flag to only parse and validate the configuration", action="store_true")
    run_parser.add_argument("-s", "--seed", dest="seed", help="seed of the global random generator", type=int,
                            default=None)
    return parser


def main(argv=None):
    """
    Exit code 0 when every check passes, 1 when a check fails, 2 on a configuration or numerical error.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(verbose=args.verbose)

    if args.list_scenarios:
        for name, scenario in SCENARIOS.items():
            print("{:8s} {}".format(name, scenario.description))
        return EXIT_OK

    if args.command != "run":
        parser.print_help()
        return EXIT_ERROR

    try:
        config = ScenarioConfig.from_file(args.config)
    except ConfigError as e:
        logger.error("invalid configuration: %s", e)
        return EXIT_ERROR
    if args.validate_only:
        logger.info("%s is a valid %s configuration", args.config, config.scenario)
        return EXIT_OK

    if args.seed is not None:
        # the simulations are deterministic; the seed only pins any stochastic extension
        np.random.seed(args.seed)

    out = args.out or os.path.join("results", config.scenario)
    try:
        create_directory(out, safe=False)
        report = run(config, jobs=args.jobs)
        write_outputs(report, config, out)
    except (QbError, ValueError, OSError) as e:
        logger.critical("scenario %s aborted: %s", config.scenario, e, exc_info=args.verbose)
        return EXIT_ERROR

    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    """
    Run a named scenario, e.g.
        python run_scenario.py run configs/fig3.cfg --out results/fig3
    """
    sys.exit(main())
