"""Command-line entry point.

Configures structured logging (and tracing, when enabled) BEFORE any
command runs so every module logs through the same handlers.

Run with::

    cadops gen --out data --count 100 --seed 7
"""

from __future__ import annotations

import sys
import uuid
from collections.abc import Sequence

from src.cli import COMMANDS, build_parser
from src.config.telemetry import configure_telemetry, set_correlation_context
from src.errors import CadopsError, ConfigError

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE = 2


def run(argv: Sequence[str] | None = None) -> int:
    configure_telemetry()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    set_correlation_context(command=args.command, run_id=uuid.uuid4().hex[:12])
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        sys.stderr.write(f"cadops {args.command}: {exc}\n")
        return EXIT_USAGE
    except CadopsError as exc:
        sys.stderr.write(f"cadops {args.command}: {exc}\n")
        return EXIT_DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(run())
