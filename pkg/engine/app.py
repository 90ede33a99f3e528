import json
import logging
import os
import sys

# Searches and benchmarks are single-threaded; pin BLAS before numpy loads.
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import click

from api import cli
from core.config import Settings
from core.errors import ConfigError, LadrError

logger = logging.getLogger(__name__)


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _report(kind: str, message: str) -> None:
    click.echo(f"error: kind={kind} message={json.dumps(message)}", err=True)


def run_cli(argv=None) -> int:
    """
    Run one CLI invocation and return its exit code.

    0 on success, 2 for usage and parameter errors, 1 for every other failure.
    Failures print a single `error: kind=<Class> message=<json string>` line on stderr.
    """
    try:
        settings = Settings.from_env()
        configure_logging(settings.log_level)
        result = cli.main(args=argv, prog_name="ladr", obj=settings, standalone_mode=False)
        return result if isinstance(result, int) else 0
    except click.UsageError as e:
        _report(type(e).__name__, e.format_message())
        return 2
    except ConfigError as e:
        _report(type(e).__name__, str(e))
        return 2
    except click.Abort:
        _report("Abort", "aborted")
        return 1
    except click.ClickException as e:
        _report(type(e).__name__, e.format_message())
        return e.exit_code
    except (LadrError, OSError) as e:
        logger.debug("Command failed", exc_info=True)
        _report(type(e).__name__, str(e))
        return 1


if __name__ == "__main__":
    sys.exit(run_cli())
