"""Run a unit as a container (or sandbox) main process.

Loads the INI configuration, expands ``${NAME}`` placeholders from the
environment, serves the XML-RPC API and honours termination signals by
stopping every running program before exiting.
"""

from __future__ import annotations

import argparse
import logging
import signal
import sys
import threading
from pathlib import Path

from .config import UnitConfigError, load_unit_config
from .rpc import UnitRpcServer
from .supervisor import Supervisor, enable_child_subreaper

log = logging.getLogger("toskose.unit")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="toskose-unit")
    parser.add_argument(
        "-c", "--configuration", default="supervisord.conf",
        help="path to the unit configuration file",
    )
    parser.add_argument("-d", "--directory", default=None, help="working directory (defaults to the config file's)")
    args = parser.parse_args(argv)

    config_path = Path(args.configuration)
    try:
        config = load_unit_config(config_path.read_text())
    except (OSError, UnitConfigError) as exc:
        print(f"toskose-unit: {exc}", file=sys.stderr)
        return 2

    logging.basicConfig(
        level=getattr(logging, config.supervisor.log_level, logging.INFO),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )

    root = Path(args.directory) if args.directory else config_path.resolve().parent
    enable_child_subreaper()
    supervisor = Supervisor(config, root_dir=root)
    server = UnitRpcServer(supervisor)
    server.serve_in_background()
    host, port = server.address
    log.info("unit listening on %s:%d with %d programs", host, port, len(config.programs))

    for name, spec in config.programs.items():
        if spec.autostart:
            supervisor.start_program(name, wait=False)

    terminated = threading.Event()

    def handle_signal(signum, frame):
        log.info("received signal %d, shutting down", signum)
        terminated.set()

    signal.signal(signal.SIGTERM, handle_signal)
    signal.signal(signal.SIGINT, handle_signal)

    terminated.wait()
    supervisor.shutdown()
    server.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
