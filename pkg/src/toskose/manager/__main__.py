"""Run the manager as a container (or sandbox) main process.

Configuration comes from the environment (TOSKOSE_MANAGER_PORT,
TOSKOSE_APP_MODE, SECRET_KEY) and the model documents injected by the
packager into the manager context. TOSKOSE_ALIAS_TABLE may point at a
JSON file mapping network aliases to host:port pairs; without it,
aliases resolve through DNS as on an overlay network.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import uvicorn

from .api import create_app
from .appmodel import AppModelError, load_app_model
from .service import AppManager

DEFAULT_MODEL_DIR = "/toskose/manager/model"
TEMPLATE_FILENAME = "template.yaml"
CONFIG_FILENAME = "toskose.yml"

log = logging.getLogger("toskose.manager")


def load_alias_table(path: str | Path) -> dict[str, tuple[str, int]]:
    raw = json.loads(Path(path).read_text())
    table: dict[str, tuple[str, int]] = {}
    for alias, endpoint in raw.items():
        host, _, port = str(endpoint).rpartition(":")
        table[alias] = (host, int(port))
    return table


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    model_dir = Path(os.environ.get("TOSKOSE_MODEL_DIR", DEFAULT_MODEL_DIR))
    try:
        model = load_app_model(
            (model_dir / TEMPLATE_FILENAME).read_text(),
            (model_dir / CONFIG_FILENAME).read_text(),
        )
    except (OSError, AppModelError) as exc:
        print(f"toskose-manager: {exc}", file=sys.stderr)
        return 2

    alias_table = None
    table_path = os.environ.get("TOSKOSE_ALIAS_TABLE")
    if table_path:
        alias_table = load_alias_table(table_path)

    mode = os.environ.get("TOSKOSE_APP_MODE", str(model.config.manager.mode))
    port = int(os.environ.get("TOSKOSE_MANAGER_PORT", str(model.config.manager.port)))

    manager = AppManager(model, alias_table=alias_table)
    app = create_app(manager, auth_enabled=(mode != "development"))
    log.info("manager listening on port %d (%s mode)", port, mode)
    uvicorn.run(app, host="0.0.0.0", port=port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
