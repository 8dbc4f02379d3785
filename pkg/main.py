"""Batch entry point: ``python main.py <subcommand> [flags]``.

See routes/cli.py for the subcommands and exit codes.
"""

from __future__ import annotations

import sys

from routes.cli import run

if __name__ == "__main__":
    raise SystemExit(run(sys.argv[1:]))
