"""Quick diagnostic script to show which levylab environment settings are set."""

from __future__ import annotations

import os

from dotenv import load_dotenv

from utils.settings import ENV_KEYS, load_settings


def main() -> None:
    load_dotenv()
    for key in ENV_KEYS:
        value = os.getenv(key)
        status = f"SET ({value})" if value else "MISSING (optional)"
        print(f"{key}: {status}")

    settings = load_settings()
    print(f"effective: log_level={settings.log_level} output_dir={settings.output_dir} seed={settings.default_seed}")


if __name__ == "__main__":
    main()
