# __main__.py
from __future__ import annotations

from parthash.cli.main import main_app

if __name__ == "__main__":
    main_app()
