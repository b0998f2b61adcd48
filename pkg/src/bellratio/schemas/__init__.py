"""JSON Schemas for the CLI reports, one per subcommand."""

import json
from importlib import resources


def load_schema(subcommand: str) -> dict:
    return json.loads(resources.files(__name__).joinpath(f"{subcommand}.schema.json").read_text())
