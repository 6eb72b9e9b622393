"""Loaders for the JSON artifact schemas shipped with the package.

Validation is optional at runtime (the pipeline trusts its own writers);
tests and external producers can call ``validate_artifact`` to check a
payload against the published schema.  Requires the ``jsonschema`` package.
"""
from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path

SCHEMA_DIR = Path(__file__).parent
SCHEMA_KINDS = ("clusters", "preprocessed", "fit", "forecast", "risk",
                "analytics", "scenario")


@lru_cache(maxsize=None)
def load_schema(kind: str) -> dict:
    if kind not in SCHEMA_KINDS:
        raise ValueError(f"unknown schema kind {kind!r}")
    with open(SCHEMA_DIR / f"{kind}.schema.json") as fh:
        return json.load(fh)


def validate_artifact(kind: str, payload: dict) -> None:
    """Raise jsonschema.ValidationError when the payload does not conform."""
    import jsonschema
    from referencing import Registry, Resource

    registry = Registry().with_resources(
        (load_schema(k)["$id"], Resource.from_contents(load_schema(k)))
        for k in SCHEMA_KINDS)
    validator = jsonschema.Draft202012Validator(load_schema(kind),
                                                registry=registry)
    validator.validate(payload)
