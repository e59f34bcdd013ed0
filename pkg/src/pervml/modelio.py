"""Reading and writing model files (JSON text, exact float round-trip)."""

from __future__ import annotations

import json

FORMAT_VERSION = 1


class ModelIOError(ValueError):
    """A model file is unreadable, malformed, or of an unsupported version."""


def write_model(path, payload: dict):
    payload = {"format_version": FORMAT_VERSION, **payload}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, allow_nan=False)
        fh.write("\n")


def read_model(path, expected_type: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ModelIOError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelIOError(f"corrupt model file {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ModelIOError(f"corrupt model file {path}: expected an object")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelIOError(
            f"{path}: unsupported format_version {version!r} "
            f"(this build reads version {FORMAT_VERSION})"
        )
    model_type = payload.get("model_type")
    if model_type != expected_type:
        raise ModelIOError(
            f"{path}: model_type {model_type!r}, expected {expected_type!r}"
        )
    return payload
