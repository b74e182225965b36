"""Run manifests: enough provenance to reproduce any report.

Every CLI report embeds one of these: the subcommand, its resolved
options, a sha256 of each input file's raw bytes, the seed, the tool
version, and (unless suppressed for golden-file diffing) the wall-clock
duration.
"""

from __future__ import annotations

import hashlib

from . import __version__


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        while chunk := f.read(1 << 20):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(
    subcommand: str,
    options: dict,
    inputs: dict[str, str],
    seed: int,
    duration_s: float | None = None,
) -> dict:
    """Assemble the provenance block embedded in every report.

    `inputs` maps a role name to a file path; values become sha256 hex
    digests of the file bytes. Keys are emitted sorted so identical runs
    serialize identically; duration_s=None omits the timing field.
    """
    manifest = {
        "subcommand": subcommand,
        "options": {k: options[k] for k in sorted(options)},
        "input_sha256": {k: file_sha256(inputs[k]) for k in sorted(inputs)},
        "seed": seed,
        "version": __version__,
    }
    if duration_s is not None:
        manifest["duration_s"] = round(duration_s, 3)
    return manifest
