"""Which 2D magnetic point groups allow each Zeeman-geometric response channel.

The table ships as JSON inside the package. Group labels are kept verbatim
(ASCII apostrophe for the time-reversal prime, ``1'`` suffixes untouched).

Note: the table lists m'm'2 among the groups allowing gA, although m'm'2 is
also described as allowing only the gN channel. The data is kept as printed.
"""

from __future__ import annotations

import hashlib
import json
from functools import lru_cache
from importlib import resources

from .errors import UnknownGroupError

DATA_FILE = "magnetic_point_groups.json"
DATA_SHA256 = "0a245ced1f75fbdfc39e957dce043a7e7cbe7d55c824f047a846446c9e8d12be"
SECTOR_NAMES = ("gN", "gA", "OmegaN", "OmegaA")


def _raw_bytes() -> bytes:
    return resources.files("zeeman_qgt").joinpath("data").joinpath(DATA_FILE).read_bytes()


def data_checksum() -> str:
    return hashlib.sha256(_raw_bytes()).hexdigest()


@lru_cache(maxsize=None)
def _table() -> dict:
    raw = json.loads(_raw_bytes())
    explicit = [g for s in raw["sectors"].values() if s["groups"] != "all" for g in s["groups"]]
    labels = tuple(dict.fromkeys(explicit))
    rows = {}
    for name in SECTOR_NAMES:
        groups = raw["sectors"][name]["groups"]
        rows[name] = frozenset(labels if groups == "all" else groups)
    return {
        "labels": labels,
        "rows": rows,
        "jahn": {name: raw["sectors"][name]["jahn"] for name in SECTOR_NAMES},
        "highlighted": tuple(raw["highlighted"]),
        "version": raw["version"],
    }


def group_labels() -> tuple:
    return _table()["labels"]


def highlighted_groups() -> tuple:
    return _table()["highlighted"]


def jahn_symbol(sector: str) -> str:
    return _table()["jahn"][_check_sector(sector)]


def _check_sector(sector: str) -> str:
    if sector not in SECTOR_NAMES:
        raise ValueError(f"unknown sector {sector!r}; expected one of {SECTOR_NAMES}")
    return sector


def allowed_sectors(group_name: str) -> frozenset:
    table = _table()
    if group_name not in table["labels"]:
        raise UnknownGroupError(
            f"unknown magnetic point group {group_name!r}; valid labels: {', '.join(table['labels'])}"
        )
    return frozenset(s for s in SECTOR_NAMES if group_name in table["rows"][s])


def groups_allowing(sector: str) -> frozenset:
    return _table()["rows"][_check_sector(sector)]


def as_dict() -> dict:
    t = _table()
    return {
        "version": t["version"],
        "sha256": data_checksum(),
        "groups": {g: sorted(allowed_sectors(g), key=SECTOR_NAMES.index) for g in t["labels"]},
        "jahn": t["jahn"],
    }
