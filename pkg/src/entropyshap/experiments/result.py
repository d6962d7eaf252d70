"""Experiment results and their on-disk form.

A result file is named ``<experiment>_<confighash>.json`` (plus a long
CSV of per-replicate records).  Nothing time- or host-dependent is written,
so identical configs give identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field

SCHEMA_VERSION = 1


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    """First 12 hex digits of the SHA-256 of the canonical config."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:12]


@dataclass
class ExperimentResult:
    name: str
    config: dict
    metrics: dict
    records: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash({"experiment": self.name, **self.config})

    @property
    def stem(self) -> str:
        return f"{self.name}_{self.hash}"

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "experiment": self.name,
                "config": self.config, "config_hash": self.hash, "metrics": self.metrics,
                "records": self.records, **self.extra}

    def write(self, outdir) -> list[str]:
        """Write JSON and CSV artifacts; return their paths."""
        os.makedirs(outdir, exist_ok=True)
        jpath = os.path.join(outdir, self.stem + ".json")
        with open(jpath, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        paths = [jpath]
        if self.records:
            cpath = os.path.join(outdir, self.stem + ".csv")
            keys = sorted({k for r in self.records for k in r})
            with open(cpath, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=keys)
                w.writeheader()
                for r in self.records:
                    w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
            paths.append(cpath)
        return paths
