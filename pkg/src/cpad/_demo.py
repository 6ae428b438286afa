"""Deterministic synthetic traffic generator for demos and structural tests.

Not part of the pipeline: it exists so the repo can bundle a small CSV with
known shape (mixed numeric/categorical columns, planted anomaly combos, a few
missing cells) without shipping third-party data.
"""

from __future__ import annotations

import csv
import random
from pathlib import Path

DEMO_COLUMNS = [
    ("duration", "numeric"),
    ("proto", "categorical"),
    ("service", "categorical"),
    ("src_bytes", "numeric"),
    ("dst_bytes", "numeric"),
    ("flag", "categorical"),
    ("label", "categorical"),
]

DEMO_SCHEMA = {
    "columns": [{"name": name, "kind": kind} for name, kind in DEMO_COLUMNS],
    "label_column": "label",
    "normal_values": ["normal"],
    "drop_columns": [],
    "has_header": True,
}


def demo_rows(n: int = 300, seed: int = 7) -> list[list[str]]:
    """``n`` rows, roughly 60/40 normal/anomalous, deterministic in ``seed``."""
    rng = random.Random(seed)
    rows: list[list[str]] = []
    for _ in range(n):
        anomalous = rng.random() < 0.4
        if anomalous:
            proto = rng.choice(["icmp", "tcp"])
            service = rng.choice(["none", "http"])
            flag = rng.choice(["S0", "REJ"])
            duration = rng.gauss(80.0, 15.0)
            src_bytes = rng.gauss(20.0, 5.0)
            dst_bytes = 0.0
            label = rng.choice(["flood", "probe"])
        else:
            proto = rng.choice(["tcp", "udp"])
            service = rng.choice(["http", "dns", "ssh", "smtp"])
            flag = "SF"
            duration = rng.gauss(10.0, 3.0)
            src_bytes = rng.gauss(300.0, 80.0)
            dst_bytes = rng.gauss(500.0, 120.0)
            label = "normal"
        duration_cell = "" if rng.random() < 0.02 else f"{duration:.2f}"
        rows.append(
            [
                duration_cell,
                proto,
                service,
                f"{src_bytes:.2f}",
                f"{dst_bytes:.2f}",
                flag,
                label,
            ]
        )
    return rows


def write_demo_csv(path: str | Path, n: int = 300, seed: int = 7) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([name for name, _ in DEMO_COLUMNS])
        writer.writerows(demo_rows(n, seed))


if __name__ == "__main__":
    import json
    import sys

    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo.csv")
    write_demo_csv(target)
    schema_target = target.with_suffix(".schema.json")
    schema_target.write_text(json.dumps(DEMO_SCHEMA, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {target} and {schema_target}")
