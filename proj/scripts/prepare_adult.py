#!/usr/bin/env python3
# Copyright 2026 The UDF Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Convert the UCI Adult `adult.data` file into the bundled 11-column recipe.

Usage: prepare_adult.py adult.data data/adult/

Rows with unknown ('?') workclass, occupation or native-country are dropped.
hours-per-week is bucketed (a single value holds ~47% of the mass, which
rules out equal-frequency bins) and native-country is reduced to US/other.
Writes adult.csv, schema.json and tasks.json into the output directory.
"""

import csv
import json
import sys
from pathlib import Path

RAW_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num", "marital_status",
    "occupation", "relationship", "race", "gender", "capital_gain", "capital_loss",
    "hours_per_week", "native_country", "income",
]

EDUCATION = [
    "Preschool", "1st-4th", "5th-6th", "7th-8th", "9th", "10th", "11th", "12th",
    "HS-grad", "Some-college", "Assoc-voc", "Assoc-acdm", "Bachelors", "Masters",
    "Prof-school", "Doctorate",
]
ABOVE_HIGH_SCHOOL = EDUCATION[9:]


def hours_bucket(h: int) -> str:
    if h < 40:
        return "part-time"
    if h == 40:
        return "full-time"
    return "overtime"


def main() -> None:
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    with src.open() as f:
        for rec in csv.reader(f, skipinitialspace=True):
            if len(rec) != len(RAW_COLUMNS):
                continue
            r = dict(zip(RAW_COLUMNS, (v.strip() for v in rec)))
            if "?" in (r["workclass"], r["occupation"], r["native_country"]):
                continue
            rows.append({
                "age": r["age"],
                "workclass": r["workclass"],
                "education": r["education"],
                "marital_status": r["marital_status"],
                "occupation": r["occupation"],
                "relationship": r["relationship"],
                "race": r["race"],
                "gender": r["gender"],
                "hours_per_week": hours_bucket(int(r["hours_per_week"])),
                "native_country": "United-States" if r["native_country"] == "United-States" else "Other",
                "income": r["income"].rstrip("."),
            })

    columns = list(rows[0].keys())
    with (out / "adult.csv").open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)

    def cats(name, order=None):
        seen = sorted({r[name] for r in rows})
        if order:
            assert set(seen) <= set(order), name
            return [c for c in order if c in seen]
        return seen

    roles = {"race": "protected", "gender": "protected",
             "income": "advantaged", "education": "advantaged"}
    features = []
    for name in columns:
        feat = {"name": name, "role": roles.get(name, "remaining")}
        if name == "age":
            feat.update(kind="continuous", bins=8)
        elif name == "education":
            feat.update(kind="categorical", categories=cats(name, EDUCATION))
        elif name == "hours_per_week":
            feat.update(kind="categorical", categories=["part-time", "full-time", "overtime"])
        elif name == "income":
            feat.update(kind="categorical", categories=["<=50K", ">50K"])
        elif name == "gender":
            feat.update(kind="categorical", categories=["Female", "Male"])
        else:
            feat.update(kind="categorical", categories=cats(name))
        features.append(feat)
    (out / "schema.json").write_text(json.dumps({"features": features}, indent=2) + "\n")

    tasks = {"tasks": [
        {"name": "gender-income", "target": "income", "positive": [">50K"],
         "protected": ["gender"]},
        {"name": "race-education", "target": "education", "positive": ABOVE_HIGH_SCHOOL,
         "protected": ["race"]},
    ]}
    (out / "tasks.json").write_text(json.dumps(tasks, indent=2) + "\n")
    print(f"wrote {len(rows)} rows")


if __name__ == "__main__":
    main()
