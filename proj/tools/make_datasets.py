#!/usr/bin/env python3
"""Writes data/breast-cancer and data/diabetes in sparse index:value format.

Sources are copies of the UCI files bundled in two PyPI packages, so the
script works without network access beyond the package index:

  breast-cancer: Wisconsin biopsy data (MASS::biopsy, via `pydataset`).
                 Rows with missing values dropped; the sample ID is kept as
                 feature 1, giving 683 rows x 10 features. Label +1 is
                 malignant, -1 benign.
  diabetes:      Pima Indians diabetes (via `keel-ds`), 768 rows x 8
                 features. Label +1 is tested_positive.

Usage: tools/make_datasets.py <pydataset sdist dir> <keel_ds wheel> <out dir>
"""
import csv
import io
import os
import sys
import tarfile
import zipfile


def write_rows(path, rows):
    with open(path, "w") as out:
        for label, feats in rows:
            parts = [f"{'+1' if label > 0 else '-1'}"]
            parts += [f"{i + 1}:{v}" for i, v in enumerate(feats) if v != 0]
            out.write(" ".join(parts) + "\n")


def breast_cancer(pydataset_dir):
    with tarfile.open(os.path.join(pydataset_dir, "pydataset", "resources.tar.gz")) as tar:
        raw = tar.extractfile("resources/rdata/csv/MASS/biopsy.csv").read().decode()
    rows = []
    for rec in csv.DictReader(io.StringIO(raw)):
        vals = [rec["ID"]] + [rec[f"V{i}"] for i in range(1, 10)]
        if "NA" in vals:
            continue
        rows.append((1 if rec["class"] == "malignant" else -1, [int(v) for v in vals]))
    return rows


def diabetes(keel_wheel):
    raw = zipfile.ZipFile(keel_wheel).read("keel_ds/data/balanced/raw/pima.dat").decode()
    rows = []
    for line in raw.splitlines():
        if not line.strip() or line.startswith("@"):
            continue
        *feats, cls = line.split(",")
        rows.append((1 if cls.strip() == "tested_positive" else -1, [float(v) for v in feats]))
    return rows


def main():
    pydataset_dir, keel_wheel, out_dir = sys.argv[1:4]
    write_rows(os.path.join(out_dir, "breast-cancer"), breast_cancer(pydataset_dir))
    write_rows(os.path.join(out_dir, "diabetes"), diabetes(keel_wheel))


if __name__ == "__main__":
    main()
