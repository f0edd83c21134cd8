#!/usr/bin/env python3
"""Rebuild data/*.csv from copies of the UCI datasets redistributed on PyPI.

The UCI archive is the canonical source; these packages are used because
they can be fetched with plain `pip download`:

  mushrooms.csv  keel-ds       (KEEL copy; rows with missing stalk-root removed)
  pima.csv       keel-ds
  voting.csv     Orange3 3.10.0 source distribution
  abalone.csv    scikit-lego

Usage: scripts/fetch_datasets.py [--out data]
"""
import argparse
import csv
import glob
import io
import os
import subprocess
import sys
import tarfile
import tempfile
import zipfile

MUSHROOM_COLUMNS = [
    "cap-shape", "cap-surface", "cap-color", "bruises", "odor",
    "gill-attachment", "gill-spacing", "gill-size", "gill-color",
    "stalk-shape", "stalk-root", "stalk-surface-above-ring",
    "stalk-surface-below-ring", "stalk-color-above-ring",
    "stalk-color-below-ring", "veil-type", "veil-color", "ring-number",
    "ring-type", "spore-print-color", "population", "habitat", "class",
]
PIMA_COLUMNS = [
    "pregnancies", "glucose", "blood_pressure", "skin_thickness", "insulin",
    "bmi", "pedigree", "age", "class",
]


def pip_download(spec, dest, sdist=False):
    cmd = [sys.executable, "-m", "pip", "download", "--no-deps", "-d", dest, spec]
    if sdist:
        cmd[4:4] = ["--no-binary", ":all:"]
    subprocess.run(cmd, check=True, stdout=subprocess.DEVNULL)


def keel_rows(text):
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("@"):
            yield [cell.strip() for cell in line.split(",")]


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        n = 0
        for r in rows:
            w.writerow(r)
            n += 1
    print(f"wrote {path} ({n} rows)")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        pip_download("keel-ds==0.2.5", tmp)
        pip_download("scikit-lego==0.9.10", tmp)
        pip_download("Orange3==3.10.0", tmp, sdist=True)

        keel = zipfile.ZipFile(glob.glob(os.path.join(tmp, "keel_ds-*.whl"))[0])
        mush = keel.read("keel_ds/data/balanced/raw/mushroom.dat").decode()
        write_csv(os.path.join(args.out, "mushrooms.csv"), MUSHROOM_COLUMNS, keel_rows(mush))
        pima = keel.read("keel_ds/data/balanced/raw/pima.dat").decode()
        rows = ([*r[:-1], "1" if r[-1] == "tested_positive" else "0"] for r in keel_rows(pima))
        write_csv(os.path.join(args.out, "pima.csv"), PIMA_COLUMNS, rows)

        lego = zipfile.ZipFile(glob.glob(os.path.join(tmp, "scikit_lego-*.whl"))[0])
        inner = zipfile.ZipFile(io.BytesIO(lego.read("sklego/data/abalone.zip")))
        text = inner.read(inner.namelist()[0]).decode().splitlines()
        reader = csv.reader(text)
        header = next(reader)
        write_csv(os.path.join(args.out, "abalone.csv"), header, reader)

        orange = tarfile.open(glob.glob(os.path.join(tmp, "Orange3-*.tar.gz"))[0])
        tab = orange.extractfile("Orange3-3.10.0/Orange/datasets/voting.tab").read().decode()
        lines = tab.splitlines()
        header = lines[0].split("\t")
        # Orange .tab: row 2 holds types, row 3 flags; empty cells are UCI's "?".
        rows = ([c if c else "?" for c in line.split("\t")] for line in lines[3:] if line.strip())
        write_csv(os.path.join(args.out, "voting.csv"), header, rows)


if __name__ == "__main__":
    main()
