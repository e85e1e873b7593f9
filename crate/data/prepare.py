#!/usr/bin/env python3
"""Convert public copies of the benchmark data sets into the CSV layouts
read by `mfm sample`.

    python3 data/prepare.py galaxy  SOURCE [-o data/galaxy.csv]
    python3 data/prepare.py thyroid SOURCE [-o data/thyroid.csv]
    python3 data/prepare.py fear    SOURCE [-o data/fear.csv]

SOURCE is a local path or an http(s) URL.
"""

import argparse
import csv
import io
import sys
import urllib.request

THYROID_COLUMNS = ["RT3U", "T4", "T3", "TSH", "DTSH"]
FEAR_LEVELS = [4, 3, 3]


def fetch(source):
    if source.startswith(("http://", "https://")):
        with urllib.request.urlopen(source) as r:
            return r.read().decode("utf-8")
    with open(source, encoding="utf-8") as f:
        return f.read()


def is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def galaxy(text):
    """One velocity per line, or R's MASS::galaxies export ("","x")."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    values = []
    for r in rows:
        cells = [c.strip() for c in r if c.strip()]
        if not cells or not is_number(cells[-1]):
            continue
        values.append(float(cells[-1]))
    if len(values) != 82:
        sys.exit(f"expected 82 velocities, found {len(values)}")
    scale = 1000.0 if max(values) > 1000 else 1.0
    return ["velocity"], [[f"{v / scale:g}"] for v in values]


def thyroid(text):
    """mclust's `thyroid` export (Diagnosis plus five tests) or a KEEL
    `new-thyroid*.dat` file. KEEL copies only carry a binary label, so no
    diagnosis column is written for them."""
    lines = [l for l in text.splitlines() if l.strip() and not l.startswith("@")]
    first = [c.strip() for c in lines[0].split(",")]
    if all(is_number(c) for c in first[:5]):
        rows = [[c.strip() for c in l.split(",")][:5] for l in lines]
        header = THYROID_COLUMNS
    else:
        table = [r for r in csv.reader(io.StringIO("\n".join(lines))) if r]
        head = [h.strip().strip('"') for h in table[0]]
        try:
            idx = [head.index(c) for c in THYROID_COLUMNS]
            diag = head.index("Diagnosis")
        except ValueError:
            sys.exit(f"unrecognized header {head}")
        rows = [[r[i].strip() for i in idx] + [r[diag].strip().strip('"')] for r in table[1:]]
        header = THYROID_COLUMNS + ["Diagnosis"]
    if len(rows) != 215:
        sys.exit(f"expected 215 patients, found {len(rows)}")
    return header, rows


def fear(text):
    """Rows of motor, cry and fear codes, optionally followed by a count
    (the contingency-table form). A non-numeric first row is skipped."""
    out = []
    for r in csv.reader(io.StringIO(text)):
        cells = [c.strip() for c in r if c.strip()]
        if not cells or not all(c.isdigit() for c in cells):
            continue
        codes, count = cells[:3], int(cells[3]) if len(cells) > 3 else 1
        for code, levels in zip(codes, FEAR_LEVELS):
            if not 1 <= int(code) <= levels:
                sys.exit(f"code {code} outside 1..{levels}")
        out.extend([codes] * count)
    if len(out) != 93:
        sys.exit(f"expected 93 children, found {len(out)}")
    return [str(l) for l in FEAR_LEVELS], out


def main():
    parsers = {"galaxy": galaxy, "thyroid": thyroid, "fear": fear}
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("dataset", choices=sorted(parsers))
    ap.add_argument("source")
    ap.add_argument("-o", "--output")
    args = ap.parse_args()
    header, rows = parsers[args.dataset](fetch(args.source))
    out = args.output or f"data/{args.dataset}.csv"
    with open(out, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
