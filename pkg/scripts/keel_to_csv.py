"""Convert KEEL ``.dat`` files (as shipped in the ``imbalanced-databases`` wheel) to CSV.

Nominal features are label encoded (values sorted, coded 0, 1, ...), as the
loaders in ``imbalanced-databases`` do; the class column is written last as
``label``.

Usage: python scripts/keel_to_csv.py path/to/name.dat out.csv
"""
import csv
import sys


def convert(src, dst):
    attrs = []
    rows = []
    with open(src, encoding="utf-8") as fh:
        in_data = False
        for line in fh:
            line = line.strip()
            if not line or line.startswith("%"):
                continue
            if in_data:
                rows.append([c.strip() for c in line.split(",")])
            elif line.lower().startswith("@attribute"):
                body = line[len("@attribute"):].strip()
                name, rest = body.split(None, 1)
                if rest.startswith("{"):
                    values = [v.strip() for v in rest.strip("{} ").split(",")]
                    attrs.append((name, values))
                else:
                    attrs.append((name, None))
            elif line.lower().startswith("@data"):
                in_data = True
    header = []
    for name, values in attrs[:-1]:
        header.append(name)
    header.append("label")
    with open(dst, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            out = []
            for (name, values), cell in zip(attrs[:-1], row[:-1]):
                if values:
                    out.append(str(sorted(values).index(cell)))
                else:
                    out.append(cell)
            out.append(row[-1])
            w.writerow(out)


if __name__ == "__main__":
    convert(sys.argv[1], sys.argv[2])
