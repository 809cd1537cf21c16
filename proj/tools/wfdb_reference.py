"""Prints the first 1000 digital samples of each record, read with the wfdb package.

usage: wfdb_reference.py DIR RECORD [RECORD ...]
"""
import json
import sys

import wfdb


def main(argv):
    directory, ids = argv[1], argv[2:]
    out = {}
    for rid in ids:
        rec = wfdb.rdrecord(f"{directory}/{rid}", physical=False, sampto=1000)
        out[rid] = [rec.d_signal[:, k].astype(int).tolist() for k in range(2)]
    json.dump(out, sys.stdout)


if __name__ == "__main__":
    main(sys.argv)
