#!/usr/bin/env python3
"""Download the tabular datasets named by data/descriptors/*.json.

The library never touches the network; this script is the only place that
does. Files that already exist are left alone unless --force is given. When a
descriptor pins a sha256, a mismatching download is rejected.

    python3 tools/fetch_datasets.py [--data-dir data] [--force] [id ...]
"""

import argparse
import hashlib
import json
import sys
import urllib.request
from pathlib import Path


def sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def fetch(desc, data_dir, force):
    target = data_dir / desc["file"]
    if target.exists() and not force:
        return "present", target
    with urllib.request.urlopen(desc["source"], timeout=60) as resp:
        payload = resp.read()
    expected = desc.get("sha256")
    digest = hashlib.sha256(payload).hexdigest()
    if expected and digest != expected:
        raise RuntimeError(f"{desc['id']}: sha256 {digest} does not match descriptor {expected}")
    target.write_bytes(payload)
    return "downloaded", target


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--data-dir", type=Path, default=Path(__file__).resolve().parents[1] / "data")
    parser.add_argument("--force", action="store_true", help="download even if the file exists")
    parser.add_argument("ids", nargs="*", help="dataset ids (default: all descriptors)")
    args = parser.parse_args()

    descriptors = sorted((args.data_dir / "descriptors").glob("*.json"))
    failed = False
    for path in descriptors:
        desc = json.loads(path.read_text())
        if args.ids and desc["id"] not in args.ids:
            continue
        try:
            status, target = fetch(desc, args.data_dir, args.force)
            print(f"{desc['id']:15s} {status:10s} {target.name:20s} sha256 {sha256(target)}")
        except Exception as exc:  # network errors, checksum mismatches
            failed = True
            print(f"{desc['id']:15s} failed     {desc['source']}: {exc}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
