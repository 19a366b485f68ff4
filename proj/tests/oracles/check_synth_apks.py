#!/usr/bin/env python3
"""Cross-check synthetic APKs against androguard.

  check_synth_apks.py <dexdedup binary> <scratch dir>

Writes a small synthetic corpus with the CLI, then for every APK compares
the tool's opcode extraction and permission bits with androguard's view of
the same file. Exits 77 (ctest skip) when androguard is not importable.
"""
import csv
import json
import os
import shutil
import subprocess
import sys

try:
    from loguru import logger
    logger.remove()
    from androguard.core.apk import APK
    from androguard.core.dex import DEX
except ImportError:
    print("androguard not available", file=sys.stderr)
    sys.exit(77)

PAYLOADS = ("packed-switch-payload", "sparse-switch-payload", "fill-array-data-payload")
PREFIX = "android.permission."


def run(tool, *args):
    subprocess.run([tool, "--quiet", *args], check=True)


def androguard_view(path):
    apk = APK(path)
    methods = {}
    for raw in apk.get_all_dex():
        for m in DEX(raw).get_encoded_methods():
            if m.get_code() is None:
                continue
            ref = "%s->%s%s" % (m.get_class_name(), m.get_name(), m.get_descriptor())
            methods[ref] = [i.get_op_value() & 0xFF for i in m.get_instructions() if i.get_name() not in PAYLOADS]
    perms = {p[len(PREFIX):] for p in apk.get_permissions() if p.startswith(PREFIX)}
    return methods, perms


def main():
    tool, scratch = sys.argv[1], sys.argv[2]
    shutil.rmtree(scratch, ignore_errors=True)
    corpus = os.path.join(scratch, "corpus")
    run(tool, "--seed", "11", "--out", corpus, "synth", "--apps", "6", "--duplication", "2")

    apks = sorted(
        os.path.join(corpus, label, name)
        for label in ("malware", "goodware")
        if os.path.isdir(os.path.join(corpus, label))
        for name in os.listdir(os.path.join(corpus, label))
    )
    if not apks:
        print("synth wrote no APKs", file=sys.stderr)
        return 1

    extraction = os.path.join(scratch, "extraction.jsonl")
    features = os.path.join(scratch, "features.csv")
    run(tool, "--out", extraction, "extract", *apks)
    run(tool, "--out", features, "features", "--set", "permissions", *apks)

    with open(extraction) as f:
        ours = [json.loads(line) for line in f if line.strip()]
    with open(features) as f:
        rows = list(csv.reader(f))
    header, rows = rows[0], rows[1:]

    failures = 0
    for path, extracted, row in zip(apks, ours, rows):
        methods, perms = androguard_view(path)
        got = {m["id"]: m["opcodes"] for m in extracted["methods"]}
        if got != methods:
            print("%s: opcode sequences differ from androguard" % path)
            failures += 1
        bits = {name for name, bit in zip(header[1:-1], row[1:-1]) if bit == "1"}
        catalog = set(header[1:-1])
        if bits != perms & catalog:
            print("%s: permissions %s, androguard %s" % (path, sorted(bits), sorted(perms & catalog)))
            failures += 1
    print("%d APKs checked, %d mismatches" % (len(apks), failures))
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
