#!/usr/bin/env python3
"""Independent disassembly of a DEX fixture with androguard.

  androguard_oracle.py <file.dex>                 print {method: [opcodes]}
  androguard_oracle.py <file.dex> <expected.json> exit 1 on any difference

Exits 77 (ctest skip) when androguard is not importable.
"""
import json
import sys

try:
    from loguru import logger
    logger.remove()
    from androguard.core.dex import DEX
except ImportError:
    print("androguard not available", file=sys.stderr)
    sys.exit(77)


def disassemble(path):
    with open(path, "rb") as f:
        dex = DEX(f.read())
    out = {}
    for m in dex.get_encoded_methods():
        if m.get_code() is None:
            continue
        ref = "%s->%s%s" % (m.get_class_name(), m.get_name(), m.get_descriptor())
        ops = []
        for ins in m.get_instructions():
            # Payload pseudo-instructions report their ident code unit.
            if ins.get_name() in ("packed-switch-payload", "sparse-switch-payload", "fill-array-data-payload"):
                continue
            ops.append(ins.get_op_value() & 0xFF)
        out[ref] = ops
    return out


def main():
    got = disassemble(sys.argv[1])
    if len(sys.argv) == 2:
        print(json.dumps(got, indent=2, sort_keys=True))
        return 0
    with open(sys.argv[2]) as f:
        want = json.load(f)
    if got != want:
        print("androguard:", json.dumps(got, sort_keys=True))
        print("expected:  ", json.dumps(want, sort_keys=True))
        return 1
    print("androguard disassembly matches %d methods" % len(got))
    return 0


if __name__ == "__main__":
    sys.exit(main())
