import sys

from .cli import bench_main, harness_main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if argv[:1] == ["bench"]:
        sys.exit(bench_main(argv[1:]))
    if argv[:1] == ["harness"]:
        sys.exit(harness_main(argv[1:]))
    print("usage: python -m luc {bench|harness} [options]", file=sys.stderr)
    sys.exit(2)
