"""Why spawning a thread that touches a linear object is rejected.

The parent hands the file to a child thread and keeps using it. The
protocol allows a single read, so whichever thread reads second finds the
file in the wrong state. Each seeded run gets stuck, and exploring every
interleaving shows there is no schedule that escapes.

    python demos/interleavings.py [out.dot]
"""
import sys

from mool import check_source, explore, load, load_program, run, to_dot

SOURCE = """
class File {
    usage lin{open; lin{read; lin{close; end}}};
    File() { unit }
    void open() { unit }
    int read() { 1 }
    void close() { unit }
}
class Main {
    usage lin{main; end};
    void main() {
        File f = new File(); f.open();
        spawn { f.read() };
        f.read(); f.close()
    }
}
"""


def main():
    for d in check_source(SOURCE):
        print(f"checker: error[{d.code}] ({d.rule}): {d.message}")
    prog = load_program(SOURCE)
    for seed in range(4):
        o = run(prog, load(prog), seed=seed)
        print(f"seed {seed}: {o.kind} after {o.steps} steps" + (f" ({o.reason})" if o.reason else ""))
    g = explore(prog, load(prog))
    print(f"explored {len(g.nodes)} states and {len(g.edges)} transitions")
    for node, reason in sorted(g.stuck.items()):
        print(f"  stuck state n{node}: {reason}")
    if len(sys.argv) > 1:
        with open(sys.argv[1], "w") as fh:
            fh.write(to_dot(g))
        print(f"graph written to {sys.argv[1]}")


if __name__ == "__main__":
    main()
