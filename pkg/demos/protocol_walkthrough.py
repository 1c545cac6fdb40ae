"""A file protocol, one mistake at a time.

Starts from a correct client of a File class, then breaks it in three ways
and shows what the checker says and what the interpreter does when the
broken program runs anyway.

The third mistake slips through: only the receiver and the parameter are
required to be finished when a method returns, so a linear local that is
dropped half-way through its protocol goes unnoticed.

    python demos/protocol_walkthrough.py
"""
from mool import check_source, explore, format_usage, load, load_program, run

FILE = """
class File {
    usage lin{open; Read} where Read = lin{eof; <lin{close; end} + lin{read; Read}>};
    int left;
    File() { this.left = 2 }
    void open() { unit }
    bool eof() { this.left == 0 }
    int read() { this.left = this.left - 1; 7 }
    void close() { unit }
}
"""

CLIENTS = {
    "correct loop": """
        File f = new File(); f.open(); int total = 0;
        while (!f.eof()) { total = total + f.read() };
        f.close()""",
    "read without asking eof first": """
        File f = new File(); f.open(); int x = f.read(); f.close()""",
    "forgets to close (not detected)": """
        File f = new File(); f.open();
        while (!f.eof()) { f.read() }""",
    "closes twice": """
        File f = new File(); f.open();
        while (!f.eof()) { f.read() };
        f.close(); f.close()""",
}


def program(body):
    return FILE + "class Main { usage lin{main; end}; void main() {" + body + "} }"


def main():
    print("File usage:", format_usage(load_program(FILE).classes[0].usage))
    for title, body in CLIENTS.items():
        src = program(body)
        print(f"\n== {title}")
        diags = check_source(src)
        if diags:
            for d in diags:
                print(f"  checker: error[{d.code}] ({d.rule}): {d.message}")
        else:
            print("  checker: ok")
        prog = load_program(src)
        outcome = run(prog, load(prog), seed=0)
        print(f"  run: {outcome.kind}" + (f" ({outcome.reason})" if outcome.reason else ""))
        g = explore(prog, load(prog))
        reasons = sorted(set(g.stuck.values()))
        print(f"  all interleavings: {len(g.nodes)} states, stuck reasons: {reasons or 'none'}")


if __name__ == "__main__":
    main()
