"""Runs the bundled corpus and prints each verdict with a timing column."""
from mool.corpus import format_report, run_corpus

if __name__ == "__main__":
    print(format_report(run_corpus(), timings=True))
