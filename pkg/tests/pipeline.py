"""Drive the full CLI pipeline into a directory; shared by CLI and acceptance tests."""

from pathlib import Path

from thermoembed.cli import main

ARTIFACTS = ("vocab.tsv", "counts.bin", "ppmi.bin", "vectors.txt", "report.tsv", "report.tsv.json")


def run_pipeline(corpus, analogies, out: Path, dim=16, extra_count=(), min_count=1):
    out.mkdir(parents=True, exist_ok=True)
    p = {name: str(out / name) for name in ARTIFACTS}
    steps = [
        ["vocab", "--corpus", str(corpus), "--vocab", p["vocab.tsv"], "--min-count", str(min_count)],
        ["count", "--corpus", str(corpus), "--vocab", p["vocab.tsv"], "--matrix", p["counts.bin"], *extra_count],
        ["ppmi", "--matrix", p["counts.bin"], "--ppmi", p["ppmi.bin"]],
        ["embed", "--ppmi", p["ppmi.bin"], "--vocab", p["vocab.tsv"], "--vectors", p["vectors.txt"],
         "--dim", str(dim), "--seed", "7"],
        ["eval", "--vectors", p["vectors.txt"], "--analogies", str(analogies), "--report", p["report.tsv"]],
    ]
    for argv in steps:
        code = main(argv)
        if code != 0:
            raise AssertionError(f"{argv[0]} exited {code}")
    return {name: Path(path) for name, path in p.items()}
