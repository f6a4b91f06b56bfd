"""Command-line driver: one subcommand per pipeline stage.

Every stage reads its upstream artifact, checks the upstream metadata
sidecar, and writes its own artifact plus sidecar plus the effective run
configuration (``<output>.config.toml``).

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal check failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

from . import formats, oracle
from .cooccur import CooccurrenceMatrix, SegmentWeighting, WindowConfig, count
from .corpus import Vocabulary, build_vocabulary, file_digest, read_lines, segments
from .errors import DataFormatError, InvalidInputError, MetadataMismatchError
from .evaluation import evaluate, load_analogy_dir, nearest_neighbors
from .project import EmbeddingMatrix, ProjectionSpec, build_projection, embed
from .weighting import AssociationMatrix, to_ppmi

logger = logging.getLogger("thermoembed")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CHECK = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    corpus: str | None = None
    vocab: str | None = None
    matrix: str | None = None
    ppmi: str | None = None
    vectors: str | None = None
    analogies: str | None = None
    report: str | None = None
    potentials: str | None = None
    min_count: int = 1
    window: int = 2
    window_weighting: str = "uniform"
    symmetric: bool = True
    context_size: int | None = None
    workers: int = 1
    block_tokens: int = 250_000
    beta: float = 1.0
    energy: float = 1.0
    alpha: float = 0.75
    shift: float = 1.0
    dim: int = 300
    seed: int = 0
    density: float | None = None
    normalize: bool = True

    def to_toml(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, bool):
                s = "true" if v else "false"
            elif isinstance(v, str):
                s = '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
            else:
                s = repr(v)
            lines.append(f"{f.name} = {s}")
        return "\n".join(lines) + "\n"

    def write_next_to(self, output: str | Path) -> None:
        Path(str(output) + ".config.toml").write_text(self.to_toml(), encoding="utf-8")


_FIELD_TYPES = {
    "min_count": int, "window": int, "context_size": int, "workers": int, "block_tokens": int,
    "dim": int, "seed": int, "beta": float, "energy": float, "alpha": float, "shift": float,
    "density": float, "symmetric": bool, "normalize": bool,
}


def _convert(key: str, raw: str):
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        raw = raw[1:-1].replace('\\"', '"').replace("\\\\", "\\")
    typ = _FIELD_TYPES.get(key, str)
    if typ is bool:
        if raw.lower() not in ("true", "false"):
            raise ValueError(f"expected true/false, got {raw!r}")
        return raw.lower() == "true"
    return typ(raw)


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` comments and ``[section]`` headers are ignored."""
    path = Path(path)
    known = {f.name for f in fields(RunConfig)}
    out = {}
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read config file ({exc.strerror})") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith(("#", "[")):
            continue
        if "=" not in line:
            raise DataFormatError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if not val.startswith(('"', "'")):
            val = val.split("#", 1)[0].strip()
        key = key.replace("-", "_")
        if key not in known:
            raise DataFormatError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            out[key] = _convert(key, val)
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return out


# --------------------------------------------------------------------------
# stages
# --------------------------------------------------------------------------


def _need(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _check_vocab(cfg: RunConfig, corpus_digest: str) -> Vocabulary:
    meta = formats.read_meta(cfg.vocab)
    if meta.get("kind") != "vocabulary":
        raise MetadataMismatchError(f"{cfg.vocab}: sidecar does not describe a vocabulary")
    if meta.get("corpus_digest") != corpus_digest:
        raise MetadataMismatchError(f"{cfg.vocab}: vocabulary was built from a different corpus than {cfg.corpus}")
    vocab = Vocabulary.load(cfg.vocab, meta.get("min_count", 1))
    if meta.get("vocab_digest") != vocab.digest():
        raise MetadataMismatchError(f"{cfg.vocab}: contents do not match the digest in its sidecar")
    return vocab


def cmd_vocab(cfg: RunConfig) -> int:
    _need(cfg, "corpus", "vocab")
    vocab = build_vocabulary(read_lines(cfg.corpus), cfg.min_count)
    vocab.save(cfg.vocab)
    formats.write_meta(cfg.vocab, {
        "kind": "vocabulary",
        "corpus_digest": file_digest(cfg.corpus),
        "min_count": cfg.min_count,
        "size": len(vocab),
        "vocab_digest": vocab.digest(),
    })
    cfg.write_next_to(cfg.vocab)
    print(f"vocabulary: {len(vocab)} tokens -> {cfg.vocab}")
    return EXIT_OK


def _load_potentials(path: str, vocab: Vocabulary) -> dict[int, float]:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"{path}: cannot read potential table ({exc.strerror})") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        try:
            tok, mu = parts[0], float(parts[1])
        except (IndexError, ValueError):
            raise DataFormatError(f"{path}:{lineno}: expected 'token<TAB>potential'") from None
        if tok in vocab:
            out[vocab.id(tok)] = mu
        else:
            logger.warning("%s:%d: token %r not in vocabulary, ignored", path, lineno, tok)
    return out


def cmd_count(cfg: RunConfig) -> int:
    _need(cfg, "corpus", "vocab", "matrix")
    digest = file_digest(cfg.corpus)
    vocab = _check_vocab(cfg, digest)
    wc = WindowConfig(cfg.window, cfg.window_weighting, cfg.symmetric)
    pots = _load_potentials(cfg.potentials, vocab) if cfg.potentials else {}
    sw = SegmentWeighting(cfg.beta, pots, cfg.energy)
    m = count(
        segments(read_lines(cfg.corpus), vocab), vocab, wc, sw,
        context_size=cfg.context_size, workers=cfg.workers, block_tokens=cfg.block_tokens,
        corpus_digest=digest,
    )
    m.save(cfg.matrix)
    cfg.write_next_to(cfg.matrix)
    print(f"cooccurrence: {m.nnz} entries, total mass {m.total_mass:.6g} -> {cfg.matrix}")
    return EXIT_OK


def cmd_ppmi(cfg: RunConfig) -> int:
    _need(cfg, "matrix", "ppmi")
    m = CooccurrenceMatrix.load(cfg.matrix)
    a = to_ppmi(m, cfg.shift, cfg.alpha)
    a.save(cfg.ppmi)
    cfg.write_next_to(cfg.ppmi)
    print(f"ppmi: {a.nnz} positive entries -> {cfg.ppmi}")
    return EXIT_OK


def cmd_embed(cfg: RunConfig) -> int:
    _need(cfg, "ppmi", "vocab", "vectors")
    a = AssociationMatrix.load(cfg.ppmi)
    vocab = Vocabulary.load(cfg.vocab)
    if a.meta.get("source", {}).get("vocab_digest") != vocab.digest():
        raise MetadataMismatchError(f"{cfg.ppmi} was not counted with vocabulary {cfg.vocab}")
    spec = ProjectionSpec(a.shape[1], cfg.dim, cfg.seed, cfg.density)
    e = embed(a, build_projection(spec), vocab.tokens, cfg.normalize)
    e.save(cfg.vectors)
    formats.write_meta(cfg.vectors, {
        "kind": "embeddings",
        "normalized": e.normalized,
        "projection": spec.to_meta(),
        "ppmi": {k: v for k, v in a.meta.items() if k != "kind"},
    })
    cfg.write_next_to(cfg.vectors)
    print(f"embeddings: {len(e)} x {e.dim} -> {cfg.vectors}")
    return EXIT_OK


def _load_vectors(path: str) -> EmbeddingMatrix:
    meta = formats.read_meta(path)
    if meta.get("kind") != "embeddings":
        raise MetadataMismatchError(f"{path}: sidecar does not describe embeddings")
    return EmbeddingMatrix.load(path, bool(meta.get("normalized")))


def cmd_eval(cfg: RunConfig) -> int:
    _need(cfg, "vectors", "analogies")
    e = _load_vectors(cfg.vectors)
    report = evaluate(e, load_analogy_dir(cfg.analogies))
    tsv = report.to_tsv()
    if cfg.report:
        Path(cfg.report).write_text(tsv, encoding="utf-8")
        Path(cfg.report + ".json").write_text(report.to_json(), encoding="utf-8")
        cfg.write_next_to(cfg.report)
    sys.stdout.write(tsv)
    macro = report.macro_accuracy
    print(f"macro accuracy: {'NA' if macro is None else f'{macro:.4f}'}")
    return EXIT_OK


def cmd_neighbors(cfg: RunConfig, words: Sequence[str], n: int) -> int:
    _need(cfg, "vectors")
    e = _load_vectors(cfg.vectors)
    status = EXIT_OK
    for w in words:
        try:
            nn = nearest_neighbors(e, w.lower(), n)
        except KeyError:
            print(f"{w}\t<not in vocabulary>", file=sys.stderr)
            status = EXIT_DATA
            continue
        except ValueError as exc:
            print(f"{w}\t<{exc}>", file=sys.stderr)
            status = EXIT_DATA
            continue
        print(w + "\t" + "\t".join(f"{t}:{s:.4f}" for t, s in nn))
    return status


def cmd_oracle(spec_files: Sequence[str] | None, n_random: int) -> int:
    results = oracle.run_suite(spec_files or None, n_random=n_random)
    for line in oracle.format_results(results):
        print(line)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_CHECK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


S = argparse.SUPPRESS


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thermoembed", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("vocab", help="build a vocabulary TSV from a corpus")
    _add_common(p)
    p.add_argument("--corpus", default=S)
    p.add_argument("--vocab", default=S, help="output TSV")
    p.add_argument("--min-count", type=int, default=S)

    p = sub.add_parser("count", help="count windowed cooccurrences")
    _add_common(p)
    p.add_argument("--corpus", default=S)
    p.add_argument("--vocab", default=S)
    p.add_argument("--matrix", default=S, help="output; .bin for binary, else text triplets")
    p.add_argument("--window", type=int, default=S)
    p.add_argument("--window-weighting", choices=["uniform", "harmonic"], default=S)
    p.add_argument("--asymmetric", dest="symmetric", action="store_false", default=S)
    p.add_argument("--context-size", type=int, default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--block-tokens", type=int, default=S)
    p.add_argument("--beta", type=float, default=S)
    p.add_argument("--energy", type=float, default=S, help="constant segment energy")
    p.add_argument("--potentials", default=S, help="token<TAB>potential table")

    p = sub.add_parser("ppmi", help="shifted positive PMI weighting")
    _add_common(p)
    p.add_argument("--matrix", default=S)
    p.add_argument("--ppmi", default=S, help="output matrix")
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--shift", type=float, default=S)

    p = sub.add_parser("embed", help="random projection to dense vectors")
    _add_common(p)
    p.add_argument("--ppmi", default=S)
    p.add_argument("--vocab", default=S)
    p.add_argument("--vectors", default=S, help="output; .bin for binary, else word2vec text")
    p.add_argument("--dim", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--density", type=float, default=S)
    p.add_argument("--no-normalize", dest="normalize", action="store_false", default=S)

    p = sub.add_parser("eval", help="3CosAdd analogy evaluation")
    _add_common(p)
    p.add_argument("--vectors", default=S)
    p.add_argument("--analogies", default=S, help="directory of BATS-style category files")
    p.add_argument("--report", default=S, help="output TSV (aggregate JSON goes to <report>.json)")

    p = sub.add_parser("neighbors", help="nearest neighbours by cosine")
    _add_common(p)
    p.add_argument("--vectors", default=S)
    p.add_argument("words", nargs="+")
    p.add_argument("-n", type=int, default=10)

    p = sub.add_parser("oracle", help="run the exact-ensemble identity checks")
    _add_common(p)
    p.add_argument("spec_files", nargs="*", help="ensemble/reservoir files (default: shipped set)")
    p.add_argument("--n-random", type=int, default=100)
    return parser


def _resolve(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if getattr(args, "config", None) else {}
    known = {f.name for f in fields(RunConfig)}
    values.update({k: v for k, v in vars(args).items() if k in known})
    return RunConfig(**values)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        cfg = _resolve(args)
        if args.command == "vocab":
            return cmd_vocab(cfg)
        if args.command == "count":
            return cmd_count(cfg)
        if args.command == "ppmi":
            return cmd_ppmi(cfg)
        if args.command == "embed":
            return cmd_embed(cfg)
        if args.command == "eval":
            return cmd_eval(cfg)
        if args.command == "neighbors":
            return cmd_neighbors(cfg, args.words, args.n)
        if args.command == "oracle":
            return cmd_oracle(args.spec_files, args.n_random)
    except UsageError as exc:
        print(f"thermoembed: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, MetadataMismatchError, InvalidInputError, KeyError) as exc:
        print(f"thermoembed: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        logger.exception("internal failure")
        return EXIT_CHECK
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
