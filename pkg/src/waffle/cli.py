"""`waffle` command line: dataset generation and evaluation workflows.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import attention, dom, loss, render, tokens
from .errors import WaffleError
from .mutate import build_group, group_to_json
from .metrics import (
    CwssimParams,
    TextBlock,
    clip_cosine,
    cw_ssim,
    html_match,
    llem,
    load_png,
    save_png,
)

DEFAULT_SEED = 0


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a fraction: {text!r}") from exc


def _ancestor_depth(text: str):
    if text.lower() in ("unbounded", "inf"):
        return attention.UNBOUNDED
    return int(text)


def _viewport(text: str) -> tuple[int, int]:
    w, _, h = text.partition("x")
    return (int(w), int(h))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waffle",
        description="DOM-structured attention masks, HTML mutation groups, "
        "loss oracles, and webpage similarity metrics",
    )
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mask", help="build and export a structural attention mask")
    p.add_argument("--html", required=True, type=Path)
    p.add_argument("--tokens", type=Path, help="JSONL byte spans; default: built-in tokenizer")
    p.add_argument("--fraction", type=_fraction, default=Fraction(1, 4))
    p.add_argument("--ancestor-depth", type=_ancestor_depth, default=1)
    p.add_argument("--heads", type=int, default=8)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--n-prompt", type=int, default=0)
    p.add_argument("--no-prompt-visible", action="store_true")
    p.add_argument("--stats", action="store_true", help="print density and category counts")
    p.add_argument("-o", "--output", required=True, type=Path)

    p = sub.add_parser("mutate", help="build one contrastive mutant group")
    p.add_argument("--html", required=True, type=Path)
    p.add_argument("-k", type=int, default=4)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--render", dest="render_url", help="WebDriver endpoint for filtering")
    p.add_argument("-o", "--output", required=True, type=Path)

    p = sub.add_parser("dataset", help="mutant groups (NDJSON) for a directory of pages")
    p.add_argument("--in", dest="input_dir", required=True, type=Path)
    p.add_argument("-k", type=int, default=4)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--render", dest="render_url")
    p.add_argument("--mask-dir", type=Path, help="also export a mask per input page")
    p.add_argument("-o", "--output", type=Path, help="NDJSON path; default stdout")

    p = sub.add_parser("render", help="render a page to PNG and text blocks")
    p.add_argument("--html", required=True, type=Path)
    p.add_argument("--viewport", type=_viewport, default=(1280, 720))
    p.add_argument("--render", dest="render_url")
    p.add_argument("-o", "--output", type=Path, help="screenshot PNG path")
    p.add_argument("--blocks", type=Path, help="text block JSON path")

    p = sub.add_parser("eval", help="similarity metrics")
    ev = p.add_subparsers(dest="metric", required=True)

    m = ev.add_parser("html-match")
    m.add_argument("--gt", type=Path)
    m.add_argument("--gen", type=Path)
    m.add_argument("--render", dest="render_url")
    m.add_argument("--viewport", type=_viewport, default=(1280, 720))
    m.add_argument("--batch", type=Path, help="CSV id,gt,gen")
    m.add_argument("-o", "--output", type=Path)

    m = ev.add_parser("cwssim")
    m.add_argument("--a", type=Path)
    m.add_argument("--b", type=Path)
    m.add_argument("--size", type=int, default=256)
    m.add_argument("--levels", type=int, default=4)
    m.add_argument("--orientations", type=int, default=6)
    m.add_argument("--window", type=int, default=7)
    m.add_argument("-K", "--stabilizer", type=float, default=0.0)
    m.add_argument("--batch", type=Path, help="CSV id,a,b")
    m.add_argument("-o", "--output", type=Path)

    m = ev.add_parser("llem")
    m.add_argument("--gt", type=Path)
    m.add_argument("--gen", type=Path)
    m.add_argument("--viewport", type=_viewport, default=(1280, 720))
    m.add_argument("--batch", type=Path, help="CSV id,gt,gen")
    m.add_argument("-o", "--output", type=Path)

    m = ev.add_parser("clip-cos")
    m.add_argument("--a", type=Path)
    m.add_argument("--b", type=Path)
    m.add_argument("--batch", type=Path, help="CSV id,a,b")
    m.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("loss", help="contrastive / LM loss reference values")
    p.add_argument("--batch", required=True, type=Path)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--log-variant", action="store_true")

    return parser


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------


def _cmd_mask(args) -> int:
    source = args.html.read_bytes()
    tree = dom.parse_html(source)
    if args.tokens:
        with open(args.tokens, encoding="utf-8") as fh:
            spans = tokens.load_token_spans(fh)
    else:
        spans = tokens.reference_tokenize(source)
    alignment = tokens.align(tree, spans, n_prompt=args.n_prompt)
    config = attention.MaskConfig(
        n_heads=args.heads,
        structural_fraction=args.fraction,
        ancestor_depth=args.ancestor_depth,
        prompt_visible=not args.no_prompt_visible,
        n_layers=args.layers,
    )
    mask = attention.build_mask(tree, alignment, config)
    attention.export_mask(mask, args.output)
    if args.stats:
        print(json.dumps(attention.mask_stats(mask)))
    return 0


def _renderer(args):
    return render.WebDriverClient(base_url=getattr(args, "render_url", None))


def _cmd_mutate(args) -> int:
    source = args.html.read_bytes()
    renderer = _renderer(args) if args.render_url else None
    try:
        group = build_group(source, k=args.k, seed=args.seed, renderer=renderer)
    finally:
        if renderer is not None:
            renderer.close()
    args.output.write_text(group_to_json(group) + "\n", encoding="utf-8")
    if group.warning:
        print(f"warning: {group.warning}", file=sys.stderr)
    return 0


def _cmd_dataset(args) -> int:
    pages = sorted(p for p in args.input_dir.iterdir() if p.suffix in (".html", ".htm"))
    if not pages:
        raise WaffleError(f"no .html files in {args.input_dir}")
    if args.mask_dir:
        args.mask_dir.mkdir(parents=True, exist_ok=True)

    local = threading.local()
    clients: list[render.WebDriverClient] = []
    clients_lock = threading.Lock()

    def thread_renderer():
        if not args.render_url:
            return None
        client = getattr(local, "client", None)
        if client is None:
            client = render.WebDriverClient(base_url=args.render_url).start()
            local.client = client
            with clients_lock:
                clients.append(client)
        return client

    def process(page: Path) -> str:
        source = page.read_bytes()
        group = build_group(
            source, k=args.k, seed=args.seed, renderer=thread_renderer()
        )
        if args.mask_dir:
            tree = dom.parse_html(source)
            alignment = tokens.align(tree, tokens.reference_tokenize(source))
            mask = attention.build_mask(tree, alignment, attention.MaskConfig())
            attention.export_mask(mask, args.mask_dir / (page.stem + ".mask"))
        return group_to_json(group)

    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        if args.jobs > 1:
            # map() yields in input order regardless of completion order
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                for line in pool.map(process, pages):
                    out.write(line + "\n")
        else:
            for page in pages:
                out.write(process(page) + "\n")
    finally:
        for client in clients:
            client.close()
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_render(args) -> int:
    client = render.WebDriverClient(
        base_url=args.render_url, viewport=args.viewport
    )
    with client:
        result = client.render(args.html.read_bytes(), viewport=args.viewport)
    if result.status == "failed":
        raise WaffleError(f"render failed: {result.reason}")
    if args.output:
        save_png(result.image, args.output)
    if args.blocks:
        payload = [
            {"text": b.text, "bbox": list(b.bbox), "color": list(b.color)}
            for b in result.blocks
        ]
        args.blocks.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(result.status)
    return 0


def _load_blocks(path: Path) -> list[TextBlock]:
    data = json.loads(path.read_text(encoding="utf-8"))
    return [
        TextBlock(
            text=item["text"],
            bbox=tuple(float(v) for v in item["bbox"]),
            color=tuple(int(v) for v in item["color"]),
        )
        for item in data
    ]


def _batch_rows(path: Path) -> list[tuple[str, str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [(row[0], row[1], row[2]) for row in csv.reader(fh) if row]


def _emit_batch(rows: list[tuple[str, str, float]], metric: str, output: Path | None) -> None:
    out = open(output, "w", newline="", encoding="utf-8") if output else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["id", "metric", "value"])
        for row_id, _, value in rows:
            writer.writerow([row_id, metric, value])
    finally:
        if out is not sys.stdout:
            out.close()


def _cmd_eval(args) -> int:
    try:
        return _run_eval(args)
    finally:
        renderer = getattr(args, "_renderer", None)
        if renderer is not None:
            renderer.close()


def _run_eval(args) -> int:
    metric = args.metric
    if metric == "cwssim":
        params = CwssimParams(
            size=(args.size, args.size),
            levels=args.levels,
            orientations=args.orientations,
            window=args.window,
            stabilizer=args.stabilizer,
        )
        compute = lambda a, b: cw_ssim(load_png(a), load_png(b), params)  # noqa: E731
    elif metric == "clip-cos":
        compute = lambda a, b: clip_cosine(  # noqa: E731
            json.loads(Path(a).read_text()), json.loads(Path(b).read_text())
        )
    elif metric == "llem":
        compute = lambda a, b: llem(  # noqa: E731
            _load_blocks(Path(a)), _load_blocks(Path(b)), viewport=args.viewport
        ).average
    else:  # html-match
        renderer = _renderer(args)
        args._renderer = renderer  # closed by _cmd_eval
        compute = lambda a, b: float(  # noqa: E731
            html_match(
                Path(a).read_bytes(), Path(b).read_bytes(), renderer, viewport=args.viewport
            )
        )

    if args.batch:
        rows = [
            (row_id, a, compute(a, b)) for row_id, a, b in _batch_rows(args.batch)
        ]
        _emit_batch(rows, metric, args.output)
        return 0

    first = args.gt if metric in ("html-match", "llem") else args.a
    second = args.gen if metric in ("html-match", "llem") else args.b
    if first is None or second is None:
        raise WaffleError(f"{metric}: provide both inputs or --batch")
    if metric == "llem":
        score = llem(_load_blocks(first), _load_blocks(second), viewport=args.viewport)
        print(json.dumps(score.as_dict()))
    else:
        print(compute(first, second))
    return 0


def _cmd_loss(args) -> int:
    obj = json.loads(args.batch.read_text(encoding="utf-8"))
    batch = loss.batch_from_obj(obj)
    if args.lam is not None:
        batch = loss.GroupBatch(samples=batch.samples, lam=args.lam)
    print(json.dumps(loss.loss_report(batch, log_variant=args.log_variant)))
    return 0


_COMMANDS = {
    "mask": _cmd_mask,
    "mutate": _cmd_mutate,
    "dataset": _cmd_dataset,
    "render": _cmd_render,
    "eval": _cmd_eval,
    "loss": _cmd_loss,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except WaffleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
