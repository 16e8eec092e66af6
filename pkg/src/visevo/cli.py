"""Command line front end: `serve` runs the server, everything else is a
thin JSON-RPC client over HTTP POST.

Examples:
    visevo serve --port 8765 --store-dir ./stores
    visevo open --toolchain minivis
    visevo update --session SID main.mv util.mv
    visevo set --session SID a=0.5 tint=1,0,0
    visevo image --session SID --ref <rev>:0 --out result.png
"""

from __future__ import annotations

import argparse
import base64
import json
import os
import sys
from pathlib import Path

import httpx

DEFAULT_URL = "http://127.0.0.1:8765"


def rpc_call(url: str, method: str, params: dict) -> dict:
    """One POST /rpc round trip; exits with the server's message on error."""
    body = {"jsonrpc": "2.0", "id": 1, "method": method, "params": params}
    try:
        reply = httpx.post(url.rstrip("/") + "/rpc", json=body,
                           timeout=60.0).json()
    except httpx.HTTPError as exc:
        raise SystemExit(f"cannot reach {url}: {exc}")
    if "error" in reply:
        err = reply["error"]
        raise SystemExit(f"server error {err['code']}: {err['message']}")
    return reply["result"]


def parse_value(text: str) -> float | list[float]:
    """CLI parameter values: `0.5` is a float, `1,0,0` is a vec3."""
    parts = text.split(",")
    try:
        numbers = [float(p) for p in parts]
    except ValueError:
        raise SystemExit(f"not a number or vector: {text!r}")
    return numbers[0] if len(numbers) == 1 else numbers


def parse_assignments(pairs: list[str]) -> dict:
    values = {}
    for pair in pairs:
        name, sep, raw = pair.partition("=")
        if not sep or not name:
            raise SystemExit(f"expected name=value, got {pair!r}")
        values[name] = parse_value(raw)
    return values


def wire_name(path: str, root: Path) -> str:
    """Stable file name for the wire: path relative to the invocation root,
    falling back to the basename for files outside it."""
    resolved = Path(path).resolve()
    try:
        return resolved.relative_to(root.resolve()).as_posix()
    except ValueError:
        return resolved.name


def read_files(paths: list[str], root: Path) -> dict[str, str]:
    files = {}
    for path in paths:
        files[wire_name(path, root)] = Path(path).read_text()
    return files


def emit(result: object) -> None:
    json.dump(result, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="visevo",
        description="live visualization-programming sessions")
    parser.add_argument("--url", default=os.environ.get("VISEVO_URL",
                                                        DEFAULT_URL),
                        help="server base URL (env VISEVO_URL)")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the server")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument("--toolchain-dir")
    serve.add_argument("--store-dir")
    serve.add_argument("--config", help="JSON config file; flags override")
    serve.add_argument("--debounce-ms", type=float)
    serve.add_argument("--render-workers", type=int)
    serve.add_argument("--cache-size", type=int)

    sub.add_parser("health", help="server liveness")
    sub.add_parser("toolchains", help="list registered toolchains")

    opn = sub.add_parser("open", help="open a session")
    opn.add_argument("--toolchain", required=True)
    opn.add_argument("--width", type=int, default=256)
    opn.add_argument("--height", type=int, default=256)
    opn.add_argument("--store", help="named persistent store")

    upd = sub.add_parser("update", help="send source files")
    upd.add_argument("--session", required=True)
    upd.add_argument("files", nargs="+")

    co = sub.add_parser("checkout", help="switch to a revision")
    co.add_argument("--session", required=True)
    co.add_argument("revision")
    co.add_argument("--write", metavar="DIR",
                    help="also write the files under DIR")

    tree = sub.add_parser("tree", help="compressed tree + branch view")
    tree.add_argument("--session", required=True)

    diff = sub.add_parser("diff", help="line diffs between two revisions")
    diff.add_argument("--session", required=True)
    diff.add_argument("from_rev")
    diff.add_argument("to_rev")
    diff.add_argument("--direction", choices=["forward", "backward"],
                      default="forward")

    st = sub.add_parser("set", help="update parameters (name=value ...)")
    st.add_argument("--session", required=True)
    st.add_argument("values", nargs="+")

    img = sub.add_parser("image", help="fetch a rendered image as PNG")
    img.add_argument("--session", required=True)
    img.add_argument("--ref", required=True)
    img.add_argument("--out", required=True)

    exp = sub.add_parser("expand", help="expand or collapse a group")
    exp.add_argument("--session", required=True)
    exp.add_argument("group")
    exp.add_argument("--collapse", action="store_true")

    cls = sub.add_parser("close", help="close a session")
    cls.add_argument("--session", required=True)
    return parser


def build_server_config(args):
    from dataclasses import replace

    from .server.app import ServerConfig

    data = {}
    if args.config:
        data = json.loads(Path(args.config).read_text())
    config = ServerConfig.from_json(data)
    overrides = {
        "debounce_ms": args.debounce_ms,
        "render_workers": args.render_workers,
        "artifact_cache_size": args.cache_size,
    }
    applied = {k: v for k, v in overrides.items() if v is not None}
    scheduler = replace(config.scheduler, **applied) if applied \
        else config.scheduler
    return replace(
        config,
        host=args.host or config.host,
        port=args.port or config.port,
        toolchain_dir=args.toolchain_dir or config.toolchain_dir,
        store_dir=args.store_dir or config.store_dir,
        scheduler=scheduler,
    )


def run_serve(args) -> int:
    import uvicorn

    from .server.app import create_app

    config = build_server_config(args)
    uvicorn.run(create_app(config), host=config.host, port=config.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    url = args.url

    if args.command == "serve":
        return run_serve(args)
    if args.command == "health":
        emit(httpx.get(url.rstrip("/") + "/health", timeout=10.0).json())
        return 0
    if args.command == "toolchains":
        emit(httpx.get(url.rstrip("/") + "/toolchains", timeout=10.0).json())
        return 0
    if args.command == "open":
        params = {"toolchainId": args.toolchain,
                  "width": args.width, "height": args.height}
        if args.store:
            params["store"] = args.store
        emit(rpc_call(url, "session.open", params))
        return 0
    if args.command == "update":
        files = read_files(args.files, Path.cwd())
        emit(rpc_call(url, "source.update",
                      {"sessionId": args.session, "files": files}))
        return 0
    if args.command == "checkout":
        result = rpc_call(url, "state.checkout",
                          {"sessionId": args.session,
                           "revisionId": args.revision})
        if args.write:
            for name, text in result["files"].items():
                target = Path(args.write) / name
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_text(text)
        emit(result)
        return 0
    if args.command == "tree":
        emit(rpc_call(url, "view.tree", {"sessionId": args.session}))
        return 0
    if args.command == "diff":
        emit(rpc_call(url, "diff.get",
                      {"sessionId": args.session, "fromRev": args.from_rev,
                       "toRev": args.to_rev, "direction": args.direction}))
        return 0
    if args.command == "set":
        values = parse_assignments(args.values)
        emit(rpc_call(url, "params.set",
                      {"sessionId": args.session, "values": values}))
        return 0
    if args.command == "image":
        result = rpc_call(url, "image.get",
                          {"sessionId": args.session, "ref": args.ref})
        Path(args.out).write_bytes(base64.b64decode(result["png"]))
        emit({"ref": result["ref"], "out": args.out})
        return 0
    if args.command == "expand":
        emit(rpc_call(url, "view.expand",
                      {"sessionId": args.session, "groupId": args.group,
                       "expanded": not args.collapse}))
        return 0
    if args.command == "close":
        emit(rpc_call(url, "session.close", {"sessionId": args.session}))
        return 0
    raise SystemExit(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
