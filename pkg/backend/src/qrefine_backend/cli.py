"""``qrefine-backend serve`` entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from .server import DEFAULT_MAX_PAYLOAD, ServerConfig, serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qrefine-backend")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("serve", help="run the reference backend")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--mode", choices=("classical", "generative"), default="classical")
    p.add_argument("--max-payload", type=int, default=DEFAULT_MAX_PAYLOAD)
    p.add_argument("--verbose", action="store_true")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    cfg = ServerConfig(
        host=args.host, port=args.port, mode=args.mode, max_payload=args.max_payload
    )
    try:
        serve(cfg)
    except OSError as exc:
        print(f"qrefine-backend: cannot start server: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
