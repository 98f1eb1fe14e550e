"""Command line entry point: resolve the model, then bind and serve.

Model load failure exits non-zero before the port is bound.
"""

from __future__ import annotations

import argparse
import sys

from .adapters import ServerConfig, ServerStartupError, resolve_adapter


def parse_args(argv=None) -> ServerConfig:
    parser = argparse.ArgumentParser(
        prog="legiboost-server",
        description="Reference server for the generative editing protocol.",
    )
    parser.add_argument("--model", default="reference",
                        help="model identity: 'reference' or 'diffusers:<repo>'")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--half", action="store_true", help="load weights in fp16")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8765)
    args = parser.parse_args(argv)
    return ServerConfig(
        model=args.model, device=args.device, half_precision=args.half,
        host=args.host, port=args.port,
    )


def main(argv=None) -> None:
    config = parse_args(argv)
    try:
        resolve_adapter(config)
    except ServerStartupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)

    import uvicorn

    from .app import create_app

    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
