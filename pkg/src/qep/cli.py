"""Command-line client for the experiment service.

The CLI builds a request from a flat ``key=value`` config file plus
command-line flags (flags win) and posts it to the service: either a
remote server given with ``--server`` or the bundled app mounted
in-process, so no daemon is needed for local runs.  ``qep serve`` starts
the service under uvicorn for multi-client use.

Exit codes: 0 on success, 1 on a request/validation failure, 2 on
unexpected errors.  Diagnostics go to stderr as JSON.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from .experiments import ExperimentConfig, OUTPUT_DIR_ENV, parse_config_file

VERBS = {
    "sample-prior": "/sample-prior",
    "fit-map": "/fit-map",
    "run-mcmc": "/run-mcmc",
    "predict": "/predict",
    "deblur": "/deblur",
    "report": "/report",
}

_CONFIG_FLAGS = [f.name for f in ExperimentConfig.__dataclass_fields__.values()]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    for name in _CONFIG_FLAGS:
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name,
                            default=None, metavar="V")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qep",
        description="Q-exponential process experiments (time series and image "
                    "deblurring) with GP and Besov baselines.",
        epilog=f"Default output directory comes from ${OUTPUT_DIR_ENV} when set.")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        p = sub.add_parser(verb, help=f"POST {VERBS[verb]}")
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--server", help="service URL (default: run in-process)")
        _add_config_flags(p)
    serve = sub.add_parser("serve", help="run the HTTP service under uvicorn")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _request_payload(args: argparse.Namespace) -> dict:
    payload: dict = {}
    if args.config:
        payload.update(parse_config_file(args.config))
    for name in _CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            payload[name] = value
    return payload


async def _post_in_process(path: str, payload: dict) -> httpx.Response:
    from .service.app import app

    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(transport=transport, base_url="http://qep",
                                 timeout=None) as client:
        return await client.post(path, json=payload)


def _post(path: str, payload: dict, server: str | None) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=payload)
    return asyncio.run(_post_in_process(path, payload))


def _fail(diag: dict, code: int) -> int:
    print(json.dumps(diag, sort_keys=True), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0
    try:
        payload = _request_payload(args)
        # coerce everything to strings; the service-side config parser owns
        # the type conversions, identically for files and flags
        payload = {k: str(v) for k, v in payload.items()}
        response = _post(VERBS[args.verb], payload, args.server)
    except Exception as exc:  # unexpected failure (I/O, transport, bug)
        return _fail({"error": type(exc).__name__, "message": str(exc)}, 2)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        return _fail({"error": "request_failed", "status": response.status_code,
                      "detail": detail}, 1)
    print(json.dumps(response.json(), sort_keys=True, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
