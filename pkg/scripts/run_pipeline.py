#!/usr/bin/env python3
"""End-to-end demo: simulate a cohort, serve it, ingest over HTTP, analyze
remotely and cross-validate the temperament classifiers.

    python3 scripts/run_pipeline.py --workdir /tmp/pm-demo --n 34 --seed 42
"""

import argparse
import json
import socket
import threading
import time

import httpx
import uvicorn

from pmtelecare.cli import main as cli_main
from pmtelecare.service import create_app
from pmtelecare.store import SessionStore


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", required=True)
    ap.add_argument("--n", type=int, default=34)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--k", type=int, default=5)
    args = ap.parse_args()

    clinic = f"{args.workdir}/clinic"
    remote = f"{args.workdir}/remote"

    t0 = time.perf_counter()
    assert cli_main(["simulate", "--n", str(args.n), "--seed", str(args.seed), "--out", clinic]) == 0
    print(f"[{time.perf_counter() - t0:6.1f}s] simulated {args.n} sessions")

    port = free_port()
    server = uvicorn.Server(
        uvicorn.Config(create_app(SessionStore(remote)), host="127.0.0.1", port=port, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{port}"
    while True:
        try:
            httpx.get(f"{base}/api/v1/health", timeout=1.0)
            break
        except httpx.HTTPError:
            time.sleep(0.1)

    ids = sorted(SessionStore(clinic).session_ids())
    for sid in ids:
        assert cli_main(["ingest", f"{clinic}/{sid}", "--server", base]) == 0
    print(f"[{time.perf_counter() - t0:6.1f}s] ingested {len(ids)} sessions")

    for sid in ids:
        httpx.get(f"{base}/api/v1/sessions/{sid}/analysis", timeout=120.0).raise_for_status()
    print(f"[{time.perf_counter() - t0:6.1f}s] analyzed all sessions remotely")

    out = f"{args.workdir}/eval.json"
    assert cli_main(["eval", "--dataset", remote, "--k", str(args.k), "--seed", "7", "--out", out]) == 0
    reports = json.load(open(out))
    for axis in ("warm", "wet"):
        pooled = reports[axis]["pooled"]
        print(
            f"{axis:>5} axis: accuracy {pooled['accuracy']:.3f} "
            f"sensitivity {pooled['sensitivity']} specificity {pooled['specificity']}"
        )
    server.should_exit = True
    thread.join(timeout=10)
    print(f"[{time.perf_counter() - t0:6.1f}s] done; artifacts in {args.workdir}")


if __name__ == "__main__":
    main()
