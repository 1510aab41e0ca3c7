#!/usr/bin/env python3
"""Build a synthetic project (if needed) and serve its explanation API.

The moderator UI smoke flow points at this service. Prints `READY <url>` once
artifacts are loaded and the socket is bound.

Usage: python scripts/serve_synthetic_demo.py [--root DIR] [--port N] [--static DIR]
"""

import argparse
import sys
import tempfile
import threading
from pathlib import Path

from memeclf.app import demo
from memeclf.app.config import load_config
from memeclf.app.service import make_server

FAST = demo.DemoSettings(seed=13, dim=16, samples_per_cluster=60, epochs=4, batch_size=16)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default=None)
    parser.add_argument("--port", type=int, default=0)
    parser.add_argument("--static", default=None, help="UI asset directory to serve at /")
    parser.add_argument("--full-scale", action="store_true", help="default acceptance-scale data")
    args = parser.parse_args()

    root = Path(args.root) if args.root else Path(tempfile.mkdtemp(prefix="memeclf-serve-"))
    config_path = root / "config.toml"
    settings = demo.DemoSettings() if args.full_scale else FAST
    if not config_path.exists():
        demo.write_project(root, settings)
        demo.run_pipeline(config_path, evaluate=False)
        print(f"built synthetic project in {root}", flush=True)
    cfg = load_config(config_path)

    server = make_server(cfg, listen=f"127.0.0.1:{args.port}", static_dir=args.static)
    host, port = server.server_address[:2]
    print(f"READY http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


if __name__ == "__main__":
    main()
