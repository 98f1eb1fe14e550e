import socket
import threading
import time
from pathlib import Path

import pytest
import uvicorn

from legiboost_server.adapters import ServerConfig
from legiboost_server.app import create_app

FIXTURE_DIR = Path(__file__).resolve().parents[2] / "fixtures" / "protocol"


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="session")
def live_server():
    """A real uvicorn instance serving the reference model."""
    port = free_port()
    config = ServerConfig(model="reference", port=port)
    server = uvicorn.Server(
        uvicorn.Config(create_app(config), host="127.0.0.1", port=port, log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.02)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)
