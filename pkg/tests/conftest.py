import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from defiscan.features import FeatureMatrix, FeatureSchema


def make_matrix(X, y, names=None):
    X = np.asarray(X, dtype=float)
    names = names or [f"OP{i:03d}" for i in range(X.shape[1])]
    return FeatureMatrix(FeatureSchema(tuple(names)), X, np.asarray(y))


@pytest.fixture
def synthetic_corpus():
    """Imbalanced count matrix where column OP000 carries the class signal."""
    rng = np.random.default_rng(1234)
    n_v, n_l, d = 30, 300, 12
    X = rng.poisson(4.0, size=(n_v + n_l, d)).astype(float)
    y = np.r_[np.ones(n_v, int), np.zeros(n_l, int)]
    X[:n_v, 0] += rng.poisson(6.0, n_v)
    X[:, d - 1] = 0.0
    return make_matrix(X, y)


class FakeNode:
    """In-process JSON-RPC server answering eth_getCode."""

    def __init__(self, codes, fail_first=0, error_for=()):
        self.codes = codes
        self.requests = []
        self.fail_first = fail_first
        self.error_for = set(error_for)
        node = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                node.requests.append((self.headers["Content-Type"], body))
                if node.fail_first > 0:
                    node.fail_first -= 1
                    self.send_response(503)
                    self.end_headers()
                    return
                address = body["params"][0]
                if address in node.error_for:
                    payload = {"jsonrpc": "2.0", "id": body["id"],
                               "error": {"code": -32000, "message": "boom"}}
                else:
                    payload = {"jsonrpc": "2.0", "id": body["id"], "result": node.codes.get(address, "0x")}
                data = json.dumps(payload).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *a):
                pass

        self.server = HTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_port}/"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        ok, text = mod.RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {text}")
