import json
import socket
import threading

import pytest

from ibetls.cli import main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def home(tmp_path):
    return tmp_path / "home"


def setup_domain(home, capsys, domain="control-plane"):
    code, out, _ = run_cli([
        "--home", str(home), "tpkg-setup", "--domain", domain,
        "--patterns", "kubelet:*,scheduler,tpkg-register",
        "--auto-approve-template", "kubelet:{subject}",
    ], capsys)
    assert code == 0, out
    return home / "domains" / domain


def test_setup_creates_domain_layout(home, capsys):
    directory = setup_domain(home, capsys)
    assert (directory / "mpk.bin").exists()
    assert (directory / "policy.json").exists()
    assert (directory / "registry.jsonl").exists()
    assert len(list((directory / "shares").glob("node-*.json"))) == 3


def test_setup_refuses_existing_domain(home, capsys):
    setup_domain(home, capsys)
    code, _, err = run_cli([
        "--home", str(home), "tpkg-setup", "--domain", "control-plane",
    ], capsys)
    assert code == 2


def test_request_approve_list_flow(home, capsys):
    setup_domain(home, capsys)
    code, out, _ = run_cli([
        "--home", str(home), "id-request", "--domain", "control-plane",
        "--identity", "scheduler.20250101", "--format", "json",
    ], capsys)
    assert code == 0
    name = json.loads(out)["name"]
    assert json.loads(out)["status"] == "Pending"

    code, out, _ = run_cli([
        "--home", str(home), "id-approve", name, "--domain", "control-plane",
    ], capsys)
    assert code == 0 and "Approved" in out

    code, out, _ = run_cli([
        "--home", str(home), "id-list", "--domain", "control-plane",
    ], capsys)
    assert code == 0 and name in out and "Approved" in out


def test_auto_approved_kubelet_request(home, capsys):
    setup_domain(home, capsys)
    code, out, _ = run_cli([
        "--home", str(home), "id-request", "--domain", "control-plane",
        "--identity", "kubelet:node-01.20250101", "--subject", "node-01",
        "--groups", "system:bootstrappers", "--format", "json",
    ], capsys)
    assert code == 0
    assert json.loads(out)["status"] == "Approved"


def test_policy_denial_exit_code(home, capsys):
    setup_domain(home, capsys)
    code, _, err = run_cli([
        "--home", str(home), "id-request", "--domain", "control-plane",
        "--identity", "unlisted.20250101",
    ], capsys)
    assert code == 3 and "denied" in err


def test_epoch_bump_and_registry_verify(home, capsys):
    directory = setup_domain(home, capsys)
    code, out, _ = run_cli([
        "--home", str(home), "epoch-bump", "--domain", "control-plane",
    ], capsys)
    assert code == 0 and "20250102" in out

    code, out, _ = run_cli([
        "--home", str(home), "registry-verify", "--domain", "control-plane",
    ], capsys)
    assert code == 0 and "intact" in out

    # corrupt one byte of the chain on disk -> exit code 5
    path = directory / "registry.jsonl"
    lines = path.read_text().splitlines()
    doc = json.loads(lines[0])
    doc["identity"] = doc["identity"] + "x"
    lines[0] = json.dumps(doc, sort_keys=True)
    path.write_text("\n".join(lines) + "\n")
    code, _, err = run_cli([
        "--home", str(home), "registry-verify", "--domain", "control-plane",
    ], capsys)
    assert code == 5 and "CORRUPT" in err


def test_revoke_then_request_denied(home, capsys):
    setup_domain(home, capsys)
    code, _, _ = run_cli([
        "--home", str(home), "id-revoke", "--domain", "control-plane",
        "--identity", "kubelet:node-09.20250101",
    ], capsys)
    assert code == 0
    code, _, err = run_cli([
        "--home", str(home), "id-request", "--domain", "control-plane",
        "--identity", "kubelet:node-09.20250101", "--subject", "node-09",
        "--groups", "system:bootstrappers",
    ], capsys)
    assert code == 3


def test_demo_k8s_deterministic(home, capsys, tmp_path):
    out_a = tmp_path / "a.jsonl"
    out_b = tmp_path / "b.jsonl"
    code, _, _ = run_cli(["demo-k8s", "--seed", "7", "--out", str(out_a)], capsys)
    assert code == 0
    code, _, _ = run_cli(["demo-k8s", "--seed", "7", "--out", str(out_b)], capsys)
    assert code == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_demo_5g_runs_green(capsys, tmp_path):
    out = tmp_path / "5g.jsonl"
    code, stdout, _ = run_cli(["demo-5g", "--seed", "3", "--out", str(out)], capsys)
    assert code == 0
    entries = [json.loads(line) for line in out.read_text().splitlines()]
    assert all(entry["pass"] for entry in entries)


def test_bench_report_cert_totals_in_range(capsys, tmp_path):
    out = tmp_path / "bench.json"
    code, stdout, _ = run_cli(["bench-report", "--format", "json", "--out", str(out)],
                              capsys)
    assert code == 0
    report = json.loads(out.read_text())
    low, high = report["certBasedModel"]["totalAuthBytesRange"]
    assert (low, high) == (11264, 21504)
    assert 11 * 1024 <= low and high <= 21 * 1024
    ibe = report["ibeTls"]
    assert ibe["kemCiphertextBytes"] == 3 * ibe["ciphertextBytes"]


def test_serve_refuses_without_share_quorum(home, capsys):
    directory = setup_domain(home, capsys)
    # leave fewer than t=2 readable share files
    (directory / "shares" / "node-1.json").write_text("{not json")
    (directory / "shares" / "node-2.json").unlink()
    code, _, err = run_cli([
        "--home", str(home), "tpkg-serve", "--domain", "control-plane",
        "--listen", "127.0.0.1:0", "--max-requests", "1",
    ], capsys)
    assert code == 2 and "refusing to serve" in err


def test_serve_and_remote_request(home, capsys):
    setup_domain(home, capsys)
    listener = socket.create_server(("127.0.0.1", 0))
    port = listener.getsockname()[1]
    listener.close()

    server_result = {}

    def serve():
        server_result["code"] = main([
            "--home", str(home), "tpkg-serve", "--domain", "control-plane",
            "--listen", f"127.0.0.1:{port}", "--max-requests", "1",
        ])

    thread = threading.Thread(target=serve, daemon=True)
    thread.start()
    import time

    deadline = time.time() + 30
    code = None
    while time.time() < deadline:
        try:
            code = main([
                "--home", str(home), "id-request", "--domain", "control-plane",
                "--identity", "kubelet:node-05.20250101", "--subject", "node-05",
                "--groups", "system:bootstrappers",
                "--remote", f"127.0.0.1:{port}", "--format", "json",
            ])
            break
        except ConnectionRefusedError:
            capsys.readouterr()  # drop partial output from the failed attempt
            time.sleep(0.3)
    thread.join(timeout=30)
    out = capsys.readouterr().out
    assert code == 0
    response = json.loads(out)
    assert response["status"] == 201
    assert response["body"]["status"] == "Approved"
    assert server_result.get("code") == 0
