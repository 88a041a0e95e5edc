import dataclasses

import pytest

from ibetls.handshake import ClientSession, ServerSession
from ibetls.kem import ciphertext_size
from ibetls.metrics import (
    CertCostModel,
    MetricsIncomplete,
    assert_invariants,
    compare_report,
    instrument,
    render_table,
)
from ibetls.simnet import WireCapture, establish


def seed_of(i: int) -> bytes:
    return i.to_bytes(32, "big")


def run_conn(mpk, server_identity, server_key, client_identity=None, client_key=None,
             mutual=False, seed=9000, **kwargs):
    client = ClientSession(mpk, server_identity, seed_of(seed),
                           own_identity=client_identity, own_key=client_key,
                           mutual=mutual, **kwargs)
    server = ServerSession(mpk, server_identity, server_key, seed_of(seed + 1),
                           mutual=mutual)
    return establish(client, server, WireCapture())


@pytest.fixture(scope="module")
def mutual_metrics(mpk, server_identity, server_key, client_identity, client_key):
    conn = run_conn(mpk, server_identity, server_key, client_identity, client_key,
                    mutual=True)
    assert conn.ok
    return instrument(conn)


def test_mutual_op_counts(mutual_metrics):
    assert mutual_metrics.ops == {"encaps": 3, "decaps": 3, "sign": 0, "verify": 0,
                                  "pubkey_derive": 2}


def test_unilateral_op_counts(mpk, server_identity, server_key):
    conn = run_conn(mpk, server_identity, server_key, seed=9100)
    metrics = instrument(conn)
    assert metrics.ops["encaps"] == 2 and metrics.ops["decaps"] == 2
    assert metrics.ops["sign"] == 0 and metrics.ops["verify"] == 0


def test_message_set_matches_comparison_table(mutual_metrics):
    assert mutual_metrics.message_names() == {
        "ClientHello", "ServerHello", "EncryptedExtensions",
        "Finished (Server)", "Finished (Client)",
    }


def test_auth_byte_formula(mutual_metrics, desk):
    ct = ciphertext_size(desk)
    assert mutual_metrics.ciphertext_bytes == ct
    assert mutual_metrics.auth_bytes == 2 * (4 + 2 + 2 + ct)
    assert mutual_metrics.kem_auth_wire_bytes == 3 * ct


def test_ciphertext_size_constant_across_handshakes(mpk, server_identity, server_key,
                                                    client_identity, client_key):
    sizes = set()
    for i in range(5):
        conn = run_conn(mpk, server_identity, server_key, client_identity, client_key,
                        mutual=True, seed=9200 + 2 * i)
        sizes.add(instrument(conn).ciphertext_bytes)
    assert len(sizes) == 1


def test_cert_model_totals():
    model = CertCostModel()
    assert model.total_range() == (11264, 21504)
    assert model.op_counts == {"encaps": 1, "decaps": 1, "sign": 2, "verify": 4}
    assert model.scheme_sizes_kb["Lattice-based"] == 11
    assert model.scheme_sizes_kb["Code-based"] == 190


def test_compare_report_contents(mutual_metrics):
    report = compare_report(mutual_metrics)
    cert = report["certBasedModel"]
    assert cert["totalAuthBytesRange"] == [11264, 21504]
    ibe = report["ibeTls"]
    assert ibe["kemCiphertextBytes"] == 3 * ibe["ciphertextBytes"]
    assert ibe["ops"]["sign"] == 0 and ibe["ops"]["verify"] == 0
    assert "5 KB" in report["note"]  # cited figure, never asserted against
    table = render_table(report)
    assert "Certificate chain(s)" in table and "Total authentication data" in table


def test_report_on_aborted_session_rejected(mpk, msk, server_identity):
    from ibetls.kem import IdentityString, extract

    wrong = extract(msk, mpk, IdentityString.parse("front-proxy.20250101"))
    conn = run_conn(mpk, server_identity, wrong, seed=9300)
    assert not conn.ok
    metrics = instrument(conn)
    assert metrics.state == "aborted"
    with pytest.raises(MetricsIncomplete):
        compare_report(metrics)


def test_invariants_pass_on_honest_run(mutual_metrics):
    results = dict(assert_invariants(mutual_metrics))
    assert all(results.values()), results


def test_invariants_catch_injected_certificate(mutual_metrics):
    doctored = dataclasses.replace(
        mutual_metrics,
        bytes_per_message={**mutual_metrics.bytes_per_message, "Certificate": 9000},
    )
    results = dict(assert_invariants(doctored))
    assert results["no-certificate-messages"] is False
    assert results["message-set"] is False


def test_invariants_allow_hrr(mpk, server_identity, server_key, client_identity,
                              client_key):
    conn = run_conn(mpk, server_identity, server_key, client_identity, client_key,
                    mutual=True, seed=9400, offer_identity=False)
    assert conn.ok
    metrics = instrument(conn)
    assert "HelloRetryRequest" in metrics.message_names()
    results = dict(assert_invariants(metrics))
    assert all(results.values()), results


def test_wire_bytes_accounted(mutual_metrics):
    assert mutual_metrics.wire_bytes > sum(mutual_metrics.bytes_per_message.values())
    assert mutual_metrics.auth_extension_count == 2
