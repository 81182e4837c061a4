"""Two-step result return: count round, fetch round, client verification,
and rejection of tampered or malformed replies."""

from __future__ import annotations

import json

import pytest

from hequel import dsl, serial
from hequel.crypto import SecurityContext, keygen
from hequel.errors import (FetchTooLarge, ProtocolError, VerificationFailure)
from hequel.protocol import (ClientSession, ServerStore, result_fetch,
                             run_query, setup_upload, submit_query)
from hequel.relalg import encrypt_table
from hequel.schema import PlainTable, Schema

PC_SCHEMA = Schema((("model", 12), ("speed", 4), ("ram", 12),
                    ("hd", 10), ("price", 12)))
PC_ROWS = [
    (1001, 3, 1024, 250, 2114),
    (1002, 2, 512, 80, 478),
    (1003, 1, 512, 250, 600),
]


def make_session(slack=0, presence=(1, 1, 0)):
    ladder, keys = keygen(SecurityContext(depth_budget=8), seed=b"proto")
    server = ServerStore(ladder)
    client = ClientSession(keys, ladder.public_key(), slack=slack)
    plain = PlainTable(PC_SCHEMA, list(PC_ROWS))
    enc = encrypt_table(ladder.public_key(), plain,
                        presence=list(presence), name="pc")
    server.tables["pc"] = enc
    client.catalog["pc"] = PC_SCHEMA
    return server, client


def test_two_step_flow():
    server, client = make_session()
    plan = dsl.parse("select(speed>1, table(pc))")
    qid, n = submit_query(client, server, plan)
    # rows 1001 and 1002 pass speed>1; row 1003 is absent anyway
    assert n == 2
    shake = client.pending[qid]
    assert shake.capacity == 3
    out = result_fetch(client, server, qid)
    assert shake.n_prime == 2  # slack 0: exactly n rows cross the wire
    assert sorted(out.rows) == [PC_ROWS[0], PC_ROWS[1]]


def test_slack_widens_fetch():
    server, client = make_session(slack=5)
    plan = dsl.parse("select(speed>1, table(pc))")
    qid, n = submit_query(client, server, plan)
    out = result_fetch(client, server, qid)
    # n + slack caps at the public capacity
    assert client.pending[qid].n_prime == 3
    assert sorted(out.rows) == [PC_ROWS[0], PC_ROWS[1]]


def test_run_query_with_explicit_n_prime():
    server, client = make_session()
    out = run_query(client, server, dsl.parse("select(speed>1, table(pc))"),
                    n_prime=3)
    assert sorted(out.rows) == [PC_ROWS[0], PC_ROWS[1]]


def test_upload_round_trip():
    ladder, keys = keygen(SecurityContext(), seed=b"up")
    server = ServerStore(ladder)
    client = ClientSession(keys, ladder.public_key())
    plain = PlainTable(Schema((("a", 4),)), [(3,), (9,)])
    setup_upload(client, server, "t", plain)
    assert server.tables["t"].capacity == 2
    out = run_query(client, server, dsl.parse("table(t)"))
    assert sorted(out.rows) == [(3,), (9,)]


def test_fetch_too_large():
    server, client = make_session()
    qid, _ = submit_query(client, server,
                          dsl.parse("select(speed>1, table(pc))"))
    with pytest.raises(FetchTooLarge):
        server.handle(client.fetch_message(qid, n_prime=99))


def test_fetch_below_count_refused():
    server, client = make_session()
    qid, n = submit_query(client, server,
                          dsl.parse("select(speed>1, table(pc))"))
    assert n == 2
    with pytest.raises(ProtocolError):
        client.fetch_message(qid, n_prime=1)


def test_fetch_before_count_refused():
    server, client = make_session()
    qid, _ = client.query_message(dsl.parse("table(pc)"))
    with pytest.raises(ProtocolError):
        client.fetch_message(qid)


def tamper(reply: bytes, edit) -> bytes:
    msg = json.loads(reply.decode())
    edit(msg)
    return json.dumps(msg, separators=(",", ":")).encode()


def test_short_reply_fails_verification():
    server, client = make_session()
    qid, _ = submit_query(client, server,
                          dsl.parse("select(speed>1, table(pc))"))
    reply = server.handle(client.fetch_message(qid))

    def drop_last_row(msg):
        msg["payload"]["rows"].pop()

    with pytest.raises(VerificationFailure):
        client.read_rows_and_verify(tamper(reply, drop_last_row))


def test_reordered_reply_fails_prefix_check():
    server, client = make_session(slack=5)
    qid, _ = submit_query(client, server,
                          dsl.parse("select(speed>1, table(pc))"))
    reply = server.handle(client.fetch_message(qid))  # 3 rows: p,p,absent

    def move_absent_row_first(msg):
        rows = msg["payload"]["rows"]
        rows.insert(0, rows.pop())

    with pytest.raises(VerificationFailure) as err:
        client.read_rows_and_verify(tamper(reply, move_absent_row_first))
    assert "absent row precedes" in str(err.value)


def test_wrong_schema_fails_verification():
    server, client = make_session()
    qid, _ = submit_query(client, server,
                          dsl.parse("select(speed>1, table(pc))"))
    reply = server.handle(client.fetch_message(qid))

    def rename_column(msg):
        msg["payload"]["schema"][0][0] = "imposter"

    with pytest.raises(VerificationFailure):
        client.read_rows_and_verify(tamper(reply, rename_column))


def test_overstated_count_fails_verification():
    server, client = make_session()
    plan = dsl.parse("select(speed>1, table(pc))")
    qid, msg = client.query_message(plan)
    reply = server.handle(msg)
    ladder = server.ladder
    from hequel.circuits import const_word
    fake = const_word(ladder.state, 7, 3, 1)  # claims 7 > capacity 3

    def inflate(m):
        m["payload"]["count"] = serial.word_to_obj(ladder, fake)

    with pytest.raises(VerificationFailure):
        client.read_count(tamper(reply, inflate))


def test_server_rejects_malformed_traffic():
    server, client = make_session()
    with pytest.raises(ProtocolError):
        server.handle(serial.message_to_bytes("exfiltrate", "q9", {}))
    with pytest.raises(ProtocolError):
        server.handle(b"\xff\xfe garbage")
    # uploads must name the table
    ladder = server.ladder
    anon = encrypt_table(ladder.public_key(),
                         PlainTable(Schema((("a", 4),)), [(1,)]))
    with pytest.raises(ProtocolError):
        server.handle(serial.message_to_bytes(
            "upload_table", "q8", {"table": serial.table_to_obj(ladder, anon)}))
    # count replies for queries the client never sent are rejected
    qid, msg = client.query_message(dsl.parse("table(pc)"))
    reply = server.handle(msg)

    def misdirect(m):
        m["query_id"] = "q999"

    with pytest.raises(ProtocolError):
        client.read_count(tamper(reply, misdirect))


def test_compact_fetch_is_smaller_than_full_table():
    server, client = make_session()
    qid, n = submit_query(client, server,
                          dsl.parse("select(speed>1, table(pc))"))
    reply = server.handle(client.fetch_message(qid))
    full = serial.message_to_bytes("upload_table", "x", {
        "table": serial.table_to_obj(server.ladder, server.tables["pc"])})
    assert n == 2
    assert len(reply) < len(full)


def test_protocol_in_leveled_mode():
    ctx = SecurityContext(mode="leveled", depth_budget=8, epochs=24)
    ladder, keys = keygen(ctx, seed=b"lev")
    server = ServerStore(ladder)
    client = ClientSession(keys, ladder.public_key())
    plain = PlainTable(Schema((("a", 8),)), [(5,), (200,), (7,)])
    setup_upload(client, server, "t", plain)
    out = run_query(client, server, dsl.parse("select(a<100, table(t))"))
    assert sorted(out.rows) == [(5,), (7,)]
