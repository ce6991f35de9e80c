import time

from django.test import SimpleTestCase
from hypothesis import given, settings as hsettings, strategies as st

from gateway.annotation import RESULT_TIME, SensorRegistration
from gateway.egress import Webhook
from knowledge.ntriples import serialize_triples, triple_sort_key
from knowledge.query import parse_pattern
from knowledge.store import Inferred
from knowledge.terms import M3, Iri
from services.exceptions import ReplayAborted
from services.replay import data_lines, replay_log

from .support import recording_runtime

RULEPACKS = ("fever.rules", "health_states.rules", "blood_pressure.rules", "fire.rules")
INDICATES = Iri(M3 + "indicates")
FEVER = Iri(M3 + "Fever")

log_lines = st.one_of(
    st.builds("thermo1,temperature,{},cel,{}".format, st.integers(35, 42), st.integers(0, 10**6)),
    st.builds("bp1,systolic,{},mmhg,{}".format, st.integers(100, 170), st.integers(0, 10**6)),
    st.builds("station1,temperature,{},cel,{}".format, st.integers(20, 80), st.integers(0, 10**6)),
)


def export(runtime):
    return serialize_triples(sorted(runtime.store.triples(), key=triple_sort_key))


class ReplayTests(SimpleTestCase):
    def setUp(self):
        self.runtime, self.sender = recording_runtime(*RULEPACKS)

    def tearDown(self):
        self.runtime.close()

    def test_data_lines_skip_comments(self):
        text = "# header\n\nthermo1,temperature,39,cel,1\n  # indented comment\nbp1,systolic,120,mmhg,2\n"
        self.assertEqual([n for n, _ in data_lines(text)], [3, 5])

    def test_summary_matches_receipts(self):
        summary = replay_log(self.runtime, "thermo1,temperature,39.0,cel,10\nthermo1,temperature,37,cel,20\n")
        self.assertEqual(summary.as_dict(), {
            "readings": 2,
            "triples": 12,
            "derived": 2,
            "per_rule": {"fever": 1, "unwell": 1},
        })
        self.assertEqual((summary.first_timestamp, summary.last_timestamp), (10, 20))

    def test_missing_timestamp_uses_previous_line(self):
        replay_log(self.runtime, "thermo1,temperature,37,cel\nthermo1,temperature,37,cel,500\nthermo1,temperature,37,cel\n")
        times = sorted(
            int(t.object.lexical)
            for t in self.runtime.store.triples()
            if t.predicate == RESULT_TIME
        )
        self.assertEqual(times, [0, 500, 500])

    def test_sequences_restart_each_run(self):
        replay_log(self.runtime, "thermo1,temperature,37,cel,1\n")
        replay_log(self.runtime, "thermo1,temperature,39,cel,2\n")
        fevers = self.runtime.store.match(parse_pattern("?o m3:indicates m3:Fever"))
        self.assertEqual([triple.subject for triple, _ in fevers], [Iri("urn:obs:thermo1:1")])

    def test_abort_reports_line_number(self):
        text = "thermo1,temperature,37,cel,1\nghost,temperature,37,cel,2\n"
        with self.assertRaises(ReplayAborted) as ctx:
            replay_log(self.runtime, text)
        self.assertEqual(ctx.exception.line, 2)
        self.assertEqual(ctx.exception.as_dict()["position"], {"line": 2, "column": 1})

    def test_value_overflowing_a_double_aborts(self):
        text = "thermo1,temperature,37,cel,1\nthermo1,temperature,1e400,cel,2\n"
        with self.assertRaises(ReplayAborted) as ctx:
            replay_log(self.runtime, text)
        self.assertEqual(ctx.exception.line, 2)
        self.assertIn("overflows a double", ctx.exception.detail)

    def test_conversion_overflow_aborts(self):
        self.runtime.registry.register_sensor(
            SensorRegistration.from_fields("oven1", "m3:AmbientTemperature", "urn:place:kitchen", "unit:DegreeFahrenheit")
        )
        size = len(self.runtime.store)
        with self.assertRaises(ReplayAborted) as ctx:
            replay_log(self.runtime, "oven1,temperature,1e308,cel,1\n")
        self.assertEqual(ctx.exception.line, 1)
        self.assertEqual(len(self.runtime.store), size)

    def test_unknown_speed(self):
        with self.assertRaises(ValueError):
            replay_log(self.runtime, "", speed="warp")

    def test_realtime_waits_between_readings(self):
        started = time.monotonic()
        replay_log(self.runtime, "thermo1,temperature,37,cel,1000\nthermo1,temperature,37,cel,1150\n", speed="realtime")
        self.assertGreaterEqual(time.monotonic() - started, 0.14)


class ReplayPropertyTests(SimpleTestCase):
    @hsettings(max_examples=25, deadline=None)
    @given(st.lists(log_lines, max_size=40))
    def test_identical_logs_identical_exports(self, lines):
        text = "\n".join(lines)
        exports, summaries = [], []
        for _ in range(2):
            runtime, _ = recording_runtime(*RULEPACKS)
            try:
                summaries.append(replay_log(runtime, text).as_dict())
                exports.append(export(runtime))
            finally:
                runtime.close()
        self.assertEqual(exports[0], exports[1])
        self.assertEqual(summaries[0], summaries[1])

    @hsettings(max_examples=25, deadline=None)
    @given(st.lists(log_lines, max_size=40), st.integers(1, 3))
    def test_notification_exactness(self, lines, copies):
        """配信数 == (購読, 新規推論トリプル) の単一化できる組の数"""
        runtime, sender = recording_runtime(*RULEPACKS)
        try:
            patterns = ["?o m3:indicates m3:Fever", "?o m3:indicates ?s", "?o m3:hasState m3:Unwell"]
            for i, pattern in enumerate(patterns):
                for copy in range(copies):
                    runtime.subscriptions.register(parse_pattern(pattern), Webhook(f"http://127.0.0.1:9/{i}/{copy}"))
            replay_log(runtime, "\n".join(lines))
            runtime.dispatcher.drain(10)

            inferred = runtime.store.triples(Inferred)
            fevers = sum(1 for t in inferred if t.predicate == INDICATES and t.object == FEVER)
            other_indicates = sum(1 for t in inferred if t.predicate == INDICATES) - fevers
            states = len(inferred) - fevers - other_indicates
            self.assertEqual(len(sender.sent), copies * (2 * fevers + other_indicates + states))
        finally:
            runtime.close()
