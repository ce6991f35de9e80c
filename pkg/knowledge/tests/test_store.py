from pathlib import Path

from django.conf import settings
from django.test import SimpleTestCase
from hypothesis import given, settings as hsettings, strategies as st

from knowledge.exceptions import ParseError
from knowledge.patterns import TriplePattern, Variable
from knowledge.store import EQUIVALENT_TO, Asserted, Inferred, Loaded, Store
from knowledge.terms import M3, Iri, Triple

from .strategies import match_oracle, patterns, stores, triples

REMEDIES = (Path(settings.BASE_DIR) / "fixtures" / "packs" / "remedies.nt").read_text(encoding="utf-8")
X, Y, Z = Variable("x"), Variable("y"), Variable("z")
ALL = TriplePattern(X, Y, Z)


def t(s, p, o):
    return Triple(Iri(s), Iri(p), Iri(o))


def as_set(results):
    return {(triple, tuple(sorted(b.items(), key=lambda kv: kv[0]))) for triple, b in results}


class InsertTests(SimpleTestCase):
    def test_insert_into_empty_store(self):
        store = Store()
        self.assertTrue(store.insert(t("urn:a", "urn:p", "urn:b"), Asserted("urn:dev:x")))
        self.assertEqual(len(store), 1)

    def test_set_semantics_first_provenance_wins(self):
        store = Store()
        triple = t("urn:a", "urn:p", "urn:b")
        store.insert(triple, Asserted("urn:dev:x"))
        self.assertFalse(store.insert(triple, Inferred("r1")))
        self.assertEqual(len(store), 1)
        self.assertEqual(store.provenance(triple), Asserted("urn:dev:x"))

    @given(st.lists(triples, max_size=1000))
    @hsettings(max_examples=30, deadline=None)
    def test_size_equals_distinct_count(self, sequence):
        store = Store()
        for triple in sequence:
            store.insert(triple, Asserted("urn:dev:x"))
        self.assertEqual(len(store), len(set(sequence)))

    @given(stores)
    @hsettings(max_examples=100, deadline=None)
    def test_index_consistency(self, facts):
        store = Store()
        for triple in facts:
            store.insert(triple, Asserted("urn:dev:x"))
        for triple in store.triples():
            for pattern in (
                TriplePattern(triple.subject, Y, Z),
                TriplePattern(X, triple.predicate, Z),
                TriplePattern(X, Y, triple.object),
            ):
                self.assertIn(triple, [found for found, _ in store.match(pattern)])


class MatchTests(SimpleTestCase):
    def test_empty_store(self):
        self.assertEqual(Store().match(ALL), [])

    def test_fully_concrete_pattern(self):
        store = Store()
        triple = t("urn:a", "urn:p", "urn:b")
        store.insert(triple, Asserted("urn:dev:x"))
        store.insert(t("urn:a", "urn:p", "urn:c"), Asserted("urn:dev:x"))
        self.assertEqual(store.match(TriplePattern(*triple)), [(triple, {})])

    def test_all_variable_pattern_returns_everything(self):
        store = Store()
        for o in "bcd":
            store.insert(t("urn:a", "urn:p", f"urn:{o}"), Asserted("urn:dev:x"))
        self.assertEqual(len(store.match(ALL)), 3)

    def test_repeated_variable(self):
        store = Store()
        store.insert(t("urn:a", "urn:p", "urn:a"), Asserted("urn:dev:x"))
        store.insert(t("urn:a", "urn:p", "urn:b"), Asserted("urn:dev:x"))
        results = store.match(TriplePattern(X, Iri("urn:p"), X))
        self.assertEqual([b for _, b in results], [{"x": Iri("urn:a")}])

    def test_order_is_deterministic(self):
        store = Store()
        for o in "dcba":
            store.insert(t("urn:a", "urn:p", f"urn:{o}"), Asserted("urn:dev:x"))
        self.assertEqual(store.match(ALL), store.match(ALL))

    @given(stores, st.lists(patterns, min_size=1, max_size=5))
    @hsettings(max_examples=100, deadline=None)
    def test_matches_linear_scan(self, facts, pattern_list):
        store = Store()
        for triple in facts:
            store.insert(triple, Asserted("urn:dev:x"))
        for pattern in pattern_list:
            self.assertEqual(as_set(store.match(pattern)), match_oracle(pattern, set(facts)))


class RetractTests(SimpleTestCase):
    def test_nothing_to_retract(self):
        store = Store()
        store.insert(t("urn:a", "urn:p", "urn:b"), Asserted("urn:dev:x"))
        self.assertEqual(store.retract(Inferred), 0)

    def test_retract_single_rule(self):
        store = Store()
        for o in "abc":
            store.insert(t("urn:s", "urn:p", f"urn:{o}"), Asserted("urn:dev:x"))
        store.insert(t("urn:s", "urn:q", "urn:a"), Inferred("r1"))
        store.insert(t("urn:s", "urn:q", "urn:b"), Inferred("r1"))
        self.assertEqual(store.retract(Inferred("r1")), 2)
        self.assertEqual(len(store), 3)
        self.assertEqual(store.match(TriplePattern(X, Iri("urn:q"), Y)), [])

    @given(st.lists(st.tuples(triples, st.sampled_from([Asserted("urn:dev:x"), Inferred("r1"), Inferred("r2"), Loaded("p")]))))
    @hsettings(max_examples=100, deadline=None)
    def test_retract_matches_filter(self, entries):
        store = Store()
        for triple, prov in entries:
            store.insert(triple, prov)
        before = {triple: store.provenance(triple) for triple in store.triples()}
        removed = store.retract(Inferred)
        remaining = set(store.triples())
        self.assertEqual(removed + len(remaining), len(before))
        self.assertEqual(remaining, {tr for tr, prov in before.items() if not isinstance(prov, Inferred)})
        self.assertEqual(as_set(store.match(ALL)), {(tr, tuple(sorted({"x": tr.subject, "y": tr.predicate, "z": tr.object}.items()))) for tr in remaining})


class LoadPackTests(SimpleTestCase):
    def test_empty_document(self):
        self.assertEqual(Store().load_pack("", "empty"), 0)

    def test_remedy_fixture(self):
        store = Store()
        self.assertEqual(store.load_pack(REMEDIES, "remedies"), 3)
        found = store.match(TriplePattern(Iri(M3 + "Fever"), Iri(M3 + "hasRemedy"), X))
        self.assertEqual(len(found), 3)
        self.assertTrue(all(store.provenance(tr) == Loaded("remedies") for tr, _ in found))

    def test_load_then_retract_restores_store(self):
        store = Store()
        store.insert(t("urn:a", "urn:p", "urn:b"), Asserted("urn:dev:x"))
        store.insert(t(M3 + "Fever", M3 + "hasRemedy", "urn:knotgate:remedy#GingerTea"), Asserted("urn:dev:x"))
        snapshot = {tr: store.provenance(tr) for tr in store.triples()}
        store.load_pack(REMEDIES, "remedies")
        store.retract(Loaded("remedies"))
        self.assertEqual({tr: store.provenance(tr) for tr in store.triples()}, snapshot)

    def test_alias_pack_retract_restores_store(self):
        store = Store()
        store.insert(t("urn:z:b", M3 + "p", "urn:t:o"), Asserted("urn:dev:x"))
        store.insert(t("urn:a:a", M3 + "p", "urn:t:o"), Asserted("urn:dev:y"))
        snapshot = {tr: store.provenance(tr) for tr in store.triples()}
        store.load_pack(f"<urn:a:a> <{EQUIVALENT_TO}> <urn:z:b> .\n", "alias")
        # 別名で重なった2件は代表元の1件として見える
        self.assertEqual(len(store.match(TriplePattern(X, Iri(M3 + "p"), Y))), 1)
        self.assertEqual(store.retract(Loaded("alias")), 1)
        self.assertEqual({tr: store.provenance(tr) for tr in store.triples()}, snapshot)
        self.assertEqual(store.resolve_alias(Iri("urn:z:b")), Iri("urn:z:b"))

    def test_parse_error_loads_nothing(self):
        store = Store()
        with self.assertRaises(ParseError):
            store.load_pack("<urn:a> <urn:p> <urn:b> .\nbroken line\n", "bad")
        self.assertEqual(len(store), 0)


class AliasTests(SimpleTestCase):
    def alias_doc(self, pairs):
        return "".join(f"<{a}> <{EQUIVALENT_TO.value}> <{b}> .\n" for a, b in pairs)

    def test_no_alias_is_identity(self):
        self.assertEqual(Store().resolve_alias(Iri("urn:a")), Iri("urn:a"))

    def test_alias_pair(self):
        store = Store()
        store.load_pack(self.alias_doc([("urn:b", "urn:a")]), "aliases")
        self.assertEqual(store.resolve_alias(Iri("urn:b")), store.resolve_alias(Iri("urn:a")))
        self.assertEqual(store.resolve_alias(Iri("urn:b")), Iri("urn:a"))

    def test_chain(self):
        store = Store()
        store.load_pack(self.alias_doc([("urn:c", "urn:b"), ("urn:b", "urn:a")]), "aliases")
        canon = {store.resolve_alias(Iri(f"urn:{n}")) for n in "abc"}
        self.assertEqual(canon, {Iri("urn:a")})

    def test_inserts_are_canonicalized(self):
        store = Store()
        store.insert(t("urn:temp", "urn:p", "urn:x"), Asserted("urn:dev:x"))
        store.load_pack(self.alias_doc([("urn:temp", "urn:bodytemp")]), "aliases")
        store.insert(t("urn:temp", "urn:p", "urn:y"), Asserted("urn:dev:x"))
        subjects = {tr.subject for tr, _ in store.match(TriplePattern(X, Iri("urn:p"), Y))}
        self.assertEqual(subjects, {Iri("urn:bodytemp")})
        # 別名側で問い合わせても代表元で一致する
        self.assertEqual(len(store.match(TriplePattern(Iri("urn:temp"), Iri("urn:p"), Y))), 2)

    @given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), max_size=15))
    @hsettings(max_examples=100, deadline=None)
    def test_union_find_oracle(self, pairs):
        store = Store()
        store.load_pack(self.alias_doc([(f"urn:n{a}", f"urn:n{b}") for a, b in pairs]), "aliases")

        # 素朴な連結成分の計算
        groups = [{n} for n in range(10)]
        for a, b in pairs:
            ga = next(g for g in groups if a in g)
            gb = next(g for g in groups if b in g)
            if ga is not gb:
                groups.remove(gb)
                ga |= gb
        for group in groups:
            expected = Iri(min(f"urn:n{n}" for n in group))
            for n in group:
                resolved = store.resolve_alias(Iri(f"urn:n{n}"))
                self.assertEqual(resolved, expected)
                self.assertEqual(store.resolve_alias(resolved), resolved)


class AtomicTests(SimpleTestCase):
    def test_failure_undoes_inserts(self):
        store = Store()
        store.insert(t("urn:a", "urn:p", "urn:b"), Asserted("urn:dev:x"))
        with self.assertRaises(RuntimeError):
            with store.atomic():
                store.insert(t("urn:a", "urn:p", "urn:c"), Asserted("urn:dev:x"))
                store.insert(t("urn:a", "urn:q", "urn:c"), Inferred("r1"))
                raise RuntimeError("boom")
        self.assertEqual(store.triples(), [t("urn:a", "urn:p", "urn:b")])
        self.assertEqual(store.match(TriplePattern(X, Iri("urn:q"), Y)), [])

    def test_success_keeps_inserts(self):
        store = Store()
        with store.atomic():
            store.insert(t("urn:a", "urn:p", "urn:c"), Asserted("urn:dev:x"))
        self.assertEqual(len(store), 1)

    def test_failed_inner_block_in_successful_outer_block(self):
        store = Store()
        with store.atomic():
            store.insert(t("urn:a", "urn:p", "urn:b"), Asserted("urn:dev:x"))
            with self.assertRaises(RuntimeError):
                with store.atomic():
                    store.insert(t("urn:a", "urn:p", "urn:c"), Asserted("urn:dev:x"))
                    raise RuntimeError("boom")
        self.assertEqual(store.triples(), [t("urn:a", "urn:p", "urn:b")])

    def test_outer_failure_undoes_committed_inner_block(self):
        store = Store()
        with self.assertRaises(RuntimeError):
            with store.atomic():
                with store.atomic():
                    store.insert(t("urn:a", "urn:p", "urn:c"), Asserted("urn:dev:x"))
                raise RuntimeError("boom")
        self.assertEqual(len(store), 0)

    def test_failure_restores_aliases(self):
        store = Store()
        store.insert(t("urn:z:b", "urn:p", "urn:o"), Asserted("urn:dev:x"))
        with self.assertRaises(RuntimeError):
            with store.atomic():
                store.load_pack(f"<urn:a:a> <{EQUIVALENT_TO}> <urn:z:b> .\n", "alias")
                raise RuntimeError("boom")
        self.assertEqual(store.resolve_alias(Iri("urn:z:b")), Iri("urn:z:b"))
        self.assertEqual(store.triples(), [t("urn:z:b", "urn:p", "urn:o")])
