import rdflib
from django.test import SimpleTestCase

from knowledge.exceptions import MalformedIri, MalformedLiteral, NonFiniteValue
from knowledge.terms import (
    M3, PREFIXES, RDF, SSN, UNIT, XSD, XSD_DOUBLE, XSD_LONG,
    Blank, Iri, Literal, Triple, as_term, compact_term, expand_curie, expand_iri, make_iri, make_numeric,
)


class MakeIriTests(SimpleTestCase):
    def test_absolute_iri_is_kept(self):
        self.assertEqual(make_iri("urn:dev:thermo1"), Iri("urn:dev:thermo1"))

    def test_prefixed_name_is_expanded(self):
        self.assertEqual(make_iri("ssn:Observation"), Iri(SSN + "Observation"))

    def test_whitespace_is_rejected(self):
        with self.assertRaises(MalformedIri):
            make_iri("not an iri")

    def test_missing_scheme_is_rejected(self):
        with self.assertRaises(MalformedIri):
            make_iri("thermo1")

    def test_angle_brackets_are_rejected(self):
        with self.assertRaises(MalformedIri):
            make_iri("urn:<x>")

    def test_unknown_prefix_in_curie(self):
        with self.assertRaises(MalformedIri):
            expand_curie("foaf:Person")

    def test_expansion_is_idempotent(self):
        for text in ["m3:Fever", "unit:MmHg", "urn:dev:x", "http://example.org/a#b"]:
            once = expand_iri(text)
            self.assertEqual(expand_iri(once), once)

    def test_prefix_table_is_closed(self):
        self.assertEqual(
            dict(PREFIXES),
            {"rdf": RDF, "ssn": SSN, "m3": M3, "unit": UNIT, "xsd": XSD},
        )
        self.assertEqual(RDF, "http://www.w3.org/1999/02/22-rdf-syntax-ns#")
        self.assertEqual(M3, "urn:knotgate:m3#")
        with self.assertRaises(TypeError):
            PREFIXES["foaf"] = "http://xmlns.com/foaf/0.1/"


class MakeNumericTests(SimpleTestCase):
    def test_integral_double(self):
        self.assertEqual(make_numeric(38, XSD_DOUBLE), Literal("38", XSD_DOUBLE))
        self.assertEqual(make_numeric(39.0, "xsd:double"), Literal("39", XSD_DOUBLE))

    def test_zero_long(self):
        self.assertEqual(make_numeric(0, XSD_LONG), Literal("0", XSD_LONG))

    def test_shortest_round_trip_rendering(self):
        self.assertEqual(make_numeric(38.5).lexical, "38.5")
        self.assertEqual(make_numeric(0.1).lexical, "0.1")
        self.assertEqual(float(make_numeric(1e-7).lexical), 1e-7)

    def test_not_a_number(self):
        with self.assertRaises(NonFiniteValue):
            make_numeric(float("nan"))
        with self.assertRaises(NonFiniteValue):
            make_numeric(float("inf"), XSD_LONG)

    def test_long_requires_integral_value(self):
        with self.assertRaises(MalformedLiteral):
            make_numeric(1.5, XSD_LONG)

    def test_numeric_value_ignores_lexical_form(self):
        self.assertEqual(Literal("38.0", XSD_DOUBLE).numeric_value(), Literal("38", XSD_DOUBLE).numeric_value())

    def test_numeric_literal_must_parse(self):
        with self.assertRaises(MalformedLiteral):
            Literal("hot", XSD_DOUBLE)


class TripleTests(SimpleTestCase):
    def test_literal_subject_is_rejected(self):
        with self.assertRaises(MalformedLiteral):
            Triple(Literal("x"), Iri(RDF + "type"), Iri(SSN + "Sensor"))

    def test_predicate_must_be_iri(self):
        with self.assertRaises(MalformedIri):
            Triple(Iri("urn:a"), Blank("b"), Iri("urn:c"))

    def test_blank_label(self):
        with self.assertRaises(MalformedLiteral):
            Blank("no-dash")

    def test_compact_term(self):
        self.assertEqual(compact_term(Iri(M3 + "Fever")), "m3:Fever")
        self.assertEqual(compact_term(Iri("urn:knotgate:remedy#GingerTea")), "urn:knotgate:remedy#GingerTea")
        self.assertEqual(compact_term(make_numeric(39)), "39")


class RdflibTermTests(SimpleTestCase):
    def test_terms_are_rdflib_nodes(self):
        self.assertIsInstance(Iri("urn:a"), rdflib.URIRef)
        self.assertIsInstance(Literal("x"), rdflib.Literal)
        self.assertIsInstance(Blank("b1"), rdflib.BNode)

    def test_vocabulary_attributes_are_iris(self):
        self.assertIsInstance(SSN.Observation, Iri)
        self.assertEqual(SSN.Observation, Iri("urn:knotgate:ssn#Observation"))
        self.assertEqual(M3["indicates"], Iri(M3 + "indicates"))

    def test_lexical_form_is_not_normalized(self):
        literal = Literal("39.0", XSD_DOUBLE)
        self.assertEqual(literal.lexical, "39.0")
        self.assertNotEqual(literal, Literal("39", XSD_DOUBLE))
        self.assertEqual(literal.numeric_value(), Literal("39", XSD_DOUBLE).numeric_value())

    def test_as_term_converts_rdflib_nodes(self):
        self.assertEqual(as_term(rdflib.URIRef("urn:a")), Iri("urn:a"))
        self.assertEqual(as_term(rdflib.BNode("b1")), Blank("b1"))
        self.assertEqual(as_term(rdflib.Literal("7", datatype=rdflib.URIRef(XSD_LONG))), Literal("7", XSD_LONG))

    def test_as_term_rejects_language_tags_and_plain_literals(self):
        with self.assertRaises(MalformedLiteral):
            as_term(rdflib.Literal("chat", lang="fr"))
        with self.assertRaises(MalformedLiteral):
            as_term(rdflib.Literal("chat"))

    def test_characters_forbidden_in_ntriples_are_rejected(self):
        for text in ["urn:a{b}", 'urn:a"b', "urn:a|b", "urn:a\\b", "urn:a^b", "urn:a`b"]:
            with self.assertRaises(MalformedIri):
                Iri(text)
