from decimal import Decimal
from pathlib import Path

from django.conf import settings
from django.test import SimpleTestCase
from hypothesis import given, settings as hsettings

from knowledge.exceptions import RuleConflict, RuleSyntaxError, SafetyError
from knowledge.patterns import Guard, TriplePattern, Variable
from knowledge.rules import Rule, RuleBook, check_safety, format_rulepack, parse_rulepack
from knowledge.terms import M3, SSN, XSD_DOUBLE, XSD_STRING, Iri, Literal

from .strategies import patterns, safe_rules

RULEPACKS = Path(settings.BASE_DIR) / "fixtures" / "rulepacks"
FEVER = (RULEPACKS / "fever.rules").read_text(encoding="utf-8")


class ParseRulepackTests(SimpleTestCase):
    def test_fever_pack(self):
        pack = parse_rulepack(FEVER)
        self.assertEqual(pack.pack_id, "slor-health")
        self.assertEqual(pack.domains, ("health",))
        (rule,) = pack.rules
        self.assertEqual(rule.id, "fever")
        self.assertEqual(len(rule.body), 3)
        self.assertEqual(rule.guards, (Guard("v", ">", Decimal("38.0")),))
        self.assertEqual(rule.head, (TriplePattern(Variable("o"), Iri(M3 + "indicates"), Iri(M3 + "Fever")),))
        self.assertEqual(rule.body[1], TriplePattern(Variable("o"), Iri(SSN + "observedProperty"), Iri(M3 + "BodyTemperature")))

    def test_pack_without_rules(self):
        pack = parse_rulepack("PACK empty DOMAIN health DOMAIN weather\n")
        self.assertEqual(pack.rules, ())
        self.assertEqual(pack.domains, ("health", "weather"))

    def test_head_only_variable_is_unsafe(self):
        text = "PACK p\nRULE bad : IF ?o m3:indicates m3:Fever THEN ?o m3:hasState ?x ."
        with self.assertRaises(SafetyError) as cm:
            parse_rulepack(text)
        self.assertEqual(cm.exception.rule_id, "bad")
        self.assertEqual(cm.exception.variables, ["x"])

    def test_guard_variable_must_be_bound(self):
        text = "PACK p\nRULE bad : IF ?o m3:p ?v FILTER ?w > 1 THEN ?o m3:q m3:R ."
        with self.assertRaises(SafetyError):
            parse_rulepack(text)

    def test_syntax_error_position(self):
        text = "PACK p\nRULE r : IF ?o m3:p ?v THEN ?o m3:q\n"
        with self.assertRaises(RuleSyntaxError) as cm:
            parse_rulepack(text)
        self.assertEqual(cm.exception.error, "SyntaxError")
        self.assertEqual(cm.exception.line, 3)

    def test_unknown_prefix_position(self):
        text = "PACK p\nRULE r : IF ?o foaf:knows ?v THEN ?o m3:q m3:R ."
        with self.assertRaises(RuleSyntaxError) as cm:
            parse_rulepack(text)
        self.assertEqual((cm.exception.line, cm.exception.column), (2, 16))

    def test_duplicate_rule_id(self):
        text = "PACK p\nRULE r : IF ?o m3:p ?v THEN ?o m3:q m3:R .\nRULE r : IF ?o m3:p ?v THEN ?o m3:q m3:S ."
        with self.assertRaises(RuleSyntaxError):
            parse_rulepack(text)

    def test_literals_and_multiple_patterns(self):
        text = (
            "# comment line\n"
            "PACK p DOMAIN test\n"
            'RULE r : IF ?o m3:label "hot" . ?o m3:level 3 . ?o m3:code "7"^^xsd:long\n'
            "THEN ?o m3:q m3:R . ?o m3:seen <urn:knotgate:m3#Yes> .\n"
        )
        (rule,) = parse_rulepack(text).rules
        self.assertEqual(rule.body[0].object, Literal("hot", XSD_STRING))
        self.assertEqual(rule.body[1].object, Literal("3", XSD_DOUBLE))
        self.assertEqual(len(rule.head), 2)

    def test_format_round_trip(self):
        for name in ("fever.rules", "blood_pressure.rules", "fire.rules", "health_states.rules"):
            pack = parse_rulepack((RULEPACKS / name).read_text(encoding="utf-8"))
            self.assertEqual(parse_rulepack(format_rulepack(pack)), pack)


class CheckSafetyTests(SimpleTestCase):
    def test_fever_rule_is_safe(self):
        (rule,) = parse_rulepack(FEVER).rules
        self.assertEqual(check_safety(rule), [])

    def test_head_only_variable(self):
        rule = Rule(
            "r",
            (TriplePattern(Variable("o"), Iri(M3 + "p"), Iri(M3 + "A")),),
            (TriplePattern(Variable("o"), Iri(M3 + "q"), Variable("y")),),
        )
        self.assertEqual(check_safety(rule), ["y"])

    @given(safe_rules(), patterns)
    @hsettings(max_examples=200, deadline=None)
    def test_set_difference_oracle(self, rule, extra_head):
        candidate = Rule(rule.id, rule.body, rule.head + (extra_head,), rule.guards)
        body_vars = set()
        for pattern in rule.body:
            body_vars |= {s.name for s in pattern if isinstance(s, Variable)}
        used = {g.variable for g in candidate.guards}
        for pattern in candidate.head:
            used |= {s.name for s in pattern if isinstance(s, Variable)}
        self.assertEqual(check_safety(candidate), sorted(used - body_vars))


class RuleBookTests(SimpleTestCase):
    def test_rule_ids_unique_across_packs(self):
        book = RuleBook()
        book.activate(parse_rulepack(FEVER))
        clash = parse_rulepack("PACK other\nRULE fever : IF ?o m3:p ?v THEN ?o m3:q m3:R .")
        with self.assertRaises(RuleConflict):
            book.activate(clash)

    def test_replacement_keeps_single_pack(self):
        book = RuleBook()
        first = parse_rulepack(FEVER)
        book.activate(first)
        self.assertIs(book.activate(parse_rulepack(FEVER.replace("38.0", "39.0"))), first)
        self.assertEqual(len(book), 1)
        self.assertEqual(book.domains_of("fever"), ("health",))
