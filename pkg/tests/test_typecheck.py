import json
import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mool import check_program, check_source, load_program, parse_stmt, parse_usage
from mool.syntax import BOOL, INT, NULL, VOID, ClassType
from mool.typecheck import Checker, agree, completed, merge_branch_envs, modified, CheckError
from mool.usage import END, Variant
from fragments import (
    EQUIVALENT_UN, FILE_EOF, FILE_LINEAR, NEGATED_IF, NEGATED_WHILE, SPAWN_CLOSE, SPAWN_READ, UN_TO_LIN, main_with,
)

U = parse_usage
READ = U("lin{read; lin{close; end}}")


def codes(src):
    return [(d.code, d.rule) for d in check_source(src)]


def rules(src):
    return [d.rule for d in check_source(src)]


class TestAgree:
    def test_table(self):
        assert agree(BOOL, BOOL)
        assert agree(ClassType("File", READ), NULL)
        assert agree(NULL, INT)
        assert not agree(INT, BOOL)
        assert agree(ClassType("F", U("rec X . un{m; X}")), ClassType("F", U("un{m; rec Y . un{m; Y}}"), ()))
        assert not agree(ClassType("F", END), ClassType("G", END))


class TestMerge:
    def test_different_usages_become_variant(self):
        g = merge_branch_envs({"f": ClassType("File", READ)}, {"f": ClassType("File", END)})
        assert g == {"f": ClassType("File", Variant(READ, END))}

    def test_equal_envs(self):
        g = {"n": INT, "f": ClassType("File", READ)}
        assert merge_branch_envs(g, dict(g)) == g

    def test_base_type_clash(self):
        with pytest.raises(CheckError):
            merge_branch_envs({"n": INT}, {"n": BOOL})

    def test_field_maps_must_agree(self):
        a = ClassType("C", END, (("x", INT),))
        b = ClassType("C", END, ())
        with pytest.raises(CheckError):
            merge_branch_envs({"this": a}, {"this": b})

    def test_branch_locals_dropped_when_unrestricted(self):
        assert merge_branch_envs({"k": INT}, {}, base={}) == {}
        with pytest.raises(CheckError):
            merge_branch_envs({"f": ClassType("File", READ)}, {}, base={})


class TestModified:
    def test_changed_binding(self):
        g1 = {"f": ClassType("File", U("lin{read; end}"))}
        g2 = {"f": ClassType("File", END)}
        assert modified(g1, g2) == {"f"}
        assert completed(g1, g2)

    def test_unchanged(self):
        g = {"f": ClassType("File", READ), "n": INT}
        assert modified(g, dict(g)) == set()
        assert completed(g, dict(g))

    def test_incomplete(self):
        assert not completed({"f": ClassType("File", U("lin{open; lin{read; end}}"))}, {"f": ClassType("File", U("lin{read; end}"))})

    def test_new_bindings_are_modified(self):
        assert modified({}, {"n": INT}) == {"n"}

    def test_fields_of_this(self):
        before = {"this": ClassType("C", END, (("f", INT),))}
        after = {"this": ClassType("C", END, (("f", INT), ("g", INT)))}
        assert modified(before, after) == {"this.g"}


class TestBugCatalogue:
    def test_spawned_read_rejected(self):
        assert "T-Spawn" in rules(SPAWN_READ)

    def test_spawned_close_accepted(self):
        assert codes(SPAWN_CLOSE) == []

    def test_negated_while_accepted(self):
        assert codes(NEGATED_WHILE) == []

    def test_negated_if_accepted(self):
        assert codes(NEGATED_IF) == []

    def test_unrestricted_to_linear_rejected(self):
        assert rules(UN_TO_LIN) == ["T-Class/check"]

    def test_equivalent_unrestricted_states_accepted(self):
        assert codes(EQUIVALENT_UN) == []


class TestCalls:
    def test_reversed_usage_is_accepted_by_the_call_rule(self):
        src = main_with("File f = new File(); f.read(); f.close()", """
class File {
    usage lin{read; lin{close; end}};
    void read() { unit }
    void close() { unit }
}""")
        assert codes(src) == []

    def test_uninitialised_field_receiver(self):
        src = main_with("R r = new R(); r.go()", extra="""
class R {
    usage lin{go; end};
    File f;
    void go() { this.f.open() }
}""")
        assert ("null-receiver", "T-Call") in codes(src)

    def test_protocol_violation(self):
        assert ("protocol-violation", "T-Call") in codes(main_with("File f = new File(); f.read()"))

    def test_double_close(self):
        src = main_with("File f = new File(); f.open(); f.read(); f.close(); f.close()")
        assert ("protocol-violation", "T-Call") in codes(src)

    def test_unknown_method(self):
        assert "unknown-method" in [c for c, _ in codes(main_with("Folder d = new Folder(); d.zap()", extra="class Folder { void m() { unit } }"))]

    def test_argument_uses_agree(self):
        # null agrees with any object type, so it may flow into a File parameter
        src = main_with("Box b = new Box(); b.put(null)",
                        extra="class Box { usage lin{put; end}; void put(File f) { f.open(); f.read(); f.close() } }")
        assert codes(src) == []

    def test_argument_mismatch(self):
        src = main_with("Box b = new Box(); b.put(true)", extra="class Box { usage lin{put; end}; void put(int n) { unit } }")
        assert ("argument-mismatch", "T-Call") in codes(src)

    def test_recursive_self_call_terminates(self):
        src = main_with("C c = new C(); c.go()", extra="""
class C {
    usage lin{go; end};
    int n;
    void go() { this.n = 3; this.down() }
    void down() { if (this.n > 0) { this.n = this.n - 1; this.down() } else { unit } }
}""")
        t0 = time.perf_counter()
        assert codes(src) == []
        assert time.perf_counter() - t0 < 1.0

    def test_private_method_body_checked(self):
        src = main_with("C c = new C(); c.go()", extra="""
class C {
    usage lin{go; end};
    void go() { this.helper() }
    void helper() { true }
}""")
        assert ("body-type", "T-SelfCall1") in codes(src)

    def test_each_method_typed_through_self_calls_at_most_once(self, monkeypatch):
        src = main_with("C c = new C(); c.go()", extra="""
class C {
    usage lin{go; end};
    void go() { this.a(); this.b(); this.a() }
    void a() { this.b() }
    void b() { this.a() }
}""")
        program = load_program(src)
        seen = []
        real = Checker.type_body

        def counting(self, cls, method, this_t, rule):
            seen.append((cls.name, method.name, rule))
            return real(self, cls, method, this_t, rule)

        monkeypatch.setattr(Checker, "type_body", counting)
        assert check_program(program) == []
        via_self = [s for s in seen if s[2] == "T-SelfCall1"]
        assert sorted(via_self) == sorted(set(via_self))


class TestLinearity:
    def test_linear_variable_consumed_on_read(self):
        src = main_with("File f = new File(); File g = f; f.open()")
        assert ("consumed", "T-LinVar") in codes(src)

    def test_second_read_of_linear_local(self):
        src = main_with("File f = new File(); File g = f; File h = f")
        assert "consumed" in [c for c, _ in codes(src)]

    def test_linear_value_discarded(self):
        src = main_with("File f = new File(); f; unit")
        assert ("linear-discard", "T-Seq") in codes(src)

    def test_linear_assignment_allowed(self):
        src = main_with("File f = new File(); f.open(); File f2 = new File(); f2.open(); f = f2; f.read(); f.close()")
        assert codes(src) == []

    def test_compare_with_null(self):
        src = main_with("File f = new File(); bool b = f == null")
        assert codes(src) == []

    def test_comparing_two_linear_objects_rejected(self):
        src = main_with("File f = new File(); File g = new File(); bool b = f == g")
        assert ("linear-compare", "T-Eq") in codes(src)

    def test_linear_field_left_at_end(self):
        src = main_with("H h = new H(); h.go()", extra="""
class H {
    usage lin{go; end};
    File f;
    void go() { this.f = new File() }
}""")
        assert ("linear-field", "T-Class") in codes(src)

    def test_linear_parameter_residue(self):
        src = main_with("H h = new H(); File f = new File(); h.take(f)", extra="""
class H {
    usage lin{take; end};
    void take(File g) { unit }
}""")
        assert ("param-residue", "T-Branch") in codes(src)


class TestStatements:
    def test_redeclaration(self):
        assert ("redeclared", "T-NewVar") in codes(main_with("int x = 1; int x = 2"))

    def test_assignment_type(self):
        assert ("type-mismatch", "T-AssignVar") in codes(main_with("int x = 1; x = true"))

    def test_field_overwrite_with_different_type(self):
        src = main_with("H h = new H(); h.go()", extra="""
class H {
    usage lin{go; end};
    File f;
    void go() { this.f = new File(); this.f.open(); this.f = new File() }
}""")
        assert ("field-overwrite", "T-AssignField") in codes(src)

    def test_null_assignment_removes_field(self):
        src = main_with("H h = new H(); h.go()", extra="""
class H {
    usage lin{go; end};
    File f;
    void go() { this.f = new File(); this.f = null }
}""")
        assert codes(src) == []

    def test_plain_condition_must_not_change_env(self):
        src = main_with("File f = new File(); if (f == null) { unit } else { unit }")
        assert ("condition-effect", "T-If") in codes(src)

    def test_branch_merge_to_variant_is_conservative(self):
        src = main_with("File f = new File(); f.open(); int n = 1; if (n > 0) { f.read() } else { unit }; f.close()")
        assert ("protocol-violation", "T-Call") in codes(src)

    def test_branch_types_must_agree(self):
        assert ("branch-type", "T-If") in codes(main_with("int n = 1; if (n > 0) { 1 } else { true }; unit"))

    def test_plain_while_preserves_env(self):
        src = main_with("File f = new File(); int n = 0; while (n < 1) { f.open(); n = n + 1 }")
        assert ("loop-invariant", "T-While") in codes(src)

    def test_while_call_requires_same_state_after_body(self):
        src = main_with("File f = new File(); f.open(); while (!f.eof()) { f.read(); f.eof() }; unit", FILE_EOF)
        assert "T-WhileNotCall" in rules(src)

    def test_unrestricted_receiver_in_condition(self):
        src = main_with("D d = new D(); if (d.ok()) { d.ok() } else { false }; while (d.ok()) { unit }",
                        extra="class D { bool ok() { true } }")
        assert codes(src) == []

    def test_spawn_drops_its_own_locals(self):
        src = main_with("spawn { int k = 1 }; int j = k")
        assert ("consumed", "T-LinVar") in codes(src)

    def test_arithmetic_operand_types(self):
        assert ("type-mismatch", "T-Add") in codes(main_with("int n = 1 + true"))
        assert ("type-mismatch", "T-Not") in codes(main_with("bool b = !1"))
        assert ("type-mismatch", "T-Less") in codes(main_with("bool b = true < 1"))


class TestProgramLevel:
    def test_no_entry_class(self):
        assert [d.code for d in check_source("")] == ["no-entry-class"]

    def test_unrestricted_class_methods_checked_from_empty_fields(self):
        src = main_with("unit", extra="class D { int x; void set() { this.x = 1 } int get() { this.x + 1 } }")
        assert ("type-mismatch", "T-Add") in codes(src)

    def test_usage_names_undeclared_method(self):
        src = main_with("unit", extra="class D { usage lin{ghost; end}; void m() { unit } }")
        assert ("unknown-method", "T-Branch") in codes(src)

    def test_usage_variable_requires_same_fields(self):
        src = main_with("unit", extra="""
class D {
    usage lin{go; rec X . lin{grow; X + stop; end}};
    int a;
    int b;
    void go() { this.a = 0 }
    void grow() { this.b = 1 }
    void stop() { unit }
}""")
        assert ("usage-var-mismatch", "T-UsageVar") in codes(src)

    def test_deterministic(self):
        src = SPAWN_READ + "\nclass X { usage lin{a; end}; void b() { unit } }"
        first = [d.to_json() for d in check_source(src)]
        for _ in range(3):
            assert [d.to_json() for d in check_source(src)] == first

    def test_json_lines(self):
        d = check_source(SPAWN_READ)[0]
        obj = json.loads(d.to_json())
        assert set(obj) == {"code", "severity", "rule", "message", "span"}
        assert set(obj["span"]) == {"start", "end"}


# -- frame property ------------------------------------------------------------------

_STMTS = [
    "int x = 1", "x = 2", "d = 3 + 4", "File f = new File(); f.open(); f.read(); f.close()",
    "if (d > 0) { d = 1 } else { d = 2 }", "while (d < 3) { d = d + 1 }", "spawn { int z = d }",
]
_EXTRA = st.dictionaries(
    st.sampled_from(["p", "q", "r"]),
    st.sampled_from([INT, BOOL, ClassType("File", READ), ClassType("File", END)]),
)


@given(st.sampled_from(_STMTS), _EXTRA)
def test_frame_property(stmt, extra):
    program = load_program(FILE_LINEAR + "class Main { void main() { unit } }")
    checker = Checker(program)
    base = {"this": ClassType("Main", END, ()), "d": INT}
    if stmt.startswith("x ="):
        base["x"] = INT
    env = {**base, **extra}
    from mool.typecheck import _Scope
    checker.scope = _Scope(program.cls("Main"), {k: v for k, v in env.items() if k != "this"})
    _, out = checker.type_stmt(env, parse_stmt(stmt))
    for k, t in extra.items():
        assert out[k] == t
