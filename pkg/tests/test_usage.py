import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mool import parse_usage
from mool.usage import (
    END, EPS, UNDEFINED, Branch, Rec, UsageError, UVar, Variant, action_set, allows, check_usage,
    qualifier, unfold, usage_subtype, usages_equivalent,
)
from oracles import iter_usages, oracle_check, to_usage
from strategies import usages

U = parse_usage
READ = U("rec Read . un{eof; <lin{close; end} + lin{read; Read}>}")


class TestUnfold:
    def test_one_level(self):
        assert unfold(READ) == Branch("un", (("eof", Variant(U("lin{close; end}"), Branch("lin", (("read", READ),)))),))

    def test_free_variable_is_an_error(self):
        with pytest.raises(UsageError):
            unfold(U("lin{open; X}"))

    def test_non_binders_unchanged(self):
        assert unfold(END) == END
        assert unfold(U("lin{m; end}")) == U("lin{m; end}")


class TestAllows:
    def test_branch_continuation(self):
        file = U("lin{open; lin{read; lin{close; end}}}")
        assert allows(file, "open") == U("lin{read; lin{close; end}}")

    def test_empty_state(self):
        assert allows(END, "read") is UNDEFINED

    def test_eps_allows_everything(self):
        assert allows(EPS, "anything") == EPS

    def test_variant_must_be_resolved_first(self):
        assert allows(Variant(END, END), "m") is UNDEFINED

    def test_missing_method(self):
        assert allows(U("lin{a; end}"), "b") is UNDEFINED

    @given(usages(), st.sampled_from(["a", "b", "c"]))
    def test_fold_unfold_coherence(self, u, m):
        r = Rec("Z", u)
        assert allows(r, m) == allows(unfold(r), m)


class TestQualifier:
    def test_examples(self):
        assert qualifier(Variant(U("lin{close; end}"), U("lin{read; end}"))) == "variant"
        assert qualifier(END) == "un"
        assert qualifier(U("rec X . lin{m; X}")) == "lin"
        assert qualifier(EPS) == "eps"

    def test_bare_variable(self):
        with pytest.raises(UsageError):
            qualifier(UVar("X"))

    def test_action_set(self):
        assert action_set(U("un{block; end + read; end}")) == {"block", "read"}
        assert action_set(END) == frozenset()
        assert action_set(U("rec X . un{push; X}")) == {"push"}
        with pytest.raises(UsageError):
            action_set(Variant(END, END))
        with pytest.raises(UsageError):
            action_set(EPS)


class TestCheck:
    def test_unrestricted_to_variant_rejected(self):
        assert not check_usage({}, U("lin{open; rec Read . un{eof; <lin{close; end} + lin{read; Read}>}}"))

    def test_differently_actioned_states_rejected(self):
        assert not check_usage({}, U("lin{open; rec B . un{unblock; rec U . un{block; B + read; U}}}"))

    def test_equivalent_states_accepted(self):
        assert check_usage({}, U("lin{open; rec B . un{push; rec U . un{push; B}}}"))

    def test_linear_file_accepted(self):
        assert check_usage({}, U("lin{open; rec Read . lin{eof; <lin{close; end} + lin{read; Read}>}}"))

    def test_lookup_through_phi(self):
        assert check_usage({"X": U("un{m; X}")}, U("un{m; X}"))
        assert not check_usage({"X": U("lin{m; X}")}, U("un{m; X}"))

    def test_linear_state_may_target_variant_with_un_components(self):
        assert check_usage({}, U("lin{m; <rec X . un{a; X} + end>}"))
        assert check_usage({}, U("lin{m; <end + end>}"))

    @given(usages())
    def test_check_of_binder_equals_check_of_unfolding(self, u):
        r = Rec("Z", u)
        assert check_usage({}, r) == check_usage({}, unfold(r))

    def test_agrees_with_graph_oracle_up_to_depth_3(self):
        for t in iter_usages(3):
            assert check_usage({}, to_usage(t)) == oracle_check(t), t

    @given(usages(max_depth=5))
    @settings(max_examples=300)
    def test_agrees_with_graph_oracle_three_methods(self, u):
        assert check_usage({}, u) == oracle_check(_to_tuple(u))


def _to_tuple(u):
    if isinstance(u, Branch):
        return ("b", u.qual, tuple((m, _to_tuple(z)) for m, z in u.branches))
    if isinstance(u, Variant):
        return ("v", _to_tuple(u.left), _to_tuple(u.right))
    if isinstance(u, Rec):
        return ("mu", u.var, _to_tuple(u.body))
    if isinstance(u, UVar):
        return ("x", u.name)
    return ("eps",)


class TestEquivalence:
    def test_one_unfolding(self):
        assert usages_equivalent(U("rec X . lin{m; X}"), U("lin{m; rec X . lin{m; X}}"))

    def test_qualifier_mismatch(self):
        assert not usages_equivalent(U("lin{m; end}"), U("un{m; end}"))

    def test_alpha_renaming(self):
        assert usages_equivalent(U("rec X . un{m; X}"), U("rec Y . un{m; Y}"))

    def test_traversed_file_usage_is_itself(self):
        file = U("lin{open; rec Read . lin{eof; <lin{close; end} + lin{read; Read}>}}")
        state = allows(file, "open")
        for _ in range(3):
            state = allows(unfold(state), "eof").right
            state = allows(state, "read")
        assert usages_equivalent(state, allows(file, "open"))

    @given(usages(), usages(), usages())
    @settings(max_examples=200)
    def test_equivalence_relation(self, a, b, c):
        assert usages_equivalent(a, a)
        assert usages_equivalent(a, b) == usages_equivalent(b, a)
        if usages_equivalent(a, b) and usages_equivalent(b, c):
            assert usages_equivalent(a, c)

    @given(usages())
    def test_unfolding_is_equivalent(self, u):
        r = Rec("Z", u)
        assert usages_equivalent(r, unfold(r))

    def test_matches_explicit_bisimulation(self):
        # oracle: product-graph search over the finite state graphs
        from itertools import islice
        samples = [to_usage(t) for t in islice(iter_usages(3), 0, None, 7)]
        for a in samples[:60]:
            for b in samples[:60]:
                assert usages_equivalent(a, b) == _bisimilar(a, b)


def _bisimilar(a, b):
    from mool.usage import head
    seen, todo = set(), [(a, b)]
    while todo:
        x, y = todo.pop()
        x, y = head(x), head(y)
        if (x, y) in seen:
            continue
        seen.add((x, y))
        if type(x) is not type(y):
            return False
        if isinstance(x, Branch):
            if x.qual != y.qual or dict(x.branches).keys() != dict(y.branches).keys():
                return False
            todo.extend((z, dict(y.branches)[m]) for m, z in x.branches)
        elif isinstance(x, Variant):
            todo += [(x.left, y.left), (x.right, y.right)]
    return True


class TestSubtype:
    def test_reflexive(self):
        assert usage_subtype(READ, READ)

    def test_componentwise_variants(self):
        a, b = U("lin{close; end}"), U("lin{read; end}")
        assert usage_subtype(Variant(a, b), Variant(a, b))

    def test_variants_only_relate_to_variants(self):
        a, b = U("lin{close; end}"), U("lin{read; end}")
        assert not usage_subtype(Variant(a, b), a)
        assert not usage_subtype(a, Variant(a, b))

    @given(usages(max_depth=4), usages(max_depth=4), usages(max_depth=4))
    @settings(max_examples=200)
    def test_reflexive_and_transitive(self, a, b, c):
        assert usage_subtype(a, a)
        if usage_subtype(a, b) and usage_subtype(b, c):
            assert usage_subtype(a, c)

    def test_matches_derivation_enumeration(self):
        from itertools import islice
        samples = [to_usage(t) for t in islice(iter_usages(3), 0, None, 11)]
        vs = samples[:25] + [Variant(x, y) for x in samples[:5] for y in samples[:5]]
        for a in vs:
            for b in vs:
                assert usage_subtype(a, b) == _derivable(a, b)


def _derivable(a, b):
    """Subtyping derivations: equivalence, or the variant rule applied to
    derivable components."""
    if _bisimilar(a, b):
        return True
    return isinstance(a, Variant) and isinstance(b, Variant) and _derivable(a.left, b.left) and _derivable(a.right, b.right)


def test_invariant_along_paths_for_corpus_usages(corpus):
    """Once a checked usage reaches an unrestricted state it stays there
    with the same action set."""
    from mool.usage import head
    from tests_support import corpus_usages
    for u in corpus_usages():
        if not check_usage({}, u):
            continue
        todo, seen = [(head(u), None)], set()
        while todo:
            s, un_actions = todo.pop()
            if (s, un_actions) in seen:
                continue
            seen.add((s, un_actions))
            if isinstance(s, Variant):
                assert un_actions is None
                todo += [(head(s.left), None), (head(s.right), None)]
                continue
            if isinstance(s, Branch):
                if un_actions is not None:
                    assert s.qual == "un" and s.methods == un_actions
                nxt = s.methods if s.qual == "un" else None
                todo += [(head(z), nxt) for _, z in s.branches]
