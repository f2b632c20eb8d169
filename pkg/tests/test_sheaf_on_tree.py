import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nslab.curve_graph import CurveGraph
from nslab.generators import exhaustive_family, random_sheaf
from nslab.sheaf_on_tree import (
    AttachContext,
    CollapseImage,
    Positivity,
    SheafOnTree,
    SplittingType,
    canonical_gluing,
    classify_positivity,
    collapse_oracle,
    constrained_sections_lower_bound,
    degree,
    delta_flat_change,
    delta_flat_total,
    h0,
    h0_oracle,
    is_globally_generated_oracle,
    pushforward_collapse,
    random_gluing,
    vanishing_sections_oracle,
)


def chain(n):
    ids = [f"v{i}" for i in range(n)]
    return CurveGraph.build(ids, [(f"e{i}", ids[i], ids[i + 1]) for i in range(n - 1)])


def sheaf(types, defects=(), rank=None):
    g = chain(len(types))
    rank = rank or len(types[0])
    return SheafOnTree(
        g,
        rank,
        {f"v{i}": SplittingType(tuple(t)) for i, t in enumerate(types)},
        {f"e{i}": d for i, d in enumerate(defects)},
    )


TWO_CHAIN = sheaf([(0, 1), (0, 0)], [1])


# -- construction ----------------------------------------------------------


def test_splitting_type_is_sorted():
    assert SplittingType.of(2, 0, 1).parts == (0, 1, 2)


def test_defect_above_rank_rejected():
    with pytest.raises(ValueError):
        sheaf([(0, 0), (0, 0)], [3])


def test_wrong_rank_rejected():
    with pytest.raises(ValueError):
        SheafOnTree(chain(2), 2, {"v0": SplittingType.of(0, 0), "v1": SplittingType.of(0)})


def test_cycle_rejected():
    g = CurveGraph.build(["a", "b"], [("e1", "a", "b"), ("e2", "a", "b")])
    with pytest.raises(ValueError):
        SheafOnTree(g, 1, {"a": SplittingType.of(0), "b": SplittingType.of(0)})


# -- degree, defects, sections ---------------------------------------------


def test_degree_examples():
    assert degree(sheaf([(0, 0)])) == 0
    assert degree(sheaf([(1,), (2,)])) == 3
    assert degree(sheaf([(1,)] * 6)) == 6


def test_defect_examples():
    assert delta_flat_total(sheaf([(0, 0), (0, 0)])) == 0
    assert delta_flat_total(sheaf([(0, 0)] * 3, [1, 2])) == 3
    assert sheaf([(0, 0), (0, 0)]).is_locally_free


def test_h0_examples():
    for a in range(5):
        assert h0(sheaf([(a,)])) == 1 + a
    assert h0(TWO_CHAIN) == 4
    g = CurveGraph.build(["x", "y"])
    two = SheafOnTree(g, 3, {"x": SplittingType.of(0, 0, 0), "y": SplittingType.of(0, 0, 0)})
    assert h0(two) == 6


def test_h0_needs_nonnegative():
    with pytest.raises(ValueError):
        h0(sheaf([(-1, 0)]))


def test_oracle_on_two_chain():
    assert h0_oracle(TWO_CHAIN) == 4
    assert {h0_oracle(TWO_CHAIN, seed) for seed in range(10)} == {4}


def test_oracle_matches_formula_when_locally_free():
    rng = random.Random(11)
    for _ in range(40):
        F = random_sheaf(rng, max_vertices=4, max_rank=3, max_part=3)
        F = SheafOnTree(F.tree, F.rank, F.vertex_types)
        assert h0_oracle(F) == h0(F)


def test_explicit_gluing_is_used():
    glue = canonical_gluing(TWO_CHAIN)
    F = SheafOnTree(TWO_CHAIN.tree, 2, TWO_CHAIN.vertex_types, TWO_CHAIN.edge_defects, glue)
    assert h0_oracle(F) == 4


def test_random_gluing_is_seeded():
    assert random_gluing(TWO_CHAIN, 3) == random_gluing(TWO_CHAIN, 3)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_oracle_independent_of_gluing(shape_seed, glue_seed):
    F = random_sheaf(random.Random(shape_seed), max_vertices=4, max_rank=3, max_part=3)
    assert h0_oracle(F, glue_seed) == h0_oracle(F) == h0(F)


def test_small_exhaustive_family_matches_oracle():
    count = 0
    for F in exhaustive_family(3, 2, 2):
        assert h0_oracle(F) == h0(F)
        count += 1
    assert count > 1000


# -- positivity ------------------------------------------------------------


def test_positivity_examples():
    assert classify_positivity(sheaf([(0, 0), (0, 0)])) is Positivity.NONNEGATIVE
    assert classify_positivity(sheaf([(0, 1), (0, 0), (0, 0)])) is Positivity.POSITIVE
    assert classify_positivity(sheaf([(1, 2)] * 3)) is Positivity.STRICTLY_POSITIVE
    assert classify_positivity(sheaf([(-1, 2)])) is Positivity.NOT_NONNEGATIVE


def test_positive_needs_every_component():
    g = CurveGraph.build(["x", "y"])
    F = SheafOnTree(g, 1, {"x": SplittingType.of(1), "y": SplittingType.of(0)})
    assert classify_positivity(F) is Positivity.NONNEGATIVE


def test_global_generation_examples():
    assert is_globally_generated_oracle(sheaf([(1, 2)] * 3))
    assert is_globally_generated_oracle(sheaf([(0,)]))
    assert classify_positivity(sheaf([(0,)])) is not Positivity.STRICTLY_POSITIVE
    with pytest.raises(ValueError):
        is_globally_generated_oracle(sheaf([(0, -1)]))


def test_strict_positivity_criterion_small_family():
    for F in exhaustive_family(3, 2, 2):
        strict = classify_positivity(F) is Positivity.STRICTLY_POSITIVE
        positive_everywhere = all(t.degree > 0 for t in F.vertex_types.values())
        assert strict == (is_globally_generated_oracle(F) and positive_everywhere)


# -- collapse arithmetic ---------------------------------------------------


def test_collapse_node_examples():
    one = sheaf([(0, 1)])
    assert pushforward_collapse(one, AttachContext("node", (0, 0))) == CollapseImage(0, 1)
    three = sheaf([(1, 2)])
    assert pushforward_collapse(three, AttachContext("node", (0, 0))) == CollapseImage(1, 2)


def test_collapse_smooth_torsion():
    F = sheaf([(2,)])
    ctx = AttachContext("smooth", (0,))
    assert pushforward_collapse(F, ctx) == CollapseImage(2, None)
    assert collapse_oracle(F, ctx) == CollapseImage(2, None)


@pytest.mark.parametrize("types", [[(0, 1)], [(1, 2)], [(1, 1)], [(0, 1), (1, 0)]])
def test_collapse_oracle_agrees_on_balanced_trees(types):
    F = sheaf(types)
    ctx = AttachContext("node", (0, 0), ("v0", f"v{len(types) - 1}"))
    assert collapse_oracle(F, ctx) == pushforward_collapse(F, ctx)
    assert collapse_oracle(F, ctx, 5) == pushforward_collapse(F, ctx)


def test_coordinate_gluing_traps_torsion():
    # identity gluing lines up the O(1) summands, a generic one does not
    F = sheaf([(0, 1), (0, 1)])
    ctx = AttachContext("node", (0, 0), ("v0", "v1"))
    assert collapse_oracle(F, ctx, "canonical") == CollapseImage(1, 1)
    assert collapse_oracle(F, ctx) == CollapseImage(0, 2)


def test_unbalanced_tree_departs_from_closed_form():
    # O + O(2) across a node: the section count forces one unit of torsion
    F = sheaf([(0, 2)])
    ctx = AttachContext("node", (0, 0))
    assert pushforward_collapse(F, ctx) == CollapseImage(0, 2)
    assert {collapse_oracle(F, ctx, s) for s in (None, 1, 2)} == {CollapseImage(1, 1)}


def test_defect_change_examples():
    assert delta_flat_change(sheaf([(1, 1)])) == -2
    assert delta_flat_change(sheaf([(0, 1)]), [AttachContext("node", (0, 0))]) == -1
    with pytest.raises(ValueError):
        delta_flat_change(sheaf([(0, 0)]))


def test_defect_change_multi_node_tally():
    F = sheaf([(0, 1), (1, 1), (0, 0)], [1, 0])
    contexts = [AttachContext("node", (1, 0)), AttachContext("smooth", (2,))]
    assert delta_flat_change(F, contexts) == -degree(F)


def test_constrained_sections():
    assert constrained_sections_lower_bound(TWO_CHAIN, 1) == 2
    flat = sheaf([(0, 0)])
    assert constrained_sections_lower_bound(flat, 1) == 0


def test_vanishing_sections_respect_bound():
    rng = random.Random(5)
    for _ in range(30):
        F = random_sheaf(rng, max_vertices=4, max_rank=2, max_part=3)
        for a in range(3):
            assert vanishing_sections_oracle(F, count=a) >= constrained_sections_lower_bound(F, a)
