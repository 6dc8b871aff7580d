import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qrel.dsl import PlanConfig, execute, format_query, parse, plan
from qrel.dsl import ast
from qrel.dsl.cli import run_query
from qrel.errors import QubitBudgetExceeded, QuerySyntaxError, UnknownField
from qrel.relation import Schema, WeightedRelation, dumps_relation


class TestParse:
    def test_project(self):
        assert parse('PROJECT LOAD "r.rel" ON a') == ast.Project(ast.Load("r.rel"), ("a",))

    def test_join(self):
        tree = parse('JOIN LOAD "r.rel", LOAD "s.rel" ON eq(k,k) COMBINE concat_drop(k)')
        assert tree == ast.Join(ast.Load("r.rel"), ast.Load("s.rel"), ast.EqSim("k", "k"), ast.ConcatDrop("k"))

    def test_misspelled_keyword(self):
        with pytest.raises(QuerySyntaxError) as e:
            parse('SELECT LOAD "r.rel" WHER x=1')
        assert (e.value.line, e.value.column) == (1, 21)
        assert "WHER" in str(e.value)

    def test_location_on_later_line(self):
        with pytest.raises(QuerySyntaxError) as e:
            parse('JOIN LOAD "a", LOAD "b"\n  ON near(x, y) COMBINE concat')
        assert (e.value.line, e.value.column) == (2, 6)

    def test_predicate_precedence(self):
        tree = parse('SELECT LOAD "r" WHERE a = 1 or b < 2 and not c > 3')
        assert tree.pred == ast.Or(
            ast.Cmp("a", "=", 1), ast.And(ast.Cmp("b", "<", 2), ast.Not(ast.Cmp("c", ">", 3)))
        )

    def test_field_comparison_and_case(self):
        tree = parse('select load "r" where a = b')
        assert tree.pred == ast.Cmp("a", "=", ast.FieldRef("b"))

    def test_project_list_inside_join(self):
        tree = parse('JOIN PROJECT LOAD "r" ON a, b, LOAD "s" ON const(1) COMBINE [a, b]')
        assert tree.left == ast.Project(ast.Load("r"), ("a", "b"))
        assert tree.comb == ast.Permute(("a", "b"))

    def test_sample_and_parens(self):
        tree = parse('SAMPLE (LOAD "r") SHOTS 10 # trailing comment')
        assert tree == ast.Sample(ast.Load("r"), 10)

    @pytest.mark.parametrize(
        "src",
        [
            "",
            'LOAD r.rel',
            'LOAD "r',
            'SAMPLE LOAD "r" SHOTS 0',
            'SAMPLE LOAD "r" SHOTS 1.5',
            'PROJECT LOAD "r" ON',
            'JOIN LOAD "r" LOAD "s" ON const(1) COMBINE concat',
            'JOIN LOAD "r", LOAD "s" ON const(1) COMBINE merge',
            'SELECT LOAD "r" WHERE a != 1',
            'LOAD "r" LOAD "s"',
            'LOAD "r" $',
        ],
    )
    def test_syntax_errors(self, src):
        with pytest.raises(QuerySyntaxError):
            parse(src)


# -- round trip ----------------------------------------------------------------

idents = st.sampled_from(["a", "b", "k", "dept", "x_1"])
paths = st.text(alphabet='abc./_"\\ ', min_size=1, max_size=8)

preds = st.recursive(
    st.builds(ast.Cmp, idents, st.sampled_from(["=", "<", ">"]), st.one_of(st.integers(0, 99), st.builds(ast.FieldRef, idents))),
    lambda inner: st.one_of(
        st.builds(ast.And, inner, inner), st.builds(ast.Or, inner, inner), st.builds(ast.Not, inner)
    ),
    max_leaves=6,
)
sims = st.one_of(
    st.builds(ast.EqSim, idents, idents),
    st.builds(ast.WithinSim, idents, idents, st.floats(0.001, 1e6, allow_nan=False)),
    st.builds(ast.ConstSim, st.floats(0, 1)),
)
combs = st.one_of(
    st.just(ast.Concat()),
    st.builds(ast.ConcatDrop, idents),
    st.builds(ast.Permute, st.lists(idents, min_size=1, max_size=3).map(tuple)),
)
exprs = st.recursive(
    st.builds(ast.Load, paths),
    lambda inner: st.one_of(
        st.builds(ast.Select, inner, preds),
        st.builds(ast.Project, inner, st.lists(idents, min_size=1, max_size=3).map(tuple)),
        st.builds(ast.Join, inner, inner, sims, combs),
        st.builds(ast.Sample, inner, st.integers(1, 10**6)),
    ),
    max_leaves=5,
)


@given(exprs)
def test_print_parse_round_trip(tree):
    text = format_query(tree)
    again = parse(text)
    assert again == tree
    assert format_query(again) == text


# -- planning and execution --------------------------------------------------------


def write(tmp_path, name, rel):
    (tmp_path / name).write_text(dumps_relation(rel))


@pytest.fixture
def three_bit(tmp_path):
    schema = Schema.of(("k", 2), ("v", 1))
    write(tmp_path, "r.rel", WeightedRelation.from_values(schema, [(0, 0), (1, 1), (2, 0), (3, 1)]))
    write(tmp_path, "s.rel", WeightedRelation.from_values(schema, {(1, 0): 0.5, (2, 1): 0.3, (0, 1): 0.2}))
    return tmp_path


class TestPlan:
    def test_join_peak(self, three_bit):
        p = plan(parse('JOIN LOAD "r.rel", LOAD "s.rel" ON eq(k,k) COMBINE concat'), PlanConfig(base_dir=three_bit))
        assert p.peak_qubits == 7
        assert [s.kind for s in p.steps] == ["LOAD", "LOAD", "JOIN"]

    def test_unknown_field(self, three_bit):
        with pytest.raises(UnknownField) as e:
            plan(parse('PROJECT LOAD "r.rel" ON z'), PlanConfig(base_dir=three_bit))
        assert e.value.node == "PROJECT@1:1"

    def test_budget_names_join(self, three_bit):
        src = 'PROJECT\n JOIN LOAD "r.rel", LOAD "s.rel" ON const(1) COMBINE concat ON k'
        with pytest.raises(QubitBudgetExceeded) as e:
            plan(parse(src), PlanConfig(max_qubits=6, base_dir=three_bit))
        assert e.value.node == "JOIN@2:2"

    def test_missing_file(self, tmp_path):
        doc = run_query('LOAD "nope.rel"', base_dir=tmp_path)
        assert doc.error.kind == "FileError" and doc.exit_code == 2


class TestExecute:
    def test_both_modes_agree_on_equijoin(self, three_bit):
        p = plan(parse('JOIN LOAD "r.rel", LOAD "s.rel" ON eq(k,k) COMBINE concat_drop(k)'), PlanConfig(base_dir=three_bit))
        doc = execute(p, "both", seed=1)
        assert doc.ok and doc.tv_distance < 1e-9
        join = doc.stats[-1]
        assert join.classical_steps == 12 and join.quantum_steps > 0

    def test_sample_count(self, three_bit):
        doc = execute(plan(parse('SAMPLE LOAD "r.rel" SHOTS 1000'), PlanConfig(base_dir=three_bit)), "quantum", 5)
        assert sum(doc.samples.values()) == 1000

    def test_empty_join_document(self, tmp_path):
        schema = Schema.of(("k", 2))
        write(tmp_path, "a.rel", WeightedRelation.from_values(schema, [(0,)]))
        write(tmp_path, "b.rel", WeightedRelation.from_values(schema, [(1,)]))
        doc = run_query('JOIN LOAD "a.rel", LOAD "b.rel" ON eq(k, k) COMBINE concat', base_dir=tmp_path, mode="both")
        assert doc.error.kind == "EmptyJoin"
        assert "node = JOIN@1:1" in doc.render()
        assert doc.exit_code == 2

    def test_deterministic_bytes(self, three_bit):
        src = 'SAMPLE JOIN LOAD "r.rel", LOAD "s.rel" ON within(k, k, 2) COMBINE [k, v_2] SHOTS 500'
        outs = {run_query(src, base_dir=three_bit, mode="both", seed=9).render() for _ in range(3)}
        assert len(outs) == 1

    def test_postselect_off_reports_physical_distribution(self, three_bit):
        src = 'JOIN LOAD "r.rel", LOAD "s.rel" ON eq(k, k) COMBINE concat'
        on = run_query(src, base_dir=three_bit, mode="both")
        off = run_query(src, base_dir=three_bit, mode="both", postselect=False)
        assert on.tv_distance < 1e-9
        success = off.stats[-1].success_probability
        assert off.tv_distance <= 2 * (1 - success) + 1e-12

    def test_similarity_level_two(self, three_bit):
        src = 'JOIN LOAD "r.rel", LOAD "s.rel" ON within(k, k, 3) COMBINE concat'
        doc = run_query(src, base_dir=three_bit, mode="both", similarity_level=2)
        assert doc.ok and doc.tv_distance < 1e-9


def random_query(rng, names):
    """A random query over relation files ``names`` with schema (k:2, v:2)."""
    def leaf():
        return ast.Load(str(rng.choice(names)))

    kind = rng.integers(0, 4)
    if kind == 0:
        return ast.Select(leaf(), ast.Or(ast.Cmp("k", "<", int(rng.integers(1, 4))), ast.Cmp("v", "=", int(rng.integers(0, 4)))))
    if kind == 1:
        return ast.Project(leaf(), (str(rng.choice(["k", "v"])),))
    sim = ast.WithinSim("k", "v", float(rng.integers(1, 4))) if kind == 2 else ast.EqSim("v", "k")
    comb = ast.Permute(("k", "v_2")) if rng.random() < 0.5 else ast.Concat()
    j = ast.Join(leaf(), leaf(), sim, comb)
    return ast.Project(j, ("v_2",)) if rng.random() < 0.3 else j


def test_random_queries_agree(tmp_path):
    rng = np.random.default_rng(77)
    schema = Schema.of(("k", 2), ("v", 2))
    names = []
    for n in range(4):
        rows = rng.choice(16, int(rng.integers(1, 17)), replace=False)
        p = rng.dirichlet(np.ones(len(rows)))
        write(tmp_path, f"r{n}.rel", WeightedRelation(schema, dict(zip(rows.tolist(), p.tolist()))))
        names.append(f"r{n}.rel")
    checked = 0
    for _ in range(60):
        tree = random_query(rng, names)
        doc = execute(plan(tree, PlanConfig(base_dir=tmp_path)), "both", seed=3)
        if doc.error is not None:
            assert doc.error.kind in ("EmptyJoin", "EmptySelection")
            continue
        assert doc.tv_distance < 1e-9, format_query(tree)
        checked += 1
    assert checked > 40
