import json

import pytest

from corpus import FAMILY_PARAMS, family_corpus, gmm_corpus
from fuzz import mutations
from maltsev_csp.algebra import affine_op, majority_op
from maltsev_csp.certificate import (
    NotUnsat,
    RejectAtStep,
    check_certificate,
    emit_certificate,
    parse_certificate,
)
from maltsev_csp.gmm import solve_gmm
from maltsev_csp.instance import make_instance
from maltsev_csp.maltsev import solve
from maltsev_csp.oracle import enumerate_solutions

EQ = [(0, 0), (1, 1)]
NE = [(0, 1), (1, 0)]
CHAIN = make_instance(3, 2, None, [(0, 1, EQ), (1, 2, EQ), (0, 2, NE)])


def cert(inst=CHAIN, op=None, gmm=False):
    op = op or affine_op(2)
    return emit_certificate(solve_gmm(inst, op) if gmm else solve(inst, op))


def edit(text, fn):
    data = json.loads(text)
    fn(data)
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def rejected(text, inst=CHAIN, op=None):
    with pytest.raises(RejectAtStep) as info:
        check_certificate(inst, op or affine_op(2), text)
    return info.value


def test_round_trip_accepts():
    assert check_certificate(CHAIN, affine_op(2), cert())
    assert check_certificate(CHAIN, majority_op(2), cert(op=majority_op(2), gmm=True))
    assert check_certificate(CHAIN, affine_op(2), parse_certificate(cert()))


def test_sat_outcome_has_no_certificate():
    with pytest.raises(NotUnsat):
        emit_certificate(solve(make_instance(2, 2, None, [(0, 1, EQ)]), affine_op(2)))


def test_canonical_form_is_idempotent():
    text = cert()
    assert parse_certificate(text).dumps() == text
    assert cert() == text


def test_shape():
    data = json.loads(cert())
    assert sorted(data) == ["algebra_digest", "edges", "instance_digest", "mode", "reps", "verdict"]
    assert data["verdict"] == "unsat" and data["mode"] == "maltsev"
    assert len(data["reps"]) == CHAIN.m + 1 and data["reps"][-1] == []


def test_r0_missing_key_rejected_at_step_zero():
    err = rejected(edit(cert(), lambda d: d["reps"][0].pop(3)))
    assert err.step == 0


def test_flipped_value_rejected():
    def flip(d):
        item = d["reps"][1][0]
        item["map"][2] = 1 - item["map"][2]

    err = rejected(edit(cert(), flip))
    assert err.step == 1


def test_header_rejections():
    assert rejected(edit(cert(), lambda d: d.update(verdict="sat"))).step is None
    assert "instance digest" in rejected(edit(cert(), lambda d: d.update(instance_digest="0" * 64))).reason
    assert "algebra digest" in rejected(cert(), op=majority_op(2)).reason
    assert rejected(edit(cert(), lambda d: d["edges"].reverse())).step is None
    assert rejected(edit(cert(), lambda d: d["reps"].pop())).step is None
    assert rejected(edit(cert(), lambda d: d.update(extra=1))).step is None
    assert rejected(edit(cert(), lambda d: d.pop("mode"))).step is None
    assert rejected("[]").step is None
    assert rejected("{").step is None


def test_wrong_mode_for_algebra():
    # the majority table is not Mal'tsev, so a Mal'tsev-mode trace cannot be replayed
    text = edit(cert(op=majority_op(2), gmm=True), lambda d: d.update(mode="maltsev"))
    assert "not Mal'tsev" in rejected(text, op=majority_op(2)).reason


def test_nonempty_final_representation():
    inst = make_instance(2, 2, None, [(0, 1, EQ)])
    # a forged unsat claim built from the run of a satisfiable instance
    out = solve(inst, affine_op(2))
    data = {
        "instance_digest": inst.digest(),
        "algebra_digest": affine_op(2).digest(),
        "mode": "maltsev",
        "edges": json.loads(cert())["edges"][:1],
        "reps": [r.to_json() for r in out.reps],
        "verdict": "unsat",
    }
    err = rejected(json.dumps(data), inst=inst)
    assert err.step == 1 and "not empty" in err.reason


def test_reordered_entries_rejected():
    def shuffle(d):
        d["reps"][0][0], d["reps"][0][1] = d["reps"][0][1], d["reps"][0][0]

    err = rejected(edit(cert(), shuffle))
    assert err.step == 0 and "canonical" in err.reason


def test_empty_domain_certificate():
    inst = make_instance(2, 2, [[0, 1], []], [(0, 0, EQ)])
    text = cert(inst)
    assert check_certificate(inst, affine_op(2), text)
    assert json.loads(text)["reps"] == [[], []]


@pytest.mark.parametrize("label, params", FAMILY_PARAMS)
def test_corpus_certificates_accepted(label, params):
    for g in family_corpus(label, params, 30, base_seed=5):
        for solver in (solve, solve_gmm):
            out = solver(g.instance, g.algebra)
            if out.sat:
                continue
            assert not enumerate_solutions(g.instance)
            assert check_certificate(g.instance, g.algebra, emit_certificate(out))


def test_mixed_gmm_certificates_accepted():
    for g in gmm_corpus(20, q=3, seed=9):
        out = solve_gmm(g.instance, g.algebra)
        if not out.sat:
            assert check_certificate(g.instance, g.algebra, emit_certificate(out))


def test_fuzzed_certificates_rejected():
    g = next(g for g in family_corpus("lin_p3", dict(FAMILY_PARAMS)["lin_p3"], 10, base_seed=1) if g.planted is None)
    for solver in (solve, solve_gmm):
        text = emit_certificate(solver(g.instance, g.algebra))
        for blob, what in mutations(text, 60, seed=solver.__name__):
            with pytest.raises(RejectAtStep):
                check_certificate(g.instance, g.algebra, blob)
                pytest.fail(f"accepted mutation {what}")
