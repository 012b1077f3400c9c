"""Smoke test for the ilrepair_py extension.

Build and install it first, e.g. `maturin develop -m crates/py/Cargo.toml`,
then run `python crates/py/python/smoke_test.py`.
"""

import ilrepair_py as ir

FIGURE_QUESTIONS = [
    "Is your sentence mainly about someone being free?",
    "Is your sentence a statement?",
    "Is Tuesday afternoon the ninth the time of being free in your sentence?",
    'Is it "I" who is being free in your sentence?',
]


def main():
    spec = ir.Spec.demo()
    glosses = ir.Glosses.demo()
    nets = ir.Networks.demo(spec)

    fs = ir.FeatureStructure("((frame *free) (who ((frame *i))) (when ((frame *simple-time) (day 9))))")
    assert fs.frame == "*free"
    assert fs.get("when.day") == "9"
    assert spec.leaf_type_of(fs) == "<FREE>"
    assert spec.conforms(fs, "<FREE>")
    assert ("when.day", "9") in fs.flatten()
    assert ir.FeatureStructure(str(fs)) == fs

    # step by step, answered by the record's gold structure
    session = ir.Session(ir.FIGURE_RECORD, spec, nets, glosses, max_questions=4)
    asked = []
    while (q := session.question()) is not None:
        asked.append(q[1])
        session.answer(session.oracle_answer())
    assert asked == FIGURE_QUESTIONS, asked
    assert session.finished
    assert glosses.paraphrase(session.result()) == "I am free Tuesday afternoon the ninth."
    assert session.accuracy()[1] == 1.0

    # whole session with scripted answers
    out = ir.repair(ir.FIGURE_RECORD, spec, ir.Networks.demo(spec), glosses, answers=[True, True, False])
    assert out["transcript"][2][2] is False
    assert out["result"].get("when") is None

    # service views are plain dicts
    svc = ir.SessionService(spec, ir.Networks.demo(spec), glosses)
    view = svc.create(ir.FIGURE_RECORD)
    assert view["status"] == "awaiting-answer"
    view = svc.answer(view["id"], True, view["question"]["seq"])
    assert view["question"]["text"] == FIGURE_QUESTIONS[1]
    try:
        svc.answer(view["id"], True, 7)
    except RuntimeError as e:
        assert "outstanding" in str(e)
    else:
        raise AssertionError("out-of-order answer accepted")

    ranked = nets.predict("symbol-to-type", ["ya"])
    assert len(ranked) == len(spec.leaves())
    table = ir.evaluate(ir.SYNTHETIC_CORPUS, spec, ir.Networks.demo(spec), glosses, budgets=[0, 10], policies=["meta"])
    rows = [line.split("\t") for line in table.splitlines()[1:]]
    assert float(rows[1][3]) >= float(rows[0][3])
    assert ir.synthetic_corpus(spec) == ir.SYNTHETIC_CORPUS
    assert ir.Networks.load(nets.save()) == nets

    print("smoke test passed")


if __name__ == "__main__":
    main()
