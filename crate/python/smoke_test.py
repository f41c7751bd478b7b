"""Smoke test for the argverify Python extension.

Builds the extension with cargo, loads it from a temporary directory and
exercises solving, explanation, contestation, the property suite and the
mock-backed pipeline.

Usage: python3 python/smoke_test.py
"""

import importlib.util
import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "crates" / "core" / "tests" / "fixtures" / "eval20"


def load_extension(tmp):
    subprocess.run(["cargo", "build", "--release", "-p", "argverify-python"], cwd=ROOT, check=True)
    target = ROOT / "target" / "release"
    built = next(p for p in (target / "libargverify.so", target / "libargverify.dylib") if p.exists())
    dest = Path(tmp) / "argverify.so"
    shutil.copy(built, dest)
    module_spec = importlib.util.spec_from_file_location("argverify", dest)
    module = importlib.util.module_from_spec(module_spec)
    module_spec.loader.exec_module(module)
    return module


def main():
    with tempfile.TemporaryDirectory() as tmp:
        av = load_extension(tmp)

        q = av.QBAF(
            [
                ("claim", "claim", "Vitamin C prevents colds.", 0.5),
                ("E1", "evidence", "A trial found fewer colds.", 0.5),
                ("E2", "evidence", "A second trial agreed.", 0.5),
                ("E3", "evidence", "A review found no effect.", 0.5),
            ],
            attacks=[("E3", "claim"), ("E3", "E1")],
            supports=[("E1", "claim"), ("E2", "claim"), ("E2", "E1")],
        )
        assert len(q) == 4 and q.claim_id() == "claim"
        r = q.solve()
        assert r.converged and len(r.samples) == r.steps + 1
        assert all(0.0 <= s <= 1.0 for s in r.strengths.values())
        assert av.QBAF.from_json(q.to_json()).to_json() == q.to_json()
        print("solve:", r, {k: round(v, 4) for k, v in r.strengths.items()})

        e = av.explain(q, r, "claim")
        print("explain:", e["rendered"])

        edits = [
            {"op": "set_base_score", "id": "E1", "base_score": 0.1},
            {"op": "set_base_score", "id": "E3", "base_score": 0.9},
        ]
        report, edited = av.contest(q, edits)
        assert report["flipped"] and report["after"]["label"] == "false"
        assert edited.base_score("E1") == 0.1
        print("contest: claim %.4f -> %.4f" % (report["before"]["claim_strength"], report["after"]["claim_strength"]))

        reports, nonconverged = av.check_axioms("franklin", count=50, seed=3)
        assert nonconverged == 0 and all(x["holds"] for x in reports)
        print("axioms: franklin holds on", len(reports), "instances")

        try:
            av.contest(q, [{"op": "set_base_score", "id": "E1", "base_score": 1.5}])
            raise AssertionError("expected a range violation")
        except av.ArgverifyError as err:
            assert err.args[0] == "RangeViolation", err.args

        corpus = av.CorpusIndex.from_jsonl(str(FIXTURES / "corpus.jsonl"))
        client = av.MockClient.from_jsonl(str(FIXTURES / "mock.jsonl"))
        first = json.loads((FIXTURES / "claims.jsonl").read_text().splitlines()[0])
        v = av.verify(first["claim"], corpus, client, claim_id=first["claim_id"])
        print("verify:", first["claim_id"], v["verdict"])

        summary = av.evaluate(str(FIXTURES / "claims.jsonl"), corpus, client, out_dir=tmp, jobs=2)
        assert summary["n_claims"] == 20 and summary["n_errors"] == 0
        assert (Path(tmp) / "summary.json").exists()
        print("eval: accuracy", summary["accuracy"], "fallback", summary["n_fallback"])

    print("python smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
