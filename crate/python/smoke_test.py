"""Smoke test of the fundcast Python module on a small synthetic corpus.

Build and install the module first:

    pip install -e crates/python --no-build-isolation
    python3 python/smoke_test.py
"""

import json
import math
import os
import sys
import tempfile

import fundcast


def main():
    assert math.isclose(fundcast.roc_auc([0.9, 0.8, 0.1], [True, False, False]), 1.0)
    assert math.isclose(fundcast.corrected_auc(0.5, 0.06, 0.915), 0.5)
    assert fundcast.precision_at_k([3.0, 2.0, 1.0], [True, False, True], 2) == 0.5
    test = fundcast.rank_sum_test([float(i) for i in range(1, 11)], [float(i) for i in range(11, 21)])
    assert test["exact"] and test["statistic"] == 55.0
    assert "n_trees" in fundcast.default_config("gbdt")

    with tempfile.TemporaryDirectory() as tmp:
        corpus = os.path.join(tmp, "corpus")
        n = fundcast.generate_corpus(corpus, n_startups=60, seed=11)
        assert n == 60

        events = fundcast.extract_events(
            os.path.join(corpus, "startups.jsonl"), os.path.join(corpus, "texts.jsonl"))
        assert events and {"startup_id", "date", "amount"} <= events[0].keys()

        noise = fundcast.estimate_noise(os.path.join(corpus, "audits.jsonl"))
        assert 0.0 <= noise["noise"]["alpha"] < noise["noise"]["beta"] <= 1.0

        data = fundcast.Dataset.build(corpus, config={"vocab_size": 20})
        counts = data.counts()
        assert counts["train"]["n_p"] > 0 and counts["test"]["n_u"] > 0
        data.save(os.path.join(tmp, "dataset.jsonl"))
        assert fundcast.Dataset.load(os.path.join(tmp, "dataset.jsonl")).schema_hash == data.schema_hash
        assert len(data.feature_names) == data.n_features
        assert len(data.rows("test")) == len(data.labels("test"))

        model = fundcast.Model.train(data, kind="gbdt", seed=1, config={"n_trees": 20})
        assert model.schema_hash == data.schema_hash
        assert model.config()["n_trees"] == 20

        scores = model.predict(data, "test")
        assert scores == model.score(data.rows("test"))

        path = os.path.join(tmp, "model.json")
        model.save(path)
        assert fundcast.Model.load(path).predict(data) == scores
        assert fundcast.Model.from_json(model.to_json()).predict(data) == scores

        report = model.evaluate(data, k_values=[5, 10], alpha=0.06, beta=0.915)
        assert 0.0 <= report["auc_raw"] <= 1.0
        assert len(report["at_k"]) == 2

        narrow = data.without_groups(["web"])
        try:
            model.predict(narrow)
        except ValueError as e:
            assert model.schema_hash in str(e)
        else:
            raise AssertionError("schema mismatch not detected")

        try:
            fundcast.Model.train(data, kind="gbdt", seed=1, config={"n_tree": 20})
        except ValueError as e:
            assert "n_tree" in str(e)
        else:
            raise AssertionError("unknown config key accepted")

    print(json.dumps({"auc_raw": report["auc_raw"], "auc_corrected": report["auc_corrected"]}))
    print("smoke test passed")


if __name__ == "__main__":
    sys.exit(main())
