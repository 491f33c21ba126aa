"""Smoke test of the Python bindings: formulas, a small monitored
experiment, monitor training and tabulation."""

import json
import math

import agentwatch_py as aw


def close(a, b, tol=1e-4):
    assert abs(a - b) < tol, (a, b)


def main():
    close(aw.entropy([0.5, 0.25, 0.25]), 1.5 * math.log(2))
    close(aw.varentropy([0.9, 0.1]), 0.4345)
    close(aw.kurtosis([0.9, 0.1]), 8.1111)
    try:
        aw.entropy([0.5, 0.6])
        raise AssertionError("invalid distribution accepted")
    except ValueError:
        pass

    f = aw.extract_features([[0.5, 0.5], [1.0]], 3)
    close(f["max_entropy"], math.log(2))
    assert f["turn_index"] == 3
    assert aw.extract_features([], 1) is None

    env = {"env": "whodunit", "variant": "asymmetric", "n_suspects": 6, "turn_limit": 31}
    rogue = {"kind": "rogue", "profile": {"epsilon": 0.3, "behaviors": {"hallucinate_fact": 1.0}}}
    base = {"environment": env, "agents": {"accuser": rogue}, "seed": 5}
    manifest = aw.gen_dataset(json.dumps(base), (80, 40, 40), 3)
    assert len(json.loads(manifest)["test"]) == 40

    train, _ = aw.run(json.dumps(base), manifest, "train")
    validation, _ = aw.run(json.dumps(base), manifest, "validation")
    model = aw.train_monitor(train, validation, "accuser")
    m = json.loads(model)
    assert m["role"] == "accuser"
    p = aw.predict_success(model, 0.05, 0.01, 1.0, 3)
    assert math.isfinite(p)

    _, before = aw.run(json.dumps(base), manifest, "test")
    monitored = dict(base, monitor={"kind": "random", "p": 0.2}, intervention={"kind": "full-reset", "cap": 1})
    trajectories, after = aw.run(json.dumps(monitored), manifest, "test")
    lines = [json.loads(l) for l in trajectories.splitlines()]
    assert sum(1 for l in lines if l["type"] == "header") == 40
    table = aw.summarize([("base", before), ("random", after)])
    assert "base" in table and "random" in table
    print(table, end="")
    print("smoke test passed")


if __name__ == "__main__":
    main()
