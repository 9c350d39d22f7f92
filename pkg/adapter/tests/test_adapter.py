import io
import json
import pickle
import subprocess
import sys

import pytest

from oracle_adapter import AdapterConfig, load_predictor, serve


def run_serve(config, lines):
    """Drive serve() in-process; returns (exit_code, output lines)."""
    stdin = io.StringIO("".join(line + "\n" for line in lines))
    stdout = io.StringIO()
    code = serve(config, stdin=stdin, stdout=stdout)
    return code, stdout.getvalue().splitlines()


def and_config(**kw):
    return AdapterConfig(
        n_features=2, callable_path="oracle_adapter.demo:and_gate", **kw
    )


HELLO2 = '{"hello":{"n_features":2}}'


def test_handshake_echoes_feature_count():
    code, out = run_serve(and_config(), [HELLO2])
    assert code == 0
    assert out == ['{"ready":true,"n_features":2}']


def test_serves_predictions_in_order():
    lines = [HELLO2] + [
        json.dumps({"id": i, "x": [i & 1, (i >> 1) & 1]}) for i in range(4)
    ]
    code, out = run_serve(and_config(), lines)
    assert code == 0
    assert out[1:] == [
        '{"id":0,"y":0}',
        '{"id":1,"y":0}',
        '{"id":2,"y":0}',
        '{"id":3,"y":1}',
    ]


def test_soak_1000_requests_strictly_ordered():
    lines = [HELLO2] + [json.dumps({"id": i, "x": [1, 1]}) for i in range(1000)]
    code, out = run_serve(and_config(), lines)
    assert code == 0
    assert [json.loads(o)["id"] for o in out[1:]] == list(range(1000))
    assert all(json.loads(o)["y"] == 1 for o in out[1:])


def test_eof_before_handshake_is_clean():
    code, out = run_serve(and_config(), [])
    assert code == 0 and out == []


def test_wrong_feature_count_is_protocol_error():
    code, out = run_serve(and_config(), ['{"hello":{"n_features":5}}'])
    assert code == 1
    assert "protocol_error" in out[0]


def test_malformed_request_exits_nonzero():
    code, out = run_serve(and_config(), [HELLO2, "not json"])
    assert code == 1
    assert "protocol_error" in out[-1]


def test_non_increasing_ids_are_rejected():
    lines = [HELLO2, '{"id":0,"x":[0,0]}', '{"id":0,"x":[0,0]}']
    code, out = run_serve(and_config(), lines)
    assert code == 1
    assert "strictly increasing" in out[-1]


def test_non_bit_payload_is_rejected():
    code, out = run_serve(and_config(), [HELLO2, '{"id":0,"x":[0,2]}'])
    assert code == 1
    assert "bits" in out[-1]


def test_model_exception_is_per_request_not_fatal():
    config = AdapterConfig(
        n_features=2, callable_path="operator:truediv"  # wrong arity: raises
    )
    lines = [HELLO2, '{"id":0,"x":[1,1]}']
    code, out = run_serve(config, lines)
    assert code == 0
    reply = json.loads(out[1])
    assert reply["id"] == 0
    assert reply["error"]


def test_recovers_after_model_error():
    calls = {"n": 0}

    def flaky(x):
        calls["n"] += 1
        if calls["n"] == 1:
            raise RuntimeError("warmup")
        return x[0]

    sys.modules[__name__].flaky = flaky
    config = AdapterConfig(n_features=2, callable_path=f"{__name__}:flaky")
    lines = [HELLO2, '{"id":0,"x":[1,0]}', '{"id":1,"x":[1,0]}']
    code, out = run_serve(config, lines)
    assert code == 0
    assert "error" in out[1]
    assert json.loads(out[2]) == {"id": 1, "y": 1}


def test_pickled_predictor(tmp_path):
    model = tmp_path / "model.pkl"
    model.write_bytes(pickle.dumps(max))  # max over bits == OR
    config = AdapterConfig(n_features=3, model_file=str(model))
    code, out = run_serve(config, ['{"hello":{"n_features":3}}', '{"id":0,"x":[0,1,0]}'])
    assert code == 0
    assert json.loads(out[1]) == {"id": 0, "y": 1}


def test_binarize_threshold_maps_scores():
    def scorer(x):
        return 0.25 + 0.5 * x[0]

    sys.modules[__name__].scorer = scorer
    config = AdapterConfig(
        n_features=1, callable_path=f"{__name__}:scorer", binarize_threshold=0.5
    )
    code, out = run_serve(config, ['{"hello":{"n_features":1}}',
                                   '{"id":0,"x":[0]}', '{"id":1,"x":[1]}'])
    assert code == 0
    assert json.loads(out[1]) == {"id": 0, "y": 0}
    assert json.loads(out[2]) == {"id": 1, "y": 1}


def test_non_binary_result_without_threshold_is_request_error():
    sys.modules[__name__].bad = lambda x: 0.7
    config = AdapterConfig(n_features=1, callable_path=f"{__name__}:bad")
    code, out = run_serve(config, ['{"hello":{"n_features":1}}', '{"id":0,"x":[1]}'])
    assert code == 0
    assert "error" in json.loads(out[1])


def test_config_validation():
    with pytest.raises(ValueError):
        AdapterConfig(n_features=2)
    with pytest.raises(ValueError):
        AdapterConfig(n_features=2, callable_path="a:b", model_file="c.pkl")
    with pytest.raises(ValueError):
        AdapterConfig(n_features=0, callable_path="a:b")


def test_load_predictor_dotted_path():
    fn = load_predictor(AdapterConfig(n_features=2, callable_path="oracle_adapter.demo.or_gate"))
    assert fn([0, 1]) == 1


def test_cli_subprocess_end_to_end():
    proc = subprocess.run(
        [sys.executable, "-m", "oracle_adapter",
         "--callable", "oracle_adapter.demo:and_gate", "--n-features", "2"],
        input=HELLO2 + "\n" + '{"id":0,"x":[1,1]}' + "\n",
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines() == [
        '{"ready":true,"n_features":2}',
        '{"id":0,"y":1}',
    ]
