import json

import pytest

from glrmf.cli import load_config, main
from glrmf.errors import ParseError, ValidationError
from glrmf.network import dump_spec

from conftest import chain2, three_net


@pytest.fixture
def net_file(tmp_path):
    path = tmp_path / "net.json"
    dump_spec(three_net(), path)
    return path


def _config(tmp_path, **kw):
    doc = {"spec_path": "net.json", "output_dir": "out", "seeds": [1, 2],
           "M_sweep": [2, 10], "horizon_T": 4000.0}
    doc.update(kw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


def test_ei(capsys):
    assert main(["ei", "1"]) == 0
    val, err = capsys.readouterr().out.split()
    assert float(val) == pytest.approx(1.895117816355937, rel=1e-15)
    assert len(val.replace(".", "").lstrip("0")) == 17
    assert main(["ei", "0"]) == 2


def test_validate(net_file, tmp_path, capsys):
    assert main(["validate", str(net_file)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["strict_feedforward"] and doc["incoming_abs_sums"] == [0.0, 0.4, 0.8]
    bad = tmp_path / "bad.json"
    dump_spec(chain2(r=(1.0, 0.0)), bad)
    assert main(["validate", str(bad)]) == 1
    assert main(["validate", str(tmp_path / "missing.json")]) == 2


def test_solve(net_file, capsys):
    assert main(["solve", str(net_file)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "neuron,beta,condition,u_min,quad_error,degenerate"
    assert float(out[2].split(",")[1]) == pytest.approx(0.6388561751750867, rel=1e-9)
    assert main(["solve", str(net_file), "--printed-h", "--format", "json",
                 "--rel-tol", "1e-8"]) == 0
    assert json.loads(capsys.readouterr().out)["neurons"][0]["neuron"] == 1


def test_simulate_byte_identical(net_file, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"ev{k}.csv"
        assert main(["simulate", str(net_file), "--M", "3", "--T", "50", "--seed", "9",
                     "--sampler", "queue", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    meta = json.loads((tmp_path / "ev0.csv.json").read_text())
    assert meta["seed"] == 9 and meta["M"] == 3


def test_generate_example(tmp_path, capsys):
    out = tmp_path / "gen.json"
    assert main(["generate-example", "--n", "4", "--a0", "0.05", "--drift", "0",
                 "--targets", "halving", "--out", str(out)]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[0].startswith("neuron,target,reset,beta,feasible")
    assert rows[1].split(",")[0] == "1"
    assert json.loads(out.read_text())["n"] == 4


def test_load_config(net_file, tmp_path):
    cfg = load_config(_config(tmp_path))
    assert cfg.M_sweep == [2, 10] and cfg.sampler == "queue"
    with pytest.raises(ParseError, match="foo"):
        load_config(_config(tmp_path, foo=1))
    path = tmp_path / "nospec.json"
    path.write_text(json.dumps({"seeds": [1]}))
    with pytest.raises(ValidationError):
        load_config(path)
    path.write_text('{"spec_path": "net.json",\n "seeds": [1,]}')
    with pytest.raises(ParseError, match="line 2"):
        load_config(path)


def test_validate_rmf_pass_and_outputs(net_file, tmp_path):
    cfg = _config(tmp_path)
    assert main(["validate-rmf", str(cfg)]) == 0
    table = (tmp_path / "out" / "convergence.csv").read_text().splitlines()
    assert table[0] == "M,neuron,beta,rate,ci,z" and len(table) == 7
    first = (tmp_path / "out" / "convergence.csv").read_bytes()
    assert main(["validate-rmf", str(cfg)]) == 0
    assert (tmp_path / "out" / "convergence.csv").read_bytes() == first


def test_validate_rmf_degenerate_fails(tmp_path):
    dump_spec(chain2(a2=1.0, w=-0.5), tmp_path / "net.json")
    assert main(["validate-rmf", str(_config(tmp_path, horizon_T=500.0))]) == 1
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["degenerate_neurons"] == [2]


def test_validate_rmf_missing_spec(tmp_path):
    assert main(["validate-rmf", str(_config(tmp_path))]) == 2
    assert main(["validate-rmf", str(tmp_path / "nope.json")]) == 2


def test_usage_error():
    assert main(["simulate"]) == 2
    assert main(["bogus"]) == 2
