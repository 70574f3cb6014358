import csv
import json

import pytest

from clientdiv.cli import emit_plot_data, main
from clientdiv.proofs import ProofMechanism
from clientdiv.sim import ScenarioConfig, Strategy, run
from clientdiv.contract import RewardParams


def read_json_line(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


@pytest.fixture
def code_tree(tmp_path):
    for impl in "ABC":
        d = tmp_path / "clients" / impl
        d.mkdir(parents=True)
        (d / "attest.bin").write_bytes(f"client{impl}-v1".encode())
    return tmp_path / "clients"


def test_commit_prints_sorted_lines(code_tree, capsys):
    files = [str(code_tree / i / "attest.bin") for i in "CAB"]
    assert main(["commit", *files]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [ln.split()[:2] for ln in lines] == [["A", "attest"], ["B", "attest"], ["C", "attest"]]
    assert lines[0].split()[2] == \
        "b1a971878c9172a7e9a749f4be8c189c662dafcd6a31b506362feff82216b2f8"


def test_commit_explicit_keys_and_duplicate(tmp_path, capsys):
    f = tmp_path / "code.bin"
    f.write_bytes(b"same")
    assert main(["commit", f"X:sign={f}", f"Y:sign={f}"]) == 1
    assert "share digest" in capsys.readouterr().err


@pytest.mark.parametrize("mech", ["attested", "succinct"])
def test_prove_then_verify(code_tree, tmp_path, capsys, mech):
    out = tmp_path / "reg"
    assert main(["commit", *[str(code_tree / i / "attest.bin") for i in "ABC"],
                 "--out", str(out)]) == 0
    capsys.readouterr()
    reg = str(out / "registry.json")
    proof = tmp_path / "p.bin"
    assert main(["prove", "--registry", reg, "--impl", "B", "--step", "attest",
                 "--block", "12", "--key-seed", "5", "--mechanism", mech,
                 "--out", str(proof)]) == 0
    pub = read_json_line(capsys)["public_key"]
    assert main(["verify", str(proof), "--registry", reg, "--trusted-key", pub]) == 0
    res = read_json_line(capsys)
    assert res["impl_id"] == "B" and res["block"] == 12

    data = bytearray(proof.read_bytes())
    data[40] ^= 1  # low byte of the block number
    proof.write_bytes(bytes(data))
    assert main(["verify", str(proof), "--registry", reg, "--trusted-key", pub]) == 1


def test_verify_untrusted(code_tree, tmp_path, capsys):
    out = tmp_path / "reg"
    main(["commit", str(code_tree / "A" / "attest.bin"), "--out", str(out)])
    proof = tmp_path / "p.bin"
    main(["prove", "--registry", str(out / "registry.json"), "--impl", "A", "--step",
          "attest", "--block", "0", "--key-seed", "1", "--out", str(proof)])
    keys = tmp_path / "keys.json"
    keys.write_text("[]")
    capsys.readouterr()
    assert main(["verify", str(proof), "--registry", str(out / "registry.json"),
                 "--trusted-keys", str(keys)]) == 1
    assert "UntrustedAttester" in capsys.readouterr().err


def test_simulate_bundled_scenario_deterministic(tmp_path):
    a, b = tmp_path / "run1", tmp_path / "run2"
    assert main(["simulate", "--config", "scenario-83-8-8.json", "--seed", "42",
                 "--out", str(a)]) == 0
    assert main(["simulate", "--config", "scenario-83-8-8.json", "--seed", "42",
                 "--out", str(b)]) == 0
    for name in ("series.csv", "plot.csv", "manifest.json", "config.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["seed"] == 42 and len(manifest["config_hash"]) == 64


def test_simulate_config_file_and_seed_fanout(tmp_path):
    cfg = ScenarioConfig(n_validators=6, impls=(("A", b"a"), ("B", b"b"), ("C", b"c")),
                         initial_assignment={"A": 4, "B": 1, "C": 1},
                         params=RewardParams(1, 2, 10), max_blocks=10,
                         mechanism=ProofMechanism.SUCCINCT)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert main(["simulate", "--config", str(path), "--seeds", "1..3", "--jobs", "2",
                 "--out", str(tmp_path / "out")]) == 0
    for s in (1, 2, 3):
        assert (tmp_path / "out" / f"seed-{s}" / "series.csv").exists()
    one = main(["simulate", "--config", str(path), "--seed", "2", "--out", str(tmp_path / "s2")])
    assert one == 0
    assert (tmp_path / "s2" / "series.csv").read_bytes() == \
        (tmp_path / "out" / "seed-2" / "series.csv").read_bytes()


def test_simulate_missing_config_is_usage_error(tmp_path, capsys):
    assert main(["simulate", "--config", "missing.json", "--out", str(tmp_path / "x")]) == 2
    assert "no such config" in capsys.readouterr().err


def test_simulate_invalid_config_is_domain_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n_validators": 3, "impls": [{"id": "A", "code": "a"}],
                                "initial_assignment": {"A": 2},
                                "params": {"epsilon": 1, "r_min": 2, "r_max": 10},
                                "max_blocks": 5}))
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "x")]) == 1


def test_usage_error_exit_code(capsys):
    assert main([]) == 2
    assert main(["analyze", "slash", "--buggy", "B"]) == 2


def test_analyze_econ_succinct(capsys):
    assert main(["analyze", "econ", "--mechanism", "succinct", "--gas-price", "1"]) == 0
    rep = read_json_line(capsys)
    assert rep["break_even_reward"]["avg"] == 289728
    assert rep["proving_feasible"] is False


def test_analyze_econ_attested(capsys):
    assert main(["analyze", "econ", "--mechanism", "attested", "--gas-price", "2"]) == 0
    rep = read_json_line(capsys)
    assert rep["break_even_reward"]["avg"] == 2 * 5397746 and rep["proving_feasible"]


def test_analyze_slash(capsys, tmp_path):
    assert main(["analyze", "slash", "--counts", "A=2,B=8,C=2", "--buggy", "B",
                 "--out", str(tmp_path)]) == 0
    rep = read_json_line(capsys)
    assert rep["slashed_count"] == 8 and rep["class"] == "majority"
    assert not rep["corrupted_state_accepted"]
    assert (tmp_path / "report.json").exists() and (tmp_path / "manifest.json").exists()
    assert main(["analyze", "slash", "--counts", "A=2", "--buggy", "Q"]) == 1


def test_contract_inspect(tmp_path, capsys):
    out = tmp_path / "run"
    main(["simulate", "--config", "scenario-83-8-8.json", "--out", str(out)])
    capsys.readouterr()
    assert main(["contract", "inspect", str(out / "contract.json")]) == 0
    rep = read_json_line(capsys)
    assert rep["minority"] in ("A", "B", "C")
    assert sum(rep["distribution"].values()) == pytest.approx(1)
    assert main(["contract", "inspect", str(tmp_path / "nope.json")]) == 2


def _plot_rows(series, tmp_path):
    path = tmp_path / "plot.csv"
    emit_plot_data(series, path)
    with open(path) as f:
        return list(csv.reader(f))


def test_plot_data_shape_and_normalization(tmp_path):
    cfg = ScenarioConfig(n_validators=9, impls=(("A", b"a"), ("B", b"b"), ("C", b"c")),
                         initial_assignment={"A": 7, "B": 1, "C": 1},
                         params=RewardParams(1, 2, 10), max_blocks=100,
                         mechanism=ProofMechanism.SUCCINCT)
    rows = _plot_rows(run(cfg), tmp_path)
    assert rows[0] == ["block", "impl_id", "count", "share"]
    assert len(rows) == 301
    by_block = {}
    for block, _, _, share in rows[1:]:
        by_block[block] = by_block.get(block, 0) + float(share)
    assert all(abs(v - 1) <= 1e-9 for v in by_block.values())


def test_plot_data_fixed_strategy_constant(tmp_path):
    cfg = ScenarioConfig(n_validators=6, impls=(("A", b"a"), ("B", b"b")),
                         initial_assignment={"A": 5, "B": 1}, params=RewardParams(1, 2, 10),
                         max_blocks=20, strategy=Strategy.FIXED,
                         mechanism=ProofMechanism.SUCCINCT)
    rows = _plot_rows(run(cfg), tmp_path)[1:]
    for impl in "AB":
        assert len({r[3] for r in rows if r[1] == impl}) == 1
