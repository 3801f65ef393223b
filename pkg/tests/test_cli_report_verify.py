import json
import math
from pathlib import Path

import pytest

from ruinlab import analytic
from ruinlab.cli import COMMANDS, main
from ruinlab.model import Exponential, scalar_model, serialize_model
from ruinlab.report import ESTIMATE_FIELDS, estimate_row, read_csv, render_report, write_report
from ruinlab.simulate import DEFAULT_SEED, MCEstimate
from ruinlab.verify import VERIFY_FIELDS, example_model, run_verify

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
EX = str(CONFIGS / "example.ini")
STAR = str(CONFIGS / "star.ini")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# --- report ---------------------------------------------------------------


def _rows():
    e = MCEstimate(0.25, 0.001, 1000, 0.0, 5)
    missing = MCEstimate(math.nan, 0.0, 10, 0.5, 5)
    return [estimate_row("ruin", e, u=0.1), estimate_row("ruin", missing, u=0.2)]


def test_csv_roundtrip():
    text = render_report(_rows(), "csv")
    assert text.startswith(",".join(ESTIMATE_FIELDS) + "\r\n")
    assert text.endswith("\r\n")
    back = read_csv(text)
    assert back[0]["value"] == 0.25 and back[0]["u"] == 0.1 and back[0]["a"] is None
    assert back[1]["value"] is None and back[1]["censored_frac"] == 0.5


def test_json_roundtrip():
    data = json.loads(render_report(_rows(), "json"))
    assert list(data[0]) == list(ESTIMATE_FIELDS)
    assert data[0]["stderr"] == 0.001 and data[1]["value"] is None


def test_repr_floats_roundtrip_exactly():
    v = 0.1 + 0.2
    row = estimate_row("x", MCEstimate(v, 1 / 3, 3, 0.0, 1))
    assert read_csv(render_report([row]))[0]["value"] == v


def test_report_errors(tmp_path):
    with pytest.raises(ValueError, match="empty"):
        render_report([])
    with pytest.raises(ValueError):
        render_report(_rows(), "xml")
    with pytest.raises(ValueError, match="same fields"):
        render_report([{"a": 1}, {"b": 2}])
    target = tmp_path / "out.csv"
    with pytest.raises(ValueError):
        write_report([], "csv", target)
    assert not target.exists()
    write_report(_rows(), "csv", target)
    assert target.read_bytes() == render_report(_rows()).encode()


# --- verify ---------------------------------------------------------------


def test_verify_passes_and_fields():
    rep = run_verify(n=100_000, seed=3)
    assert rep.passed
    assert all(list(r) == list(VERIFY_FIELDS) for r in rep.rows)
    assert len(rep.rows) == 10


def test_verify_self_test_fails_on_perturbation():
    rep = run_verify(n=20_000, seed=3, perturb_sigma=10.0)
    assert not rep.passed
    assert not any(r["pass"] for r in rep.rows if r["stderr"] > 0)


def test_verify_analytic_column_is_exact():
    rep = run_verify(n=2000, seed=3)
    row = next(r for r in rep.rows if r["quantity"].startswith("exit_low(u=0.1,b=0.5)"))
    assert row["analytic"] == analytic.exit_low(example_model(), 0.1, 0.5)[0]


# --- cli ------------------------------------------------------------------


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", "--model", EX)
    assert code == 0
    row = read_csv(out)[0]
    assert row["m"] == 1 and row["drift"] == pytest.approx(-1.9) and row["valid"] is True


def test_ruin_command_and_seed_precedence(capsys, monkeypatch):
    monkeypatch.delenv("RUINLAB_SEED", raising=False)
    code, out, _ = run(capsys, "ruin", "--model", STAR, "--u", "0.1", "--n", "2000")
    assert code == 0 and read_csv(out)[0]["seed"] == DEFAULT_SEED
    monkeypatch.setenv("RUINLAB_SEED", "99")
    _, out_env, _ = run(capsys, "ruin", "--model", STAR, "--u", "0.1", "--n", "2000")
    assert read_csv(out_env)[0]["seed"] == 99
    _, out_flag, _ = run(capsys, "ruin", "--model", STAR, "--u", "0.1", "--n", "2000", "--seed", "5")
    assert read_csv(out_flag)[0]["seed"] == 5
    monkeypatch.setenv("RUINLAB_SEED", "abc")
    code, _, err = run(capsys, "ruin", "--model", STAR, "--u", "0.1", "--n", "10")
    assert code == 1 and "RUINLAB_SEED" in err


def test_ruin_without_claims_is_zero(capsys, tmp_path):
    cfg = tmp_path / "noclaims.ini"
    cfg.write_text(serialize_model(scalar_model(2.0, 0.0, 1.0, Exponential(rate=5.0))))
    code, out, _ = run(capsys, "ruin", "--model", str(cfg), "--u", "0.5", "--n", "100")
    assert code == 0 and read_csv(out)[0]["value"] == 0.0


def test_all_commands_run(capsys):
    small = ["--n", "500", "--seed", "1"]
    cases = {
        "overjump": ["--model", EX, "--u", "0.1", "--s", "0.5"],
        "deficit": ["--model", EX, "--u", "0.1", "--x", "0.1,0.5"],
        "red-period": ["--model", EX, "--u", "0.1", "--s", "1"],
        "two-boundary": ["--model", EX, "--u", "0.1", "--b", "0.5"],
        "modified-ruin": ["--model", EX, "--model-star", STAR, "--u", "0.1", "--a", "0.3", "--b", "0.3"],
        "gerber-shiu": ["--model", EX, "--model-star", STAR, "--u", "0.1", "--a", "0.2", "--b", "0.3", "--s", "1"],
        "price-put": ["--model", EX, "--model-star", STAR, "--u", "0.5", "--a", "0.2", "--b", "0.3", "--K", "1.5",
                      "--beta", "0.1", "--s", "0.5"],
    }
    for cmd, args in cases.items():
        code, out, err = run(capsys, cmd, *args, *small)
        assert code == 0, (cmd, err)
        rows = read_csv(out)
        assert rows and all(r["n"] == 500 for r in rows)
    _, out, _ = run(capsys, "deficit", *cases["deficit"], *small)
    assert len(read_csv(out)) == 2
    assert set(cases) | {"validate", "ruin", "verify"} == set(COMMANDS)


@pytest.mark.parametrize(
    "argv,needle",
    [
        ([], "no command"),
        (["frobnicate"], "usage error"),
        (["ruin", "--model", "/nonexistent.ini", "--u", "0.1"], "no such file"),
        (["ruin", "--u", "0.1"], "--model"),
        (["ruin", "--model", EX], "--u"),
        (["ruin", "--model", EX, "--u", "0.1", "--n", "0"], "usage error"),
        (["two-boundary", "--model", EX, "--u", "0.6", "--b", "0.5", "--n", "10"], "bad parameter"),
        (["modified-ruin", "--model", EX, "--u", "0.1", "--a", "0.3", "--b", "0.3"], "--model-star"),
        (["deficit", "--model", EX, "--u", "0.1", "--x", "a,b"], "--x"),
        (["price-put", "--model", EX, "--model-star", STAR, "--u", "0.5", "--a", "0.2", "--b", "0.3",
          "--K", "1.5", "--beta", "0.9", "--s", "0.5", "--n", "10"], "exercise boundary"),
    ],
)
def test_cli_errors_exit_one(capsys, argv, needle):
    code, out, err = run(capsys, *argv)
    assert code == 1
    assert needle in err and out == ""


def test_cli_invalid_model_file(capsys, tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text(Path(EX).read_text().replace("lambda1 = 2", "lambda1 = -2"))
    code, _, err = run(capsys, "validate", "--model", str(bad))
    assert code == 1 and ("invalid model" in err or "config error" in err)


def test_cli_out_file_and_json(capsys, tmp_path):
    target = tmp_path / "r.json"
    code, out, _ = run(capsys, "ruin", "--model", STAR, "--u", "0.1", "--n", "500", "--format", "json", "--out",
                       str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())[0]["estimand"] == "ruin"


def test_cli_verify_byte_identical(capsys, tmp_path):
    outs = []
    for w in (1, 3):
        p = tmp_path / f"v{w}.csv"
        code, _, _ = run(capsys, "verify", "--n", "20000", "--seed", "4", "--workers", str(w), "--out", str(p))
        assert code == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_cli_verify_failure_exits_two(capsys, monkeypatch):
    import ruinlab.cli as cli

    real = cli.run_verify
    monkeypatch.setattr(cli, "run_verify", lambda *a, **k: real(*a, **k, perturb_sigma=10.0))
    code, out, _ = run(capsys, "verify", "--n", "5000", "--seed", "4")
    assert code == 2
    assert any(r["pass"] is False for r in read_csv(out))
