import io
import json

import pytest

from conftest import TABLE_H0, TABLE_TIMES
from survkit.cli import main
from survkit.coxph import FittedCoxModel, save_cox


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def sim_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "cohort.csv"
    code, text = run(
        "simulate", "--n", "5000", "--beta", "0.5,-0.3", "--covariates", "age,gait",
        "--lambda0", "0.1", "--censoring", "0.2", "--seed", "17", "--out", str(path),
    )
    assert code == 0 and "censored=" in text
    return path


@pytest.fixture
def table_model_path(tmp_path):
    path = tmp_path / "table.json"
    save_cox(FittedCoxModel.from_table({"x": 1.0}, TABLE_TIMES, TABLE_H0, "months"), path)
    return path


def test_fit_cox(sim_csv, tmp_path):
    out = tmp_path / "cox.json"
    code, text = run("fit", "cox", "--data", str(sim_csv), "--time", "time", "--event", "event",
                     "--covariates", "age,gait", "--out", str(out))
    assert code == 0
    assert "iterations=" in text and "log partial likelihood=" in text
    model = json.loads(out.read_text())
    assert model["ties"] == "breslow" and model["converged"]
    assert abs(model["coefficients"]["age"] - 0.5) < 0.1
    assert abs(model["coefficients"]["gait"] + 0.3) < 0.1


def test_fit_poisson_and_compare(sim_csv, tmp_path):
    cox, glm = tmp_path / "cox.json", tmp_path / "glm.json"
    assert run("fit", "cox", "--data", str(sim_csv), "--covariates", "age,gait", "--out", str(cox))[0] == 0
    code, _ = run("fit", "poisson", "--data", str(sim_csv), "--covariates", "age,gait",
                  "--time-unit", "months", "--out", str(glm))
    assert code == 0
    assert json.loads(glm.read_text())["time_unit"] == "months"
    code, text = run("compare", "--cox", str(cox), "--glm", str(glm), "--grid", "100",
                     "--profile", "age=0,gait=0", "--profile", "age=1,gait=-1")
    assert code == 0
    assert json.loads(text)["max_divergence"] < 0.05
    code, text = run("compare", "--cox", str(cox), "--glm", str(glm), "--times", "1,5,10",
                     "--format", "table")
    assert code == 0 and "max survival divergence" in text


def test_fit_no_events(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("time,event,age\n1,0,3\n2,0,4\n")
    code, _ = run("fit", "cox", "--data", str(data), "--covariates", "age", "--out", str(tmp_path / "m.json"))
    assert code == 2


def test_fit_no_events_message(tmp_path, capsys):
    data = tmp_path / "d.csv"
    data.write_text("time,event,age\n1,0,3\n2,0,4\n")
    run("fit", "cox", "--data", str(data), "--covariates", "age", "--out", str(tmp_path / "m.json"))
    assert "no observed events" in capsys.readouterr().err


def test_fit_missing_column(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("time,event\n1,1\n")
    code, _ = run("fit", "cox", "--data", str(data), "--covariates", "age", "--out", str(tmp_path / "m.json"))
    assert code == 2


def test_fit_nonconvergence_writes_model(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("time,event,x\n1,1,5\n2,1,4\n3,1,3\n4,1,2\n5,1,1\n")
    out = tmp_path / "m.json"
    code, _ = run("fit", "cox", "--data", str(data), "--covariates", "x", "--out", str(out))
    assert code == 3
    assert json.loads(out.read_text())["converged"] is False


def test_fit_logistic(tmp_path):
    data = tmp_path / "b.csv"
    data.write_text("outcome,x\n" + "".join(f"{int(i % 3 == 0)},{i / 10}\n" for i in range(60)))
    out = tmp_path / "l.json"
    code, _ = run("fit", "logistic", "--data", str(data), "--covariates", "x", "--out", str(out))
    assert code == 0 and json.loads(out.read_text())["family"] == "logistic"


def test_config_precedence(sim_csv, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_iter": 1}))
    out = tmp_path / "m.json"
    code, _ = run("fit", "cox", "--data", str(sim_csv), "--covariates", "age,gait",
                  "--config", str(cfg), "--out", str(out))
    assert code == 3
    code, _ = run("fit", "cox", "--data", str(sim_csv), "--covariates", "age,gait",
                  "--config", str(cfg), "--max-iter", "50", "--out", str(out))
    assert code == 0


def test_predict_median(table_model_path):
    code, text = run("predict", "--model", str(table_model_path), "--profile", "x=2.0", "--median")
    assert code == 0
    (est,) = json.loads(text)
    assert est["time"] == 1.0
    assert abs(est["target_baseline_cumulative_hazard"] - 0.094) < 1e-3


def test_predict_hazard_ratios(tmp_path):
    path = tmp_path / "m.json"
    save_cox(FittedCoxModel.from_table({"gait": 0.5}, [1], [0.1]), path)
    code, text = run("predict", "--model", str(path), "--hazard-ratios", "--format", "table")
    assert code == 0 and "+65%" in text
    code, text = run("predict", "--model", str(path), "--hazard-ratios")
    assert abs(json.loads(text)["gait"]["hazard_ratio"] - 1.65) < 5e-3


def test_predict_times(table_model_path):
    code, text = run("predict", "--model", str(table_model_path), "--profile", "x=2", "--times", "0,3,6,12")
    assert code == 0
    rows = json.loads(text)
    assert rows[0]["survival"] == 1.0
    assert [r["time"] for r in rows] == [0, 3, 6, 12]


def test_predict_profile_csv(table_model_path, tmp_path):
    prof = tmp_path / "p.csv"
    prof.write_text("x\n0\n2\n")
    code, text = run("predict", "--model", str(table_model_path), "--profile-csv", str(prof), "--median")
    assert code == 0
    assert [e["time"] for e in json.loads(text)] == [5.0, 1.0]


def test_predict_name_mismatch(table_model_path):
    code, _ = run("predict", "--model", str(table_model_path), "--profile", "age=2", "--times", "1")
    assert code == 2


def test_simulate_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run("simulate", "--n", "300", "--beta", "0.2", "--seed", "5",
                   "--censoring", "0.3", "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_zero_subjects(tmp_path):
    assert run("simulate", "--n", "0", "--out", str(tmp_path / "x.csv"))[0] == 2


def test_simulate_censoring_fraction(tmp_path):
    path = tmp_path / "c.csv"
    code, text = run("simulate", "--n", "1000", "--beta", "0.5,-0.3", "--lambda0", "0.1",
                     "--censoring", "0.2", "--seed", "3", "--out", str(path))
    frac = float(text.split("fraction ")[1].rstrip(")\n"))
    assert 0.17 <= frac <= 0.23


def test_simulate_spec_file(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n_subjects": 50, "true_beta": [0.3],
                                "covariates": [{"name": "frail", "kind": "bernoulli", "q": 0.4}]}))
    path = tmp_path / "c.csv"
    assert run("simulate", "--spec", str(spec), "--seed", "2", "--out", str(path))[0] == 0
    assert path.read_text().splitlines()[0] == "id,time,event,frail"


def test_prob():
    code, text = run("prob", "at-least-one", "--rate", "0.1", "--t", "12")
    assert code == 0 and abs(float(text) - 0.698806) < 1e-6
    code, text = run("prob", "pmf", "--rate", "0.5", "--t", "2", "--k", "1", "--format", "json")
    assert abs(json.loads(text)["value"] - 0.367879) < 1e-6
    assert run("prob", "survival", "--rate", "-1", "--t", "1")[0] == 2


def test_bad_arguments():
    assert run("nonsense")[0] == 2
