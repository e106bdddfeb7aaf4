import json

import pytest

from backend.app.core.config import Settings, settings
from backend.app.core.exceptions import DataIoError, ParseError, SchemaError
from backend.app.schemas.config import (
    CsvFederationSpec,
    QuadraticFederationSpec,
    load_config,
    parse_config,
    suggest_key,
)

ALGO = {"T": 16, "tau": 4, "m": 2, "eta": 0.1, "gamma": 0.05}
QUADRATIC = {"source": "quadratic", "centers": [[1.0, 0.0], [-1.0, 0.0]]}


def _write(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return path


def test_minimal_config_gets_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, {"federation": QUADRATIC, "algo": ALGO}))
    assert isinstance(cfg.federation, QuadraticFederationSpec)
    assert cfg.algo.algorithm == "drfa"
    assert cfg.algo.n_stages == 4
    assert cfg.algo.batch_primal == 1
    assert cfg.algo.regularizer.is_none
    assert cfg.algo.output_mode == "averaged"
    assert cfg.seeds == list(range(settings.default_seed_count))
    assert cfg.eval_every == 1
    assert cfg.display_label == "drfa(tau=4)"


def test_tau_must_divide_T():
    with pytest.raises(SchemaError) as info:
        parse_config({"federation": QUADRATIC, "algo": {**ALGO, "tau": 5}})
    assert info.value.key == "tau"


def test_unknown_key_suggests_canonical_name():
    algo = {k: v for k, v in ALGO.items() if k != "eta"}
    algo["learning_rate_w"] = 0.1
    with pytest.raises(SchemaError) as info:
        parse_config({"federation": QUADRATIC, "algo": algo})
    assert info.value.key == "learning_rate_w"
    assert info.value.suggestion == "eta"
    assert "did you mean 'eta'" in info.value.message


def test_suggest_key_close_match():
    assert suggest_key("gama") == "gamma"
    assert suggest_key("zzzzzz") is None


def test_drfa_rejects_regularizer():
    algo = {**ALGO, "regularizer": {"kind": "kl_to_uniform", "strength": 1.0}}
    with pytest.raises(SchemaError) as info:
        parse_config({"federation": QUADRATIC, "algo": algo})
    assert info.value.key == "regularizer"


def test_prox_accepts_regularizer():
    algo = {
        **ALGO,
        "algorithm": "drfa_prox",
        "regularizer": {"kind": "kl_to_uniform", "strength": 1.0},
    }
    cfg = parse_config({"federation": QUADRATIC, "algo": algo})
    assert cfg.algo.regularizer.kind == "kl_to_uniform"
    assert cfg.algo.exchanges_per_stage == 2


def test_negative_seed_rejected():
    with pytest.raises(SchemaError) as info:
        parse_config({"federation": QUADRATIC, "algo": ALGO, "seeds": [0, -1]})
    assert info.value.key == "seeds"


def test_csv_by_column_needs_column():
    csv = {"source": "csv", "path": "x.csv", "partition": "by_column"}
    with pytest.raises(SchemaError):
        parse_config({"federation": csv, "algo": ALGO})
    cfg = parse_config({"federation": {**csv, "column": 0}, "algo": ALGO})
    assert isinstance(cfg.federation, CsvFederationSpec)


def test_json_syntax_error_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "federation": {},\n  "algo": {,\n}\n', encoding="utf-8")
    with pytest.raises(ParseError) as info:
        load_config(path)
    assert info.value.line == 3


def test_missing_file(tmp_path):
    with pytest.raises(DataIoError):
        load_config(tmp_path / "absent.json")


def test_non_object_root(tmp_path):
    with pytest.raises(SchemaError):
        load_config(_write(tmp_path, [1, 2, 3]))


# =============================================================================
# 런타임 설정
# =============================================================================


def test_output_dir_resolution(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "drofa_out", None)
    monkeypatch.setattr(settings, "output_dir", str(tmp_path / "default"))
    assert settings.resolve_output_dir(None) == tmp_path / "default"
    assert settings.resolve_output_dir(str(tmp_path / "cfg")) == tmp_path / "cfg"

    monkeypatch.setattr(settings, "drofa_out", str(tmp_path / "env"))
    assert settings.resolve_output_dir(str(tmp_path / "cfg")) == tmp_path / "env"


def test_settings_read_environment(monkeypatch):
    monkeypatch.setenv("DROFA_OUT", "/tmp/drofa-env")
    monkeypatch.setenv("WORKERS", "3")
    fresh = Settings()
    assert fresh.drofa_out == "/tmp/drofa-env"
    assert fresh.workers == 3
