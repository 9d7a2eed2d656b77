import json

import numpy as np
import pytest

from pcia.cli import main
from pcia.config import ExperimentConfig

from test_data_pipeline import CUBE_F, CUBE_V, write_off
from test_harness import TINY


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_inspect_split_modelnet(capsys):
    code, out, _ = run(capsys, "inspect-split", "--benchmark", "ModelNet40-FS", "--fold", "0")
    assert code == 0
    assert "train: 30 classes, 9204 instances" in out and "test: 10 classes, 3104 instances" in out


def test_inspect_split_bad_fold(capsys):
    code, _, err = run(capsys, "inspect-split", "--benchmark", "ScanObjectNN-FS", "--fold", "3")
    assert code == 2 and "fold" in err


def test_prepare_data_missing_root(capsys, tmp_path):
    code, _, err = run(capsys, "prepare-data", "--benchmark", "ModelNet40-FS", "--root", str(tmp_path / "nope"),
                       "--out", str(tmp_path / "cache"))
    assert code == 2 and "dataset not found" in err


def test_prepare_data_and_inspect_cache(capsys, tmp_path):
    root = tmp_path / "ModelNet40"
    write_off(root / "chair" / "train" / "chair_0001.off", CUBE_V, CUBE_F)
    write_off(root / "bookshelf" / "test" / "bookshelf_0001.off", CUBE_V, CUBE_F)
    (root / "sofa" / "train").mkdir(parents=True)
    (root / "sofa" / "train" / "sofa_0001.off").write_text("garbage")
    code, out, err = run(capsys, "prepare-data", "--benchmark", "ModelNet40-FS", "--root", str(root),
                         "--out", str(tmp_path / "cache"))
    assert code == 0
    assert "cached 2 instances" in out
    assert "train 1 classes / 1 instances, test 1 classes / 1 instances" in out
    assert "sofa_0001.off" in err
    code, out, _ = run(capsys, "inspect-split", "--benchmark", "ModelNet40-FS", "--cache", str(tmp_path / "cache"))
    assert "train: 30 classes, 1 instances" in out


def test_train_eval_report_on_toy(capsys, tmp_path):
    cfg = ExperimentConfig(**TINY)
    cfg.save(tmp_path / "toy.cfg")
    run_dir = tmp_path / "run"
    code, out, _ = run(capsys, "train", "--config", str(tmp_path / "toy.cfg"), "--out", str(run_dir))
    assert code == 0 and "best epoch" in out
    code, out, _ = run(capsys, "eval", "--checkpoint", str(run_dir / "best.pt"), "--config", str(tmp_path / "toy.cfg"),
                       "--out", str(tmp_path / "reports" / "full"), "--export-embeddings", str(tmp_path / "reports" / "emb"))
    assert code == 0 and "(3 episodes)" in out
    side = json.loads((tmp_path / "reports" / "full.json").read_text())
    assert side["n_episodes"] == 3 and side["meta"]["cif"] is True
    assert np.load(tmp_path / "reports" / "emb.npz")["features"].shape[1] == 8
    code, _, err = run(capsys, "eval", "--checkpoint", str(run_dir / "best.pt"), "--config", str(tmp_path / "toy.cfg"),
                       "--set", "cif.enabled=false")
    assert code == 2 and "module set differs" in err
    bare = tmp_path / "bare"
    assert run(capsys, "train", "--config", str(tmp_path / "toy.cfg"), "--set", "cif.enabled=false", "--out", str(bare))[0] == 0
    code, _, _ = run(capsys, "eval", "--checkpoint", str(bare / "best.pt"), "--config", str(tmp_path / "toy.cfg"),
                     "--set", "cif.enabled=false", "--out", str(tmp_path / "reports" / "nocif"))
    assert code == 0
    code, out, _ = run(capsys, "report", "--in", str(tmp_path / "reports"), "--out", str(tmp_path / "tables"))
    assert code == 0
    assert len((tmp_path / "tables" / "ablation.csv").read_text().strip().splitlines()) == 3
    # a checkpoint built for another way count is refused
    code, _, err = run(capsys, "eval", "--checkpoint", str(run_dir / "best.pt"), "--config", str(tmp_path / "toy.cfg"),
                       "--set", "n_way=3")
    assert code == 2 and "n_way" in err


def test_unknown_config_key_is_an_error(capsys):
    with pytest.raises(SystemExit, match="unknown config keys"):
        main(["show-config", "--set", "spf.ks=3"])


def test_show_config_overrides(capsys):
    code, out, _ = run(capsys, "show-config", "--set", "spf.k_s=32")
    assert code == 0 and "spf.k_s = 32" in out


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0 and "FAIL" not in out
