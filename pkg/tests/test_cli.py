import json
import shutil
import subprocess

import pytest

from firenet import TrainingHistory, EpochRecord
from firenet.cli import main, read_config_file
from conftest import solid_png


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestInspect:
    def test_full_architecture_summary(self, capsys):
        code, out, _ = run_cli(capsys, "inspect", "--arch", "vgg16")
        assert code == 0
        assert "Layers: 13 Conv2d, 5 MaxPool2d, 3 Linear, 2 Dropout, 15 ReLU" in out
        assert "Parameters: 134,268,738" in out
        assert "(0): Conv2d(3, 64, kernel_size=(3, 3), stride=(1, 1), padding=(1, 1))" in out
        assert "Linear(in_features=25088, out_features=4096, bias=True)" in out

    def test_thousand_class_parameter_count(self, capsys):
        code, out, _ = run_cli(capsys, "inspect", "--num-classes", "1000")
        assert code == 0
        assert "Parameters: 138,357,544" in out

    def test_mini_summary(self, capsys):
        code, out, _ = run_cli(capsys, "inspect", "--arch", "vgg-mini")
        assert code == 0
        assert "Layers: 13 Conv2d" in out
        assert "Parameters: 527,530" in out


class TestUsageErrors:
    def test_no_subcommand(self, capsys):
        code, _, err = run_cli(capsys)
        assert code == 1

    def test_unknown_flag(self, capsys):
        code, _, err = run_cli(capsys, "inspect", "--no-such-flag")
        assert code == 1

    def test_train_requires_data_root(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "train", "--arch", "vgg-mini",
                               "--out", str(tmp_path / "run"))
        assert code == 1
        assert "data-root" in err

    def test_eval_requires_weights(self, capsys, make_image_dir):
        root = make_image_dir({"fire": 2, "no_fire": 2})
        code, _, err = run_cli(capsys, "eval", "--arch", "vgg-mini",
                               "--data-root", str(root))
        assert code == 1
        assert "weights" in err

    def test_bad_model_flags(self, capsys):
        code, _, err = run_cli(capsys, "inspect", "--arch", "vgg-mini",
                               "--width-multiplier", "7.0")
        assert code == 1


class TestDataErrors:
    def test_missing_dataset_root_is_data_error(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "train", "--arch", "vgg-mini",
            "--data-root", str(tmp_path / "nowhere"),
            "--out", str(tmp_path / "run"), "--epochs", "1")
        assert code == 2
        assert "nowhere" in err

    def test_unreadable_checkpoint_is_data_error(self, capsys, tmp_path):
        bogus = tmp_path / "weights.vggw"
        bogus.write_bytes(b"JUNKJUNKJUNK")
        code, _, err = run_cli(capsys, "inspect", "--arch", "vgg-mini",
                               "--weights", str(bogus))
        assert code == 2


class TestConfigFile:
    def test_values_feed_defaults(self, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text(
            "[model]\narch = vgg-mini\n\n"
            "[train]\nepochs = 3\nseed = 7\n\n"
            "[augment]\nenabled = off\n")
        values = read_config_file(cfg)
        assert values == {"arch": "vgg-mini", "epochs": 3, "seed": 7,
                          "no_augment": True}

    def test_unknown_key_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[train]\nmomentum = 0.9\n")
        code, _, err = run_cli(capsys, "inspect", "--config", str(cfg))
        assert code == 1
        assert "momentum" in err

    def test_bad_value_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[train]\nepochs = many\n")
        code, _, err = run_cli(capsys, "inspect", "--config", str(cfg))
        assert code == 1

    def test_missing_file_rejected(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "inspect",
                               "--config", str(tmp_path / "absent.ini"))
        assert code == 1

    def test_cli_overrides_file_overrides_default(
            self, capsys, overfit_root, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text(
            "[model]\narch = vgg-mini\n\n"
            f"[data]\nroot = {overfit_root}\ntest_fraction = 0\n\n"
            "[train]\nepochs = 5\nbatch_size = 32\n\n"
            "[augment]\nenabled = off\n")
        out = tmp_path / "run"
        code, _, _ = run_cli(capsys, "train", "--config", str(cfg),
                             "--epochs", "1", "--out", str(out))
        assert code == 0
        history = TrainingHistory.from_json((out / "history.json").read_text())
        assert len(history) == 1  # CLI --epochs beat the file's 5
        lines = (out / "curves.csv").read_text().splitlines()
        assert lines[0] == "epoch,train_loss,train_accuracy"  # file's test_fraction 0 held

    def test_file_seed_matches_explicit_flag(self, capsys, overfit_root, tmp_path):
        common = ["--arch", "vgg-mini", "--data-root", str(overfit_root),
                  "--test-fraction", "0", "--epochs", "1",
                  "--batch-size", "32", "--no-augment"]
        cfg = tmp_path / "seed.ini"
        cfg.write_text("[train]\nseed = 7\n")
        out_a, out_b, out_c = (tmp_path / n for n in ("a", "b", "c"))
        assert run_cli(capsys, "train", *common, "--config", str(cfg),
                       "--out", str(out_a))[0] == 0
        assert run_cli(capsys, "train", *common, "--seed", "7",
                       "--out", str(out_b))[0] == 0
        assert run_cli(capsys, "train", *common, "--seed", "0",
                       "--out", str(out_c))[0] == 0
        final_a = (out_a / "final.vggw").read_bytes()
        assert final_a == (out_b / "final.vggw").read_bytes()
        assert final_a != (out_c / "final.vggw").read_bytes()


@pytest.fixture(scope="module")
def trained_run(tmp_path_factory):
    """One quick training run shared by the workflow tests below."""
    root = tmp_path_factory.mktemp("cli_data")
    from conftest import write_overfit_dataset
    write_overfit_dataset(root)
    out = tmp_path_factory.mktemp("cli_run")
    code = main([
        "train", "--arch", "vgg-mini", "--data-root", str(root),
        "--test-fraction", "0.25", "--epochs", "2", "--batch-size", "32",
        "--lr", "0.001", "--no-augment", "--out", str(out),
    ])
    assert code == 0
    return root, out


class TestWorkflow:
    def test_train_artifacts(self, trained_run):
        _, out = trained_run
        assert (out / "final.vggw").exists()
        assert (out / "history.json").exists()
        assert (out / "curves.csv").exists()

    def test_eval_on_test_split(self, capsys, trained_run, tmp_path):
        root, out = trained_run
        eval_out = tmp_path / "eval"
        code, text, _ = run_cli(
            capsys, "eval", "--arch", "vgg-mini",
            "--data-root", str(root), "--test-fraction", "0.25",
            "--weights", str(out / "final.vggw"), "--out", str(eval_out))
        assert code == 0
        assert "accuracy:" in text
        payload = json.loads((eval_out / "report.json").read_text())
        cm = payload["confusion"]
        assert cm["tp"] + cm["fp"] + cm["fn"] + cm["tn"] == 8  # 32 * 0.25
        assert (eval_out / "roc.csv").exists()

    def test_predict_line_format(self, capsys, trained_run, tmp_path):
        _, out = trained_run
        image = tmp_path / "sample.png"
        image.write_bytes(solid_png(220, 60, 30, size=(32, 32)))
        code, text, _ = run_cli(
            capsys, "predict", "--arch", "vgg-mini",
            "--weights", str(out / "final.vggw"), str(image))
        assert code == 0
        fields = text.rstrip("\n").split("\t")
        assert fields[0] == str(image)
        assert fields[1] in ("fire", "no_fire")
        assert len(fields[2].split(".")[1]) == 4
        float(fields[2])

    def test_predict_multiple_images(self, capsys, trained_run, tmp_path):
        _, out = trained_run
        images = []
        for i in range(3):
            p = tmp_path / f"img{i}.png"
            p.write_bytes(solid_png(50 * i, 80, 90, size=(32, 32)))
            images.append(str(p))
        code, text, _ = run_cli(
            capsys, "predict", "--arch", "vgg-mini",
            "--weights", str(out / "final.vggw"), *images)
        assert code == 0
        assert len(text.rstrip("\n").split("\n")) == 3

    def test_export_curves_from_history(self, capsys, trained_run, tmp_path):
        _, out = trained_run
        dest = tmp_path / "curves_out"
        code, text, _ = run_cli(
            capsys, "export-curves", "--history", str(out / "history.json"),
            "--out", str(dest))
        assert code == 0
        assert "wrote" in text
        regenerated = (dest / "curves.csv").read_text()
        assert regenerated == (out / "curves.csv").read_text()

    def test_export_curves_bad_history(self, capsys, tmp_path):
        bad = tmp_path / "history.json"
        bad.write_text('{"not": "a history"}')
        code, _, err = run_cli(capsys, "export-curves", "--history", str(bad))
        assert code == 2


class TestEntryPoint:
    def test_installed_script(self):
        exe = shutil.which("firenet")
        assert exe, "console script not installed"
        result = subprocess.run([exe, "inspect", "--arch", "vgg-mini"],
                                capture_output=True, text=True, timeout=120)
        assert result.returncode == 0
        assert "Parameters: 527,530" in result.stdout
