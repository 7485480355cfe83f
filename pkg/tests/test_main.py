import pytest

from aiin_gan_evaluator.image_codec import load_image
from aiin_gan_evaluator.main import main
from aiin_gan_evaluator.manifest import load_manifest_images, read_manifest
from aiin_gan_evaluator.neural.checkpoint import load_checkpoint
from aiin_gan_evaluator.report_generator import ReportTable


def output_values(text: str) -> dict[str, str]:
    return dict(line.split('=', 1) for line in text.splitlines() if '=' in line)


@pytest.fixture
def toy_manifest(tmp_path):
    assert main(["toygen", str(tmp_path / "toy"), "--n", "12", "--k-modes", "3", "--seed", "4"]) == 0
    return tmp_path / "toy" / "manifest.csv"


class TestMetricsCommands:
    def test_msssim_against_itself(self, toy_manifest, capsys):
        capsys.readouterr()
        assert main(["msssim", str(toy_manifest), str(toy_manifest), "--pairs", "10", "--seed", "1"]) == 0
        values = output_values(capsys.readouterr().out)
        assert float(values["delta"]) == 0.0
        assert values["collapsed"] == "false"
        assert float(values["paired_msssim"]) == pytest.approx(1.0)

    def test_fid_feature_csv_against_itself(self, toy_manifest, tmp_path, capsys):
        features = tmp_path / "features.csv"
        assert main(["features", str(toy_manifest), str(features)]) == 0
        capsys.readouterr()
        assert main(["fid", str(features), str(features), "--feature-csv", "--eps", "1e-6"]) == 0
        assert float(output_values(capsys.readouterr().out)["fid"]) == pytest.approx(0.0, abs=1e-6)

    def test_fid_from_manifests(self, toy_manifest, capsys):
        capsys.readouterr()
        assert main(["fid", str(toy_manifest), str(toy_manifest), "--eps", "1e-6"]) == 0
        assert float(output_values(capsys.readouterr().out)["fid"]) == pytest.approx(0.0, abs=1e-6)

    def test_ragged_feature_csv(self, tmp_path, capsys):
        features = tmp_path / "bad.csv"
        features.write_text("1,2\n3\n", encoding='utf-8')
        assert main(["fid", str(features), str(features), "--feature-csv"]) == 2
        assert "line 2" in capsys.readouterr().err


class TestImageCommands:
    def test_toygen_writes_labelled_manifest(self, tmp_path):
        assert main(["toygen", str(tmp_path), "--n", "5", "--side", "12", "--majority"]) == 0
        entries = read_manifest(tmp_path / "manifest.csv", require_labels=True)
        assert [e.label for e in entries].count(0) == 5
        assert [e.label for e in entries].count(1) == 14
        assert load_image(entries[0].path).shape == (12, 12)

    def test_normalize_single_image(self, toy_manifest, tmp_path, capsys):
        source = read_manifest(toy_manifest)[0].path
        target = tmp_path / "normalized.pgm"
        assert main(["normalize", "aiin", str(source), str(target), "--grid", "8x8", "--threshold", "50"]) == 0
        assert load_image(target).shape == load_image(source).shape
        assert "aiin:8x8:50" in capsys.readouterr().out

    def test_normalize_manifest(self, toy_manifest, tmp_path):
        assert main(["normalize", "median", str(toy_manifest), str(tmp_path / "median"), "--ksize", "3"]) == 0
        assert len(load_manifest_images(tmp_path / "median" / "manifest.csv")) == 12

    def test_train_and_generate(self, toy_manifest, tmp_path, capsys):
        model = tmp_path / "gen.bin"
        history = tmp_path / "history.csv"
        assert main(["train-gan", str(toy_manifest), str(model), "--epochs", "1", "--batch-size", "6",
                     "--history", str(history)]) == 0
        assert load_checkpoint(model).out_dim == 256
        assert history.read_text(encoding='utf-8').startswith("epoch,d_loss,g_loss\n1,")

        assert main(["generate", str(model), str(tmp_path / "synthetic"), "--n", "4", "--seed", "2"]) == 0
        images = load_manifest_images(tmp_path / "synthetic" / "manifest.csv")
        assert len(images) == 4
        assert all(img.shape == (16, 16) for img in images)

    def test_classify(self, tmp_path, capsys):
        assert main(["toygen", str(tmp_path / "train"), "--n", "10", "--side", "8", "--majority"]) == 0
        assert main(["toygen", str(tmp_path / "test"), "--n", "4", "--side", "8", "--majority", "--seed", "9"]) == 0
        capsys.readouterr()
        assert main(["classify", str(tmp_path / "train" / "manifest.csv"), str(tmp_path / "test" / "manifest.csv"),
                     "--epochs", "2", "--no-geometric"]) == 0
        values = output_values(capsys.readouterr().out)
        assert set(values) >= {"accuracy", "precision", "recall", "specificity"}
        assert 0.0 <= float(values["accuracy"]) <= 1.0


class TestExperimentAndReport:
    def test_experiment_then_report(self, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text(
            "n=20\nside=16\nepochs=1\nlatent_dim=8\nbatch_sizes=5\nvariants=none,aiin:2x2:50\n"
            "classifier_epochs=1\nclassifier_hidden=4\nbaseline=true\n",
            encoding='utf-8'
        )
        rows = tmp_path / "out" / "rows.csv"
        assert main(["experiment", str(config), "--output", str(rows), "--set", "seed=3"]) == 0
        table = ReportTable.read(rows)
        assert [r.augmentation for r in table.rows] == ["baseline", "none", "aiin"]

        capsys.readouterr()
        assert main(["report", str(rows), "--out", str(tmp_path / "report"), "--rank", "1"]) == 0
        out = capsys.readouterr().out
        assert "1. " in out
        assert (tmp_path / "report" / "msssim_delta.svg").is_file()
        assert (tmp_path / "report" / "report.txt").is_file()

        assert main(["report", str(rows), "--out", str(tmp_path / "rendered"), "--png", "--pdf"]) == 0
        assert (tmp_path / "rendered" / "fid.png").read_bytes().startswith(b"\x89PNG")
        assert (tmp_path / "rendered" / "report.pdf").read_bytes().startswith(b"%PDF")

    def test_unknown_experiment_key(self, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text("seed=1\nlearning_rate=3\n", encoding='utf-8')
        assert main(["experiment", str(config)]) == 1
        assert "line 2" in capsys.readouterr().err

    def test_report_unknown_metric(self, tmp_path):
        rows = tmp_path / "rows.csv"
        rows.write_text(
            "augmentation,batch_size,window,threshold,msssim_delta,fid,accuracy,precision,recall,specificity\n"
            "none,134,,,0.029,0.687,,,,\n",
            encoding='utf-8'
        )
        assert main(["report", str(rows), "--metrics", "window", "--out", str(tmp_path / "r")]) == 1


class TestExitCodes:
    def test_usage_error(self):
        assert main(["msssim"]) == 1

    def test_unknown_command(self):
        assert main(["transmogrify"]) == 1

    def test_missing_manifest(self, tmp_path, capsys):
        assert main(["features", str(tmp_path / "absent.csv"), str(tmp_path / "f.csv")]) == 2
        assert "absent.csv" in capsys.readouterr().err

    def test_bad_grid(self, toy_manifest, tmp_path):
        source = read_manifest(toy_manifest)[0].path
        assert main(["normalize", "aiin", str(source), str(tmp_path / "x.pgm"), "--grid", "8by8"]) == 1

    def test_rank_deficient_features_still_score(self, tmp_path):
        features = tmp_path / "features.csv"
        features.write_text("0,0\n1,1\n", encoding='utf-8')
        assert main(["fid", str(features), str(features), "--feature-csv"]) == 0


@pytest.mark.slow
def test_desk_experiment_is_byte_reproducible(tmp_path):
    config = tmp_path / "desk.cfg"
    config.write_text(
        "seed=0\nk_modes=4\nn=400\nepochs=200\nbatch_sizes=134\nvariants=none,aiin:8x8:50\n",
        encoding='utf-8'
    )
    outputs = []
    for run in ("first", "second"):
        rows = tmp_path / run / "rows.csv"
        assert main(["--quiet", "experiment", str(config), "--output", str(rows)]) == 0
        outputs.append(rows.read_bytes())

    assert outputs[0] == outputs[1]
    assert outputs[0].decode('utf-8').splitlines()[0] == (
        "augmentation,batch_size,window,threshold,msssim_delta,fid,accuracy,precision,recall,specificity"
    )
    assert [r.augmentation for r in ReportTable.from_csv(outputs[0].decode('utf-8')).rows] == ["none", "aiin"]
