import csv
import shutil

import numpy as np
import pytest
from conftest import make_project
from hypothesis import given, settings
from hypothesis import strategies as st

from sonostyle.cli import (ConfigError, PipelineConfig, PipelineError, QualityReport, ReportBundle, cmd_evaluate,
                           cmd_ingest, cmd_prepare, cmd_report, cmd_train, cmd_transfer, dump_config, emit_report,
                           main, parse_config, parse_config_text)
from sonostyle.imageio import load_pnm
from sonostyle.simeval import SimilarityReport
from sonostyle.styletrans import load_checkpoint


# -- config --------------------------------------------------------------------

def test_empty_config_is_defaults():
    assert parse_config_text("") == PipelineConfig()


def test_range_error_names_key_and_line():
    with pytest.raises(ConfigError, match=r"line 3: prepare\.sigma"):
        parse_config_text("# c\n[prepare]\nsigma = -1\n")


def test_config_errors_carry_line_numbers():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("[train]\nthis is not a pair\n")
    with pytest.raises(ConfigError, match=r"line 2: train\.iterations expects int"):
        parse_config_text("[train]\niterations = many\n")
    with pytest.raises(ConfigError, match=r"train\.bogus \(line 2\).*model\.nope \(line 4\)"):
        parse_config_text("[train]\nbogus = 1\n[model]\nnope = 2\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("[nosuch]\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("seed = 1\n")


def test_config_comments_and_types():
    cfg = parse_config_text("[train]  # section\nlr = 0.01 # rate\nseed = 0x10\n[transfer]\nstyle_policy = fixed\n")
    assert cfg.train.lr == 0.01 and cfg.train.seed == 16 and cfg.transfer.style_policy == "fixed"


config_values = st.fixed_dictionaries({
    "sigma": st.floats(0, 10, allow_nan=False), "lr": st.floats(0, 1, allow_nan=False),
    "iterations": st.integers(1, 10 ** 6), "seed": st.integers(0, 2 ** 64 - 1),
    "policy": st.sampled_from(["round_robin", "fixed"]), "quantile": st.floats(0, 1),
})


@settings(max_examples=50)
@given(config_values)
def test_config_dump_round_trip(v):
    text = (f"[prepare]\nsigma = {v['sigma']!r}\n[train]\nlr = {v['lr']!r}\niterations = {v['iterations']}\n"
            f"seed = {v['seed']}\n[transfer]\nstyle_policy = {v['policy']}\n[evaluate]\n"
            f"niqe_quantile = {v['quantile']!r}\n")
    cfg = parse_config_text(text)
    again = parse_config_text(dump_config(cfg))
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)


def test_relative_paths_resolve_against_config_dir(tmp_path):
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "a.cfg").write_text("[paths]\noutput_dir = results\n")
    cfg = parse_config(tmp_path / "sub" / "a.cfg")
    assert cfg.resolve(cfg.paths.output_dir) == tmp_path / "sub" / "results"


# -- report emitters -------------------------------------------------------------

def fish_pairs_bundle():
    rows = [SimilarityReport.from_metrics(n, c, p) for n, c, p in
            [("Crucian carp", 0.8290, 0.7031), ("Carp", 0.6962, 0.8282), ("Barbel", 0.8388, 0.7187)]]
    return ReportBundle(similarity=rows)


def test_similarity_markdown_pairs_as_columns(tmp_path):
    emit_report(fish_pairs_bundle(), tmp_path)
    md = (tmp_path / "similarity.md").read_text()
    assert "| Metrics | Crucian carp | Carp | Barbel |" in md
    assert "| Average similarity | 0.7661 | 0.7622 | 0.7788 |" in md
    assert "| Perceptual Hash | 0.7031 | 0.8282 | 0.7187 |" in md


def test_quality_markdown_headers_and_dbcnn_column(tmp_path):
    bundle = ReportBundle(quality=[QualityReport("Ours", 7.1349, 62.7893, 25.0076)])
    emit_report(bundle, tmp_path)
    md = (tmp_path / "quality.md").read_text()
    assert "NIQE (lower - better)" in md and "BRISQUE (lower - better)" in md
    assert "| Ours | 25.0076 | 7.1349 | 62.7893 |" in md
    assert (tmp_path / "quality.csv").read_text().splitlines() == ["image,dbcnn,niqe,brisque",
                                                                   "Ours,25.0076,7.1349,62.7893"]


def test_empty_bundle_header_only(tmp_path):
    emit_report(ReportBundle(), tmp_path)
    assert (tmp_path / "quality.csv").read_text() == "image,niqe,brisque\n"
    assert (tmp_path / "similarity.csv").read_text() == "pair_id,cosine,phash,average\n"


def test_bundle_json_round_trip():
    b = fish_pairs_bundle()
    b.quality.append(QualityReport("x.pgm", 1.5, 0.25))
    assert ReportBundle.from_json(b.to_json()) == b


# -- pipeline stages -------------------------------------------------------------

def run_all(cfg_path, *commands):
    for c in commands:
        assert main([c, "--config", str(cfg_path)]) == 0, c


def test_stage_order_errors(project):
    cfg = parse_config(project)
    with pytest.raises(PipelineError, match="ingest"):
        cmd_prepare(cfg)
    cmd_ingest(cfg)
    cmd_prepare(cfg)
    with pytest.raises(PipelineError, match="checkpoint"):
        cmd_transfer(cfg)


def test_missing_input_dir_names_key(tmp_path):
    (tmp_path / "a.cfg").write_text("[paths]\ncontent_dir = nowhere\n")
    with pytest.raises(PipelineError, match="paths.content_dir"):
        cmd_ingest(parse_config(tmp_path / "a.cfg"))


def test_train_outputs_and_periodic_checkpoint(project):
    run_all(project, "ingest", "prepare", "train")
    out = project.parent / "out" / "model"
    rows = list(csv.reader(open(out / "loss.csv")))
    assert rows[0] == ["iter", "total", "content", "style", "id1", "id2"]
    assert len(rows) - 1 == 3
    assert load_checkpoint(out / "checkpoint.ckpt").config.embed_dim == 8


def test_interrupted_training_leaves_valid_checkpoint(tmp_path, monkeypatch):
    cfg_path = make_project(tmp_path, iterations=6)
    cfg = parse_config(cfg_path)
    cmd_ingest(cfg)
    cmd_prepare(cfg)
    import sonostyle.cli.pipeline as pipeline
    real_train = pipeline.train

    def interrupted(*args, **kwargs):
        callback = args[5]

        def cb(it, model, values):
            callback(it, model, values)
            if it == 5:
                raise KeyboardInterrupt
        return real_train(*args[:5], cb)

    monkeypatch.setattr(pipeline, "train", interrupted)
    with pytest.raises(KeyboardInterrupt):
        cmd_train(cfg)
    ckpt = tmp_path / "out" / "model" / "checkpoint.ckpt"
    model = load_checkpoint(ckpt)
    assert model.transfer(np.zeros((32, 32)), np.zeros((32, 32))).shape == (32, 32)
    assert not (tmp_path / "out" / "model" / "checkpoint.ckpt.tmp").exists()
    assert len((tmp_path / "out" / "model" / "loss.csv").read_text().splitlines()) == 1 + 5


def test_transfer_naming_resumability_and_force(project):
    run_all(project, "ingest", "prepare", "train")
    cfg = parse_config_text((project.read_text() + "[transfer]\nstyle_policy = fixed\nstyle_id = 1\n"),
                            base_dir=str(project.parent))
    res = cmd_transfer(cfg)
    gen = project.parent / "out" / "generated"
    assert sorted(p.name for p in gen.iterdir()) == [f"fish{i}__sonar1.pgm" for i in range(3)]
    assert res.done == 3
    first = {p.name: p.read_bytes() for p in gen.iterdir()}
    again = cmd_transfer(cfg)
    assert again.done == 0 and again.skipped == 3
    forced = cmd_transfer(cfg, force=True)
    assert forced.done == 3
    assert first == {p.name: p.read_bytes() for p in gen.iterdir()}


def test_transfer_round_robin_and_parallel_match(project, tmp_path_factory):
    run_all(project, "ingest", "prepare", "train", "transfer")
    gen = project.parent / "out" / "generated"
    assert sorted(p.name for p in gen.iterdir()) == ["fish0__sonar0.pgm", "fish1__sonar1.pgm",
                                                     "fish2__sonar0.pgm"]
    serial = {p.name: p.read_bytes() for p in gen.iterdir()}
    assert main(["transfer", "--config", str(project), "--force", "--jobs", "2"]) == 0
    assert serial == {p.name: p.read_bytes() for p in gen.iterdir()}


def test_transfer_per_image_failure_continues(project):
    run_all(project, "ingest", "prepare", "train")
    bad = project.parent / "out" / "prepared" / "content" / "fish1.pgm"
    bad.write_bytes(b"P5\n8 8\n255\n" + bytes(64))  # wrong size for the model
    cfg = parse_config(project)
    res = cmd_transfer(cfg)
    assert res.done == 2 and res.failed == 1
    assert main(["transfer", "--config", str(project)]) == 1


def test_evaluate_identity_pair_and_optional_dbcnn(project):
    run_all(project, "ingest", "prepare", "train", "transfer")
    cfg = parse_config(project)
    bundle = cmd_evaluate(cfg)
    assert len(bundle.quality) == 3 and not bundle.has_dbcnn
    ident = [s for s in bundle.similarity if s.pair_id == "identity"][0]
    assert (ident.cosine, ident.phash, ident.average) == pytest.approx((1, 1, 1), abs=1e-12)
    assert all(q.niqe >= 0 for q in bundle.quality)
    again = cmd_evaluate(cfg)
    assert again == bundle

    (project.parent / "dbcnn.csv").write_text("path,score\nfish0__sonar0.pgm,25.0076\n")
    cfg2 = parse_config_text(project.read_text().replace("pairs_csv = pairs.csv",
                                                         "pairs_csv = pairs.csv\ndbcnn_csv = dbcnn.csv"),
                             base_dir=str(project.parent))
    with_ext = cmd_evaluate(cfg2)
    assert with_ext.has_dbcnn and with_ext.quality[0].dbcnn == 25.0076 and with_ext.quality[1].dbcnn is None
    report = cmd_report(cfg2)
    assert (report / "quality.csv").read_text().splitlines()[0] == "image,dbcnn,niqe,brisque"


def test_evaluate_missing_pairs_file(project):
    run_all(project, "ingest", "prepare", "train", "transfer")
    (project.parent / "pairs.csv").unlink()
    with pytest.raises(PipelineError, match="pairs_csv"):
        cmd_evaluate(parse_config(project))


def test_report_fresh_directory_each_run(project):
    run_all(project, "ingest", "prepare", "train", "transfer", "evaluate", "report", "report")
    runs = sorted(p.name for p in (project.parent / "out" / "reports").iterdir())
    assert len(runs) == 2 and runs[1] == runs[0] + "-2"
    first, second = (project.parent / "out" / "reports" / r for r in runs)
    assert (first / "quality.csv").read_bytes() == (second / "quality.csv").read_bytes()


def test_cli_seed_override_and_errors(project, capsys, monkeypatch):
    assert main(["ingest", "--config", str(project), "--seed", "5"]) == 0
    assert main(["transfer", "--config", str(project)]) == 2
    assert "error:" in capsys.readouterr().err
    monkeypatch.setenv("SONO_LOG", "loud")
    assert main(["ingest", "--config", str(project)]) == 2
    bad = project.parent / "bad.cfg"
    bad.write_text("[prepare]\nsigma = -1\n")
    monkeypatch.setenv("SONO_LOG", "error")
    assert main(["prepare", "--config", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_seed_changes_training(project, tmp_path):
    other = tmp_path / "copy"
    shutil.copytree(project.parent, other)
    run_all(project, "ingest", "prepare", "train")
    for c in ("ingest", "prepare", "train"):
        assert main([c, "--config", str(other / "sono.cfg"), "--seed", "12"]) == 0
    a = (project.parent / "out" / "model" / "loss.csv").read_text()
    b = (other / "out" / "model" / "loss.csv").read_text()
    assert a != b


def test_prepared_images_have_target_size(project):
    run_all(project, "ingest", "prepare")
    for p in (project.parent / "out" / "prepared").rglob("*.pgm"):
        assert load_pnm(p).shape == (32, 32)
