from pathlib import Path

import pytest

from sonostyle.imageio import save_pnm
from sonostyle.synthetic import fish_image, sonar_image

_acceptance: dict[int, list[str]] = {}

SMALL_MODEL = """[model]
embed_dim = 8
heads = 2
enc_layers = 1
dec_layers = 1
"""


def make_project(root: Path, n_content: int = 3, n_style: int = 2, n_pristine: int = 10, iterations: int = 3,
                 extra: str = "") -> Path:
    """Write a tiny synthetic project (images + config) under ``root``; returns the config path."""
    for i in range(n_content):
        save_pnm(fish_image(i, 40), root / "content" / f"fish{i}.pgm")
    for i in range(n_style):
        save_pnm(sonar_image(100 + i, 32), root / "style" / f"sonar{i}.pgm")
    for i in range(n_pristine):
        save_pnm(sonar_image(200 + i, 32), root / "pristine" / f"real{i:02d}.pgm")
    (root / "pairs.csv").write_text("pseudo_path,real_path,pair_id\n"
                                    "out/generated/fish0__sonar0.pgm,style/sonar0.pgm,fish0\n"
                                    "style/sonar1.pgm,style/sonar1.pgm,identity\n")
    cfg = root / "sono.cfg"
    cfg.write_text(f"""# test project
[paths]
content_dir = content
style_dir = style
pristine_dir = pristine
output_dir = out
pairs_csv = pairs.csv

{SMALL_MODEL}
[train]
iterations = {iterations}
checkpoint_every = 2
seed = 11
{extra}""")
    return cfg


@pytest.fixture
def project(tmp_path):
    return make_project(tmp_path)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    number = getattr(report, "acceptance_number", None)
    if number is not None:
        _acceptance.setdefault(number, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        outcome.get_result().acceptance_number = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        outcomes = _acceptance[number]
        verdict = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}")
