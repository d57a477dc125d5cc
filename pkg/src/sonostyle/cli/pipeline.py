"""Pipeline stages behind the CLI subcommands.

Output tree under ``paths.output_dir``::

    manifests/{content,style,pristine}.csv   ingest
    prepared/{content,style,pristine}/*.pgm  prepare
    model/checkpoint.ckpt, model/loss.csv    train
    generated/<content>__<style>.pgm         transfer
    evaluation/bundle.json, *.iqa            evaluate
    reports/<run-id>/                        report

Every stage reads only files written by earlier stages, so (config, seed)
determine all output bytes. Paths written into outputs are relative.
"""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..imageio import DatasetManifest, build_manifest, load_pnm, save_pnm
from ..iqa import BrisqueScorer, NiqeModel, load_external_scores
from ..preprocess import Trimap, add_speckle_noise, prepare_content, resize_image, to_grayscale
from ..simeval import evaluate_pair
from ..styletrans import LossWeights, ModelConfig, TrainHyper, load_checkpoint, save_checkpoint, train
from .config import PipelineConfig, dump_config
from .report import QualityReport, ReportBundle, emit_report

logger = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    pass


@dataclass
class StageResult:
    done: int = 0
    skipped: int = 0
    failed: int = 0

    @property
    def ok(self) -> bool:
        return self.failed == 0


class Workspace:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.root = cfg.resolve(cfg.paths.output_dir)

    def manifest(self, role: str) -> Path:
        return self.root / "manifests" / f"{role}.csv"

    def prepared(self, role: str) -> Path:
        return self.root / "prepared" / role

    @property
    def checkpoint(self) -> Path:
        return self.root / "model" / "checkpoint.ckpt"

    @property
    def loss_csv(self) -> Path:
        return self.root / "model" / "loss.csv"

    @property
    def generated(self) -> Path:
        return self.root / "generated"

    @property
    def evaluation(self) -> Path:
        return self.root / "evaluation"

    def require(self, path: Path, hint: str) -> Path:
        if not path.exists():
            raise PipelineError(f"missing {path}; run `sonostyle {hint}` first")
        return path


def _pgms(directory: Path) -> list[Path]:
    return sorted(directory.glob("*.pgm"))


def _require_dir(cfg: PipelineConfig, key: str) -> Path:
    value = getattr(cfg.paths, key)
    path = cfg.resolve(value)
    if not value or not path.is_dir():
        raise PipelineError(f"paths.{key}: directory {path} does not exist")
    return path


def _entry_name(entry, multi_frame: bool) -> str:
    stem = Path(entry.path).stem
    return f"{stem}_f{entry.frame:03d}" if multi_frame else stem


def _named_entries(manifest: DatasetManifest):
    frames_per_file: dict[str, int] = {}
    for e in manifest.entries:
        frames_per_file[e.path] = frames_per_file.get(e.path, 0) + 1
    return [(i, _entry_name(e, frames_per_file[e.path] > 1)) for i, e in enumerate(manifest.entries)]


# -- ingest ------------------------------------------------------------------------

def cmd_ingest(cfg: PipelineConfig) -> StageResult:
    ws = Workspace(cfg)
    result = StageResult()
    roles = [("content", "content_dir"), ("style", "style_dir")]
    if cfg.paths.pristine_dir:
        roles.append(("pristine", "pristine_dir"))
    for role, key in roles:
        manifest = build_manifest(_require_dir(cfg, key), role)
        if manifest.count == 0:
            raise PipelineError(f"paths.{key}: no decodable images in {cfg.resolve(getattr(cfg.paths, key))}")
        manifest.to_csv(ws.manifest(role), relative_to=cfg.base_dir)
        result.done += manifest.count
        result.skipped += len(manifest.skipped)
        logger.info("%s manifest: %d entries, %d skipped", role, manifest.count, len(manifest.skipped))
    return result


# -- prepare -----------------------------------------------------------------------

def _load_trimap(cfg: PipelineConfig, name: str) -> Trimap | None:
    if not cfg.paths.trimap_dir:
        return None
    path = cfg.resolve(cfg.paths.trimap_dir) / f"{name}.pgm"
    return Trimap.load(path) if path.exists() else None


def cmd_prepare(cfg: PipelineConfig, force: bool = False) -> StageResult:
    ws = Workspace(cfg)
    side = cfg.prepare.target_size
    result = StageResult()
    roles = ["content", "style"] + (["pristine"] if cfg.paths.pristine_dir else [])
    for role in roles:
        manifest = DatasetManifest.from_csv(ws.require(ws.manifest(role), "ingest"))
        out_dir = ws.prepared(role)
        for i, name in _named_entries(manifest):
            out = out_dir / f"{name}.pgm"
            if out.exists() and not force:
                result.skipped += 1
                continue
            img = manifest.load(i, cfg.base_dir)
            if role == "content":
                prepared = prepare_content(img, _load_trimap(cfg, name), cfg.prepare.sigma, (side, side))
                if cfg.prepare.noise_intensity > 0:
                    prepared = add_speckle_noise(prepared, cfg.prepare.noise_intensity, cfg.train.seed + i)
            else:
                prepared = resize_image(to_grayscale(img), side, side)
            save_pnm(prepared, out)
            result.done += 1
    return result


# -- train -------------------------------------------------------------------------

def model_config(cfg: PipelineConfig) -> ModelConfig:
    m = cfg.model
    return ModelConfig(m.patch_size, m.embed_dim, m.heads, m.enc_layers, m.dec_layers, m.cape_grid,
                       cfg.prepare.target_size)


def _load_dir(directory: Path, hint: str, ws: Workspace) -> tuple[list[Path], list[np.ndarray]]:
    paths = _pgms(ws.require(directory, hint))
    if not paths:
        raise PipelineError(f"no prepared images in {directory}; run `sonostyle {hint}` first")
    return paths, [load_pnm(p) for p in paths]


LOSS_HEADER = ["iter", "total", "content", "style", "id1", "id2"]


def cmd_train(cfg: PipelineConfig) -> StageResult:
    ws = Workspace(cfg)
    _, contents = _load_dir(ws.prepared("content"), "prepare", ws)
    _, styles = _load_dir(ws.prepared("style"), "prepare", ws)
    t = cfg.train
    hyper = TrainHyper(lr=t.lr, iterations=t.iterations,
                       weights=LossWeights(t.content_weight, t.style_weight, t.id1_weight, t.id2_weight))
    ws.loss_csv.parent.mkdir(parents=True, exist_ok=True)
    with open(ws.loss_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LOSS_HEADER)

        def on_step(it, model, values):
            writer.writerow([it] + [repr(values[k]) for k in LOSS_HEADER[1:]])
            fh.flush()
            if t.checkpoint_every and it % t.checkpoint_every == 0:
                save_checkpoint(model, ws.checkpoint)

        run = train(contents, styles, model_config(cfg), hyper, t.seed, on_step)
    save_checkpoint(run.model, ws.checkpoint)
    return StageResult(done=len(run.history))


# -- transfer ----------------------------------------------------------------------

_WORKER_MODEL = None


def _init_worker(checkpoint: str):
    global _WORKER_MODEL
    _WORKER_MODEL = load_checkpoint(checkpoint)


def _transfer_job(job) -> str | None:
    content_path, style_path, out_path, noise, seed = job
    try:
        img = _WORKER_MODEL.transfer(load_pnm(content_path), load_pnm(style_path))
        if noise > 0:
            img = add_speckle_noise(img, noise, seed)
        save_pnm(img, out_path)
        return None
    except Exception as exc:  # per-image failures must not abort the batch
        return f"{Path(content_path).name}: {exc}"


def _run_jobs(fn, jobs: list, n_workers: int, initializer=None, initargs=()):
    """Run ``fn`` over ``jobs``; results come back in job order whatever the worker count."""
    if n_workers <= 1 or len(jobs) <= 1:
        if initializer is not None:
            initializer(*initargs)
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(n_workers, initializer=initializer, initargs=initargs) as pool:
        return list(pool.map(fn, jobs))


def cmd_transfer(cfg: PipelineConfig, force: bool = False, jobs: int = 1) -> StageResult:
    ws = Workspace(cfg)
    ckpt = ws.checkpoint
    if not ckpt.exists():
        raise PipelineError(f"missing checkpoint {ckpt}; run `sonostyle train` first")
    content_paths = _pgms(ws.require(ws.prepared("content"), "prepare"))
    style_paths = _pgms(ws.require(ws.prepared("style"), "prepare"))
    if not content_paths or not style_paths:
        raise PipelineError("no prepared content or style images; run `sonostyle prepare` first")
    tr = cfg.transfer
    if tr.style_policy == "fixed" and tr.style_id >= len(style_paths):
        raise PipelineError(f"transfer.style_id {tr.style_id} out of range ({len(style_paths)} styles)")
    result = StageResult()
    todo = []
    for i, cpath in enumerate(content_paths):
        spath = style_paths[tr.style_id if tr.style_policy == "fixed" else i % len(style_paths)]
        out = ws.generated / f"{cpath.stem}__{spath.stem}.pgm"
        if out.exists() and not force:
            result.skipped += 1
            continue
        todo.append((str(cpath), str(spath), str(out), tr.noise_intensity, cfg.train.seed + i))
    for err in _run_jobs(_transfer_job, todo, jobs, _init_worker, (str(ckpt),)):
        if err is None:
            result.done += 1
        else:
            result.failed += 1
            logger.error("transfer failed for %s", err)
    return result


# -- evaluate ----------------------------------------------------------------------

_WORKER_SCORERS = None


def _init_scorers(niqe_path: str, brisque_path: str):
    global _WORKER_SCORERS
    from ..iqa import QualityRegressor
    _WORKER_SCORERS = (NiqeModel.load(niqe_path), BrisqueScorer.from_regressor(QualityRegressor.load(brisque_path)))


def _score_job(path: str) -> tuple[float, float]:
    niqe, brisque = _WORKER_SCORERS
    img = load_pnm(path)
    return niqe.score(img), brisque.score(img)


def _read_pairs(cfg: PipelineConfig) -> list[tuple[Path, Path, str]]:
    path = cfg.resolve(cfg.paths.pairs_csv)
    if not path.is_file():
        raise PipelineError(f"paths.pairs_csv: file {path} does not exist")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"pseudo_path", "real_path", "pair_id"} <= set(reader.fieldnames):
            raise PipelineError(f"{path}: expected header 'pseudo_path,real_path,pair_id'")
        base = path.parent
        return [(base / r["pseudo_path"], base / r["real_path"], r["pair_id"]) for r in reader]


def cmd_evaluate(cfg: PipelineConfig, jobs: int = 1) -> ReportBundle:
    ws = Workspace(cfg)
    generated = _pgms(ws.require(ws.generated, "transfer"))
    if not generated:
        raise PipelineError(f"no generated images in {ws.generated}; run `sonostyle transfer` first")
    pristine_dir = ws.prepared("pristine") if cfg.paths.pristine_dir else ws.prepared("style")
    _, pristine = _load_dir(pristine_dir, "prepare", ws)
    ev = cfg.evaluate

    niqe = NiqeModel(ev.niqe_patch, ev.niqe_quantile).fit(pristine)
    brisque = BrisqueScorer(alpha=ev.ridge, seed=cfg.train.seed).fit(pristine)
    niqe_path, brisque_path = ws.evaluation / "niqe.iqa", ws.evaluation / "brisque.iqa"
    niqe.save(niqe_path)
    brisque.regressor_.save(brisque_path)

    scores = _run_jobs(_score_job, [str(p) for p in generated], jobs, _init_scorers,
                       (str(niqe_path), str(brisque_path)))
    dbcnn = load_external_scores(cfg.resolve(cfg.paths.dbcnn_csv)) if cfg.paths.dbcnn_csv else None
    quality = []
    for p, (n, b) in zip(generated, scores):
        ext = None
        if dbcnn is not None:
            ext = dbcnn.get(p.relative_to(ws.root).as_posix(), dbcnn.get(p.stem))
            if ext is None:
                logger.warning("no external score for %s", p.name)
        quality.append(QualityReport(p.name, n, b, ext))

    similarity = []
    if cfg.paths.pairs_csv:
        for pseudo, real, pair_id in _read_pairs(cfg):
            for f in (pseudo, real):
                if not f.is_file():
                    raise PipelineError(f"pairs file references missing image {f}")
            similarity.append(evaluate_pair(load_pnm(pseudo), load_pnm(real), pair_id, ev.cosine_side))

    bundle = ReportBundle(quality, similarity, {
        "config_sha256": cfg.digest(), "seed": cfg.train.seed, "n_generated": len(generated),
        "n_pristine": len(pristine), "niqe_blocks": niqe.n_blocks_,
    })
    ws.evaluation.mkdir(parents=True, exist_ok=True)
    (ws.evaluation / "bundle.json").write_text(bundle.to_json(), encoding="utf-8", newline="\n")
    return bundle


# -- report ------------------------------------------------------------------------

def run_id(cfg: PipelineConfig) -> str:
    return f"run-{cfg.digest()[:12]}-seed{cfg.train.seed}"


def cmd_report(cfg: PipelineConfig, formats=("csv", "markdown")) -> Path:
    """Write tables into a fresh ``reports/<run-id>[-k]`` directory.

    The directory name is derived from the config digest and seed (never
    the wall clock), so reruns of the same config are byte-identical. The
    metadata gains ``timestamp`` only when ``SOURCE_DATE_EPOCH`` is set.
    """
    ws = Workspace(cfg)
    bundle = ReportBundle.from_json(ws.require(ws.evaluation / "bundle.json", "evaluate").read_text("utf-8"))
    if "SOURCE_DATE_EPOCH" in os.environ:
        bundle.metadata["timestamp"] = int(os.environ["SOURCE_DATE_EPOCH"])
    base = ws.root / "reports" / run_id(cfg)
    target, k = base, 1
    while target.exists():
        k += 1
        target = base.with_name(f"{base.name}-{k}")
    emit_report(bundle, target, formats)
    (target / "config.txt").write_text(dump_config(cfg), encoding="utf-8", newline="\n")
    return target
