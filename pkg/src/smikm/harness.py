"""Dataset manifests, the end-to-end indexing pipeline and mAP evaluation."""

from __future__ import annotations

import json
import logging
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

from .bovw import Vocabulary, kmeans, train_vocabulary, word_histogram
from .config import Config, config_from_snapshot
from .errors import LayoutError, PipelineError, SmikmError
from .features import FeatureBundle, build_bundle
from .imagecore import ImageBuf, ensure_rgb, read_image, to_grayscale
from .keypoints import extract_patches, keypoints_or_grid
from .moments import ikm_batch
from .retrieval import IndexEntry, RetrievalIndex, query
from .saliency import compute_saliency_hc, segment

log = logging.getLogger(__name__)

WANG_CLASSES = (
    "African",
    "beach",
    "building",
    "bus",
    "dinosaur",
    "elephant",
    "flower",
    "horse",
    "mountain",
    "food",
)
IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png"}
MAX_FAILURE_FRACTION = 0.10


# --------------------------------------------------------------------------
# datasets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    items: tuple[tuple[str, str], ...]  # (path relative to root, class label)

    def __len__(self):
        return len(self.items)

    @property
    def classes(self) -> list[str]:
        return sorted({label for _, label in self.items})

    def path(self, rel: str) -> Path:
        return self.root / rel

    def subset(self, per_class: int) -> "DatasetManifest":
        """First ``per_class`` items of every class, original order kept."""
        seen: dict[str, int] = {}
        keep = []
        for rel, label in self.items:
            if seen.get(label, 0) < per_class:
                keep.append((rel, label))
                seen[label] = seen.get(label, 0) + 1
        return DatasetManifest(self.root, tuple(keep))


def wang_label(image_id: int) -> str:
    return WANG_CLASSES[image_id // 100]


def _image_files(folder: Path) -> list[Path]:
    return sorted(p for p in folder.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def _is_grayscale(path: Path) -> bool:
    with Image.open(path) as im:
        return im.mode in ("L", "1", "I", "I;16", "F")


def _read_list(root: Path, file_list) -> list[str]:
    if isinstance(file_list, (str, Path)):
        lines = Path(file_list).read_text().splitlines()
    else:
        lines = list(file_list)
    rels = [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    missing = [r for r in rels if not (root / r).is_file()]
    if missing:
        raise LayoutError(f"{len(missing)} listed file(s) missing, first: {missing[0]}")
    return rels


def load_dataset(root, file_list=None, skip_grayscale: bool = False) -> DatasetManifest:
    """Manifest of a Wang-style flat folder or a class-per-subdirectory tree.

    Flat folders must hold images named by integer id (``0.jpg`` ...
    ``999.jpg``); the label is ``WANG_CLASSES[id // 100]``.  Otherwise every
    immediate subdirectory is a class.  ``file_list`` (a path or an iterable
    of root-relative paths) restricts the manifest to the listed files.
    """
    root = Path(root)
    if not root.is_dir():
        raise LayoutError(f"{root} is not a directory")
    flat = _image_files(root)
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    items: list[tuple[str, str]] = []
    if flat:
        ids = []
        for p in flat:
            if not re.fullmatch(r"\d+", p.stem) or int(p.stem) >= 100 * len(WANG_CLASSES):
                raise LayoutError(f"{p.name}: flat layout needs integer ids below 1000")
            ids.append((int(p.stem), p.name))
        items = [(name, wang_label(i)) for i, name in sorted(ids)]
    elif subdirs:
        for d in subdirs:
            for p in _image_files(d):
                items.append((f"{d.name}/{p.name}", d.name))
    if not items:
        raise LayoutError(f"{root}: neither a flat id-named folder nor class subdirectories")

    if file_list is not None:
        labels = dict(items)
        rels = _read_list(root, file_list)
        unknown = [r for r in rels if r not in labels]
        if unknown:
            raise LayoutError(f"listed file not part of the dataset layout: {unknown[0]}")
        items = [(r, labels[r]) for r in rels]
    if skip_grayscale:
        items = [(r, lab) for r, lab in items if not _is_grayscale(root / r)]
    return DatasetManifest(root, tuple(items))


def load_wang(root, file_list=None) -> DatasetManifest:
    return load_dataset(root, file_list)


# --------------------------------------------------------------------------
# per-image analysis
# --------------------------------------------------------------------------


@dataclass
class ImageAnalysis:
    """Everything an image contributes before the vocabulary exists."""

    descriptors: np.ndarray
    in_foreground: np.ndarray
    partial: FeatureBundle  # word-histogram slot empty until quantised


def analyse_image(img: ImageBuf, cfg: Config, debug_saliency_path=None) -> ImageAnalysis:
    rgb = ensure_rgb(img)
    gray = to_grayscale(rgb)
    sal = compute_saliency_hc(rgb)
    if debug_saliency_path is not None:
        from .imagecore import encode_png
        from .saliency import saliency_to_image

        Path(debug_saliency_path).write_bytes(encode_png(saliency_to_image(sal)))
    masks = segment(sal)
    kps = keypoints_or_grid(gray, threshold=cfg.dog_threshold, max_keypoints=cfg.max_keypoints)
    patches = extract_patches(gray, kps, masks, cfg.patch_side)
    desc, valid = ikm_batch(patches.patches, cfg.order_pairs)
    partial = build_bundle(
        rgb, masks, sal, np.zeros(1), cfg.weights, hs_bins=cfg.hs_bins, lbp_bins=cfg.lbp_bins
    )
    return ImageAnalysis(desc[valid], patches.in_foreground[valid], partial)


def finish_bundle(analysis: ImageAnalysis, vocab: Vocabulary) -> FeatureBundle:
    hist = word_histogram(analysis.descriptors, analysis.in_foreground, vocab)
    p = analysis.partial
    return FeatureBundle(
        p.f_Hh, p.f_Hs, p.f_LBPv, hist, p.b_Hh, p.b_Hs, p.b_LBPv, p.sm_LBP, weights=p.weights
    )


def bundle_for_image(img: ImageBuf, vocab: Vocabulary, cfg: Config, debug_saliency_path=None) -> FeatureBundle:
    return finish_bundle(analyse_image(img, cfg, debug_saliency_path), vocab)


def _analyse_path(args):
    path, cfg, dump = args
    try:
        debug = Path(str(path) + ".saliency.png") if dump else None
        return analyse_image(read_image(path), cfg, debug), None
    except (SmikmError, OSError, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _map(fn, jobs: Sequence, workers: int) -> list:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [fn(job) for job in jobs]


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------


@dataclass
class PipelineRun:
    index: RetrievalIndex
    timings: dict[str, float]
    failures: list[tuple[str, str]] = field(default_factory=list)


def build_index(manifest: DatasetManifest, cfg: Config, dump_saliency: bool = False) -> PipelineRun:
    """Analyse every image, train the vocabulary on all patches, then bundle."""
    timings = {}
    t0 = time.perf_counter()
    jobs = [(manifest.path(rel), cfg, dump_saliency) for rel, _ in manifest.items]
    results = _map(_analyse_path, jobs, cfg.workers)
    timings["feature_extraction"] = time.perf_counter() - t0

    kept, failures = [], []
    for (rel, label), (analysis, err) in zip(manifest.items, results):
        if analysis is None:
            log.warning("skipping %s: %s", rel, err)
            failures.append((rel, err))
        else:
            kept.append((rel, label, analysis))
    if len(manifest) and len(failures) > MAX_FAILURE_FRACTION * len(manifest):
        raise PipelineError(f"{len(failures)} of {len(manifest)} images failed")
    if not kept:
        raise PipelineError("no image could be analysed")

    t0 = time.perf_counter()
    pooled = np.vstack([a.descriptors for _, _, a in kept if len(a.descriptors)])
    vocab = train_vocabulary(pooled, cfg.vocab_k, cfg.seed, cfg.ikm_mode)
    timings["clustering"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    entries = tuple(IndexEntry(rel, label, finish_bundle(a, vocab)) for rel, label, a in kept)
    timings["bundling"] = time.perf_counter() - t0
    index = RetrievalIndex(entries, vocab, cfg.snapshot())
    log.info("indexed %d images, %d descriptors, k=%d", len(entries), len(pooled), vocab.k)
    return PipelineRun(index, timings, failures)


def run_pipeline(manifest: DatasetManifest, cfg: Config) -> RetrievalIndex:
    return build_index(manifest, cfg).index


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------


def average_precision(relevant: Iterable[bool]) -> float:
    """Mean of precision@k over the ranks k that hold a relevant item."""
    rel = np.asarray(list(relevant), dtype=bool)
    if not rel.any():
        return float("nan")
    hits = np.cumsum(rel)
    ranks = np.flatnonzero(rel) + 1
    return float((hits[rel] / ranks).mean())


@dataclass
class EvalReport:
    per_class_map: dict[str, float]
    overall_map: float
    per_class_queries: dict[str, int]
    config: dict[str, str]
    timings: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def summarize(aps: Sequence[tuple[str, float]], config=None, timings=None) -> EvalReport:
    by_class: dict[str, list[float]] = {}
    for label, ap in aps:
        if not np.isnan(ap):
            by_class.setdefault(label, []).append(ap)
    per_class = {c: float(np.mean(v)) for c, v in sorted(by_class.items())}
    counts = {c: len(v) for c, v in sorted(by_class.items())}
    every = [ap for v in by_class.values() for ap in v]
    overall = float(np.mean(every)) if every else float("nan")
    return EvalReport(per_class, overall, counts, dict(config or {}), dict(timings or {}))


def evaluate_map(
    index: RetrievalIndex,
    queries: DatasetManifest | None = None,
    cfg: Config | None = None,
    weights=None,
) -> EvalReport:
    """Full-list average precision per query, averaged per class and overall.

    Without ``queries`` every indexed image queries the index.  A query
    never retrieves itself; queries whose class has no other member in the
    index are left out.
    """
    t0 = time.perf_counter()
    labels = {e.image_id: e.class_label for e in index.entries}
    if queries is None:
        jobs = [(e.image_id, e.class_label, e.bundle) for e in index.entries]
    else:
        cfg = cfg or config_from_snapshot(index.config_snapshot)
        jobs = []
        for rel, label in queries.items:
            bundle = bundle_for_image(read_image(queries.path(rel)), index.vocab, cfg)
            jobs.append((rel, label, bundle))
    aps = []
    for qid, qlabel, bundle in jobs:
        exclude = qid if qid in labels else None
        result = query(index, bundle, exclude_id=exclude, weights=weights)
        aps.append((qlabel, average_precision(labels[i] == qlabel for i, _ in result.ranked)))
    return summarize(aps, index.config_snapshot, {"evaluation": time.perf_counter() - t0})


def time_clustering(dims=(6, 30, 128), n: int = 50_000, k: int = 100, seed: int = 0) -> dict[int, float]:
    """Wall time of vocabulary training on Gaussian descriptors of each dimension."""
    rng = np.random.default_rng(seed)
    kmeans(rng.standard_normal((4 * k, 3)), k, seed)  # compile the assignment kernel
    out = {}
    for d in dims:
        X = rng.standard_normal((n, d))
        t0 = time.perf_counter()
        kmeans(X, k, seed)
        out[d] = time.perf_counter() - t0
    return out
