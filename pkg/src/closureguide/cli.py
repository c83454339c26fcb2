"""Batch command line front end.

Every subcommand walks a manifest CSV (``image_id,image_path,contour_path,
labels_path,fixations``) and writes per-image results under
``<output_dir>/<image_id>/`` plus run-level tables in ``<output_dir>``.
Rasters are stored as FMAP with an 8-bit PNM preview; tables are CSV.

Exit status: 0 success, 1 internal error, 2 input or validation error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import re
import sys
import traceback
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as cgio
from .analytics import (
    DensityParams,
    ShapeFeatureVector,
    cc,
    closed_regions,
    density_map,
    feature_correlation,
    guidance_metrics,
    mae,
    mean_ci95,
    pof,
    poc,
    segment_saliency,
    segment_saliency_map,
    shape_features,
    UndefinedCorrelationError,
)
from .closure import closure_map
from .config import ConfigError, dump_config, load_config
from .contours import CHAIN_HEADER, chain_rows, link_edges
from .evaluation import (
    CURVE_HEADER,
    DIFF_HEADER,
    SUMMARY_HEADER,
    compare_models,
    curve_rows,
    mean_curve,
    roc_judd,
)
from .pipeline import bottom_up_saliency, extract_contours
from .prior import COMPONENT_HEADER, component_rows, component_weights, fit_gmm, prior_map
from .saliency import combine

log = logging.getLogger("closureguide")

MANIFEST_HEADER = ["image_id", "image_path", "contour_path", "labels_path", "fixations"]
MODELS = ("it", "sig")
EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2
_PNM_SUFFIXES = {".pnm", ".pgm", ".ppm"}
_SAFE_ID = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class InputError(ValueError):
    """Bad or missing input; maps to exit status 2."""


# ----------------------------------------------------------------- manifest

@dataclass(frozen=True)
class ManifestRow:
    image_id: str
    image_path: Path
    contour_path: Path | None
    labels_path: Path | None
    fixations: bool
    missing: tuple = ()  # referenced paths that did not exist at load time


def _flag(text, line):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "y"):
        return True
    if low in ("", "0", "false", "no", "n"):
        return False
    raise InputError(f"manifest line {line}: fixations flag must be 0/1, got {text!r}")


def read_manifest(path):
    """Parse a manifest; relative paths resolve against the manifest's directory."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read manifest {path}: {exc.strerror}") from None
    base = path.parent
    reader = csv.reader(text.splitlines())
    header = [h.strip() for h in next(reader, [])]
    if header != MANIFEST_HEADER:
        raise InputError(f"manifest header must be {','.join(MANIFEST_HEADER)}, got {','.join(header)!r}")
    rows = []
    seen = set()
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(MANIFEST_HEADER):
            raise InputError(f"manifest line {line}: expected {len(MANIFEST_HEADER)} fields, got {len(row)}")
        image_id, image_path, contour_path, labels_path, fix = (c.strip() for c in row)
        if not _SAFE_ID.match(image_id):
            raise InputError(f"manifest line {line}: image_id {image_id!r} is not a safe file name")
        if image_id in seen:
            raise InputError(f"manifest line {line}: duplicate image_id {image_id!r}")
        seen.add(image_id)
        if not image_path:
            raise InputError(f"manifest line {line}: image_path is required")
        paths = [base / p if p else None for p in (image_path, contour_path, labels_path)]
        missing = tuple(str(p) for p in paths if p is not None and not p.is_file())
        rows.append(ManifestRow(image_id, *paths, _flag(fix, line), missing))
    if not rows:
        raise InputError("manifest lists no images")
    return rows


# ------------------------------------------------------------------ inputs

def load_image(path):
    """Read an image into [0, 1] floats; non-PNM formats need Pillow."""
    path = Path(path)
    if path.suffix.lower() in _PNM_SUFFIXES:
        return cgio.read_pnm(path)
    try:
        from PIL import Image
    except ImportError:
        raise InputError(f"{path}: only PNM input is supported without Pillow (pip install Pillow)") from None
    with Image.open(path) as im:
        im = im.convert("L" if im.mode in ("1", "L", "I;16", "I") else "RGB")
        return np.asarray(im, dtype=np.float64) / 255.0


def read_fixations(path):
    """Fixation sets keyed by image id; an empty file yields no sets."""
    if path is None:
        return {}
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read fixations {path}: {exc.strerror}") from None
    if not text.strip():
        return {}
    return {fs.image_id: fs for fs in cgio.parse_fixation_csv(text)}


# ------------------------------------------------------------------- tasks

@dataclass
class Job:
    command: str
    row: ManifestRow
    config: object
    out_dir: Path
    models: tuple = MODELS
    fixations: object = None
    reference: object = None
    maps: tuple = ()


@dataclass
class RowResult:
    image_id: str
    status: int = EXIT_OK
    message: str = ""
    data: dict = field(default_factory=dict)
    notices: list = field(default_factory=list)


class _Row:
    """Lazily computed per-image products shared by the steps of one job."""

    def __init__(self, job):
        self.job = job
        self.cfg = job.config
        self.row = job.row
        self.dir = job.out_dir / job.row.image_id
        self.dir.mkdir(parents=True, exist_ok=True)
        self._cache = {}

    def _get(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def write_map(self, name, values):
        cgio.write_fmap(values, self.dir / f"{name}.fmap")
        cgio.write_preview(values, self.dir / f"{name}.pnm")

    @property
    def image(self):
        return self._get("image", lambda: load_image(self.row.image_path))

    @property
    def shape(self):
        img = self.image
        return img.shape[:2]

    def contours(self):
        def make():
            if self.row.contour_path is not None:
                mask = cgio.read_mask(self.row.contour_path)
                if mask.shape != self.shape:
                    raise InputError(f"contour map is {mask.shape[::-1]}, image is {self.shape[::-1]}")
                chains, _ = link_edges(mask, 2)
            else:
                chains, mask = extract_contours(self.image, self.cfg.edges)
            cgio.write_mask(mask, self.dir / "contours.pnm")
            cgio.write_csv(self.dir / "chains.csv", CHAIN_HEADER, chain_rows(chains))
            return mask
        return self._get("contours", make)

    def closure(self):
        def make():
            cmap = closure_map(self.contours(), self.cfg.closure)
            self.write_map("closure", cmap)
            return cmap
        return self._get("closure", make)

    def prior(self):
        def make():
            cmap = self.closure()
            h, w = cmap.shape
            if np.any(cmap > 0):
                comps = fit_gmm(cmap, self.cfg.prior)
                weights = component_weights(comps, w, h)
                pmap = prior_map(comps, weights, w, h)
            else:
                comps, weights, pmap = [], [], np.ones((h, w))
            cgio.write_csv(self.dir / "components.csv", COMPONENT_HEADER, component_rows(comps, weights))
            self.write_map("prior", pmap)
            return pmap
        return self._get("prior", make)

    def saliency(self, model):
        def make():
            smap = bottom_up_saliency(self.image, model, self.cfg.itti, self.cfg.sig)
            self.write_map(f"saliency_{model}", smap)
            return smap
        return self._get(("saliency", model), make)

    def combined(self, model):
        def make():
            smap = combine(self.saliency(model), self.prior())
            self.write_map(f"combined_{model}", smap)
            return smap
        return self._get(("combined", model), make)

    def fixations(self):
        fs = self.job.fixations
        if fs is None or not fs.retained(self.cfg.density.drop_first_fixation):
            raise InputError("no fixations retained")
        h, w = self.shape
        fs.validate(w, h)
        return fs

    def labels(self):
        def make():
            labels = cgio.read_labels(self.row.labels_path)
            if labels.shape != self.shape:
                raise InputError(f"label map is {labels.shape[::-1]}, image is {self.shape[::-1]}")
            return labels
        return self._get("labels", make)


def _label_boundaries(labels):
    edge = np.zeros(labels.shape, dtype=bool)
    edge[:, 1:] |= labels[:, 1:] != labels[:, :-1]
    edge[1:, :] |= labels[1:, :] != labels[:-1, :]
    return edge


def _score(r, name, smap):
    curve = roc_judd(r.cfg.eval.prepare(smap), r.fixations(), r.cfg.density)
    return name, curve


def _task_contours(r):
    r.contours()


def _task_closure(r):
    r.closure()


def _task_prior(r):
    r.prior()


def _task_saliency(r):
    for m in r.job.models:
        r.saliency(m)


def _task_combine(r):
    for m in r.job.models:
        r.combined(m)


def _task_density(r):
    h, w = r.shape
    r.write_map("density", density_map(r.fixations(), w, h, r.cfg.density))


def _task_pipeline(r):
    curves = []
    for m in r.job.models:
        base, guided = r.saliency(m), r.combined(m)
        if r.row.fixations:
            curves.append(_score(r, f"{m}", base))
            curves.append(_score(r, f"{m}+prior", guided))
    return {"curves": curves}


def _task_eval(r):
    curves = []
    for name in r.job.maps:
        path = r.dir / f"{name}.fmap"
        if not path.is_file():
            raise InputError(f"map {name!r} not found at {path}")
        smap = cgio.read_fmap(path).astype(np.float64)
        if smap.shape != r.shape:
            raise InputError(f"map {name!r} is {smap.shape[::-1]}, image is {r.shape[::-1]}")
        curves.append(_score(r, name, smap))
    return {"curves": curves}


def _task_analyze(r):
    cfg = r.cfg
    an = cfg.analyze
    fs = r.fixations()
    h, w = r.shape
    data = {"cc": None, "metrics": [], "segments": [], "notices": []}

    if r.job.reference is not None:
        row = []
        for sigma in an.sigmas:
            params = DensityParams(sigma, cfg.density.drop_first_fixation)
            f = density_map(fs, w, h, params)
            g = density_map(r.job.reference, w, h, params)
            try:
                row.append((cc(f, g), mae(f, g, normalize=True)))
            except UndefinedCorrelationError:
                row.append((math.nan, mae(f, g, normalize=True)))
        data["cc"] = row

    labels = r.labels() if r.row.labels_path is not None else None
    if r.row.contour_path is not None:
        contours = r.contours()
    elif labels is not None:
        contours = _label_boundaries(labels)
    else:
        contours = r.contours()
    closed = closed_regions(labels, an.closed_threshold) if labels is not None else None
    drop = cfg.density.drop_first_fixation
    for n in an.n_values:
        if closed is not None:
            m = guidance_metrics(fs, contours, closed, n, drop)
            data["metrics"].append((n, m.pof, m.poc, m.pofc, m.pocc))
        else:
            data["metrics"].append((n, pof(fs, contours, n, drop), poc(fs, contours, n, drop), math.nan, math.nan))

    if labels is None:
        data["notices"].append("no labels; excluded from per-segment features and correlations")
        return data
    sal = segment_saliency(labels, fs, cfg.density)
    r.write_map("objects", segment_saliency_map(labels, sal))
    for s in sal:
        feats = shape_features(labels, s.segment_id, w, h)
        data["segments"].append((s.segment_id, feats, s))
    return data


_TASKS = {
    "contours": _task_contours,
    "closure": _task_closure,
    "prior": _task_prior,
    "saliency": _task_saliency,
    "combine": _task_combine,
    "density": _task_density,
    "pipeline": _task_pipeline,
    "eval": _task_eval,
    "analyze": _task_analyze,
}


def run_job(job):
    """Run one manifest row; failures are captured in the result, never raised."""
    res = RowResult(job.row.image_id)
    if job.row.missing:
        res.status, res.message = EXIT_INPUT, "input missing (" + ", ".join(job.row.missing) + ")"
        return res
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            r = _Row(job)
            res.data = _TASKS[job.command](r) or {}
        res.notices.extend(str(w.message) for w in caught)
        res.notices.extend(res.data.pop("notices", []) if isinstance(res.data, dict) else [])
    except (ValueError, OSError) as exc:
        # InputError, FormatError, FixationParseError and parameter errors are all ValueErrors
        res.status, res.message = EXIT_INPUT, str(exc)
    except Exception as exc:  # noqa: BLE001 - isolate per-image crashes
        res.status = EXIT_INTERNAL
        res.message = f"internal error: {exc!r}\n{traceback.format_exc()}"
    return res


# ---------------------------------------------------------------- reducers

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _write_table(path, header, rows):
    cgio.write_csv(path, header, ([_fmt(v) for v in row] for row in rows))


def _reduce_scores(results, out_dir, pairs):
    ok = [res for res in results if res.status == EXIT_OK and res.data.get("curves")]
    curves = [c for res in ok for c in res.data["curves"]]
    _write_table(out_dir / "curves.csv", CURVE_HEADER, (row for name, c in curves for row in curve_rows(name, c)))

    names = []
    for name, _ in curves:
        if name not in names:
            names.append(name)
    by_image = {res.image_id: dict(res.data.get("curves", [])) for res in results if res.status == EXIT_OK}
    auc_rows = []
    for res in results:
        per = by_image.get(res.image_id)
        status = "ok" if per else "absent"
        auc_rows.append([res.image_id] + [per[n].auc if per and n in per else math.nan for n in names] + [status])
    _write_table(out_dir / "auc.csv", ["image_id"] + [f"auc_{n}" for n in names] + ["status"], auc_rows)

    grid_rows = []
    for name in names:
        grid, tpr = mean_curve([c for n, c in curves if n == name])
        grid_rows.extend((name, float(x), float(y)) for x, y in zip(grid, tpr))
    _write_table(out_dir / "mean_curves.csv", ["model", "salient_fraction", "tpr"], grid_rows)

    if len(names) < 2:
        _write_table(out_dir / "summary.csv", SUMMARY_HEADER,
                     ((n, *mean_ci95([c.auc for m, c in curves if m == n])) for n in names))
        return
    pairs = [p for p in pairs if p[0] in names and p[1] in names]
    comp = compare_models(curves, pairs=pairs or None)
    _write_table(out_dir / "summary.csv", SUMMARY_HEADER,
                 ((s.model, s.mean_auc, s.ci_low, s.ci_high) for s in comp.models))
    _write_table(out_dir / "differences.csv", DIFF_HEADER,
                 ((d.baseline, d.guided, d.mean_difference, d.ci_low, d.ci_high, d.n_images) for d in comp.differences))
    for s in comp.models:
        log.info("%s: mean AUC %.4f", s.model, s.mean_auc)


def _reduce_analyze(results, out_dir, config):
    ok = [res for res in results if res.status == EXIT_OK]
    an = config.analyze
    cc_rows = [res for res in ok if res.data.get("cc") is not None]
    if cc_rows:
        header = ["image_id"] + [f"cc_sigma{s:g}" for s in an.sigmas] + [f"mae_sigma{s:g}" for s in an.sigmas]
        _write_table(out_dir / "cc_sigma.csv", header,
                     ([res.image_id] + [c for c, _ in res.data["cc"]] + [m for _, m in res.data["cc"]] for res in cc_rows))
    else:
        log.info("no reference fixations given; cc_sigma.csv not written")

    metric_names = ("pof", "poc", "pofc", "pocc")
    _write_table(out_dir / "metrics.csv", ["image_id", "n", *metric_names],
                 ([res.image_id, *row] for res in ok for row in res.data["metrics"]))
    summary = []
    for n in an.n_values:
        row = [n]
        for k, name in enumerate(metric_names, 1):
            vals = [m[k] for res in ok for m in res.data["metrics"] if m[0] == n and not math.isnan(m[k])]
            row.extend(mean_ci95(vals))
        summary.append(row)
    header = ["n"] + [f"{m}_{s}" for m in metric_names for s in ("mean", "ci_low", "ci_high")]
    _write_table(out_dir / "metrics_summary.csv", header, summary)

    names = ShapeFeatureVector.names()
    seg_header = ["image_id", "segment_id", *names, "fixation_count", "area", "density", "score"]
    segs = [(res.image_id, sid, f, s) for res in ok for sid, f, s in res.data["segments"]]
    _write_table(out_dir / "segments.csv", seg_header,
                 ([img, sid, *f.values(), s.fixation_count, s.area, s.density, s.saliency_score]
                  for img, sid, f, s in segs))
    if len(segs) >= 3:
        corr = feature_correlation([f for _, _, f, _ in segs], [s for _, _, _, s in segs])
        _write_table(out_dir / "feature_correlation.csv", ["feature", "r", "degenerate"],
                     ((c.feature, c.r, int(c.degenerate)) for c in corr))
    else:
        log.warning("fewer than 3 labelled segments; feature_correlation.csv not written")


# --------------------------------------------------------------------- CLI

def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("manifest", help="manifest CSV")
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("--out", help="output directory (run.output_dir)")
    common.add_argument("--workers", type=int, help="worker processes (run.workers)")
    common.add_argument("--fixations", help="fixation CSV (image_id,subject_id,ordinal,x,y,duration_ms)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="closureguide", description=__doc__.split("\n\n")[0])
    parser.add_argument("--dump-config", action="store_true", help="print the effective configuration and exit")
    parser.add_argument("--config", dest="top_config", help="config file for --dump-config")
    parser.add_argument("--set", dest="top_overrides", action="append", default=[], metavar="KEY=VALUE")
    sub = parser.add_subparsers(dest="command")
    helps = {
        "contours": "contour masks and chain tables",
        "closure": "closure degree maps",
        "prior": "GMM prior maps and component tables",
        "saliency": "bottom-up saliency maps",
        "combine": "prior-weighted saliency maps",
        "density": "blurred fixation density maps",
        "pipeline": "full guided model plus AUC comparison",
        "eval": "score existing FMAP maps against fixations",
        "analyze": "fixation analytics: CC sweep, guidance metrics, shape features",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text, description=text)
        if name in ("saliency", "combine", "pipeline", "eval"):
            p.add_argument("--model", nargs="+", choices=MODELS, default=list(MODELS))
        if name == "eval":
            p.add_argument("--maps", nargs="+", metavar="NAME",
                           help="map names under each image directory (default saliency_M combined_M per model)")
        if name == "analyze":
            p.add_argument("--reference-fixations", help="second fixation CSV for the CC sweep")
    return parser


def _report(results):
    status = EXIT_OK
    for res in results:
        for note in res.notices:
            log.warning("%s: %s", res.image_id, note)
        if res.status != EXIT_OK:
            first = res.message.splitlines()[0] if res.message else "failed"
            print(f"{res.image_id}: {first}", file=sys.stderr)
            log.debug("%s", res.message)
            status = EXIT_INTERNAL if EXIT_INTERNAL in (status, res.status) else EXIT_INPUT
    return status


def run(args):
    overrides = list(args.overrides)
    if args.out:
        overrides.append(f"run.output_dir={args.out}")
    if args.workers:
        overrides.append(f"run.workers={args.workers}")
    config = load_config(args.config, overrides)
    rows = read_manifest(args.manifest)
    fixations = read_fixations(args.fixations)
    if args.command in ("density", "eval", "analyze") and args.fixations is None:
        raise InputError(f"{args.command} needs --fixations")
    reference = read_fixations(getattr(args, "reference_fixations", None))
    models = tuple(getattr(args, "model", MODELS))
    maps = tuple(getattr(args, "maps", None) or [f"{p}_{m}" for m in models for p in ("saliency", "combined")])

    out_dir = Path(config.run.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [
        Job(args.command, row, config, out_dir, models, fixations.get(row.image_id),
            reference.get(row.image_id) if reference else None, maps)
        for row in rows
    ]
    if args.command in ("density", "eval", "analyze"):
        jobs = [j for j in jobs if j.row.fixations or j.row.missing]
        if not jobs:
            raise InputError("no manifest rows are flagged with fixations")
    log.info("%s: %d image(s), %d worker(s)", args.command, len(jobs), config.run.workers)
    if config.run.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.run.workers) as pool:
            results = list(pool.map(run_job, jobs))
    else:
        results = [run_job(j) for j in jobs]
    for res in results:
        log.info("%s: %s", res.image_id, "ok" if res.status == EXIT_OK else "failed")

    if args.command in ("pipeline", "eval"):
        if args.command == "pipeline":
            pairs = [(m, f"{m}+prior") for m in models]
        else:
            pairs = [(a, b) for a in maps for b in maps
                     if a.startswith("saliency_") and b == "combined_" + a[len("saliency_"):]]
        _reduce_scores(results, out_dir, pairs)
    elif args.command == "analyze":
        _reduce_analyze(results, out_dir, config)
    return _report(results)


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.dump_config:
            sys.stdout.write(dump_config(load_config(args.top_config, args.top_overrides)))
            return EXIT_OK
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_INPUT
        return run(args)
    except (InputError, ConfigError, cgio.FixationParseError, cgio.FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
