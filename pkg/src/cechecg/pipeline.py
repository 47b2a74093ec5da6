"""Stage functions behind the CLI. Each stage reads the previous stage's
artifacts under the run directory and records its outputs in ``manifest.json``."""
from __future__ import annotations

import hashlib
import json
import os
import platform
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import _kernels, complex as cx, embedding, ingest, persistence
from .errors import DependencyError, HomotopyViolationError, ValidationError
from .ml import features as feat
from .ml.harness import train_eval

STAGES = ("ingest", "embed", "complex", "persist", "features", "train", "report")


def atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _atomic(path, writer):
    """Run ``writer(tmp_path)`` then move the result into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.stem}.", suffix=path.suffix)
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """A run directory and its manifest."""

    def __init__(self, out, config):
        self.out = Path(out)
        self.config = config
        self.path = self.out / "manifest.json"
        if self.path.exists():
            self.manifest = json.loads(self.path.read_text(encoding="utf-8"))
        else:
            self.manifest = {"stages": {}, "subjects": {}, "inputs": {}}
        self.manifest["config"] = config.to_dict()
        self.manifest["versions"] = _versions()

    def save(self):
        self.out.mkdir(parents=True, exist_ok=True)
        atomic_write_text(self.path, json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")

    def dir(self, stage):
        d = self.out / stage
        d.mkdir(parents=True, exist_ok=True)
        return d

    @property
    def subjects(self):
        return self.manifest.get("subjects", {})

    def require(self, stage, upstream):
        if upstream not in self.manifest.get("stages", {}):
            raise DependencyError(stage, f"run '{upstream}' first (no record in {self.path})")
        for rel in self.manifest["stages"][upstream]["outputs"]:
            if not (self.out / rel).exists():
                raise DependencyError(stage, f"artifact {rel} from stage '{upstream}' is missing")

    def record(self, stage, outputs, seconds):
        self.manifest["stages"][stage] = {
            "outputs": sorted(str(Path(p).relative_to(self.out)) for p in outputs),
            "seconds": round(seconds, 3),
        }
        # downstream results are stale once an upstream stage is re-run
        for later in STAGES[STAGES.index(stage) + 1:]:
            self.manifest["stages"].pop(later, None)
        self.save()


def _versions():
    import scipy
    import pywt
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "pywt": pywt.__version__, "kernels": _kernels.BACKEND}


def _map(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


# ---- ingest ----------------------------------------------------------------

def _ingest_one(args):
    path, fmt, label, cfg = args
    rmap = ingest.parse_rhythm_map(cfg.rhythm_map) if cfg.rhythm_map else None
    rec = ingest.load_record(path, fmt, label=label, rhythm_map=rmap)
    clean = ingest.preprocess(rec, cfg.win1_ms, cfg.win2_ms, cfg.wavelet, cfg.dwt_level,
                              cfg.median_boundary)
    params = {"win1_ms": cfg.win1_ms, "win2_ms": cfg.win2_ms, "median_boundary": cfg.median_boundary,
              "wavelet": cfg.wavelet, "dwt_level": cfg.dwt_level, "trial_s": cfg.trial_s}
    tm = ingest.segment_trials(clean, cfg.trial_s, provenance={"preprocessing": params,
                                                              "source": Path(path).name})
    return tm


def cmd_ingest(run, paths, fmt=None, label=None):
    t0 = time.perf_counter()
    if not paths:
        raise ValidationError("no input records given")
    paths = sorted(str(p) for p in paths)
    mats = _map(_ingest_one, [(p, fmt, label, run.config) for p in paths], run.config.jobs)
    units = {}
    for p, tm in zip(paths, mats):
        sid = tm.provenance["subject_id"]
        key = sid if run.config.unit == "subject" else f"{sid}__{Path(p).stem}"
        units.setdefault(key, []).append(tm)
    out_dir = run.dir("ingest")
    outputs = []
    subjects = {}
    for key in sorted(units):
        group = units[key]
        labels = {tm.provenance["label"] for tm in group}
        widths = {tm.t for tm in group}
        if len(labels) > 1 or len(widths) > 1:
            raise ValidationError(f"records of {key} disagree on label or trial width")
        data = np.vstack([tm.data for tm in group])
        prov = dict(group[0].provenance)
        prov["sources"] = [tm.provenance["source"] for tm in group]
        prov.pop("source", None)
        prov["unit_id"] = key
        npy, meta = out_dir / f"{key}.npy", out_dir / f"{key}.json"
        _atomic(npy, lambda tmp: np.save(tmp, data))
        atomic_write_text(meta, json.dumps({"n": data.shape[0], "t": data.shape[1],
                                            "trial_duration_s": group[0].trial_duration_s,
                                            "provenance": prov}, indent=2, sort_keys=True) + "\n")
        outputs += [npy, meta]
        subjects[key] = prov["label"]
    run.manifest["subjects"] = subjects
    run.manifest["inputs"] = {Path(p).name: sha256(p) for p in paths}
    run.record("ingest", outputs, time.perf_counter() - t0)
    return subjects


# ---- embed -----------------------------------------------------------------

def cmd_embed(run):
    run.require("embed", "ingest")
    t0 = time.perf_counter()
    outputs = []
    for sid in sorted(run.subjects):
        data = np.load(run.out / "ingest" / f"{sid}.npy")
        meta = json.loads((run.out / "ingest" / f"{sid}.json").read_text(encoding="utf-8"))
        tm = ingest.TrialMatrix(data, meta["trial_duration_s"], meta["provenance"])
        tm.provenance["subject_id"] = sid
        cloud = embedding.embed(tm, d=run.config.embed_dim, center_rows=run.config.center_rows)
        path = run.dir("embed") / f"{sid}.csv"
        _atomic(path, lambda tmp: embedding.save_point_cloud(cloud, tmp))
        outputs.append(path)
    run.record("embed", outputs, time.perf_counter() - t0)
    return outputs


# ---- complex ---------------------------------------------------------------

def _complex_one(args):
    sid, cloud_path, out_dir, kind, eps, max_dim, tol = args
    cloud = embedding.load_point_cloud(cloud_path)
    filt = cx.build_filtration(cloud, kind, eps, max_dim)
    report = cx.verify_homotopy_equivalence(filt, cloud, tol)
    fpath, vpath = Path(out_dir) / f"{sid}.txt", Path(out_dir) / f"{sid}.verify.json"
    _atomic(fpath, lambda tmp: cx.save_filtration(filt, tmp))
    atomic_write_text(vpath, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    return sid, fpath, vpath, len(report.violations)


def cmd_complex(run, kind=None, allow_rips=False, clouds=None):
    """Build filtrations and run the nerve check. Violations fail the stage
    unless ``allow_rips`` is set."""
    cfg = run.config
    kind = kind or cfg.filtration
    if clouds:
        items = {Path(p).stem: Path(p) for p in clouds}
    else:
        run.require("complex", "embed")
        items = {sid: run.out / "embed" / f"{sid}.csv" for sid in sorted(run.subjects)}
    t0 = time.perf_counter()
    out_dir = run.dir("complex")
    results = _map(_complex_one, [(sid, p, out_dir, kind, cfg.epsilon_max, cfg.max_dim,
                                   cfg.verify_tol) for sid, p in sorted(items.items())], cfg.jobs)
    outputs = [p for _, f, v, _ in results for p in (f, v)]
    bad = {sid: n for sid, _, _, n in results if n}
    run.manifest["verification"] = {sid: n for sid, _, _, n in results}
    run.record("complex", outputs, time.perf_counter() - t0)
    if bad and not allow_rips:
        raise HomotopyViolationError(
            f"{sum(bad.values())} simplices fail the non-empty intersection check in "
            f"{sorted(bad)}; see complex/<subject>.verify.json or pass --allow-rips")
    return results


# ---- persist ---------------------------------------------------------------

def _pipeline_params(cfg):
    keys = ("win1_ms", "win2_ms", "median_boundary", "wavelet", "dwt_level", "trial_s",
            "embed_dim", "center_rows", "filtration", "max_dim", "epsilon_max", "min_persistence")
    return {k: getattr(cfg, k) for k in keys}


def _persist_one(args):
    sid, fpath, out_dir, min_pers, grid_size, plot, pipeline = args
    filt = cx.load_filtration(fpath)
    dgm = persistence.compute_persistence(filt)
    if min_pers > 0:
        dgm = persistence.prune_transient(dgm, min_pers)
    out_dir = Path(out_dir)
    grid = np.linspace(0.0, filt.epsilon_max, grid_size)
    curves = [persistence.betti_curve(dgm, k, grid) for k in range(min(filt.max_dim, 2) + 1)]
    paths = [out_dir / f"{sid}.diagram.csv", out_dir / f"{sid}.betti.csv", out_dir / f"{sid}.json"]
    _atomic(paths[0], lambda tmp: persistence.save_diagram(dgm, tmp))
    _atomic(paths[1], lambda tmp: persistence.save_betti_curves(curves, tmp))
    atomic_write_text(paths[2], json.dumps({"epsilon_max": filt.epsilon_max, "pipeline": pipeline,
                                            "simplices": len(filt)}, indent=2, sort_keys=True) + "\n")
    if plot:
        from . import plots
        svg_d, svg_b = out_dir / f"{sid}.diagram.svg", out_dir / f"{sid}.betti.svg"
        _atomic(svg_d, lambda tmp: plots.plot_diagram(dgm, tmp, title=sid))
        _atomic(svg_b, lambda tmp: plots.plot_betti_curves(curves, tmp, title=sid))
        paths += [svg_d, svg_b]
    return paths


def cmd_persist(run, plot=False):
    run.require("persist", "complex")
    t0 = time.perf_counter()
    cfg = run.config
    out_dir = run.dir("persist")
    pipeline = _pipeline_params(cfg)
    sids = sorted(run.subjects)
    results = _map(_persist_one, [(sid, run.out / "complex" / f"{sid}.txt", out_dir,
                                   cfg.min_persistence, cfg.grid_size, plot, pipeline)
                                  for sid in sids], cfg.jobs)
    run.record("persist", [p for paths in results for p in paths], time.perf_counter() - t0)
    return results


def load_subject_diagrams(run):
    out = []
    for sid in sorted(run.subjects):
        meta = json.loads((run.out / "persist" / f"{sid}.json").read_text(encoding="utf-8"))
        dgm = persistence.load_diagram(run.out / "persist" / f"{sid}.diagram.csv",
                                       epsilon_max=meta["epsilon_max"])
        dgm.provenance["pipeline"] = meta["pipeline"]
        out.append(feat.SubjectDiagram(sid, run.subjects[sid], dgm))
    return out


# ---- features / train / report ---------------------------------------------

def cmd_features(run):
    run.require("features", "persist")
    t0 = time.perf_counter()
    subjects = load_subject_diagrams(run)
    vectors = feat.assemble_features(subjects, grid_size=run.config.grid_size)
    path = run.dir("features") / "features.csv"
    names = feat.feature_names(grid_size=run.config.grid_size)
    _atomic(path, lambda tmp: feat.save_feature_table(vectors, tmp, names))
    run.record("features", [path], time.perf_counter() - t0)
    return vectors


def cmd_train(run):
    run.require("train", "features")
    t0 = time.perf_counter()
    cfg = run.config
    vectors, _ = feat.load_feature_table(run.out / "features" / "features.csv")
    report = train_eval(vectors, task=cfg.task, model_spec=cfg.model_specs(), folds=cfg.folds,
                        seed=cfg.seed, jobs=cfg.jobs)
    d = run.dir("train")
    paths = [d / "report.json", d / "summary.csv"]
    atomic_write_text(paths[0], report.to_json() + "\n")
    atomic_write_text(paths[1], report.summary_csv())
    run.record("train", paths, time.perf_counter() - t0)
    return report


def cmd_report(run):
    run.require("report", "train")
    t0 = time.perf_counter()
    report = json.loads((run.out / "train" / "report.json").read_text(encoding="utf-8"))
    subjects = load_subject_diagrams(run)
    groups = {}
    for s in subjects:
        groups.setdefault(s.label, []).append(s.diagram)
    lines = ["# Run report", "", f"Task: {report['task']} ({', '.join(report['classes'])}), "
             f"{report['folds']}-fold stratified CV, seed {report['seed']}", "",
             "## Classifiers", "", "| Classifier | Acc±SD (%) | AUC | F1 | Kappa |",
             "|---|---|---|---|---|"]
    for name, m in report["models"].items():
        lines.append(f"| {name} | {100 * m['accuracy_mean']:.1f}±{100 * m['accuracy_sd']:.2f} | "
                     f"{m['auc']:.3f} | {m['f1']:.3f} | {m['kappa']:.3f} |")
    lines += ["", "## Persistent entropy by class", "", "| Class | Dim | mean | variance | n |",
              "|---|---|---|---|---|"]
    csv_rows = ["class,dim,mean,variance,n"]
    for label in sorted(groups):
        for k in (0, 1, 2):
            vals = []
            for d in groups[label]:
                try:
                    vals.append(persistence.persistent_entropy(d, k))
                except persistence.UndefinedEntropyError:
                    pass
            if vals:
                mu, var = float(np.mean(vals)), float(np.var(vals))
                lines.append(f"| {label} | H{k} | {mu:.4f} | {var:.4f} | {len(vals)} |")
                csv_rows.append(f"{label},{k},{mu!r},{var!r},{len(vals)}")
            else:
                lines.append(f"| {label} | H{k} | undefined | undefined | 0 |")
                csv_rows.append(f"{label},{k},,,0")
    d = run.dir("report")
    paths = [d / "report.md", d / "entropy.csv"]
    atomic_write_text(paths[0], "\n".join(lines) + "\n")
    atomic_write_text(paths[1], "\n".join(csv_rows) + "\n")
    run.record("report", paths, time.perf_counter() - t0)
    return paths
