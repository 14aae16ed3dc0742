"""Staged experiment pipeline: generate -> identify -> evaluate.

Each stage reads and writes plain files in the output directory so any
stage can be rerun on frozen inputs. The manifest records the resolved
configuration (including sampled radial centers), the dataset
fingerprint, and every emitted file.
"""

import csv
import hashlib
import json
import platform
import time
from pathlib import Path

import numpy as np
import sklearn

from . import __version__
from .config import parse_rule
from .edmd import (
    FullRule,
    build_snapshots,
    full_system_matrix,
    energy_profile,
    select_rank,
    svd_thin,
    truncated_system_matrix,
)
from .evaluation import (
    benchmark_solve,
    build_table,
    one_step_rmse,
    reconstruction_error,
    solve_flops,
)
from .lane_change import generate_dataset
from .observables import (
    MonomialBasis,
    ThinPlateRadialBasis,
    basis_from_spec,
    sample_radial_centers,
)

# Dedicated stream index for radial-center sampling; trajectory streams
# use indices 0..N_T-1 of the same master seed.
CENTER_STREAM = 2**20

RE_FULL_TOL = 1e-8  # percent


class InvariantError(RuntimeError):
    """A pipeline output violated a hard invariant (CI exit code 1)."""


def _fmt(x):
    return repr(float(x))


def dataset_fingerprint(cfg):
    """Hash of every parameter that influences the generated data."""
    payload = {
        "lane": {k: v for k, v in cfg.to_dict()["lane"].items()},
        "master_seed": cfg.master_seed,
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _load_manifest(out_dir):
    p = Path(out_dir) / "manifest.json"
    if p.exists():
        return json.loads(p.read_text())
    return {"files": [], "stages": {}}


def _save_manifest(out_dir, manifest):
    p = Path(out_dir) / "manifest.json"
    manifest["tool_version"] = __version__
    manifest["versions"] = {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scikit-learn": sklearn.__version__,
    }
    p.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _register(manifest, *names):
    for n in names:
        if n not in manifest["files"]:
            manifest["files"].append(n)


def write_trajectories_csv(trajectories, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["traj_id", "k", "s", "y_L"])
        for t in trajectories:
            for k, (s, y) in enumerate(t.samples):
                w.writerow([t.seed_id, k, _fmt(s), _fmt(y)])


def load_trajectories_csv(path):
    blocks = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            blocks.setdefault(int(row["traj_id"]), []).append(
                (float(row["s"]), float(row["y_L"]))
            )
    return [np.array(blocks[i]) for i in sorted(blocks)]


def run_generate(cfg, out_dir):
    """Algorithm step: collect the trajectory buffer and freeze it to disk."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    dataset = generate_dataset(cfg.lane, cfg.master_seed)
    write_trajectories_csv(dataset, out / "trajectories.csv")
    meta = [
        {
            "traj_id": t.seed_id,
            "y_L0": t.geometry.y_L0,
            "psi0": t.geometry.psi0,
            "d_L": t.geometry.d_L,
            "x_L": t.geometry.x_L,
            "seed": [cfg.master_seed, t.seed_id],
            "lateral_rejections": t.lateral_rejections,
            "geometry_resamples": t.geometry_resamples,
        }
        for t in dataset
    ]
    (out / "trajectories_meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n"
    )
    manifest = _load_manifest(out)
    manifest["config"] = cfg.to_dict()
    manifest["fingerprint"] = dataset_fingerprint(cfg)
    manifest["stages"]["generate"] = {
        "duration_s": time.perf_counter() - t0,
        "n_traj": len(dataset),
        "total_lateral_rejections": sum(t.lateral_rejections for t in dataset),
        "total_geometry_resamples": sum(t.geometry_resamples for t in dataset),
    }
    _register(manifest, "trajectories.csv", "trajectories_meta.json")
    _save_manifest(out, manifest)
    return dataset


def resolve_bases(cfg, manifest=None):
    """Build basis objects; radial centers come from the config or a
    dedicated child stream of the master seed, recorded in the manifest."""
    bases = {}
    centers = None
    for label in cfg.bases:
        if label == "monomial":
            bases[label] = MonomialBasis(order=cfg.n_m)
        elif label == "thin_plate_radial":
            if cfg.c_s is not None and cfg.c_y is not None:
                centers = (cfg.c_s, cfg.c_y)
            else:
                rng = np.random.default_rng(
                    np.random.SeedSequence([cfg.master_seed, CENTER_STREAM])
                )
                centers = sample_radial_centers(cfg.lane.w_L, rng)
            bases[label] = ThinPlateRadialBasis(c_s=centers[0], c_y=centers[1])
    if manifest is not None and centers is not None:
        manifest["resolved_centers"] = {"c_s": centers[0], "c_y": centers[1]}
    return bases


def _model_path(out, basis_label, rule_label):
    return Path(out) / "models" / f"{basis_label}_{rule_label}.json"


def save_model(model, path, fingerprint):
    doc = {
        "basis": model.basis_spec,
        "rule": model.rule.label(),
        "rank": model.rank_used,
        "d": model.A.shape[0],
        "A": [[float(v) for v in row] for row in model.A],
        "timing_ns": model.timing_ns,
        "fingerprint": fingerprint,
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_model(path):
    doc = json.loads(Path(path).read_text())
    from .edmd import IdentifiedModel

    return (
        IdentifiedModel(
            A=np.array(doc["A"], dtype=float),
            rank_used=int(doc["rank"]),
            rule=parse_rule(doc["rule"]) if doc["rule"] != "full" else FullRule(),
            basis_spec=doc["basis"],
            timing_ns=int(doc["timing_ns"]),
        ),
        doc,
    )


def run_identify(cfg, out_dir):
    """Lift the frozen dataset, factorize, select ranks, save models."""
    out = Path(out_dir)
    traj_path = out / "trajectories.csv"
    if not traj_path.exists():
        raise FileNotFoundError(f"{traj_path} missing; run generate first")
    t0 = time.perf_counter()
    trajectories = load_trajectories_csv(traj_path)
    manifest = _load_manifest(out)
    fingerprint = manifest.get("fingerprint", dataset_fingerprint(cfg))
    bases = resolve_bases(cfg, manifest)
    rules = cfg.rule_objects()

    spectrum_rows = []
    identify_info = {}
    for label, basis in bases.items():
        lifted = [basis.fit_transform(t) for t in trajectories]
        pair = build_snapshots(lifted)
        f = svd_thin(pair.X)
        E = energy_profile(f.sigma, squared=cfg.energy_squared)
        for r in range(f.r_max):
            spectrum_rows.append([label, r + 1, _fmt(f.sigma[r]), _fmt(E[r])])

        full_model = full_system_matrix(pair, factors=f)
        full_model.basis_spec = basis.spec()
        save_model(full_model, _model_path(out, label, "full"), fingerprint)
        _register(manifest, f"models/{label}_full.json")

        for rule in rules:
            r = select_rank(
                f, rule, dims=(pair.d, pair.m), energy_squared=cfg.energy_squared
            )
            model = truncated_system_matrix(pair, f, r, rule=rule)
            model.basis_spec = basis.spec()
            save_model(model, _model_path(out, label, rule.label()), fingerprint)
            _register(manifest, f"models/{label}_{rule.label()}.json")

        identify_info[label] = {
            "snapshot_shape": [pair.d, pair.m],
            "condition_number": float(f.sigma[0] / f.sigma[-1]),
            "singular_values": [float(s) for s in f.sigma],
            "energy_percent": [float(e) for e in E],
        }

    with open(out / "spectrum.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["basis", "r", "sigma", "energy_percent"])
        w.writerows(spectrum_rows)

    manifest["stages"]["identify"] = {
        "duration_s": time.perf_counter() - t0,
        "bases": identify_info,
        "rules": [r.label() for r in rules],
    }
    _register(manifest, "spectrum.csv")
    _save_manifest(out, manifest)


def run_evaluate(cfg, out_dir):
    """Benchmark solves, compute reconstruction errors, emit table1.csv."""
    out = Path(out_dir)
    traj_path = out / "trajectories.csv"
    if not traj_path.exists():
        raise FileNotFoundError(f"{traj_path} missing; run generate first")
    t0 = time.perf_counter()
    trajectories = load_trajectories_csv(traj_path)
    manifest = _load_manifest(out)
    rules = cfg.rule_objects()

    entries = []
    references = {}
    snapshot_dims = {}
    extras = {}
    eval_info = {}
    for label in cfg.bases:
        ref_path = _model_path(out, label, "full")
        if not ref_path.exists():
            raise FileNotFoundError(
                f"{ref_path} missing; run identify before evaluate"
            )
        ref_model, _ = load_model(ref_path)
        basis = basis_from_spec(ref_model.basis_spec)
        lifted = [basis.fit_transform(t) for t in trajectories]
        pair = build_snapshots(lifted)
        f = svd_thin(pair.X)
        snapshot_dims[label] = (pair.d, pair.m)

        full_timing = benchmark_solve(
            pair, f, rank=f.r_max, repeats=cfg.repeats,
            warmups=cfg.warmups, scope=cfg.time_scope,
        )
        references[label] = (ref_model, full_timing)

        # RE over every rank, independent of which rules were configured.
        re_by_rank = []
        for r in range(1, f.r_max + 1):
            m_r = truncated_system_matrix(pair, f, r)
            re_by_rank.append(reconstruction_error(ref_model.A, m_r.A))
        eval_info[label] = {
            "re_by_rank_percent": re_by_rank,
            "one_step_rmse_full_m": one_step_rmse(ref_model, pair),
        }

        for rule in rules:
            path = _model_path(out, label, rule.label())
            if not path.exists():
                raise FileNotFoundError(f"{path} missing; rerun identify")
            model, _ = load_model(path)
            timing = benchmark_solve(
                pair, f, rank=model.rank_used, repeats=cfg.repeats,
                warmups=cfg.warmups, scope=cfg.time_scope,
            )
            entries.append((label, rule.label(), model, timing))
            extras[(label, rule.label())] = {
                "one_step_rmse_m": one_step_rmse(model, pair),
            }

    rows = build_table(entries, references, snapshot_dims, extras)

    with open(out / "table1.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["basis", "rule", "rank", "re_percent", "t_rel_min_percent",
             "t_rel_median_percent", "flops_full", "flops_trunc"]
        )
        for r in rows:
            w.writerow(
                [r.basis_label, r.rule_label, r.rank, _fmt(r.re_percent),
                 _fmt(r.t_rel_min_percent), _fmt(r.t_rel_median_percent),
                 r.flops_full, r.flops_trunc]
            )

    print(f"{'basis':<18} {'rule':<10} {'rank r':>6} {'RE %':>10} {'min t~ %':>10}")
    for r in rows:
        print(
            f"{r.basis_label:<18} {r.rule_label:<10} {r.rank:>6} "
            f"{r.re_percent:>10.2f} {r.t_rel_min_percent:>10.2f}"
        )

    manifest["stages"]["evaluate"] = {
        "duration_s": time.perf_counter() - t0,
        "bases": eval_info,
        "time_scope": cfg.time_scope,
        "repeats": cfg.repeats,
        "warmups": cfg.warmups,
    }
    _register(manifest, "table1.csv")
    _save_manifest(out, manifest)

    # Hard sanity invariant: the full-rank route must reproduce itself.
    for label in cfg.bases:
        re_full = eval_info[label]["re_by_rank_percent"][-1]
        if re_full > RE_FULL_TOL:
            raise InvariantError(
                f"RE(full rank) = {re_full} % > {RE_FULL_TOL} for basis {label}"
            )
    return rows


def run_all(cfg, out_dir):
    """Full pipeline with a single manifest."""
    run_generate(cfg, out_dir)
    run_identify(cfg, out_dir)
    return run_evaluate(cfg, out_dir)
