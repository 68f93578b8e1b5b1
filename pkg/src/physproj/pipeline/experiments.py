"""The six experiments: model comparisons, sweeps, and timing.

Each run_* function takes a validated ExperimentConfig, writes CSV artifacts
plus a manifest.txt into config.out_dir, and returns a MetricsReport. All
randomness flows from config.seed through fixed offsets (dataset, split,
per-model training, initial conditions, resamples), so reruns with the same
config produce byte-identical CSVs apart from *_seconds columns.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from physproj import springmass
from physproj.constraints import (
    INPUT_NAMES,
    OUTPUT_NAMES,
    EnergyConstraint,
    LtpConstraints,
    LtpSchema,
    TransformSpec,
    denormalize,
    fit_transform,
    generate_synthetic_ltp,
    load_ltp_csv,
    normalize,
)
from physproj.constraints.ltp import TORR_TO_PA, synthetic_outputs
from physproj.errors import PhysprojError, ProjectionError
from physproj.nn import (
    EarlyStopConfig,
    LtpResidualTerm,
    PlateauConfig,
    SpringEnergyTerm,
    TrainConfig,
    ensemble_predict,
    ensemble_train,
    forward,
    train,
    xavier_init,
)
from physproj.pipeline.config import ExperimentConfig
from physproj.pipeline.csvio import write_csv, write_manifest, write_trajectory_csv
from physproj.pipeline.metrics import improvement_rates, rmse, rmse_variation_rate, split_dataset
from physproj.projector import CONVERGED, ProjectionSpec, project, project_batch
from physproj.springmass import STATE_NAMES, SpringParams

FOCUS_OUTPUTS = ("O2_X", "O2_plus", "ne")
LAW_VARIANTS = (
    ("all", (0, 1, 2)),
    ("pressure", (0,)),
    ("current", (1,)),
    ("neutrality", (2,)),
    ("pressure+current", (0, 1)),
    ("pressure+neutrality", (0, 2)),
    ("current+neutrality", (1, 2)),
)


@dataclass
class MetricsReport:
    """Aggregated experiment outcome; experiments fill the fields they use."""

    per_output_rmse: dict = field(default_factory=dict)  # model -> {output: rmse}
    constraint_rmse: dict = field(default_factory=dict)  # model -> {law: rmse}
    r_mean: dict = field(default_factory=dict)  # model pair -> percent
    r_all: dict = field(default_factory=dict)
    variation_pct: dict = field(default_factory=dict)
    n_nonconverged: int = 0
    phase_seconds: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# spring-mass experiments


@dataclass
class SpringContext:
    params: SpringParams
    spec: TransformSpec
    models: dict  # name -> Network
    delta_t: float
    n_substeps: int
    phase_seconds: dict


def _prepare_spring(cfg: ExperimentConfig) -> SpringContext:
    params = SpringParams()
    tick = time.perf_counter()
    data = springmass.generate_dataset(
        params, cfg.spring_e_max, cfg.spring_n_samples, cfg.spring_delta_t, cfg.spring_n_substeps, cfg.seed
    )
    gen_seconds = time.perf_counter() - tick
    train_set, val_set, _ = split_dataset(data, cfg.split_fractions, cfg.seed + 1)
    spec = fit_transform(train_set[0], STATE_NAMES, skew_threshold=np.inf)
    sets = {
        "train": (normalize(train_set[0], spec), normalize(train_set[1], spec)),
        "val": (normalize(val_set[0], spec), normalize(val_set[1], spec)),
    }
    dims = (4, *cfg.spring_hidden, 4)
    base_cfg = TrainConfig(
        learning_rate=cfg.spring_lr,
        max_epochs=cfg.spring_epochs,
        batch_size=cfg.spring_batch,
        seed=cfg.seed + 2,
    )
    tick = time.perf_counter()
    nn, _ = train(xavier_init(dims, seed=cfg.seed + 2), sets["train"], sets["val"], base_cfg)
    # the PINN shares initialization and shuffle stream with the plain NN so
    # the four-model comparison isolates the effect of the physics term
    lam = cfg.spring_lambda
    pinn_cfg = replace(base_cfg, lambda_physics=lam)
    term = SpringEnergyTerm(params, spec, weight=lam)
    pinn, _ = train(xavier_init(dims, seed=cfg.seed + 2), sets["train"], sets["val"], pinn_cfg, physics=term)
    train_seconds = time.perf_counter() - tick
    return SpringContext(
        params=params,
        spec=spec,
        models={"nn": nn, "pinn": pinn},
        delta_t=cfg.spring_delta_t,
        n_substeps=cfg.spring_n_substeps,
        phase_seconds={"data_generation_seconds": gen_seconds, "training_seconds": train_seconds},
    )


def _rollout_four(ctx: SpringContext, initial_state: np.ndarray, n_steps: int, tol: float) -> dict:
    """Rollouts of NN, PINN, and their projected counterparts from one state.

    Projected entries may be a ProjectionError instead of a RolloutResult
    when the solver fails mid-trajectory.
    """
    anchor = springmass.energy(initial_state, ctx.params)
    constraint = EnergyConstraint(ctx.params, anchor, ctx.spec)
    pspec = ProjectionSpec(tolerance=tol)

    def projector(y):
        return project(y, constraint, None, pspec)

    out = {}
    for name, net in ctx.models.items():
        model_fn = lambda z, net=net: forward(net, z)
        out[name] = springmass.rollout(model_fn, initial_state, n_steps, ctx.spec, params=ctx.params)
        try:
            out[name + "_projection"] = springmass.rollout(
                model_fn, initial_state, n_steps, ctx.spec, projector=projector, params=ctx.params
            )
        except ProjectionError as exc:
            out[name + "_projection"] = exc
    return out


def _trajectory_rmses(result, truth_norm: np.ndarray, spec, params, anchor: float) -> np.ndarray:
    """Per-variable normalized RMSE (x1, v1, x2, v2) then energy RMSE in J."""
    pred_norm = normalize(result.states, spec)
    state_rmse = np.sqrt(np.mean((pred_norm[1:] - truth_norm[1:]) ** 2, axis=0))
    energy_rmse = np.sqrt(np.mean((result.energies[1:] - anchor) ** 2))
    return np.append(state_rmse, energy_rmse)


def run_spring_single(cfg: ExperimentConfig) -> MetricsReport:
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_manifest(cfg.out_dir, cfg.items())
    ctx = _prepare_spring(cfg)
    ic = np.asarray(cfg.spring_initial_state, dtype=np.float64)
    anchor = springmass.energy(ic, ctx.params)
    n_steps = cfg.spring_steps_single

    truth = springmass.true_trajectory(ic, ctx.params, n_steps, ctx.delta_t, ctx.n_substeps)
    truth_norm = normalize(truth, ctx.spec)
    write_trajectory_csv(
        os.path.join(cfg.out_dir, "trajectory_truth.csv"),
        truth,
        np.asarray(springmass.energy(truth, ctx.params)),
        ctx.delta_t,
    )

    rollouts = _rollout_four(ctx, ic, n_steps, cfg.spring_projection_tol)
    report = MetricsReport(phase_seconds=dict(ctx.phase_seconds))
    rows = []
    for name, result in rollouts.items():
        if isinstance(result, ProjectionError):
            raise result  # single-trajectory run has nothing to fall back on
        write_trajectory_csv(os.path.join(cfg.out_dir, f"trajectory_{name}.csv"), result.states, result.energies, ctx.delta_t)
        rmses = _trajectory_rmses(result, truth_norm, ctx.spec, ctx.params, anchor)
        report.per_output_rmse[name] = dict(zip((*STATE_NAMES, "energy_J"), rmses))
        rows.append((name, *rmses))
    write_csv(
        os.path.join(cfg.out_dir, "rmse_summary.csv"),
        ["model", "rmse_x1", "rmse_v1", "rmse_x2", "rmse_v2", "rmse_energy_J"],
        rows,
    )
    return report


def run_spring_many(cfg: ExperimentConfig) -> MetricsReport:
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_manifest(cfg.out_dir, cfg.items())
    ctx = _prepare_spring(cfg)
    n_steps = cfg.spring_steps_many
    rng = np.random.default_rng(cfg.seed + 4)
    initial_states = springmass.sample_states(ctx.params, cfg.spring_e_max, cfg.spring_n_trajectories, rng)

    model_names = ("nn", "pinn", "nn_projection", "pinn_projection")
    per_traj: dict = {name: [] for name in model_names}  # rows of 5 rmses or None
    n_nonconverged = 0
    tick = time.perf_counter()
    truths = springmass.true_trajectory(initial_states, ctx.params, n_steps, ctx.delta_t, ctx.n_substeps)
    for t, ic in enumerate(initial_states):
        anchor = springmass.energy(ic, ctx.params)
        truth_norm = normalize(truths[:, t, :], ctx.spec)
        rollouts = _rollout_four(ctx, ic, n_steps, cfg.spring_projection_tol)
        for name in model_names:
            result = rollouts[name]
            if isinstance(result, ProjectionError):
                per_traj[name].append(None)
                n_nonconverged += 1
            else:
                per_traj[name].append(_trajectory_rmses(result, truth_norm, ctx.spec, ctx.params, anchor))
    rollout_seconds = time.perf_counter() - tick

    variables = (*STATE_NAMES, "energy_J")
    dist_rows = []
    for t in range(cfg.spring_n_trajectories):
        for name in model_names:
            entry = per_traj[name][t]
            if entry is None:
                dist_rows.append((t, name, "failed", "nan"))
            else:
                dist_rows.extend((t, name, var, val) for var, val in zip(variables, entry))
    write_csv(os.path.join(cfg.out_dir, "trajectories.csv"), ["trajectory", "model", "variable", "rmse"], dist_rows)

    report = MetricsReport(n_nonconverged=n_nonconverged, phase_seconds=dict(ctx.phase_seconds))
    report.phase_seconds["rollout_seconds"] = rollout_seconds
    rate_rows = []
    for base, projected in (("nn", "nn_projection"), ("pinn", "pinn_projection")):
        keep = [t for t in range(cfg.spring_n_trajectories) if per_traj[projected][t] is not None]
        base_arr = np.array([per_traj[base][t][:4] for t in keep])
        proj_arr = np.array([per_traj[projected][t][:4] for t in keep])
        r_mean, r_all = improvement_rates(base_arr, proj_arr)
        pair = f"{base}->projection"
        report.r_mean[pair] = r_mean
        report.r_all[pair] = r_all
        rate_rows.append((pair, r_mean, r_all, len(keep)))
    write_csv(
        os.path.join(cfg.out_dir, "rates.csv"),
        ["pair", "r_mean_pct", "r_all_pct", "n_trajectories_used"],
        rate_rows,
    )

    summary_rows = []
    for name in model_names:
        entries = np.array([e for e in per_traj[name] if e is not None])
        means = entries.mean(axis=0)
        stds = entries.std(axis=0, ddof=0)
        report.per_output_rmse[name] = dict(zip(variables, means))
        summary_rows.append((name, *means, *stds, len(entries)))
    write_csv(
        os.path.join(cfg.out_dir, "summary.csv"),
        ["model"]
        + [f"mean_rmse_{v}" for v in variables]
        + [f"std_rmse_{v}" for v in variables]
        + ["n_trajectories_used"],
        summary_rows,
    )
    write_csv(
        os.path.join(cfg.out_dir, "nonconverged.csv"),
        ["n_nonconverged_projections"],
        [(n_nonconverged,)],
    )
    return report


# ---------------------------------------------------------------------------
# low-temperature plasma experiments


@dataclass
class LtpContext:
    schema: LtpSchema
    in_spec: TransformSpec
    out_spec: TransformSpec
    splits: dict  # 'train'/'val'/'test' -> (X_phys, Y_phys)
    norm: dict  # same keys -> (X_norm, Y_norm)
    synthetic: bool
    phase_seconds: dict


def _load_ltp_data(cfg: ExperimentConfig, n: int, seed: int):
    if cfg.ltp_dataset_csv is not None:
        column_map = None
        if cfg.ltp_column_map is not None:
            import json

            with open(cfg.ltp_column_map, encoding="utf-8") as fh:
                column_map = json.load(fh)
        return load_ltp_csv(cfg.ltp_dataset_csv, column_map), False
    return generate_synthetic_ltp(n, seed), True


def _prepare_ltp(cfg: ExperimentConfig) -> LtpContext:
    tick = time.perf_counter()
    (x, y), synthetic = _load_ltp_data(cfg, cfg.ltp_n_samples, cfg.seed)
    gen_seconds = time.perf_counter() - tick
    train_set, val_set, test_set = split_dataset((x, y), cfg.split_fractions, cfg.seed + 1)
    in_spec = fit_transform(train_set[0], INPUT_NAMES, skew_threshold=np.inf)
    out_spec = fit_transform(train_set[1], OUTPUT_NAMES, skew_threshold=cfg.ltp_skew_threshold)
    splits = {"train": train_set, "val": val_set, "test": test_set}
    norm = {
        key: (normalize(x_, in_spec), normalize(y_, out_spec)) for key, (x_, y_) in splits.items()
    }
    return LtpContext(
        schema=LtpSchema(),
        in_spec=in_spec,
        out_spec=out_spec,
        splits=splits,
        norm=norm,
        synthetic=synthetic,
        phase_seconds={"data_generation_seconds": gen_seconds},
    )


def _ltp_train_config(cfg: ExperimentConfig, seed: int, lam: float = 0.0, split=None) -> TrainConfig:
    return TrainConfig(
        learning_rate=cfg.ltp_lr,
        max_epochs=cfg.ltp_max_epochs,
        batch_size=cfg.ltp_batch,
        lambda_physics=lam,
        lambda_split=split,
        early_stop=EarlyStopConfig(cfg.early_stop_alpha, cfg.early_stop_strip),
        lr_plateau=PlateauConfig(cfg.plateau_patience, cfg.plateau_factor),
        seed=seed,
    )


def _train_ltp_model(ctx: LtpContext, cfg: ExperimentConfig, seed: int, physics: bool):
    dims = (3, *cfg.ltp_hidden, 17)
    lam = cfg.ltp_lambda if physics else 0.0
    split = (lam / 3.0, lam / 3.0, lam / 3.0) if physics else None
    term = None
    if physics:
        constraint = LtpConstraints(ctx.schema, ctx.out_spec)
        term = LtpResidualTerm(constraint, ctx.in_spec, split)
    tcfg = _ltp_train_config(cfg, seed, lam, split)
    if cfg.ltp_n_members > 1:
        ensemble = ensemble_train(
            dims, ctx.norm["train"], ctx.norm["val"], tcfg, cfg.ltp_n_members, physics=term, transform=ctx.out_spec
        )
        return lambda z: ensemble_predict(ensemble, z)[0]
    net, _ = train(xavier_init(dims, seed=seed), ctx.norm["train"], ctx.norm["val"], tcfg, physics=term)
    return lambda z: forward(net, z)


def _project_predictions(ctx: LtpContext, preds: np.ndarray, x_phys: np.ndarray, tol: float, laws=(0, 1, 2)):
    constraint = LtpConstraints(ctx.schema, ctx.out_spec, laws=laws)
    results = project_batch(preds, constraint, x_phys, ProjectionSpec(tolerance=tol))
    projected = np.stack([r.projected for r in results])
    converged = np.array([r.status == CONVERGED for r in results])
    return projected, converged, results


def _per_output_rmse_rows(model: str, pred_norm, y_norm, y_phys, out_spec, mask=None):
    """Rows (model, output, rmse_normalized, rmse_physical); mask selects samples."""
    if mask is not None:
        pred_norm, y_norm, y_phys = pred_norm[mask], y_norm[mask], y_phys[mask]
    pred_phys = denormalize(pred_norm, out_spec)
    norm_rmse = rmse(pred_norm, y_norm, per_output=True)
    phys_rmse = rmse(pred_phys, y_phys, per_output=True)
    return [
        (model, name, norm_rmse[j], phys_rmse[j]) for j, name in enumerate(out_spec.names)
    ], dict(zip(out_spec.names, norm_rmse))


def run_ltp_compare(cfg: ExperimentConfig) -> MetricsReport:
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_manifest(cfg.out_dir, cfg.items())
    ctx = _prepare_ltp(cfg)
    x_test, y_test = ctx.splits["test"]
    xn_test, yn_test = ctx.norm["test"]

    tick = time.perf_counter()
    # shared seed: the PINN differs from the NN only through its loss
    predictors = {
        "nn": _train_ltp_model(ctx, cfg, cfg.seed + 2, physics=False),
        "pinn": _train_ltp_model(ctx, cfg, cfg.seed + 2, physics=True),
    }
    train_seconds = time.perf_counter() - tick

    preds = {name: fn(xn_test) for name, fn in predictors.items()}
    status_rows = []
    masks = {}
    n_nonconverged = 0
    tick = time.perf_counter()
    for name in ("nn", "pinn"):
        projected, converged, results = _project_predictions(ctx, preds[name], x_test, cfg.ltp_projection_tol)
        preds[name + "_projection"] = projected
        masks[name + "_projection"] = converged
        n_nonconverged += int((~converged).sum())
        status_rows.extend(
            (name + "_projection", i, r.status, r.iterations, r.kkt_norm, r.seconds)
            for i, r in enumerate(results)
        )
    projection_seconds = time.perf_counter() - tick
    write_csv(
        os.path.join(cfg.out_dir, "projection_status.csv"),
        ["model", "index", "status", "iterations", "kkt_norm", "item_seconds"],
        status_rows,
    )

    report = MetricsReport(n_nonconverged=n_nonconverged, phase_seconds=dict(ctx.phase_seconds))
    report.phase_seconds["training_seconds"] = train_seconds
    report.phase_seconds["projection_seconds"] = projection_seconds

    rmse_rows = []
    constraint_rows = []
    all_laws = LtpConstraints(ctx.schema, ctx.out_spec)
    for name in ("nn", "pinn", "nn_projection", "pinn_projection"):
        mask = masks.get(name)
        rows, by_output = _per_output_rmse_rows(name, preds[name], yn_test, y_test, ctx.out_spec, mask)
        rmse_rows.extend(rows)
        report.per_output_rmse[name] = by_output
        pred_used = preds[name] if mask is None else preds[name][mask]
        x_used = x_test if mask is None else x_test[mask]
        residuals = all_laws.residual(x_used, pred_used)
        law_rmse = np.sqrt(np.mean(residuals**2, axis=0))
        report.constraint_rmse[name] = dict(zip(LtpConstraints.LAW_NAMES, law_rmse))
        constraint_rows.extend((name, law, law_rmse[k]) for k, law in enumerate(LtpConstraints.LAW_NAMES))
    write_csv(
        os.path.join(cfg.out_dir, "per_output_rmse.csv"),
        ["model", "output", "rmse_normalized", "rmse_physical"],
        rmse_rows,
    )
    write_csv(
        os.path.join(cfg.out_dir, "constraint_rmse.csv"),
        ["model", "law", "rmse_scaled"],
        constraint_rows,
    )

    # per-law ablation of the projection applied to the plain NN predictions
    ablation_rows = []
    nn_rows, _ = _per_output_rmse_rows("nn", preds["nn"], yn_test, y_test, ctx.out_spec)
    ablation_rows.extend(("nn", output, value_norm) for _, output, value_norm, _ in nn_rows)
    for variant, laws in LAW_VARIANTS:
        projected, converged, _ = _project_predictions(ctx, preds["nn"], x_test, cfg.ltp_projection_tol, laws)
        rows, _ = _per_output_rmse_rows(variant, projected, yn_test, y_test, ctx.out_spec, converged)
        ablation_rows.extend((variant, output, value_norm) for _, output, value_norm, _ in rows)
    write_csv(
        os.path.join(cfg.out_dir, "ablation.csv"),
        ["variant", "output", "rmse_normalized"],
        ablation_rows,
    )
    return report


def _trend_inputs(cfg: ExperimentConfig) -> np.ndarray:
    """Log-spaced pressure slice at fixed current and radius."""
    from physproj.constraints.ltp import P_TORR_RANGE

    p_torr = np.logspace(np.log10(P_TORR_RANGE[0]), np.log10(P_TORR_RANGE[1]), cfg.trend_n_points)
    grid = np.stack(
        [p_torr * TORR_TO_PA, np.full_like(p_torr, cfg.trend_current), np.full_like(p_torr, cfg.trend_radius)],
        axis=-1,
    )
    return grid


def _trend_rows(ctx: LtpContext, cfg: ExperimentConfig, predict_fn):
    grid = _trend_inputs(cfg)
    ne_idx = ctx.schema.idx("ne")
    pred = predict_fn(normalize(grid, ctx.in_spec))
    projected, converged, _ = _project_predictions(ctx, pred, grid, cfg.ltp_projection_tol)
    truth = synthetic_outputs(grid)[:, ne_idx]
    pred_phys = denormalize(pred, ctx.out_spec)[:, ne_idx]
    proj_phys = denormalize(projected, ctx.out_spec)[:, ne_idx]
    return [
        (grid[i, 0], truth[i], pred_phys[i], proj_phys[i], int(converged[i]))
        for i in range(len(grid))
    ]


def run_ablation_arch(cfg: ExperimentConfig) -> MetricsReport:
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_manifest(cfg.out_dir, cfg.items())
    ctx = _prepare_ltp(cfg)
    x_test, y_test = ctx.splits["test"]
    xn_test, yn_test = ctx.norm["test"]
    focus = [ctx.schema.idx(name) for name in FOCUS_OUTPUTS]

    report = MetricsReport(phase_seconds=dict(ctx.phase_seconds))
    rows = []
    for i, width in enumerate(cfg.architectures):
        dims = (3, width, width, 17)
        n_params = sum(a * b + b for a, b in zip(dims[:-1], dims[1:]))
        tick = time.perf_counter()
        arch_cfg = replace(cfg, ltp_hidden=(width, width))
        try:
            predict = _train_ltp_model(ctx, arch_cfg, cfg.seed + 100 + i, physics=False)
            pred = predict(xn_test)
            projected, converged, _ = _project_predictions(ctx, pred, x_test, cfg.ltp_projection_tol)
            seconds = time.perf_counter() - tick
            nn_rmse = rmse(pred, yn_test, per_output=True)
            proj_rmse = rmse(projected[converged], yn_test[converged], per_output=True)
            mean_nn, mean_proj = nn_rmse.mean(), proj_rmse.mean()
            focus_nn, focus_proj = nn_rmse[focus].mean(), proj_rmse[focus].mean()
            rows.append(
                (
                    width,
                    n_params,
                    "ok",
                    mean_nn,
                    mean_proj,
                    rmse_variation_rate(mean_nn, mean_proj),
                    focus_nn,
                    focus_proj,
                    rmse_variation_rate(focus_nn, focus_proj),
                    int((~converged).sum()),
                    seconds,
                )
            )
            report.variation_pct[str(width)] = rmse_variation_rate(mean_nn, mean_proj)
            report.n_nonconverged += int((~converged).sum())
            if ctx.synthetic and width in cfg.trend_architectures:
                write_csv(
                    os.path.join(cfg.out_dir, f"trend_arch_{width}.csv"),
                    ["P_pa", "ne_true", "ne_nn", "ne_projection", "converged"],
                    _trend_rows(ctx, arch_cfg, predict),
                )
        except PhysprojError as exc:
            rows.append((width, n_params, f"failed:{type(exc).__name__}", *(["nan"] * 7), time.perf_counter() - tick))
    write_csv(
        os.path.join(cfg.out_dir, "sweep.csv"),
        [
            "hidden_width",
            "n_parameters",
            "status",
            "rmse_nn_mean17",
            "rmse_projection_mean17",
            "variation_mean17_pct",
            "rmse_nn_focus3",
            "rmse_projection_focus3",
            "variation_focus3_pct",
            "n_nonconverged",
            "train_seconds",
        ],
        rows,
    )
    return report


def run_small_samples(cfg: ExperimentConfig) -> MetricsReport:
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_manifest(cfg.out_dir, cfg.items())
    pool_cfg = replace(cfg, ltp_n_samples=cfg.pool_size)
    ctx = _prepare_ltp(pool_cfg)  # transforms fit on the pool's training split
    x_pool, y_pool = ctx.splits["train"]
    x_test, y_test = ctx.splits["test"]
    xn_test, yn_test = ctx.norm["test"]
    focus = [ctx.schema.idx(name) for name in FOCUS_OUTPUTS]

    report = MetricsReport(phase_seconds=dict(ctx.phase_seconds))
    replicate_rows = []
    sweep_rows = []
    for size in cfg.sizes:
        if size > len(x_pool):
            replicate_rows.append((size, "all", "failed:pool_too_small", "nan", "nan"))
            continue
        per_rep = []
        seconds_total = 0.0
        nonconv_total = 0
        for rep in range(cfg.n_resamples):
            rng = np.random.default_rng([cfg.seed, size, rep])
            idx = rng.choice(len(x_pool), size=size, replace=False)
            sub_norm = (normalize(x_pool[idx], ctx.in_spec), normalize(y_pool[idx], ctx.out_spec))
            sub_ctx = LtpContext(
                schema=ctx.schema,
                in_spec=ctx.in_spec,
                out_spec=ctx.out_spec,
                splits=ctx.splits,
                norm={"train": sub_norm, "val": ctx.norm["val"], "test": ctx.norm["test"]},
                synthetic=ctx.synthetic,
                phase_seconds={},
            )
            tick = time.perf_counter()
            predict = _train_ltp_model(sub_ctx, cfg, cfg.seed + 1000 * size + rep, physics=False)
            pred = predict(xn_test)
            projected, converged, _ = _project_predictions(ctx, pred, x_test, cfg.ltp_projection_tol)
            seconds_total += time.perf_counter() - tick
            nonconv_total += int((~converged).sum())
            nn_rmse = rmse(pred, yn_test, per_output=True)
            proj_rmse = rmse(projected[converged], yn_test[converged], per_output=True)
            per_rep.append((nn_rmse.mean(), proj_rmse.mean(), nn_rmse[focus].mean(), proj_rmse[focus].mean()))
            replicate_rows.append((size, rep, "ok", per_rep[-1][0], per_rep[-1][1]))
            if ctx.synthetic and size in cfg.trend_sizes and rep == 0:
                write_csv(
                    os.path.join(cfg.out_dir, f"trend_size_{size}.csv"),
                    ["P_pa", "ne_true", "ne_nn", "ne_projection", "converged"],
                    _trend_rows(ctx, cfg, predict),
                )
        means = np.array(per_rep).mean(axis=0)
        sweep_rows.append(
            (
                size,
                cfg.n_resamples,
                means[0],
                means[1],
                rmse_variation_rate(means[0], means[1]),
                means[2],
                means[3],
                rmse_variation_rate(means[2], means[3]),
                nonconv_total,
                seconds_total,
            )
        )
        report.variation_pct[str(size)] = rmse_variation_rate(means[0], means[1])
        report.n_nonconverged += nonconv_total
    write_csv(
        os.path.join(cfg.out_dir, "resamples.csv"),
        ["size", "replicate", "status", "rmse_nn_mean17", "rmse_projection_mean17"],
        replicate_rows,
    )
    write_csv(
        os.path.join(cfg.out_dir, "sweep.csv"),
        [
            "size",
            "n_resamples",
            "rmse_nn_mean17",
            "rmse_projection_mean17",
            "variation_mean17_pct",
            "rmse_nn_focus3",
            "rmse_projection_focus3",
            "variation_focus3_pct",
            "n_nonconverged",
            "train_seconds",
        ],
        sweep_rows,
    )
    return report


def run_timing(cfg: ExperimentConfig) -> MetricsReport:
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_manifest(cfg.out_dir, cfg.items())
    ctx = _prepare_ltp(cfg)
    xn_test = ctx.norm["test"][0]

    tick = time.perf_counter()
    predict = _train_ltp_model(ctx, cfg, cfg.seed + 2, physics=False)
    train_seconds = time.perf_counter() - tick

    tick = time.perf_counter()
    _ = predict(xn_test)
    inference_seconds = time.perf_counter() - tick

    extra = generate_synthetic_ltp(cfg.timing_n_test, cfg.seed + 60)[0] if ctx.synthetic else ctx.splits["test"][0]
    preds = predict(normalize(extra, ctx.in_spec))
    tick = time.perf_counter()
    _, converged, _ = _project_predictions(ctx, preds, extra, cfg.ltp_projection_tol)
    projection_seconds = time.perf_counter() - tick

    base = ctx.phase_seconds["data_generation_seconds"] + train_seconds + inference_seconds
    overhead_pct = 100.0 * projection_seconds / base if base > 0 else float("inf")
    report = MetricsReport(
        n_nonconverged=int((~converged).sum()),
        phase_seconds={
            **ctx.phase_seconds,
            "training_seconds": train_seconds,
            "inference_seconds": inference_seconds,
            "projection_seconds": projection_seconds,
        },
    )
    write_csv(
        os.path.join(cfg.out_dir, "timing.csv"),
        ["phase", "n_points", "phase_seconds"],
        [
            ("data_generation", cfg.ltp_n_samples, ctx.phase_seconds["data_generation_seconds"]),
            ("training", len(ctx.norm["train"][0]), train_seconds),
            ("inference", len(xn_test), inference_seconds),
            ("projection", len(extra), projection_seconds),
        ],
    )
    write_csv(
        os.path.join(cfg.out_dir, "overhead.csv"),
        ["projection_overhead_pct_seconds", "n_nonconverged"],
        [(overhead_pct, report.n_nonconverged)],
    )
    return report


RUNNERS = {
    "spring-single": run_spring_single,
    "spring-many": run_spring_many,
    "ltp-compare": run_ltp_compare,
    "ablation-arch": run_ablation_arch,
    "small-samples": run_small_samples,
    "timing": run_timing,
}


def run_experiment(cfg: ExperimentConfig) -> MetricsReport:
    cfg.validate()
    return RUNNERS[cfg.kind](cfg)
