"""Two-stage gradient fit of hand parameters to a target silhouette.

Stage 1 optimizes the low-dimensional parameters (pose PCs, shape, global
rotation, translation) with Adam from several seeded restarts; stage 2
freezes them and optimizes per-vertex offsets added to the stage-1 mesh,
regularized by graph-Laplacian smoothness and an L2 pull toward zero. The
restart with the lowest final total wins.

`HandSilhouetteFitter` wraps the same machinery behind a scikit-learn
style estimator (constructor holds the config, `fit` returns self and
exposes trailing-underscore attributes, `get_params`/`set_params` for
introspection).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

import numpy as np
import torch

from . import imgio
from .engine import FitTarget, evaluate_loss, loss_gradient, make_target_from_mask
from .hand_model import (
    HandMesh,
    HandModel,
    HandParams,
    Joints,
    NUM_VERTICES,
    pose_mesh,
    regress_joints,
)
from .losses import MODE_FULL, MODE_SILHOUETTE, LossBreakdown, LossWeights
from .metrics import MetricReport, evaluate
from .render import Camera, SilhouetteImage, render_hard, render_soft

logger = logging.getLogger(__name__)

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


def fitting_weights() -> LossWeights:
    """Default loss weights for direct per-sample fitting.

    The training-time weights (LossWeights defaults) balance a network
    trained over a dataset; optimized directly per sample they let the
    contour term's shrink bias win over the supervised terms (a smaller
    silhouette pays less ring cost than the mesh error it causes). The
    fitting profile keeps the same ratios within the supervised group but
    scales it 30x so ground truth dominates when available.
    """
    base = LossWeights()
    return LossWeights(
        pose=30.0 * base.pose,
        aligned_pose=30.0 * base.aligned_pose,
        bce=base.bce,
        contour=base.contour,
        mesh=30.0 * base.mesh,
        aligned_mesh=30.0 * base.aligned_mesh,
    )


@dataclass(frozen=True)
class FitConfig:
    iterations_stage1: int = 400
    iterations_stage2: int = 200
    learning_rate: float = 1e-2
    stage2_learning_rate: float = 1e-4  # offsets move ~0.1 mm per step
    lr_schedule: str = "cosine"  # anneal to 0 within each stage
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    restarts: int = 3
    seed: int = 0
    weights: LossWeights = field(default_factory=fitting_weights)
    mode: str = MODE_FULL
    offset_reg: float = 1.0  # Laplacian smoothness weight, stage 2
    offset_l2: float = 0.1
    border_band: int = 0
    sigma: float | None = None
    optimize_beta: bool = True
    silhouette_prior: float = 1e-3  # L2 prior on theta/beta, silhouette-only mode
    compute_dtype: str = "float32"

    def __post_init__(self):
        if self.iterations_stage1 < 0 or self.iterations_stage2 < 0:
            raise ValueError("iterations: must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate: must be positive, got {self.learning_rate}")
        if self.restarts < 1:
            raise ValueError(f"restarts: must be >= 1, got {self.restarts}")
        if self.mode not in (MODE_FULL, MODE_SILHOUETTE):
            raise ValueError(f"mode: expected 'full' or 'silhouette_only', got {self.mode!r}")
        if self.lr_schedule not in ("cosine", "constant"):
            raise ValueError(f"lr_schedule: expected 'cosine' or 'constant', got {self.lr_schedule!r}")
        if self.compute_dtype not in _DTYPES:
            raise ValueError(f"compute_dtype: expected float32 or float64, got {self.compute_dtype!r}")

    @property
    def dtype(self) -> torch.dtype:
        return _DTYPES[self.compute_dtype]

    @property
    def prior_weight(self) -> float:
        return self.silhouette_prior if self.mode == MODE_SILHOUETTE else 0.0

    def lr_at(self, iteration: int, total: int, base: float | None = None) -> float:
        base = self.learning_rate if base is None else base
        if self.lr_schedule == "constant" or total <= 1:
            return base
        return base * 0.5 * (1.0 + math.cos(math.pi * iteration / total))

    def to_dict(self) -> dict:
        d = {}
        for f in dataclass_fields(self):
            v = getattr(self, f.name)
            d[f.name] = v.to_dict() if f.name == "weights" else v
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FitConfig":
        known = {f.name for f in dataclass_fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"config: unknown fields {sorted(unknown)}")
        kwargs = dict(d)
        if "weights" in kwargs and isinstance(kwargs["weights"], dict):
            kwargs["weights"] = LossWeights.from_dict(kwargs["weights"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "FitConfig":
        path = Path(path)
        text = path.read_text()
        if path.suffix.lower() == ".toml":
            try:
                import tomllib  # py >= 3.11
            except ImportError:
                try:
                    import tomli as tomllib
                except ImportError as exc:
                    raise ValueError(
                        f"config {path}: TOML support needs Python 3.11+ or the tomli package"
                    ) from exc
            return cls.from_dict(tomllib.loads(text))
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ValueError(f"config {path}: invalid JSON ({exc})") from exc


@dataclass
class GroundTruth:
    joints: Joints
    mesh: HandMesh
    params: HandParams | None = None


@dataclass
class AdamState:
    """First/second moment estimates per parameter tensor."""

    m: dict
    v: dict
    step: int = 0

    @classmethod
    def for_params(cls, params: dict) -> "AdamState":
        return cls(
            m={k: torch.zeros_like(t) for k, t in params.items()},
            v={k: torch.zeros_like(t) for k, t in params.items()},
            step=0,
        )


def adam_step(
    state: AdamState,
    params: dict,
    grads: dict,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> dict:
    """One bias-corrected Adam update; mutates `state`, returns new params."""
    for k, g in grads.items():
        if not torch.isfinite(g).all():
            raise ValueError(f"gradient for {k!r} is non-finite")
    state.step += 1
    t = state.step
    out = {}
    for k, p in params.items():
        g = grads[k]
        state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g
        state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g
        m_hat = state.m[k] / (1.0 - beta1**t)
        v_hat = state.v[k] / (1.0 - beta2**t)
        out[k] = p - lr * m_hat / (torch.sqrt(v_hat) + eps)
    return out


def init_params(
    restart_index: int,
    seed: int,
    n_pc: int,
    model: HandModel,
    camera: Camera,
    mask: SilhouetteImage,
) -> HandParams:
    """Deterministic initialization per (seed, restart).

    Restart 0 starts at zero pose with the translation chosen so the
    template projects onto the mask: depth from the ratio of the template's
    bounding-box diagonal to the mask's, x/y from the mask centroid.
    Later restarts add seeded uniform noise to pose and rotation.
    """
    fg = mask.pixels >= 0.5
    if not bool(fg.any()):
        raise ValueError("mask: empty; cannot initialize the fit")
    rows = fg.any(dim=1).nonzero()
    cols = fg.any(dim=0).nonzero()
    height_px = float(rows.max() - rows.min()) + 1.0
    width_px = float(cols.max() - cols.min()) + 1.0
    diag_px = math.hypot(height_px, width_px)
    ys, xs = fg.nonzero(as_tuple=True)
    center_u = float(xs.to(torch.float64).mean())
    center_v = float(ys.to(torch.float64).mean())

    template = model.template_vertices
    extent = (template.max(dim=0).values - template.min(dim=0).values).numpy()
    diag_m = float(np.linalg.norm(extent))
    focal = (camera.fx + camera.fy) / 2.0
    z = focal * diag_m / max(diag_px, 1.0)
    centroid = template.mean(dim=0)
    tx = (center_u - camera.cx) * z / camera.fx - float(centroid[0])
    ty = (center_v - camera.cy) * z / camera.fy - float(centroid[1])
    tz = z - float(centroid[2])

    params = HandParams.zeros(n_pc)
    params.translation = torch.tensor([tx, ty, tz], dtype=torch.float64)
    if restart_index > 0:
        rng = np.random.default_rng([seed, restart_index])
        params.theta = torch.from_numpy(rng.uniform(-0.5, 0.5, size=n_pc))
        params.rotation = torch.from_numpy(rng.uniform(-math.pi / 4, math.pi / 4, size=3))
    return params


def _free_vertex_links(faces: torch.Tensor, template: torch.Tensor) -> list:
    """Link vertices not referenced by any face to their nearest used vertex."""
    used = torch.zeros(NUM_VERTICES, dtype=torch.bool)
    used[faces.flatten()] = True
    free = (~used).nonzero().flatten()
    if free.numel() == 0:
        return []
    used_idx = used.nonzero().flatten()
    links = []
    for v in free.tolist():
        d = ((template[used_idx] - template[v]) ** 2).sum(dim=1)
        links.append((v, int(used_idx[int(torch.argmin(d))])))
    return links


def _connect_components(edges: set, n: int, template: torch.Tensor) -> set:
    """Add minimal links so the smoothness graph has one component."""
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for a, b in edges:
        union(a, b)
    roots = {}
    for v in range(n):
        roots.setdefault(find(v), []).append(v)
    comps = sorted(roots.values(), key=lambda c: c[0])
    main = comps[0]
    extra = set(edges)
    for comp in comps[1:]:
        best = None
        for v in comp:
            d = ((template[main] - template[v]) ** 2).sum(dim=1)
            i = int(torch.argmin(d))
            cand = (float(d[i]), v, main[i])
            if best is None or cand < best:
                best = cand
        extra.add((best[1], best[2]))
        union(best[1], best[2])
        main = main + comp
    return extra


def smoothness_edges(model: HandModel) -> torch.Tensor:
    """Undirected edge list for offset smoothing: face edges, plus links for
    unreferenced vertices and between disconnected pieces."""
    cached = model._dtype_cache.get("smoothness_edges")
    if cached is not None:
        return cached
    faces = model.faces
    edges = set()
    for f in faces.tolist():
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            edges.add((min(a, b), max(a, b)))
    template = model.template_vertices
    for a, b in _free_vertex_links(faces, template):
        edges.add((min(a, b), max(a, b)))
    edges = _connect_components(edges, NUM_VERTICES, template)
    result = torch.tensor(sorted(edges), dtype=torch.int64)
    model._dtype_cache["smoothness_edges"] = result
    return result


def offset_regularizers(
    offsets: torch.Tensor, edges: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """Smoothness and L2 penalties with their closed-form gradients.

    smooth = mean over edges ||o_u - o_v||^2, l2 = mean over vertices
    ||o_v||^2. Returns (smooth, l2, d_smooth, d_l2).
    """
    diff = offsets[edges[:, 0]] - offsets[edges[:, 1]]
    smooth = (diff * diff).sum(dim=1).mean()
    l2 = (offsets * offsets).sum(dim=1).mean()
    d_smooth = torch.zeros_like(offsets)
    scale = 2.0 / edges.shape[0]
    d_smooth.index_add_(0, edges[:, 0], diff * scale)
    d_smooth.index_add_(0, edges[:, 1], -diff * scale)
    d_l2 = offsets * (2.0 / offsets.shape[0])
    return smooth, l2, d_smooth, d_l2


@dataclass
class FitResult:
    params: HandParams
    offsets: torch.Tensor  # (778, 3)
    prelim_mesh: HandMesh
    prelim_joints: Joints
    refined_mesh: HandMesh
    refined_joints: Joints
    rendered_soft: SilhouetteImage
    rendered_hard: SilhouetteImage
    loss_trace: list  # LossBreakdown per evaluation, final state last
    best_restart: int
    restart_totals: list  # final total per restart (nan if diverged)
    metrics: MetricReport | None = None


def _params_dict(params: HandParams, optimize_beta: bool) -> dict:
    d = {"theta": params.theta, "rotation": params.rotation, "translation": params.translation}
    if optimize_beta:
        d["beta"] = params.beta
    return d


def _run_restart(
    model: HandModel,
    camera: Camera,
    target: FitTarget,
    config: FitConfig,
    restart: int,
    gt: GroundTruth | None,
    edges: torch.Tensor,
):
    dtype = config.dtype
    gt_joints = gt.joints if gt is not None else None
    gt_mesh = gt.mesh if gt is not None else None
    if gt_joints is not None:
        gt_joints = Joints(positions=gt_joints.positions.to(dtype))
    if gt_mesh is not None:
        gt_mesh = HandMesh(vertices=gt_mesh.vertices.to(dtype), faces=gt_mesh.faces)
    loss_kwargs = dict(
        mode=config.mode,
        gt_joints=gt_joints,
        gt_mesh=gt_mesh,
        sigma=config.sigma,
        border_band=config.border_band,
        prior_weight=config.prior_weight,
    )

    params = init_params(restart, config.seed, model.n_pc, model, camera, target.mask)
    params = HandParams(
        theta=params.theta.to(dtype),
        beta=params.beta.to(dtype),
        rotation=params.rotation.to(dtype),
        translation=params.translation.to(dtype),
    )
    trace: list[LossBreakdown] = []

    opt_params = _params_dict(params, config.optimize_beta)
    state = AdamState.for_params(opt_params)
    for it in range(config.iterations_stage1):
        try:
            breakdown, grad = loss_gradient(
                model, camera, params, None, target, config.weights, **loss_kwargs
            )
        except ValueError as exc:
            logger.warning("restart %d diverged in stage 1: %s", restart, exc)
            return None, trace
        trace.append(breakdown)
        grads = {
            "theta": grad.d_theta,
            "rotation": grad.d_rotation,
            "translation": grad.d_translation,
        }
        if config.optimize_beta:
            grads["beta"] = grad.d_beta
        opt_params = adam_step(
            state, opt_params, grads, config.lr_at(it, config.iterations_stage1),
            config.adam_beta1, config.adam_beta2, config.adam_eps,
        )
        params = HandParams(
            theta=opt_params["theta"],
            beta=opt_params.get("beta", params.beta),
            rotation=opt_params["rotation"],
            translation=opt_params["translation"],
        )

    offsets = torch.zeros(NUM_VERTICES, 3, dtype=dtype)
    opt_offsets = {"offsets": offsets}
    state2 = AdamState.for_params(opt_offsets)
    for it in range(config.iterations_stage2):
        try:
            breakdown, grad = loss_gradient(
                model, camera, params, offsets, target, config.weights, **loss_kwargs
            )
        except ValueError as exc:
            logger.warning("restart %d diverged in stage 2: %s", restart, exc)
            return None, trace
        smooth, l2, d_smooth, d_l2 = offset_regularizers(offsets, edges)
        breakdown.offset_smooth = float(smooth)
        breakdown.offset_l2 = float(l2)
        breakdown.total += config.offset_reg * float(smooth) + config.offset_l2 * float(l2)
        trace.append(breakdown)
        total_grad = grad.d_offsets + config.offset_reg * d_smooth + config.offset_l2 * d_l2
        opt_offsets = adam_step(
            state2, opt_offsets, {"offsets": total_grad},
            config.lr_at(it, config.iterations_stage2, base=config.stage2_learning_rate),
            config.adam_beta1, config.adam_beta2, config.adam_eps,
        )
        offsets = opt_offsets["offsets"]

    # closing evaluation at the final parameters
    try:
        with torch.no_grad():
            _, breakdown, _ = evaluate_loss(
                model, camera, params, offsets, target, config.weights, **loss_kwargs
            )
    except ValueError as exc:
        logger.warning("restart %d diverged at final eval: %s", restart, exc)
        return None, trace
    smooth, l2, _, _ = offset_regularizers(offsets, edges)
    breakdown.offset_smooth = float(smooth)
    breakdown.offset_l2 = float(l2)
    breakdown.total += config.offset_reg * float(smooth) + config.offset_l2 * float(l2)
    trace.append(breakdown)
    return (params, offsets), trace


def fit(
    model: HandModel,
    camera: Camera,
    mask: SilhouetteImage,
    config: FitConfig | None = None,
    gt: GroundTruth | None = None,
    jobs: int = 1,
) -> FitResult:
    """Fit hand parameters (and refinement offsets) to a binary mask.

    Runs `config.restarts` independent seeded restarts and returns the one
    with the lowest final total. Ground truth enables the supervised loss
    terms (mode 'full') and the metric report. Deterministic given the
    seed: reruns produce identical results bit for bit.
    """
    config = config or FitConfig()
    if config.mode == MODE_FULL and gt is None:
        raise ValueError("mode 'full' requires ground truth (gt=...)")
    target = make_target_from_mask(mask, camera, config.dtype)
    edges = smoothness_edges(model)

    def run(r: int):
        return _run_restart(model, camera, target, config, r, gt, edges)

    results = {}
    if jobs > 1 and config.restarts > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {r: pool.submit(run, r) for r in range(config.restarts)}
            results = {r: f.result() for r, f in futures.items()}
    else:
        for r in range(config.restarts):
            results[r] = run(r)

    totals = []
    for r in range(config.restarts):
        outcome, trace = results[r]
        totals.append(trace[-1].total if outcome is not None and trace else float("nan"))
    finite = [(t, r) for r, t in enumerate(totals) if not math.isnan(t)]
    if not finite:
        raise RuntimeError("all restarts diverged; cannot produce a fit")
    best = min(finite)[1]
    (params, offsets), trace = results[best]

    with torch.no_grad():
        prelim_mesh, prelim_joints = pose_mesh(model, params)
        refined_mesh = HandMesh(
            vertices=prelim_mesh.vertices + offsets, faces=prelim_mesh.faces
        )
        refined_joints = regress_joints(model, refined_mesh)
        rendered_soft = render_soft(camera, refined_mesh, sigma=config.sigma)
        rendered_hard = render_hard(camera, refined_mesh)

    metrics = None
    if gt is not None:
        metrics = evaluate(
            gt_joints=[gt.joints],
            pred_joints=[Joints(positions=refined_joints.positions.to(torch.float64))],
            gt_meshes=[gt.mesh],
            pred_meshes=[HandMesh(vertices=refined_mesh.vertices.to(torch.float64), faces=model.faces)],
            gt_masks=[mask],
            pred_masks=[rendered_hard],
        )

    return FitResult(
        params=params.detached_clone(),
        offsets=offsets.detach().clone(),
        prelim_mesh=prelim_mesh,
        prelim_joints=prelim_joints,
        refined_mesh=refined_mesh,
        refined_joints=refined_joints,
        rendered_soft=rendered_soft,
        rendered_hard=rendered_hard,
        loss_trace=trace,
        best_restart=best,
        restart_totals=totals,
        metrics=metrics,
    )


def save_fit_result(result: FitResult, out_dir) -> None:
    """Write the standard output bundle for one fitted sample."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "params.json").write_text(json.dumps(result.params.to_dict(), indent=2))
    imgio.write_float_grid(result.offsets, out / "offsets.dfield")
    imgio.write_obj(result.prelim_mesh.vertices, result.prelim_mesh.faces, out / "mesh_prelim.obj")
    imgio.write_obj(result.refined_mesh.vertices, result.refined_mesh.faces, out / "mesh_refined.obj")
    imgio.write_mask_png(result.rendered_soft, out / "silhouette_soft.png")
    imgio.write_mask_png(result.rendered_hard, out / "silhouette_hard.png")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    from .losses import TERM_NAMES

    writer.writerow(("iteration",) + TERM_NAMES + ("total",))
    for i, b in enumerate(result.loss_trace):
        writer.writerow([i] + [repr(getattr(b, n)) for n in TERM_NAMES] + [repr(b.total)])
    (out / "trace.csv").write_text(buf.getvalue())

    summary = {
        "best_restart": result.best_restart,
        "restart_totals": [None if math.isnan(t) else t for t in result.restart_totals],
        "final_loss": result.loss_trace[-1].to_dict() if result.loss_trace else None,
        "joints": result.refined_joints.positions.to(torch.float64).numpy().tolist(),
        "vertices": result.refined_mesh.vertices.to(torch.float64).numpy().tolist(),
        "prelim_joints": result.prelim_joints.positions.to(torch.float64).numpy().tolist(),
        "metrics": result.metrics.to_dict() if result.metrics is not None else None,
    }
    (out / "result.json").write_text(json.dumps(summary, indent=2))


class HandSilhouetteFitter:
    """Estimator-style front end: configure once, fit per mask.

    >>> fitter = HandSilhouetteFitter(model=model, camera=camera, seed=3)
    >>> fitter.fit(mask).joints_
    """

    def __init__(
        self,
        model: HandModel | None = None,
        camera: Camera | None = None,
        *,
        iterations_stage1: int = 400,
        iterations_stage2: int = 200,
        learning_rate: float = 1e-2,
        stage2_learning_rate: float = 1e-4,
        lr_schedule: str = "cosine",
        adam_beta1: float = 0.9,
        adam_beta2: float = 0.999,
        adam_eps: float = 1e-8,
        restarts: int = 3,
        seed: int = 0,
        weights: LossWeights | None = None,
        mode: str = MODE_FULL,
        offset_reg: float = 1.0,
        offset_l2: float = 0.1,
        border_band: int = 0,
        sigma: float | None = None,
        optimize_beta: bool = True,
        silhouette_prior: float = 1e-3,
        compute_dtype: str = "float32",
    ):
        self.model = model
        self.camera = camera
        self.iterations_stage1 = iterations_stage1
        self.iterations_stage2 = iterations_stage2
        self.learning_rate = learning_rate
        self.stage2_learning_rate = stage2_learning_rate
        self.lr_schedule = lr_schedule
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.adam_eps = adam_eps
        self.restarts = restarts
        self.seed = seed
        self.weights = weights
        self.mode = mode
        self.offset_reg = offset_reg
        self.offset_l2 = offset_l2
        self.border_band = border_band
        self.sigma = sigma
        self.optimize_beta = optimize_beta
        self.silhouette_prior = silhouette_prior
        self.compute_dtype = compute_dtype

    _PARAM_NAMES = (
        "model", "camera", "iterations_stage1", "iterations_stage2", "learning_rate",
        "stage2_learning_rate", "lr_schedule", "adam_beta1", "adam_beta2", "adam_eps", "restarts", "seed",
        "weights", "mode", "offset_reg", "offset_l2", "border_band", "sigma",
        "optimize_beta", "silhouette_prior", "compute_dtype",
    )

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._PARAM_NAMES}

    def set_params(self, **params) -> "HandSilhouetteFitter":
        for name, value in params.items():
            if name not in self._PARAM_NAMES:
                raise ValueError(f"unknown parameter {name!r}")
            setattr(self, name, value)
        return self

    def _config(self) -> FitConfig:
        return FitConfig(
            iterations_stage1=self.iterations_stage1,
            iterations_stage2=self.iterations_stage2,
            learning_rate=self.learning_rate,
            stage2_learning_rate=self.stage2_learning_rate,
            lr_schedule=self.lr_schedule,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_eps=self.adam_eps,
            restarts=self.restarts,
            seed=self.seed,
            weights=self.weights or fitting_weights(),
            mode=self.mode,
            offset_reg=self.offset_reg,
            offset_l2=self.offset_l2,
            border_band=self.border_band,
            sigma=self.sigma,
            optimize_beta=self.optimize_beta,
            silhouette_prior=self.silhouette_prior,
            compute_dtype=self.compute_dtype,
        )

    def fit(self, mask, gt: GroundTruth | None = None) -> "HandSilhouetteFitter":
        if self.model is None or self.camera is None:
            raise ValueError("model and camera must be set before fitting")
        if not isinstance(mask, SilhouetteImage):
            mask = SilhouetteImage(
                pixels=torch.as_tensor(np.asarray(mask), dtype=torch.float64), kind="hard"
            )
        result = fit(self.model, self.camera, mask, self._config(), gt=gt)
        self.result_ = result
        self.params_ = result.params
        self.offsets_ = result.offsets
        self.joints_ = result.refined_joints.positions
        self.mesh_ = result.refined_mesh.vertices
        self.n_iter_ = len(result.loss_trace) - 1
        return self

    def predict(self, mask=None) -> torch.Tensor:
        """Joints of the fitted hand; fits first when a mask is given."""
        if mask is not None:
            self.fit(mask)
        if not hasattr(self, "joints_"):
            raise ValueError("not fitted yet; call fit(mask) first")
        return self.joints_

    def score(self, mask=None) -> float:
        """Silhouette IoU of the fitted hand against a mask (the fitted one
        by default)."""
        from .metrics import iou_dice

        if not hasattr(self, "result_"):
            raise ValueError("not fitted yet; call fit(mask) first")
        if mask is None:
            raise ValueError("score needs the target mask")
        if not isinstance(mask, SilhouetteImage):
            mask = SilhouetteImage(
                pixels=torch.as_tensor(np.asarray(mask), dtype=torch.float64), kind="hard"
            )
        iou, _ = iou_dice(self.result_.rendered_hard, mask)
        return iou
