"""End-to-end staged run: one semantic mask in, rendered frames and a report out.

Each stage owns a fixed set of files under the output directory and is skipped
when all of them already exist, so a crashed run resumes by rerunning the same
command (and a stage reruns after its files are deleted). Stages reload their
in-memory products from the files they just wrote, which makes a resumed run
bit-identical to a fresh one: everything downstream sees the serialized form
either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .adapters import OracleHandle, make_adapter
from .appearance import (
    AppearanceConfig,
    load_appearance,
    render_appearance,
    save_appearance,
    train_appearance,
)
from .cameras import orbit_cameras, sample_cameras
from .config import load_config, normalized, pose_box, save_config, scene_box
from .errors import StageFailure, ValidationError
from .inpaint import InpaintConfig, inpaint, load_inpainter, save_inpainter, train_inpainter
from .metrics import (
    color_consistency,
    depth_abs_rel,
    label_accuracy,
    nll_score,
    psnr,
    vsc_score,
)
from .report import EvalReport, load_report, render_figures, save_report
from .scenekit import (
    default_camera,
    load_cameras,
    load_depth,
    load_image,
    load_mask,
    make_oracle_scene,
    render_oracle,
    save_cameras,
    save_depth,
    save_image,
    save_mask,
)
from .semfield import (
    FusionView,
    FusionViewSet,
    SemanticFieldConfig,
    extract_mesh,
    load_field,
    load_mesh,
    render_semantic_views,
    save_field,
    save_mesh,
    train_semantic_field,
)
from .warp import PoseSampler, warp_mask, warpback_pair

STAGES = (
    "scene",
    "warpback",
    "inpainter",
    "views",
    "semfield",
    "fused",
    "appearance",
    "frames",
    "evaluate",
)

# Fixed stream ids so every stage draws independent seeds from pipeline.seed.
_S_CAMERAS = 1
_S_WARPBACK = 2
_S_INPAINT = 3
_S_FIELD = 4
_S_APPEARANCE = 5
_S_DEPTH = 6
_S_SEGMENT = 7


def derive_seed(*parts: int) -> int:
    """Collision-resistant child seed from (pipeline seed, stream id, indices)."""
    return int(np.random.SeedSequence(tuple(int(p) for p in parts)).generate_state(1)[0])


@dataclass(frozen=True)
class AdapterSet:
    """The three pluggable 2D models a run talks to."""

    synthesizer: object
    depth: object
    segmenter: object


def build_adapters(cfg: dict) -> AdapterSet:
    """Instantiate the configured adapters; their options come from the config."""
    seed = int(cfg["pipeline.seed"])

    def options(kind: str) -> dict:
        name = cfg[f"adapters.{kind}"]
        if name == "stub":
            if kind == "depth":
                return {"noise_level": cfg["adapters.depth_noise"],
                        "seed": derive_seed(seed, _S_DEPTH)}
            if kind == "segmenter":
                return {"jitter": cfg["adapters.segmenter_jitter"],
                        "seed": derive_seed(seed, _S_SEGMENT)}
            return {}
        if name == "external":
            command = cfg[f"adapters.{kind}_command"]
            if not command:
                raise ValidationError(f"adapters.{kind} = external needs "
                                      f"adapters.{kind}_command to be set")
            if kind == "segmenter":
                return {"command": command, "num_classes": int(cfg["scene.num_classes"])}
            return {"command": command}
        return {}

    return AdapterSet(*(make_adapter(kind, cfg[f"adapters.{kind}"], **options(kind))
                        for kind in ("synthesizer", "depth", "segmenter")))


class PipelineRun:
    """Stage executor bound to one config and one output directory.

    Attributes fill in as stages run (or reload): `cameras` (source first),
    `source_mask`, `field`, `mesh`, `report`, and friends. Use `run_pipeline`
    rather than instantiating this directly.
    """

    def __init__(self, cfg: dict, out_dir, log=None):
        self.cfg = normalized(cfg)
        self.out = Path(out_dir)
        self.log = log or (lambda line: None)
        self.adapters = build_adapters(self.cfg)
        self.bounds = scene_box(self.cfg)
        self.far = float(self.cfg["scene.far"])
        self.num_classes = int(self.cfg["scene.num_classes"])
        self.seed = int(self.cfg["pipeline.seed"])
        res = int(self.cfg["camera.resolution"])
        self.resolution = (res, res)
        self.scene = make_oracle_scene(
            int(self.cfg["scene.seed"]), self.num_classes, self.bounds, self.far)

    # -- plumbing ----------------------------------------------------------

    def _ensure_config(self) -> None:
        """Pin the config an output directory was built with."""
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / "config.txt"
        if path.exists():
            if load_config(path) != self.cfg:
                raise ValidationError(
                    f"{path} differs from the requested config; "
                    "use a fresh --out or rerun with the original settings")
        else:
            save_config(path, self.cfg)

    def _fresh(self, paths) -> bool:
        """True when the stage has to run because some artifact is missing."""
        return not all(p.exists() for p in paths)

    def _view_count(self) -> int:
        return int(self.cfg["camera.views"])

    def _style_seed(self) -> int:
        return int(self.cfg["appearance.style_seed"])

    # -- stages ------------------------------------------------------------

    def _stage_scene(self) -> None:
        sdir = self.out / "scene"
        paths = [sdir / "cameras.json", sdir / "source_mask.pgm",
                 sdir / "source_depth.bin", sdir / "source_image.ppm"]
        if self._fresh(paths):
            sdir.mkdir(exist_ok=True)
            target = self.cfg["camera.target"]
            focal = float(self.cfg["camera.focal_scale"])
            source_cam = default_camera(
                self.resolution, self.cfg["camera.source_position"], target, focal)
            novel = sample_cameras(
                pose_box(self.cfg), target, self._view_count(),
                derive_seed(self.seed, _S_CAMERAS), self.resolution, focal)
            handle = OracleHandle(self.scene, source_cam, tag=0)
            mask, _ = handle.rendered
            image = self.adapters.synthesizer(mask, self._style_seed())
            depth = self.adapters.depth(image, handle)
            save_cameras(paths[0], [source_cam] + novel)
            save_mask(paths[1], mask)
            save_depth(paths[2], depth)
            save_image(paths[3], image)
        self.cameras = load_cameras(paths[0])
        if len(self.cameras) != self._view_count() + 1:
            raise ValidationError(f"{paths[0]} holds {len(self.cameras)} cameras; "
                                  "camera.views changed since the scene stage ran")
        self.source_mask = load_mask(paths[1], self.num_classes)
        self.source_depth = load_depth(paths[2])
        self.source_image = load_image(paths[3])

    def _stage_warpback(self) -> None:
        wdir = self.out / "warpback"
        n_pairs = int(self.cfg["warpback.pairs"])
        per_source = int(self.cfg["warpback.poses_per_source"])
        if n_pairs < 1 or per_source < 1:
            raise ValidationError("warpback.pairs and warpback.poses_per_source must be positive")
        paths = []
        for k in range(n_pairs):
            paths += [wdir / f"pair_{k:04d}_corrupted.pgm", wdir / f"pair_{k:04d}_target.pgm"]
        if self._fresh(paths):
            wdir.mkdir(exist_ok=True)
            sampler = PoseSampler(pose_box(self.cfg), self.cfg["camera.target"])
            source_cam = self.cameras[0]
            threshold = float(self.cfg["warp.edge_threshold"])
            k = 0
            # Scene seed + s so source 0 is this run's own scene; the rest add
            # layout variety without widening the input contract (masks are
            # the input modality, depth goes through the adapter as always).
            for s in range(math.ceil(n_pairs / per_source)):
                scn = make_oracle_scene(
                    int(self.cfg["scene.seed"]) + s, self.num_classes, self.bounds, self.far)
                handle = OracleHandle(scn, source_cam, tag=s)
                mask, _ = handle.rendered
                image = self.adapters.synthesizer(mask, self._style_seed())
                depth = self.adapters.depth(image, handle)
                for _ in range(min(per_source, n_pairs - k)):
                    corrupted, target = warpback_pair(
                        mask, depth, source_cam, sampler,
                        seed=derive_seed(self.seed, _S_WARPBACK, k), rel_threshold=threshold)
                    save_mask(wdir / f"pair_{k:04d}_corrupted.pgm", corrupted)
                    save_mask(wdir / f"pair_{k:04d}_target.pgm", target)
                    k += 1
        self.pairs = [
            (load_mask(paths[2 * k], self.num_classes),
             load_mask(paths[2 * k + 1], self.num_classes))
            for k in range(n_pairs)
        ]

    def _stage_inpainter(self) -> None:
        path = self.out / "inpaint_model.bin"
        if self._fresh([path]):
            cfg = InpaintConfig(
                resolution=int(self.cfg["camera.resolution"]),
                batch_size=int(self.cfg["inpaint.batch_size"]),
                iterations=int(self.cfg["inpaint.iterations"]),
                lr=float(self.cfg["inpaint.lr"]),
                seed=derive_seed(self.seed, _S_INPAINT))
            save_inpainter(path, train_inpainter(self.pairs, cfg))
        self.inpainter = load_inpainter(path)

    def _stage_views(self) -> None:
        vdir = self.out / "views"
        names = ("warped_mask.pgm", "warped_depth.bin", "inpainted.pgm",
                 "image.ppm", "depth.bin")
        paths = [vdir / f"view_{i:02d}_{name}"
                 for i in range(self._view_count()) for name in names]
        if self._fresh(paths):
            vdir.mkdir(exist_ok=True)
            threshold = float(self.cfg["warp.edge_threshold"])
            for i, cam in enumerate(self.cameras[1:]):
                warped = warp_mask(self.source_mask, self.source_depth,
                                   self.cameras[0], cam, threshold)
                filled = inpaint(self.inpainter, warped.mask)
                image = self.adapters.synthesizer(filled, self._style_seed())
                depth = self.adapters.depth(image, OracleHandle(self.scene, cam, tag=i + 1))
                save_mask(vdir / f"view_{i:02d}_warped_mask.pgm", warped.mask)
                save_depth(vdir / f"view_{i:02d}_warped_depth.bin", warped.depth)
                save_mask(vdir / f"view_{i:02d}_inpainted.pgm", filled)
                save_image(vdir / f"view_{i:02d}_image.ppm", image)
                save_depth(vdir / f"view_{i:02d}_depth.bin", depth)
        self.warped_masks, self.warped_depths = [], []
        self.view_masks, self.view_images, self.view_depths = [], [], []
        for i in range(self._view_count()):
            self.warped_masks.append(load_mask(vdir / f"view_{i:02d}_warped_mask.pgm",
                                               self.num_classes))
            self.warped_depths.append(load_depth(vdir / f"view_{i:02d}_warped_depth.bin"))
            self.view_masks.append(load_mask(vdir / f"view_{i:02d}_inpainted.pgm",
                                             self.num_classes))
            self.view_images.append(load_image(vdir / f"view_{i:02d}_image.ppm"))
            self.view_depths.append(load_depth(vdir / f"view_{i:02d}_depth.bin"))

    def _fusion_views(self) -> FusionViewSet:
        views = [FusionView(self.cameras[0], self.source_mask,
                            self.source_depth, self.source_depth)]
        for i in range(self._view_count()):
            views.append(FusionView(self.cameras[i + 1], self.view_masks[i],
                                    self.view_depths[i], self.warped_depths[i]))
        return FusionViewSet(tuple(views), self.bounds)

    def _stage_semfield(self) -> None:
        fdir = self.out / "semfield"
        paths = [fdir / "field.bin", fdir / "mesh.bin"]
        if self._fresh(paths):
            fdir.mkdir(exist_ok=True)
            cfg = SemanticFieldConfig(
                iterations=int(self.cfg["semfield.iterations"]),
                rays_per_iter=int(self.cfg["semfield.rays_per_iter"]),
                n_stratified=int(self.cfg["semfield.n_stratified"]),
                n_importance=int(self.cfg["semfield.n_importance"]),
                hidden_width=int(self.cfg["semfield.hidden_width"]),
                hidden_layers=int(self.cfg["semfield.hidden_layers"]),
                feature_dim=int(self.cfg["semfield.feature_dim"]),
                sem_width=int(self.cfg["semfield.sem_width"]),
                lr=float(self.cfg["semfield.lr"]),
                eikonal_points=int(self.cfg["semfield.eikonal_points"]),
                rank_pairs=int(self.cfg["semfield.rank_pairs"]),
                far=self.far,
                seed=derive_seed(self.seed, _S_FIELD))
            field = train_semantic_field(self._fusion_views(), cfg)
            save_field(paths[0], field)
            save_mesh(paths[1], extract_mesh(field, int(self.cfg["semfield.mesh_resolution"])))
        self.field = load_field(paths[0])
        self.mesh = load_mesh(paths[1])

    def _stage_fused(self) -> None:
        fdir = self.out / "fused"
        paths = [fdir / f"view_{i:02d}_{name}"
                 for i in range(len(self.cameras)) for name in ("mask.pgm", "depth.bin")]
        if self._fresh(paths):
            fdir.mkdir(exist_ok=True)
            rendered = render_semantic_views(
                self.field, self.cameras,
                n_stratified=int(self.cfg["semfield.n_stratified"]),
                n_importance=int(self.cfg["semfield.n_importance"]))
            for i, (mask, depth) in enumerate(rendered):
                save_mask(fdir / f"view_{i:02d}_mask.pgm", mask)
                save_depth(fdir / f"view_{i:02d}_depth.bin", depth)
        self.fused_masks = [load_mask(fdir / f"view_{i:02d}_mask.pgm", self.num_classes)
                            for i in range(len(self.cameras))]
        self.fused_depths = [load_depth(fdir / f"view_{i:02d}_depth.bin")
                             for i in range(len(self.cameras))]

    def _stage_appearance(self) -> None:
        path = self.out / "appearance.bin"
        if self._fresh([path]):
            cfg = AppearanceConfig(
                iterations=int(self.cfg["appearance.iterations"]),
                lr=float(self.cfg["appearance.lr"]),
                disc_lr=float(self.cfg["appearance.disc_lr"]),
                adv_weight=float(self.cfg["appearance.adv_weight"]),
                l2_weight=float(self.cfg["appearance.l2_weight"]),
                perc_weight=float(self.cfg["appearance.perc_weight"]),
                style_seed=self._style_seed(),
                seed=derive_seed(self.seed, _S_APPEARANCE),
                plane_res=int(self.cfg["appearance.plane_res"]),
                channels=int(self.cfg["appearance.channels"]),
                sky_res=int(self.cfg["appearance.sky_res"]),
                hidden=int(self.cfg["appearance.hidden"]))
            params = train_appearance(self.field, self.mesh, self.adapters.synthesizer,
                                      self.cameras, cfg, masks=self.fused_masks)
            save_appearance(path, params)
        self.appearance = load_appearance(path)

    def _orbit(self) -> list:
        position = np.asarray(self.cfg["camera.source_position"], dtype=np.float64)
        target = np.asarray(self.cfg["camera.target"], dtype=np.float64)
        radius = float(np.hypot(*(position - target)[:2]))
        azimuth = math.atan2(position[1] - target[1], position[0] - target[0])
        sweep = float(self.cfg["render.sweep"])
        return orbit_cameras(
            target, radius, float(self.cfg["render.orbit_height"]),
            int(self.cfg["render.frames"]), self.resolution,
            float(self.cfg["camera.focal_scale"]),
            start_angle=azimuth - 0.5 * sweep, sweep=sweep)

    def _stage_frames(self) -> None:
        fdir = self.out / "frames"
        n = int(self.cfg["render.frames"])
        names = [f"frame_{k:03d}.ppm" for k in range(n)]
        paths = [fdir / name for name in names] + [fdir / "index.txt"]
        if self._fresh(paths):
            fdir.mkdir(exist_ok=True)
            for cam, name in zip(self._orbit(), names):
                save_image(fdir / name, render_appearance(self.appearance, self.mesh, cam))
            (fdir / "index.txt").write_text("\n".join(names) + "\n")
        listed = (fdir / "index.txt").read_text().split()
        self.frames = [load_image(fdir / name) for name in listed]

    def _stage_evaluate(self) -> None:
        path = self.out / "report.txt"
        figures = [self.out / "figures" / name
                   for name in ("loss_curves.png", "consistency.png", "frames.png")]
        if self._fresh([path] + figures):
            references = [render_oracle(self.scene, cam) for cam in self.cameras]
            oracle_masks = [mask for mask, _ in references]
            raw_masks = [self.source_mask] + self.view_masks
            raw_depths = [self.source_depth] + self.warped_depths
            rendered = [render_appearance(self.appearance, self.mesh, cam)
                        for cam in self.cameras]
            pseudo = [self.adapters.synthesizer(mask, self._style_seed())
                      for mask in self.fused_masks]
            report = EvalReport(
                nll=nll_score(self.fused_masks, oracle_masks),
                vsc_fused=vsc_score(self.fused_masks, self.fused_depths, self.cameras),
                vsc_inpainted=vsc_score(raw_masks, raw_depths, self.cameras),
                accuracy=tuple(label_accuracy(mask, ref)
                               for mask, ref in zip(self.fused_masks, oracle_masks)),
                depth_abs_rel=float(np.mean([
                    depth_abs_rel(depth, ref_depth)
                    for depth, (_, ref_depth) in zip(self.fused_depths, references)])),
                color_consistency=color_consistency(rendered, self.mesh, self.cameras),
                color_consistency_baseline=color_consistency(pseudo, self.mesh, self.cameras),
                psnr_mean=float(np.mean([
                    psnr(img, ref) for img, ref in zip(rendered, pseudo)])))
            save_report(path, report)
            render_figures(
                self.out / "figures", report,
                field_log=self.field.loss_log,
                inpaint_log=[(it, loss) for it, loss in self.inpainter.loss_log],
                appearance_log=[(row[0], row[1]) for row in self.appearance.loss_log],
                frames=self.frames)
        self.report = load_report(path)

    def run(self, through: str = "evaluate") -> "PipelineRun":
        if through not in STAGES:
            raise ValidationError(f"unknown stage {through!r}; stages are {', '.join(STAGES)}")
        self._ensure_config()
        for stage in STAGES[:STAGES.index(through) + 1]:
            step = getattr(self, f"_stage_{stage}")
            try:
                step()
            except (ValidationError, StageFailure):
                raise
            except Exception as exc:
                raise StageFailure(stage, str(exc)) from exc
            self.log(f"[{stage}] done")
        return self


def run_pipeline(cfg: dict, out_dir, through: str = "evaluate", log=None) -> PipelineRun:
    """Run (or resume) the pipeline up to and including `through`."""
    return PipelineRun(cfg, out_dir, log=log).run(through)
