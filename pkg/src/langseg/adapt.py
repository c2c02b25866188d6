"""Desk-scale active-domain-adaptation loop.

Train a source classifier, then per round: predict on the target-train
images, acquire budgeted ROIs, synthesize expert language feedback from
ground truth inside each ROI, execute it to refine the prediction, and
fine-tune the classifier on the accumulated refined-ROI supervision
(optionally on the full self-training map).  After the final round the
frozen classifier is evaluated on target-test.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .acquisition import BudgetPlan, entropy_map, random_rois, select_rois
from .classify import PixelClassifier, TrainConfig, featurize, predict_probs, sgd_fit, train_source
from .commands import parse_command, render_program
from .effort import count_words, polygon_vertex_count
from .executor import ExecConfig, ExecEnv, apply_patch, execute
from .grid import Roi, dice
from .phantoms import DatasetItem
from .simulate import FeedbackConfig, feedback_command


@dataclass(frozen=True)
class AdaConfig:
    """Bundle of every knob the loop needs."""

    train: TrainConfig = field(default_factory=TrainConfig)
    finetune: TrainConfig = field(default_factory=lambda: TrainConfig(learning_rate=1.0, epochs=40))
    executor: ExecConfig = field(default_factory=ExecConfig)
    feedback: FeedbackConfig = field(default_factory=FeedbackConfig)
    acquisition: str = "entropy"  # entropy | random
    self_train: bool = False
    fg_class: int = 1
    contour_epsilon: float = 1.5
    # fine-tuning mixes a seeded subsample of source pixels with the target
    # roi supervision (repeated) so single-class rounds cannot collapse the
    # classifier.
    replay_pixels: int = 40000
    target_repeat: int = 8

    def echo(self) -> dict:
        return {
            "acquisition": self.acquisition,
            "selfTrain": self.self_train,
            "fgClass": self.fg_class,
            "contourEpsilon": self.contour_epsilon,
            "replayPixels": self.replay_pixels,
            "targetRepeat": self.target_repeat,
            "train": {
                "learningRate": self.train.learning_rate,
                "epochs": self.train.epochs,
                "batchSize": self.train.batch_size,
            },
            "finetune": {
                "learningRate": self.finetune.learning_rate,
                "epochs": self.finetune.epochs,
                "batchSize": self.finetune.batch_size,
            },
            "refine": {
                "samplePercent": self.executor.refine.sample_percent,
                "offset": self.executor.refine.offset,
                "maxIters": self.executor.refine.max_iters,
                "granularity": self.executor.refine.cluster.granularity,
                "maxRegionFraction": self.executor.refine.cluster.max_region_fraction,
            },
        }


def class_dice(pred_labels: np.ndarray, gt_labels: np.ndarray, class_count: int) -> dict:
    """Per-foreground-class dice plus their mean, over one image."""
    scores = {}
    for c in range(1, class_count):
        scores[f"class_{c}"] = dice(pred_labels == c, gt_labels == c)
    scores["mean"] = float(np.mean([scores[f"class_{c}"] for c in range(1, class_count)]))
    return scores


def evaluate(clf: PixelClassifier, items: list[DatasetItem]) -> dict:
    """Mean per-class dice over a list of labeled items."""
    per_image = [
        class_dice(predict_probs(clf, item.image).argmax(axis=0), item.labels, clf.class_count)
        for item in items
    ]
    keys = per_image[0].keys()
    return {k: float(np.mean([d[k] for d in per_image])) for k in keys}


def run_ada(
    source: list[DatasetItem],
    target_train: list[DatasetItem],
    target_test: list[DatasetItem],
    plan: BudgetPlan,
    cfg: AdaConfig | None = None,
    seed: int = 0,
) -> dict:
    """Run the full loop and return the JSON-ready report."""
    cfg = cfg or AdaConfig()
    if cfg.acquisition not in ("entropy", "random"):
        raise ValueError(f"unknown acquisition {cfg.acquisition!r}")
    class_count = max(2, int(max(i.labels.max() for i in source + target_train + target_test)) + 1)

    clf = train_source(source, replace(cfg.train, seed=seed), class_count)
    source_dice = evaluate(clf, target_test)

    train_features = [featurize(item.image) for item in target_train]
    source_features = np.concatenate([featurize(item.image) for item in source])
    source_labels = np.concatenate([item.labels.ravel() for item in source])
    replay_rng = np.random.default_rng(seed + 17)
    replay_idx = replay_rng.choice(
        len(source_labels), size=min(cfg.replay_pixels, len(source_labels)), replace=False
    )

    shape = target_train[0].labels.shape
    selected: list[list[Roi]] = [[] for _ in target_train]
    sup_mask = [np.zeros(shape, dtype=bool) for _ in target_train]
    sup_labels = [np.zeros(shape, dtype=np.int64) for _ in target_train]

    rounds = []
    for round_no in range(1, plan.rounds + 1):
        image_records = []
        self_train_maps = []
        for idx, item in enumerate(target_train):
            probs = predict_probs(clf, item.image)
            labels = probs.argmax(axis=0)
            if cfg.acquisition == "entropy":
                score = entropy_map(probs)
                rois = select_rois(score, plan, selected[idx])
            else:
                score = None
                acq_seed = seed + 7919 * round_no + 101 * idx
                rois = random_rois(shape[1], shape[0], plan, selected[idx], acq_seed)

            roi_records = []
            y_al = labels.copy()
            for roi_no, roi in enumerate(rois):
                pred_bin = labels == cfg.fg_class
                gt_bin = item.labels == cfg.fg_class
                before = dice(pred_bin[roi.rows, roi.cols], gt_bin[roi.rows, roi.cols])
                fb_cfg = replace(cfg.feedback, seed=seed + 31 * round_no + 7 * idx + roi_no)
                command, items_found = feedback_command(pred_bin, gt_bin, item.image, roi, fb_cfg)
                warnings: list[str] = []
                if command is None:
                    refined = pred_bin
                    program_text = None
                else:
                    program = parse_command(command)
                    program_text = render_program(program)
                    env = ExecEnv(
                        image=item.image, initial_mask=pred_bin, roi=roi, config=cfg.executor
                    )
                    refined, log = execute(program, env)
                    warnings = [w for rec in log for w in rec.warnings]
                after = dice(refined[roi.rows, roi.cols], gt_bin[roi.rows, roi.cols])

                y_al = apply_patch(y_al, roi, refined[roi.rows, roi.cols], cfg.fg_class, class_count)
                sup_mask[idx][roi.rows, roi.cols] = True
                sup_labels[idx][roi.rows, roi.cols] = y_al[roi.rows, roi.cols]
                selected[idx].append(roi)

                roi_records.append(
                    {
                        "x": roi.x,
                        "y": roi.y,
                        "w": roi.w,
                        "h": roi.h,
                        "score": None if score is None else float(np.round(score[roi.rows, roi.cols].mean(), 10)),
                        "command": command,
                        "program": program_text,
                        "diceBefore": before,
                        "diceAfter": after,
                        "words": count_words([command]) if command else 0,
                        "vertices": polygon_vertex_count(gt_bin, roi, cfg.contour_epsilon),
                        "warnings": warnings,
                    }
                )
            if cfg.self_train:
                full = y_al.copy()
                full[sup_mask[idx]] = sup_labels[idx][sup_mask[idx]]
                self_train_maps.append(full)
            image_records.append({"index": idx, "rois": roi_records})

        # fine-tune on accumulated supervision plus a stable source replay
        xs = [source_features[replay_idx]]
        ys = [source_labels[replay_idx]]
        for idx in range(len(target_train)):
            if cfg.self_train:
                xs.extend([train_features[idx]] * cfg.target_repeat)
                ys.extend([self_train_maps[idx].ravel()] * cfg.target_repeat)
            elif sup_mask[idx].any():
                flat = sup_mask[idx].ravel()
                xs.extend([train_features[idx][flat]] * cfg.target_repeat)
                ys.extend([sup_labels[idx].ravel()[flat]] * cfg.target_repeat)
        finetune_cfg = replace(cfg.finetune, seed=seed + 1009 * round_no)
        clf = sgd_fit(
            np.concatenate(xs), np.concatenate(ys), class_count, finetune_cfg, init=clf.weights
        )

        rounds.append(
            {
                "round": round_no,
                "images": image_records,
                "testDice": evaluate(clf, target_test),
            }
        )

    annotated = [sum(r.area for r in sel) / (shape[0] * shape[1]) for sel in selected]
    report = {
        "seed": seed,
        "config": {
            **cfg.echo(),
            "budgetPercent": plan.budget_percent,
            "rounds": plan.rounds,
            "roiW": plan.roi_w,
            "roiH": plan.roi_h,
        },
        "classCount": class_count,
        "sourceTestDice": source_dice,
        "rounds": rounds,
        "finalTestDice": rounds[-1]["testDice"],
        "annotatedAreaFraction": {
            "mean": float(np.mean(annotated)),
            "max": float(np.max(annotated)),
        },
        "totalWords": int(
            sum(r["words"] for rnd in rounds for img in rnd["images"] for r in img["rois"])
        ),
        "totalVertices": int(
            sum(r["vertices"] for rnd in rounds for img in rnd["images"] for r in img["rois"])
        ),
    }
    return report


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
