"""Loss-weight ablation harness: trains the rec-only, rec-1.01 and rec+fd
configurations over several seeds with identical data order, evaluates on
the test split, and emits the comparison table plus per-configuration
spectrum images of a fixed test view."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imgio
from .dataset import read_dataset
from .loss import LossWeights
from .metrics import MetricsSummary
from .spectrum import log_magnitude
from .sr import TrainConfig, evaluate, save_weights, train
from .sr.bicubic import bicubic_resample
from .sr.network import _forward_acts

CONFIGS = (
    ("A", LossWeights(lambda_rec=1.0, lambda_fd=0.0)),    # rec-only baseline
    ("B", LossWeights(lambda_rec=1.01, lambda_fd=0.0)),   # matched-weight control
    ("C", LossWeights(lambda_rec=1.0, lambda_fd=0.01)),   # rec + frequency term
)


@dataclass
class AblationReport:
    rows: list[tuple[str, float, float, float, int]] = field(default_factory=list)
    bicubic: MetricsSummary | None = None
    per_run: list[tuple[str, int, float, float, float]] = field(default_factory=list)
    step0_totals: dict[tuple[str, int], float] = field(default_factory=dict)

    def to_tsv(self) -> str:
        lines = ["config\tpsnr\tssim\tfd\tn"]
        lines += [f"{c}\t{p:.4f}\t{s:.5f}\t{f:.5f}\t{n}"
                  for c, p, s, f, n in self.rows]
        if self.bicubic is not None:
            b = self.bicubic
            lines.append(f"# bicubic\t{b.psnr_mean:.4f}\t{b.ssim_mean:.5f}"
                         f"\t{b.fd_mean:.5f}\t{b.n}")
        return "\n".join(lines) + "\n"

    def median(self, label: str, column: int) -> float:
        vals = [r[2 + column] for r in self.per_run if r[0] == label]
        return float(np.median(vals))


def _sr_image(w, hr, lr) -> np.ndarray:
    up = bicubic_resample(lr, *hr.shape)
    _, _, y = _forward_acts(w, up.astype(w.dtype)[None, None])
    return np.clip(y[0, 0].astype(np.float64), 0.0, 1.0)


def run_ablation(dataset_dir, out_dir, n_seeds: int = 3, epochs: int = 20,
                 seeds=None) -> AblationReport:
    dataset_dir = Path(dataset_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_pairs = read_dataset(dataset_dir / "train")
    test_pairs = read_dataset(dataset_dir / "test")
    if seeds is None:
        seeds = list(range(n_seeds))

    report = AblationReport(bicubic=evaluate(None, test_pairs)["bicubic"])
    results = {label: [] for label, _ in CONFIGS}
    spectra_models = {}

    for seed in seeds:
        for label, weights in CONFIGS:
            cfg = TrainConfig(epochs=epochs, seed=seed, weights=weights)
            w, history = train(train_pairs, cfg)
            history.write(out_dir / f"history_{label}_seed{seed}.tsv")
            save_weights(out_dir / f"model_{label}_seed{seed}.ckpt", w)
            res = evaluate(w, test_pairs)["model"]
            results[label].append(res)
            report.per_run.append((label, seed, res.psnr_mean, res.ssim_mean,
                                   res.fd_mean))
            report.step0_totals[(label, seed)] = history.steps[0][3]
            if seed == seeds[0]:
                spectra_models[label] = w

    for label, _ in CONFIGS:
        rs = results[label]
        report.rows.append((label,
                            float(np.median([r.psnr_mean for r in rs])),
                            float(np.median([r.ssim_mean for r in rs])),
                            float(np.median([r.fd_mean for r in rs])),
                            rs[0].n))

    # Fig-4-style spectra of one fixed test view for each configuration
    view = test_pairs[0]
    hr = np.asarray(view.hr, dtype=np.float64)
    lr = np.asarray(view.lr, dtype=np.float64)
    imgio.write_png8(out_dir / "spectrum_hr.png", log_magnitude(hr))
    imgio.write_png8(out_dir / "spectrum_bicubic.png",
                     log_magnitude(bicubic_resample(lr, *hr.shape)))
    for label, w in spectra_models.items():
        imgio.write_png8(out_dir / f"spectrum_{label}.png",
                         log_magnitude(_sr_image(w, hr, lr)))

    (out_dir / "report.tsv").write_text(report.to_tsv())
    detail = ["config\tseed\tpsnr\tssim\tfd"]
    detail += [f"{c}\t{s}\t{p:.4f}\t{ss:.5f}\t{f:.5f}"
               for c, s, p, ss, f in report.per_run]
    (out_dir / "runs.tsv").write_text("\n".join(detail) + "\n")
    return report
