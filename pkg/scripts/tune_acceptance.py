"""Probe generator configs for the confounded acceptance run.

For each candidate config and seed, runs the full 5-method x 3-model x
5-subset grid on 10k cases and prints which qualitative patterns hold.
"""

import sys
import time

import numpy as np

from bailstudy.domain import ImputationMethod
from bailstudy.evaluation import PredictionSet
from bailstudy.learners import ModelKind
from bailstudy.runner import ExperimentConfig, SyntheticSource, run_experiment
from bailstudy.synthgen import GeneratorConfig

M = ImputationMethod
K = ModelKind


def probe(gen_kwargs, seeds, out_root, verbose=False):
    for seed in seeds:
        t0 = time.time()
        config = ExperimentConfig(
            data=SyntheticSource(GeneratorConfig(n_cases=10_000, seed=seed, **gen_kwargs)),
            output_dir=f"{out_root}/seed{seed}",
            seed=seed,
            n_subsets=5,
        )
        result = run_experiment(config)
        import json
        from pathlib import Path

        run_dir = Path(config.output_dir)
        split = json.loads((run_dir / "split.json").read_text())
        truth_rows = (run_dir / "truth.csv").read_text().strip().splitlines()[1:]
        detained = {row.split(",")[0]: row.split(",")[3] == "true" for row in truth_rows}
        import csv as csvmod

        cases_by_id = {}
        with open(run_dir / "cases.csv") as fh:
            for row in csvmod.DictReader(fh):
                cases_by_id[row["case_id"]] = row

        test_ids = split["test_ids"]
        indet = np.array([detained[cid] for cid in test_ids])

        mean_pred = {}
        for method in M:
            for model in K:
                probs = []
                for path in sorted((run_dir / "predictions").glob(f"{method.value}_{model.value}_*.csv")):
                    rows = path.read_text().strip().splitlines()[1:]
                    probs.append(np.array([float(r.split(",")[1]) for r in rows]))
                mean_pred[(method, model)] = np.mean(np.stack(probs), axis=0)

        crit7 = all(
            mean_pred[(M.DAF, k)][indet].mean() > mean_pred[(M.CORR, k)][indet].mean()
            for k in K
        )
        cells = result.mcc_table.cells
        corr_ind = np.mean([cells[(M.CORR, k)].indeterminate_mean for k in K])
        obs_ind = np.mean([cells[(M.OBS, k)].indeterminate_mean for k in K])
        corr_det = np.mean([cells[(M.CORR, k)].determinate_mean for k in K])
        obs_det = np.mean([cells[(M.OBS, k)].determinate_mean for k in K])
        crit8 = corr_ind > obs_ind and obs_det > corr_det
        effect = result.effect
        crit9a = effect.method_axis_mean > effect.model_axis_mean
        smallest = effect.smallest_method_pair()
        crit9b = set(smallest) == {M.OBS, M.OBS_IP}
        mp = {f"{a.value}-{b.value}": round(d, 4) for (a, b), d in effect.method_pair_distances.items()}
        kp = {f"{a.value}-{b.value}": round(d, 4) for (a, b), d in effect.model_pair_distances.items()}
        det_cells = {f"{m.value}/{k.value}": round(cells[(m, k)].determinate_mean, 2) for m in M for k in K}
        ind_cells = {f"{m.value}/{k.value}": round(cells[(m, k)].indeterminate_mean, 2) for m in M for k in K}
        if verbose:
            print("   method pairs:", mp)
            print("   model pairs:", kp)
            print("   det cells:", det_cells)
            print("   ind cells:", ind_cells)
        print(
            f"seed={seed} t={time.time()-t0:5.1f}s "
            f"c7={crit7} c8={crit8} (ci={corr_ind:5.2f} oi={obs_ind:5.2f} "
            f"cd={corr_det:5.2f} od={obs_det:5.2f}) "
            f"c9a={crit9a} ({effect.method_axis_mean:.4f} vs {effect.model_axis_mean:.4f}) "
            f"c9b={crit9b} smallest={smallest[0].value}-{smallest[1].value}",
            flush=True,
        )


if __name__ == "__main__":
    name = sys.argv[1] if len(sys.argv) > 1 else "a"
    seeds = [int(s) for s in sys.argv[2].split(",")] if len(sys.argv) > 2 else [0, 1, 2]
    configs = {
        "a": dict(
            detention_rate=0.1,
            escape_rate=0.08,
            confounding_strength=2.5,
            target_fta_rate=0.07,
            judge_noise=1.0,
        ),
        "b": dict(
            detention_rate=0.11,
            escape_rate=0.06,
            confounding_strength=2.0,
            target_fta_rate=0.06,
            judge_noise=2.0,
        ),
        "c": dict(
            detention_rate=0.10,
            escape_rate=0.10,
            confounding_strength=1.5,
            target_fta_rate=0.06,
            judge_noise=2.5,
        ),
        "d": dict(
            detention_rate=0.10,
            escape_rate=0.07,
            confounding_strength=1.2,
            target_fta_rate=0.07,
            judge_noise=0.8,
            true_fta_coefficients=(
                1.2, 0.8, 0.0, 0.0,      # num0..num3
                2.2, 2.2, 0.0,           # flag0..flag2
                0.0, 0.0, 0.0, 0.0,      # cat0
                0.0, 0.0, 0.0, 0.0,      # cat1
            ),
            judge_coefficients=(
                0.0, 0.0, 0.4, 0.0,
                0.0, 0.0, 0.6,
                0.3, -0.3, 0.2, -0.2,
                0.0, 0.0, 0.0, 0.0,
            ),
        ),
        "e": dict(
            n_numeric=2,
            n_binary=3,
            n_categorical=1,
            detention_rate=0.10,
            escape_rate=0.01,
            confounding_strength=1.2,
            target_fta_rate=0.07,
            judge_noise=0.8,
            detained_status_mix=(0.5, 0.2, 0.05, 0.2, 0.05),
            status_reveal_rates=(0.0, 0.4, 0.4, 0.8, 0.0),
            true_fta_coefficients=(
                1.0, 0.6,                # num0, num1
                2.0, 2.0, 0.0,           # flag0..flag2
                0.0, 0.0, 0.0, 0.0,      # cat0
            ),
            judge_coefficients=(
                0.0, 0.4,
                0.0, 0.0, 0.6,
                0.3, -0.3, 0.2, -0.2,
            ),
        ),
        "f": dict(
            n_numeric=2,
            n_binary=3,
            n_categorical=1,
            detention_rate=0.11,
            escape_rate=0.01,
            confounding_strength=2.0,
            target_fta_rate=0.07,
            judge_noise=1.4,
            detained_status_mix=(0.55, 0.15, 0.05, 0.2, 0.05),
            status_reveal_rates=(0.0, 0.35, 0.35, 0.7, 0.0),
            true_fta_coefficients=(
                0.9, 0.5,
                1.4, 1.4, 0.0,
                0.0, 0.0, 0.0, 0.0,
            ),
            judge_coefficients=(
                0.0, 0.4,
                0.0, 0.0, 0.6,
                0.3, -0.3, 0.2, -0.2,
            ),
        ),
        "g": dict(
            n_numeric=2,
            n_binary=3,
            n_categorical=1,
            detention_rate=0.11,
            escape_rate=0.01,
            confounding_strength=2.5,
            target_fta_rate=0.07,
            judge_noise=1.8,
            detained_status_mix=(0.55, 0.15, 0.05, 0.2, 0.05),
            status_reveal_rates=(0.0, 0.35, 0.35, 0.7, 0.0),
            true_fta_coefficients=(
                0.9, 0.5,
                1.4, 1.4, 0.0,
                0.0, 0.0, 0.0, 0.0,
            ),
            judge_coefficients=(
                0.0, 0.4,
                0.0, 0.0, 0.6,
                0.3, -0.3, 0.2, -0.2,
            ),
        ),
        "h": dict(
            n_numeric=2,
            n_binary=3,
            n_categorical=0,
            detention_rate=0.11,
            escape_rate=0.005,
            confounding_strength=3.0,
            target_fta_rate=0.07,
            judge_noise=2.2,
            detained_status_mix=(0.55, 0.15, 0.05, 0.2, 0.05),
            status_reveal_rates=(0.0, 0.3, 0.3, 0.6, 0.0),
            true_fta_coefficients=(0.9, 0.5, 1.4, 1.4, 0.0),
            judge_coefficients=(0.0, 0.4, 0.0, 0.0, 0.8),
        ),
        "i": dict(
            n_numeric=2,
            n_binary=3,
            n_categorical=0,
            detention_rate=0.11,
            escape_rate=0.003,
            confounding_strength=3.0,
            target_fta_rate=0.07,
            judge_noise=2.6,
            detained_status_mix=(0.55, 0.15, 0.05, 0.2, 0.05),
            status_reveal_rates=(0.0, 0.25, 0.25, 0.5, 0.0),
            true_fta_coefficients=(0.6, 0.3, 1.6, 1.6, 0.0),
            judge_coefficients=(0.0, 0.4, 0.0, 0.0, 0.8),
        ),
        "j": dict(
            n_numeric=2,
            n_binary=3,
            n_categorical=0,
            detention_rate=0.11,
            escape_rate=0.003,
            confounding_strength=2.8,
            target_fta_rate=0.07,
            judge_noise=2.4,
            detained_status_mix=(0.55, 0.15, 0.05, 0.2, 0.05),
            status_reveal_rates=(0.0, 0.15, 0.15, 0.35, 0.0),
            true_fta_coefficients=(0.9, 0.5, 1.4, 1.4, 0.0),
            judge_coefficients=(0.0, 0.4, 0.0, 0.0, 0.8),
        ),
        "k": dict(
            n_numeric=2,
            n_binary=3,
            n_categorical=0,
            detention_rate=0.11,
            escape_rate=0.05,
            confounding_strength=2.8,
            target_fta_rate=0.07,
            judge_noise=2.2,
            detained_status_mix=(0.55, 0.15, 0.05, 0.2, 0.05),
            status_reveal_rates=(0.0, 0.2, 0.2, 0.5, 0.0),
            true_fta_coefficients=(0.8, 0.45, 1.8, 1.8, 0.0),
            judge_coefficients=(0.0, 0.4, 0.0, 0.0, 0.8),
        ),
    }
    probe(configs[name], seeds, f"/tmp/tune_{name}", verbose=len(sys.argv) > 3)
