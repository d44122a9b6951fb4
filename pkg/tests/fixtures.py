"""Shared synthetic fixtures: small embedding clouds, metadata files,
and full exercise input trees written to a temp directory."""

from __future__ import annotations

import json
import os

import numpy as np

from imeval.data_model import (
    DsgGraph,
    SampleRecord,
    write_embeddings,
    write_metadata,
    write_score_csv,
)

UNIT_SQUARE_REAL = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.float64)
UNIT_SQUARE_GEN = np.array([[0.1, 0], [2, 2]], dtype=np.float64)


def cloud(rng: np.random.Generator, n: int, d: int, shift: float = 0.0, spread: float = 1.0) -> np.ndarray:
    return shift + spread * rng.standard_normal((n, d))


def unit_vectors(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def probabilities(rng: np.random.Generator, n: int, center: float = 0.7) -> np.ndarray:
    return np.clip(center + 0.2 * rng.standard_normal(n), 0.0, 1.0)


def records_with_groups(n: int, group_names, classes=None) -> list:
    """Round-robin group tags (and optional class labels) over n rows."""
    records = []
    for i in range(n):
        records.append(
            SampleRecord(
                index=i,
                prompt=f"prompt {i}",
                class_label=None if classes is None else classes[i % len(classes)],
                groups=(group_names[i % len(group_names)],),
                dsg_graph=None,
            )
        )
    return records


def chain_graph(n_questions: int = 3) -> DsgGraph:
    ids = tuple(f"q{i}" for i in range(1, n_questions + 1))
    parents = {ids[i]: (ids[0],) for i in range(1, n_questions)}
    return DsgGraph(question_ids=ids, parents=parents)


def write_dsg_answers(answers_by_index: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i in sorted(answers_by_index):
            amap = {q: ("yes" if v else "no") for q, v in answers_by_index[i].items()}
            fh.write(json.dumps({"index": i, "answers": amap}, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Exercise input trees. Each builder writes every input file under `root`
# plus a TOML config, and returns the config path.


def _model_inputs(rng, root: str, stem: str, n: int, d: int, shift: float, quality: float) -> dict:
    """One model's outputs on one dataset; `quality` nudges clip/vqa up."""
    gen = cloud(rng, n, d, shift=shift)
    img = unit_vectors(rng, n, 8)
    txt = img + (1.0 - quality) * 0.8 * rng.standard_normal((n, 8))
    vqa = probabilities(rng, n, center=min(0.95, 0.4 + 0.5 * quality))
    paths = {
        "gen_embeddings": f"{stem}_gen.npy",
        "image_embeddings": f"{stem}_img.npy",
        "text_embeddings": f"{stem}_txt.npy",
        "vqa_scores": f"{stem}_vqa.csv",
    }
    write_embeddings(gen, os.path.join(root, paths["gen_embeddings"]))
    write_embeddings(img, os.path.join(root, paths["image_embeddings"]))
    write_embeddings(txt, os.path.join(root, paths["text_embeddings"]))
    write_score_csv(vqa, os.path.join(root, paths["vqa_scores"]))
    return paths


def build_tradeoffs_fixture(root: str, n: int = 160, d: int = 8, n_points: int = 3, seed: int = 5) -> str:
    rng = np.random.default_rng(seed)
    write_embeddings(cloud(rng, n, d), os.path.join(root, "real.npy"))
    lines = [
        'kind = "tradeoffs"',
        'model = "gen-a"',
        'dataset = "prompts"',
        'axis = "guidance"',
        'real_embeddings = "real.npy"',
        "seed = 5",
    ]
    for i in range(n_points):
        scale = 2.0 + 2.5 * i
        # higher guidance: closer to real (precision up), less spread (coverage down)
        quality = 0.3 + 0.6 * i / max(1, n_points - 1)
        paths = _model_inputs(rng, root, f"p{i}", n, d, shift=0.8 * (1 - quality), quality=quality)
        lines += ["", "[[points]]", f'value = "{scale}"']
        lines += [f'{k} = "{v}"' for k, v in paths.items()]
    config = os.path.join(root, "tradeoffs.toml")
    with open(config, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return config


def build_group_fixture(root: str, n: int = 180, d: int = 8, seed: int = 6) -> str:
    rng = np.random.default_rng(seed)
    groups = ("africa", "americas", "asia", "europe")
    write_embeddings(cloud(rng, n, d), os.path.join(root, "real.npy"))
    write_metadata(records_with_groups(n, groups), os.path.join(root, "meta.jsonl"))
    lines = [
        'kind = "group_representation"',
        'dataset = "regions"',
        'real_embeddings = "real.npy"',
        'metadata = "meta.jsonl"',
        "seed = 6",
    ]
    for model, quality in (("gen-a", 0.8), ("gen-b", 0.4)):
        paths = _model_inputs(rng, root, model, n, d, shift=0.5 * (1 - quality), quality=quality)
        lines += ["", f"[models.{model}]"]
        lines += [
            f'{k} = "{v}"' for k, v in paths.items() if k != "vqa_scores"
        ]
    config = os.path.join(root, "group.toml")
    with open(config, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return config


def _pairs_config(root: str, kind: str, sizes: dict, models: dict, seed: int, d: int = 8) -> str:
    rng = np.random.default_rng(seed)
    lines = [f'kind = "{kind}"', f"seed = {seed}"]
    for ds in sorted(sizes):
        real_path = f"{ds}_real.npy"
        write_embeddings(cloud(rng, sizes[ds], d), os.path.join(root, real_path))
        lines += ["", f"[datasets.{ds}]", f'real_embeddings = "{real_path}"']
    for model in sorted(models):
        for ds in sorted(sizes):
            paths = _model_inputs(
                rng, root, f"{model}_{ds}", sizes[ds], d,
                shift=0.6 * (1 - models[model]), quality=models[model],
            )
            lines += ["", f"[runs.{model}.{ds}]"]
            lines += [f'{k} = "{v}"' for k, v in paths.items()]
    config = os.path.join(root, f"{kind}.toml")
    with open(config, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return config


def build_ranking_fixture(root: str, seed: int = 7) -> str:
    sizes = {"coco-ish": 140, "parti-ish": 120}
    models = {"gen-a": 0.85, "gen-b": 0.35}
    return _pairs_config(root, "ranking_robustness", sizes, models, seed)


def build_prompt_types_fixture(root: str, sizes=None, seed: int = 8) -> str:
    sizes = dict(sizes or {"wide": 200, "mid": 150, "narrow": 120})
    models = {"gen-a": 0.8, "gen-b": 0.5}
    return _pairs_config(root, "prompt_types", sizes, models, seed)
