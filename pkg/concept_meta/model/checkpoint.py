"""Checkpoint files: an uncompressed numpy archive with a JSON header."""
import json
import logging
import zipfile
from pathlib import Path

import numpy as np

from concept_meta.errors import CheckpointError
from concept_meta.model.baselines import BaselineParams
from concept_meta.model.configs import BaselineConfig, MetaAugConfig
from concept_meta.model.meta_aug import MetaAugParams
from concept_meta.numeric import ParamStore

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
HEADER_KEY = "__header__"
# Fixed entry timestamp keeps identical checkpoints byte-identical
ZIP_DATE_TIME = (1980, 1, 1, 0, 0, 0)

Model = MetaAugParams | BaselineParams


def save_checkpoint(path: str | Path, params: Model, seed: int | None = None) -> Path:
    """
    Write config, vocabulary hash, task ids, loss kinds, seed and every parameter.

    Args:
        path: Output file (written verbatim, no suffix added)
        params: MetaAug or baseline parameters
        seed: RNG seed recorded in the header (defaults to the config seed)

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "version": CHECKPOINT_VERSION,
        "kind": params.kind,
        "config": params.config.to_dict(),
        "meta_digest": params.meta_digest,
        "task_ids": list(params.task_ids),
        "loss_kinds": list(params.loss_kinds),
        "seed": params.config.seed if seed is None else seed,
        "step": params.store.step,
        "parameters": list(params.store),
    }
    arrays = {name: value for name, value in params.store.items()}
    arrays[HEADER_KEY] = np.array(json.dumps(header, sort_keys=True))
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED, allowZip64=True) as archive:
        for name, value in arrays.items():
            info = zipfile.ZipInfo(f"{name}.npy", date_time=ZIP_DATE_TIME)
            with archive.open(info, "w", force_zip64=True) as f:
                np.lib.format.write_array(f, np.asanyarray(value), allow_pickle=False)
    logger.info("Saved %s checkpoint (%d parameters) to %s", params.kind, params.store.num_parameters(), path)
    return path


def read_header(path: str | Path) -> dict:
    """Header of a checkpoint without loading its parameters."""
    header, _ = _read(path, with_arrays=False)
    return header


def load_checkpoint(path: str | Path) -> Model:
    """
    Rebuild parameters from a checkpoint.

    Raises:
        FileNotFoundError: If the file doesn't exist
        CheckpointError: If the file is unreadable, malformed or of another version
    """
    header, arrays = _read(path, with_arrays=True)
    kind = header.get("kind")
    if kind == MetaAugParams.kind:
        config = MetaAugConfig.from_dict(header["config"])
        cls = MetaAugParams
    elif kind == BaselineParams.kind:
        config = BaselineConfig.from_dict(header["config"])
        cls = BaselineParams
    else:
        raise CheckpointError(f"Unknown checkpoint kind {kind!r} in {path}")

    store = ParamStore()
    for name in header["parameters"]:
        if name not in arrays:
            raise CheckpointError(f"Checkpoint {path} lacks parameter {name}")
        store.add(name, arrays[name])
    store.step = int(header.get("step", 0))
    return cls(config, store, header["task_ids"], header["loss_kinds"], header["meta_digest"])


def _read(path: str | Path, with_arrays: bool) -> tuple[dict, dict]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            if HEADER_KEY not in archive.files:
                raise CheckpointError(f"{path} has no checkpoint header")
            header = json.loads(str(archive[HEADER_KEY]))
            arrays = {name: archive[name] for name in archive.files if name != HEADER_KEY} if with_arrays else {}
    except CheckpointError:
        raise
    except (OSError, ValueError, zipfile.BadZipFile, json.JSONDecodeError) as e:
        raise CheckpointError(f"Unreadable checkpoint {path}: {e}") from e

    version = header.get("version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version!r} in {path}")
    return header, arrays
