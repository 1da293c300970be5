"""Datasets, the aligned meta-dataset, auxiliary tasks and the task-mixing sampler."""
from .splits import InstanceSplit, RawTask, TaskDataset, prepare_tasks, split_train_val
from .ingest import load_libsvm_task, parse_libsvm, serialize_libsvm
from .meta_dataset import SPLITS, MetaDataset, build_meta_dataset, split_checksum
from .auxiliary import AuxPolicy, aux_task_id, build_auxiliary_task, build_auxiliary_tasks, with_label_column
from .sampler import Batch, BatchSampler, gather, sample_batch
from .synthetic import make_synthetic_tasks

__all__ = [
    "InstanceSplit",
    "RawTask",
    "TaskDataset",
    "prepare_tasks",
    "split_train_val",
    "load_libsvm_task",
    "parse_libsvm",
    "serialize_libsvm",
    "SPLITS",
    "MetaDataset",
    "build_meta_dataset",
    "split_checksum",
    "AuxPolicy",
    "aux_task_id",
    "build_auxiliary_task",
    "build_auxiliary_tasks",
    "with_label_column",
    "Batch",
    "BatchSampler",
    "gather",
    "sample_batch",
    "make_synthetic_tasks",
]
