"""Main CLI entry point for ConceptMeta."""
import argparse
import logging
import sys
from pathlib import Path

from concept_meta import ConceptMetaOrchestrator, config
from concept_meta.config import load_run_config
from concept_meta.errors import ConceptMetaError

COMMANDS = {
    "ingest": "Parse, split and align the tasks; write vocab.txt and manifest.txt",
    "train-meta": "Meta-train on every task; write checkpoint.bin, runlog.csv, metrics.csv",
    "adapt": "Fine-tune checkpoint.bin on one task; write adapted.bin",
    "eval": "Score checkpoint.bin, adapted.bin and baseline.bin; write metrics.csv, comparison.csv",
    "attention": "Task-attention grid of checkpoint.bin; write attention.csv",
    "baseline": "Train the configured baseline; write baseline.bin, baseline_runlog.csv",
    "gradcheck": "Finite-difference gradient check of a tiny network; write gradcheck.csv",
    "sweep": "Single-task meta learning per meta-epoch count; write sweep.csv",
}


def parse_arguments(argv=None):
    """Parse command line arguments."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        type=Path,
        default=None,
        help="YAML run configuration (defaults apply to every missing key)"
    )
    common.add_argument("--seed", type=int, default=None, help="Seed for every random stream")
    common.add_argument("--meta-epochs", type=int, default=None, help="Meta-training epochs (0 skips meta-training)")
    common.add_argument("--aux", type=str, default=None, help="Auxiliary task policy: all or sample:K")
    common.add_argument("--out", type=Path, default=None, help="Output directory")
    common.add_argument("--task", type=str, default=None, help="Task for adapt, eval, baseline and sweep (default: first listed)")
    common.add_argument(
        "-q", "--quiet",
        action="store_true",
        help="Suppress progress messages and bars"
    )

    parser = argparse.ArgumentParser(
        prog="concept-meta",
        description="ConceptMeta - Multi-task meta learning over aligned concept vocabularies",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Check the network gradients
  concept-meta gradcheck

  # Ingest and meta-train the synthetic problem
  concept-meta ingest --config configs/synthetic.yaml
  concept-meta train-meta --config configs/synthetic.yaml

  # One pass of meta-training on a9a, then adapt and compare with an MLP
  concept-meta train-meta --config configs/a9a.yaml --meta-epochs 1
  concept-meta adapt --config configs/a9a.yaml
  concept-meta baseline --config configs/a9a.yaml
  concept-meta eval --config configs/a9a.yaml

  # Plain supervised training through the same architecture
  concept-meta train-meta --config configs/a9a.yaml --aux sample:0
        """
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, help_text in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=help_text, description=help_text)

    return parser.parse_args(argv)


def main(argv=None) -> int:
    """Main entry point; returns the process exit code."""
    args = parse_arguments(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else config.logging_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        run = load_run_config(args.config).with_overrides(
            seed=args.seed, meta_epochs=args.meta_epochs, aux=args.aux, out=args.out
        )
    except (ConceptMetaError, FileNotFoundError, OSError) as e:
        print(f"ERROR: {e}")
        return 1

    if not args.quiet:
        print("ConceptMeta - Multi-task meta learning")
        print(f"Command: {args.command}")
        print(f"  Config: {args.config.absolute() if args.config else 'defaults'}")
        print(f"  Output: {run.output_dir.absolute()}")
        print(f"  Threads: {config.threads}\n")

    orchestrator = ConceptMetaOrchestrator(run, progress=config.progress and not args.quiet)
    commands = {
        "ingest": orchestrator.ingest,
        "train-meta": orchestrator.train_meta,
        "adapt": lambda: orchestrator.adapt(args.task),
        "eval": lambda: orchestrator.evaluate(args.task),
        "attention": orchestrator.attention,
        "baseline": lambda: orchestrator.baseline(args.task),
        "gradcheck": orchestrator.gradcheck,
        "sweep": lambda: orchestrator.sweep(args.task),
    }

    try:
        result = commands[args.command]()
    except (ConceptMetaError, FileNotFoundError, OSError) as e:
        print(f"ERROR: {e}")
        return 1
    except Exception as e:
        print(f"\n✗ Error during {args.command}: {e}")
        import traceback
        traceback.print_exc()
        return 1

    if not args.quiet:
        for path in result.written:
            print(f"✓ Wrote {path}")
        if result.summary:
            print(f"  {result.summary}")

    if not result.passed:
        print(f"✗ {args.command} failed: {result.summary}")
        return 1

    if not args.quiet:
        print(f"\n✓ {args.command} completed successfully!")
    return 0


def run():
    """Console script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    run()
