"""
Write every example family to disk.
Run from the repository root: python -m scripts.emit_examples [OUT_DIR]
"""
import logging
import os
import sys

from config.settings import settings
from models.experiment import ExampleName
from routers.examples import emit_example

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

DEFAULT_PARAMS = {
    ExampleName.Z_LINE: {"N": 50},
    ExampleName.Z_LINE_NU: {"N": 50},
    ExampleName.COMPLETE_UNION: {"n_max": 6, "connect": True},
    ExampleName.CIRCLE_PACKING: {"rows": 4, "cols": 4},
    ExampleName.HARDY_STUB: {"N": 100},
    ExampleName.COMB_TREE: {"n": 20},
}


def emit_all(out_dir: str) -> dict:
    written = {}
    for name, params in DEFAULT_PARAMS.items():
        try:
            emitted = emit_example(name.value, params, os.path.join(out_dir, name.value))
            written[name.value] = emitted.files
        except Exception as e:
            logger.error(f"Error emitting example {name.value}: {e}")
            raise
    return written


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else os.path.join(settings.output_dir, "examples")
    logger.info(f"Writing example families to {target}...")
    files = emit_all(target)
    logger.info(f"Wrote {sum(len(f) for f in files.values())} files for {len(files)} families")
