"""Adapters that shell out to an external model via a file convention.

The command is a template whose ``{input}`` and ``{output}`` placeholders are
replaced with temporary file paths (``{seed}`` is also available to the
synthesizer). The adapter writes the input artifact, runs the command, and
reads the output artifact back:

  synthesizer  input: 16-bit PGM mask    output: PPM image
  depth        input: PPM image          output: depth blob (save_depth format)
  segmenter    input: PPM image          output: 16-bit PGM mask

Commands run without a shell; quote arguments shell-style in the template.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from ..scenekit import ColorImage, DepthMap, SemanticMask
from ..scenekit.io import load_depth, load_image, load_mask, save_image, save_mask


def _run(command: str, tmp: Path, **fields) -> None:
    argv = [part.format(**fields) for part in shlex.split(command)]
    proc = subprocess.run(argv, cwd=tmp, capture_output=True, text=True)
    if proc.returncode != 0:
        tail = proc.stderr.strip().splitlines()[-3:]
        raise RuntimeError(
            f"external adapter exited with {proc.returncode}: {' | '.join(tail) or 'no stderr'}"
        )
    out = Path(fields["output"])
    if not out.exists():
        raise RuntimeError(f"external adapter produced no output at {out}")


@dataclass(frozen=True)
class ExternalSynthesizer:
    command: str

    def __call__(self, mask: SemanticMask, seed: int) -> ColorImage:
        with tempfile.TemporaryDirectory() as d:
            tmp = Path(d)
            inp, out = tmp / "mask.pgm", tmp / "image.ppm"
            save_mask(inp, mask)
            _run(self.command, tmp, input=str(inp), output=str(out), seed=int(seed))
            return load_image(out)


@dataclass(frozen=True)
class ExternalDepth:
    command: str

    def __call__(self, image: ColorImage, handle=None) -> DepthMap:
        with tempfile.TemporaryDirectory() as d:
            tmp = Path(d)
            inp, out = tmp / "image.ppm", tmp / "depth.bin"
            save_image(inp, image)
            _run(self.command, tmp, input=str(inp), output=str(out))
            return load_depth(out)


@dataclass(frozen=True)
class ExternalSegmenter:
    command: str
    num_classes: int

    def __call__(self, image: ColorImage, handle=None) -> SemanticMask:
        with tempfile.TemporaryDirectory() as d:
            tmp = Path(d)
            inp, out = tmp / "image.ppm", tmp / "mask.pgm"
            save_image(inp, image)
            _run(self.command, tmp, input=str(inp), output=str(out))
            return load_mask(out, self.num_classes)
