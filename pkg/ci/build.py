"""Dagger pipeline: lint, type-check, test, build and smoke-test the exercise-clips wheel.

Stages, all inside an ``astral-sh/uv`` container:

1. ruff check + ruff format --check, mypy (scope pinned in pyproject.toml).
2. pytest on the unit suite, then the end-to-end tests (pipeline run and the
   CLI) on their own so a slow or failing project run is easy to spot.
3. ``uv build`` (sdist + wheel), exported to ``./dist`` on the host.
4. The wheel is installed into a clean container with no source tree, and
   the packaged lexicon and starter corpus are exercised through the
   console script (``lexicon check``, ``correctness train``). A wheel that
   lost its ``exercise_clips/data`` files fails here.

Local invocation:
    uv pip install --system dagger-io anyio   # or into a venv
    dagger run python ci/build.py
"""

from __future__ import annotations

import sys

import anyio
import dagger
from dagger import dag

UV_IMAGE = "ghcr.io/astral-sh/uv:python3.12-bookworm-slim"
E2E_TESTS = ["tests/test_pipeline.py", "tests/test_main.py"]

# Caches, run outputs and the reference pack stay out of the build context.
HOST_EXCLUDES = [
    ".venv",
    ".git",
    ".mypy_cache",
    ".ruff_cache",
    ".pytest_cache",
    "out",
    "output",
    "examples",
    "dist",
    "**/__pycache__",
]


async def main() -> None:
    async with dagger.connection():
        src = dag.host().directory(".", exclude=HOST_EXCLUDES)
        uv_cache = dag.cache_volume("uv-cache-exercise-clips")

        base = (
            dag.container()
            .from_(UV_IMAGE)
            .with_env_variable("UV_LINK_MODE", "copy")
            .with_mounted_cache("/root/.cache/uv", uv_cache)
            .with_workdir("/src")
            .with_directory("/src", src)
            .with_exec(["uv", "sync"])
        )

        await base.with_exec(["uv", "run", "ruff", "check", "."]).sync()
        await base.with_exec(["uv", "run", "ruff", "format", "--check", "."]).sync()
        await base.with_exec(["uv", "run", "mypy"]).sync()

        unit = ["uv", "run", "pytest", "-q", *(f"--ignore={path}" for path in E2E_TESTS)]
        await base.with_exec(unit).sync()
        await base.with_exec(["uv", "run", "pytest", "-q", *E2E_TESTS]).sync()

        built = base.with_exec(["uv", "build", "--sdist", "--wheel"])
        dist = built.directory("/src/dist")
        await dist.export("./dist")

        smoke = (
            dag.container()
            .from_(UV_IMAGE)
            .with_mounted_cache("/root/.cache/uv", uv_cache)
            .with_directory("/dist", dist)
            .with_workdir("/tmp")
            .with_exec(["sh", "-c", "uv venv /venv && uv pip install --python /venv /dist/*.whl"])
            .with_exec(["/venv/bin/exercise-clips", "lexicon", "check"])
        )
        corpus = (
            "/venv/bin/python -c 'from importlib.resources import files;"
            ' print(files("exercise_clips.data").joinpath("corpus.tsv"))\''
        )
        await smoke.with_exec(
            [
                "sh",
                "-c",
                f'/venv/bin/exercise-clips correctness train --corpus "$({corpus})"'
                " --out /tmp/model.json",
            ]
        ).sync()

    print("dagger pipeline ok: artifacts written to ./dist", file=sys.stderr)


if __name__ == "__main__":
    anyio.run(main)
