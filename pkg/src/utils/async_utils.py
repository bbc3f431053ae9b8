"""Utils for running blocking simulation workers concurrently."""

import asyncio
from typing import Any, Awaitable, Callable, Coroutine, Sequence, TypeVar

from rich.progress import (
    BarColumn,
    Progress,
    TextColumn,
    TimeElapsedColumn,
    TimeRemainingColumn,
)


T = TypeVar("T")


async def indexed(index: int, coro: Coroutine[None, None, T]) -> tuple[int, T]:
    """Return (index, await coro)."""
    return index, (await coro)


async def rate_limited(
    _fn: Callable[[], Awaitable[T]], semaphore: asyncio.Semaphore
) -> T:
    """Run _fn with semaphore rate limit."""
    async with semaphore:
        return await _fn()


async def gather_with_progress(
    coros: "Sequence[Coroutine[Any, Any, T]]",
    description: str = "Running tasks",
) -> list[T]:
    """
    Run coroutines concurrently, advancing a rich.Progress bar as each finishes.

    Returns the results in the same order as the input list.
    """
    tasks = [
        asyncio.create_task(indexed(index=index, coro=coro))
        for index, coro in enumerate(coros)
    ]
    results: list[T | None] = [None] * len(tasks)

    with Progress(
        TextColumn("[bold blue]{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        TimeRemainingColumn(),
        TimeElapsedColumn(),
    ) as progress:
        progress_task = progress.add_task(description, total=len(tasks))
        for finished in asyncio.as_completed(tasks):
            index, result = await finished
            results[index] = result
            progress.update(progress_task, advance=1)

    return results  # type: ignore[return-value]


def run_in_threads(
    fns: Sequence[Callable[[], T]],
    max_workers: int = 1,
    description: str = "Running workers",
) -> list[T]:
    """Run blocking callables on worker threads, at most ``max_workers`` at once.

    Each callable runs through ``asyncio.to_thread`` so it inherits the calling
    context (including the logging run tag it sets for itself). numpy and
    ``scipy.fft`` release the GIL in their kernels, which is where simulation
    workers spend their time.

    Parameters
    ----------
    fns : Sequence[Callable[[], T]]
        Zero-argument callables; each owns its state exclusively.
    max_workers : int
        Upper bound on concurrently running callables.
    description : str
        Label of the progress bar.

    Returns
    -------
    list[T]
        Results ordered like ``fns``.
    """
    if max_workers < 1:
        raise ValueError(f"max_workers must be at least 1, got {max_workers}")

    async def _main() -> list[T]:
        semaphore = asyncio.Semaphore(max_workers)
        coros = [
            rate_limited(lambda _fn=_fn: asyncio.to_thread(_fn), semaphore)
            for _fn in fns
        ]
        return await gather_with_progress(coros, description=description)

    return asyncio.run(_main())
