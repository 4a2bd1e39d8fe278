import random

import pytest

from tierlens.events import Category, Interface, TraceEvent, build_ioframe


def ev(
    event_id,
    rank=0,
    function="pwrite",
    file="f.dat",
    start=0.0,
    end=None,
    nbytes=None,
    offset=None,
    category=None,
    interface=None,
    node=None,
):
    """Terse TraceEvent factory for fixtures."""
    from tierlens.iofunctions import classify_function

    cat, iface = classify_function(function)
    if category is not None:
        cat = Category(category)
    if interface is not None:
        iface = Interface(interface)
    if end is None:
        end = start + 0.001
    if nbytes is None and cat in (Category.READ, Category.WRITE):
        nbytes = 100
    return TraceEvent(
        event_id=event_id,
        rank=rank,
        node=rank if node is None else node,
        function=function,
        category=cat,
        interface=iface,
        file=file,
        start=start,
        end=end,
        bytes=nbytes,
        offset=offset,
    )


def random_events(n, seed, n_ranks=4, n_files=5, with_offsets=False):
    """Random but valid event soup for oracle comparisons."""
    rng = random.Random(seed)
    functions_rw = ["pread", "pwrite", "fread", "fwrite"]
    functions_meta = ["open", "close", "fsync", "lseek", "stat"]
    events = []
    for i in range(n):
        rank = rng.randrange(n_ranks)
        start = rng.uniform(0, 50)
        dur = rng.uniform(0, 0.5)
        if rng.random() < 0.7:
            fn = rng.choice(functions_rw)
            events.append(
                ev(
                    i,
                    rank=rank,
                    function=fn,
                    file=f"f{rng.randrange(n_files)}.dat",
                    start=start,
                    end=start + dur,
                    nbytes=rng.randrange(1, 1 << 20),
                    offset=rng.randrange(0, 1 << 16) if with_offsets else None,
                )
            )
        else:
            fn = rng.choice(functions_meta)
            file = None if rng.random() < 0.2 else f"f{rng.randrange(n_files)}.dat"
            events.append(
                ev(i, rank=rank, function=fn, file=file, start=start,
                   end=start + dur, nbytes=None)
            )
    return events


@pytest.fixture
def small_frame():
    return build_ioframe(
        [
            ev(0, rank=0, function="open", start=0.0, end=0.1, nbytes=None),
            ev(1, rank=0, function="pwrite", start=0.1, end=1.0, nbytes=1024,
               offset=0),
            ev(2, rank=0, function="close", start=1.0, end=1.01, nbytes=None),
            ev(3, rank=1, function="pread", start=0.2, end=0.5, nbytes=512,
               offset=0),
        ]
    )
