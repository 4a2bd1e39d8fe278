"""Classification table for traced I/O function names.

The table below is the bit-exact mapping used whenever a trace record
does not carry an explicit category/interface. Names missing from the
table fall through to pattern rules: a read/write verb in the name wins,
then the metadata family verbs, and the interface is inferred from the
``MPI_File_`` / ``H5`` prefixes. Anything unrecognized maps to
(other, OTHER) and never contributes to bandwidth or feature math.
"""

from __future__ import annotations

from dataclasses import dataclass

from .events import Category, Interface


@dataclass(frozen=True, slots=True)
class FunctionInfo:
    category: Category
    interface: Interface
    family: str = ""  # open/close/sync/seek/stat/truncate/view or ""
    collective: bool = False


def _info(cat, iface, family="", collective=False):
    return FunctionInfo(cat, iface, family, collective)


_M = Category.METADATA
_R = Category.READ
_W = Category.WRITE
_P = Interface.POSIX
_MP = Interface.MPIIO
_H = Interface.HDF5

FUNCTION_TABLE: dict[str, FunctionInfo] = {
    # POSIX / libc
    "open": _info(_M, _P, "open"),
    "open64": _info(_M, _P, "open"),
    "creat": _info(_M, _P, "open"),
    "close": _info(_M, _P, "close"),
    "read": _info(_R, _P),
    "write": _info(_W, _P),
    "pread": _info(_R, _P),
    "pread64": _info(_R, _P),
    "pwrite": _info(_W, _P),
    "pwrite64": _info(_W, _P),
    "readv": _info(_R, _P),
    "writev": _info(_W, _P),
    "fopen": _info(_M, _P, "open"),
    "fopen64": _info(_M, _P, "open"),
    "fclose": _info(_M, _P, "close"),
    "fread": _info(_R, _P),
    "fwrite": _info(_W, _P),
    "fseek": _info(_M, _P, "seek"),
    "fseeko": _info(_M, _P, "seek"),
    "ftell": _info(_M, _P, "seek"),
    "lseek": _info(_M, _P, "seek"),
    "lseek64": _info(_M, _P, "seek"),
    "fsync": _info(_M, _P, "sync"),
    "fdatasync": _info(_M, _P, "sync"),
    "fflush": _info(_M, _P, "sync"),
    "sync": _info(_M, _P, "sync"),
    "stat": _info(_M, _P, "stat"),
    "stat64": _info(_M, _P, "stat"),
    "fstat": _info(_M, _P, "stat"),
    "lstat": _info(_M, _P, "stat"),
    "access": _info(_M, _P, "stat"),
    "ftruncate": _info(_M, _P, "truncate"),
    "truncate": _info(_M, _P, "truncate"),
    "fallocate": _info(_M, _P, "truncate"),
    "posix_fallocate": _info(_M, _P, "truncate"),
    "unlink": _info(_M, _P),
    "rename": _info(_M, _P),
    "mkdir": _info(_M, _P),
    "rmdir": _info(_M, _P),
    # MPI-IO
    "MPI_File_open": _info(_M, _MP, "open"),
    "MPI_File_close": _info(_M, _MP, "close"),
    "MPI_File_delete": _info(_M, _MP),
    "MPI_File_read": _info(_R, _MP),
    "MPI_File_read_at": _info(_R, _MP),
    "MPI_File_read_shared": _info(_R, _MP),
    "MPI_File_read_all": _info(_R, _MP, collective=True),
    "MPI_File_read_at_all": _info(_R, _MP, collective=True),
    "MPI_File_read_ordered": _info(_R, _MP, collective=True),
    "MPI_File_write": _info(_W, _MP),
    "MPI_File_write_at": _info(_W, _MP),
    "MPI_File_write_shared": _info(_W, _MP),
    "MPI_File_write_all": _info(_W, _MP, collective=True),
    "MPI_File_write_at_all": _info(_W, _MP, collective=True),
    "MPI_File_write_ordered": _info(_W, _MP, collective=True),
    "MPI_File_sync": _info(_M, _MP, "sync"),
    "MPI_File_seek": _info(_M, _MP, "seek"),
    "MPI_File_seek_shared": _info(_M, _MP, "seek"),
    "MPI_File_set_view": _info(_M, _MP, "view"),
    "MPI_File_set_size": _info(_M, _MP, "truncate"),
    "MPI_File_preallocate": _info(_M, _MP, "truncate"),
    "MPI_File_get_size": _info(_M, _MP, "stat"),
    # HDF5
    "H5Fopen": _info(_M, _H, "open"),
    "H5Fcreate": _info(_M, _H, "open"),
    "H5Fclose": _info(_M, _H, "close"),
    "H5Fflush": _info(_M, _H, "sync"),
    "H5Dopen": _info(_M, _H, "open"),
    "H5Dopen2": _info(_M, _H, "open"),
    "H5Dclose": _info(_M, _H, "close"),
    "H5Dread": _info(_R, _H),
    "H5Dwrite": _info(_W, _H),
    "H5Dset_extent": _info(_M, _H, "truncate"),
}

_META_VERBS = (
    ("open", "open"),
    ("creat", "open"),
    ("close", "close"),
    ("sync", "sync"),
    ("flush", "sync"),
    ("seek", "seek"),
    ("tell", "seek"),
    ("stat", "stat"),
    ("access", "stat"),
    ("trunc", "truncate"),
    ("alloc", "truncate"),
    ("set_size", "truncate"),
    ("view", "view"),
    ("unlink", ""),
    ("delete", ""),
    ("mkdir", ""),
    ("rename", ""),
)


def classify_function(function: str) -> tuple[Category, Interface]:
    """Deterministic (category, interface) for a traced function name.

    Table entries win; otherwise read/write verbs beat metadata verbs,
    and the interface falls back on the library prefix. Unknown names
    map to (other, OTHER) rather than failing.
    """
    info = FUNCTION_TABLE.get(function)
    if info is not None:
        return info.category, info.interface

    if function.startswith("MPI_File_"):
        iface = Interface.MPIIO
    elif function.startswith("H5"):
        iface = Interface.HDF5
    else:
        iface = Interface.OTHER

    low = function.lower()
    if "read" in low:
        return Category.READ, iface
    if "write" in low:
        return Category.WRITE, iface
    for verb, _family in _META_VERBS:
        if verb in low:
            return Category.METADATA, iface
    return Category.OTHER, iface


def function_family(function: str) -> str:
    """Metadata subfamily of a name: open/close/sync/seek/stat/truncate/view.

    Empty string for payload calls and anything unrecognized.
    """
    info = FUNCTION_TABLE.get(function)
    if info is not None:
        return info.family
    low = function.lower()
    if "read" in low or "write" in low:
        return ""
    for verb, family in _META_VERBS:
        if verb in low:
            return family
    return ""


def is_collective(function: str) -> bool:
    """True for collective MPI-IO data operations."""
    info = FUNCTION_TABLE.get(function)
    if info is not None:
        return info.collective
    return function.startswith("MPI_File_") and (
        function.endswith("_all") or function.endswith("_ordered")
    )
