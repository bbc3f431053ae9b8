"""Binary checkpoints of wave states.

Layout (little-endian): a fixed header record followed by ``u`` and then
``∂ₜu`` as row-major float64 arrays over the collocation grid. Box lengths and
β are not stored; the reader validates against the domain of the run.
"""

from pathlib import Path

import numpy as np

from .diagnostics import WaveState
from .domain import SpectralDomain
from .errors import CheckpointFormatError


MAGIC = b"DWCK"
FORMAT_VERSION = 1
BC_CODES = {"dirichlet": 0, "periodic": 1}

HEADER_DTYPE = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u4"),
        ("d", "<u4"),
        ("n", "<u4", (3,)),
        ("bc", "u1"),
        ("reserved", "u1", (7,)),
        ("t", "<f8"),
    ]
)


def write_checkpoint(state: WaveState, path: Path) -> None:
    """Write ``state`` to ``path``, replacing any previous file atomically."""
    dom = state.domain
    header = np.zeros((), dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    header["version"] = FORMAT_VERSION
    header["d"] = dom.d
    header["n"][: dom.d] = dom.n
    header["bc"] = BC_CODES[dom.bc]
    header["t"] = state.t

    path = Path(path)
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    with open(tmp_path, "wb") as file:
        file.write(header.tobytes())
        file.write(np.ascontiguousarray(state.u, dtype="<f8").tobytes())
        file.write(np.ascontiguousarray(state.v, dtype="<f8").tobytes())
    tmp_path.replace(path)


def read_checkpoint(path: Path, domain: SpectralDomain) -> WaveState:
    """Read a checkpoint written for ``domain``.

    Raises
    ------
    CheckpointFormatError
        On a bad magic/version, a header that disagrees with ``domain``, or a
        truncated payload.
    """
    data = Path(path).read_bytes()
    if len(data) < HEADER_DTYPE.itemsize:
        raise CheckpointFormatError(f"{path}: file shorter than the header")
    header = np.frombuffer(data[: HEADER_DTYPE.itemsize], dtype=HEADER_DTYPE)[0]

    if bytes(header["magic"]) != MAGIC:
        raise CheckpointFormatError(f"{path}: not a checkpoint (bad magic)")
    if int(header["version"]) != FORMAT_VERSION:
        raise CheckpointFormatError(
            f"{path}: unsupported version {int(header['version'])}"
        )
    d = int(header["d"])
    n = tuple(int(_n) for _n in header["n"][:d])
    bc_code = int(header["bc"])
    if (d, n, bc_code) != (domain.d, domain.n, BC_CODES[domain.bc]):
        raise CheckpointFormatError(
            f"{path}: checkpoint is for d={d}, n={n}, bc={bc_code}; "
            f"run uses {domain!r}"
        )

    size = int(np.prod(n))
    payload = np.frombuffer(data[HEADER_DTYPE.itemsize :], dtype="<f8")
    if payload.size != 2 * size:
        raise CheckpointFormatError(
            f"{path}: expected {2 * size} values, found {payload.size}"
        )
    u = payload[:size].reshape(n).astype(np.float64)
    v = payload[size:].reshape(n).astype(np.float64)
    return WaveState(t=float(header["t"]), u=u, v=v, domain=domain)
