import struct

import numpy as np

MAGIC = b"PUMA1"
VERSION = 1


def write_checkpoint(tensors, path):
    """
    Write named tensors in the PUMA1 little-endian layout

    Layout: magic ``PUMA1``, u32 version, u32 tensor count, then per tensor
    a u32 name length, the UTF-8 name, a u32 rank, one u64 per dimension
    and the values as f32.

    Parameters
    ----------
    tensors : dict
        Arrays by name, written in iteration order
    path : str or pathlib.Path
        Destination file
    """
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<II", VERSION, len(tensors)))
        for name, values in tensors.items():
            values = np.asarray(values, dtype="<f4")
            encoded = name.encode("utf-8")
            handle.write(struct.pack("<I", len(encoded)))
            handle.write(encoded)
            handle.write(struct.pack("<I", values.ndim))
            dims = struct.pack("<{}Q".format(values.ndim), *values.shape)
            handle.write(dims)
            handle.write(values.tobytes())


def read_checkpoint(path):
    """
    Read a PUMA1 file

    Returns
    -------
    dict
        float32 arrays by name, in file order

    Raises
    ------
    ValueError
        The file is not a PUMA1 checkpoint or is truncated
    RuntimeError
        The checkpoint was written by another format version
    """
    with open(path, "rb") as handle:
        data = handle.read()
    if data[:5] != MAGIC:
        raise ValueError("'{}' is not a PUMA1 checkpoint".format(path))
    version, count = struct.unpack_from("<II", data, 5)
    if version != VERSION:
        raise RuntimeError(
            "Checkpoint '{}' has format version {}, expected {}".format(
                path, version, VERSION
            )
        )
    tensors, offset = {}, 13
    try:
        for _ in range(count):
            (length,) = struct.unpack_from("<I", data, offset)
            offset += 4
            name = data[offset : offset + length].decode("utf-8")
            offset += length
            (rank,) = struct.unpack_from("<I", data, offset)
            offset += 4
            shape = struct.unpack_from("<{}Q".format(rank), data, offset)
            offset += 8 * rank
            size = int(np.prod(shape))
            values = np.frombuffer(data, "<f4", count=size, offset=offset)
            offset += 4 * size
            tensors[name] = values.reshape(shape).astype(np.float32)
    except (struct.error, ValueError) as error:
        raise ValueError(
            "Checkpoint '{}' is truncated: {}".format(path, error)
        ) from None
    return tensors
