import struct

import numpy as np
import pandas as pd

MAGIC = b"TRAJ1"
VERSION = 1

COLUMNS = (
    ["step", "time", "x", "y", "z", "roll", "pitch", "yaw"]
    + ["vx", "vy", "vz", "wx", "wy", "wz"]
    + [
        "{}_{}".format(foot, axis)
        for foot in ("fl", "fr", "rl", "rr")
        for axis in ("x", "y", "z")
    ]
    + ["contact_fl", "contact_fr", "contact_rl", "contact_rr"]
    + ["cursor", "outcome"]
)

OUTCOME_CODES = {
    "running": 0,
    "fell": 1,
    "collided": 2,
    "finished": 3,
    "timeout": 4,
}


class TrajectoryRecorder:
    """
    Collects per-step robot records of one episode

    Methods
    -------
    record(step, time, state, cursor, outcome):
        Append one record

    to_frame():
        Records as a pandas DataFrame

    write(path):
        Dump as CSV (``.csv`` suffix) or TRAJ1 binary
    """

    def __init__(self):
        self.rows = []

    def __len__(self):
        return len(self.rows)

    def record(self, step, time, state, cursor=0, outcome="running"):
        roll, pitch, yaw = state.euler
        row = [float(step), float(time)]
        row += list(map(float, state.position))
        row += [roll, pitch, yaw]
        row += list(map(float, state.velocity))
        row += list(map(float, state.angular_velocity))
        row += list(map(float, np.ravel(state.feet)))
        row += [float(c) for c in state.contact]
        row += [float(cursor), float(OUTCOME_CODES[str(_value(outcome))])]
        self.rows.append(row)

    def to_frame(self):
        return pd.DataFrame(self.rows, columns=COLUMNS)

    def write(self, path):
        if str(path).endswith(".csv"):
            self.to_frame().to_csv(path, index=False)
        else:
            write_traj(np.array(self.rows).reshape(-1, len(COLUMNS)), path)


def _value(outcome):
    return getattr(outcome, "value", outcome)


def write_traj(records, path):
    """
    Write records in the TRAJ1 little-endian binary layout

    Layout: magic ``TRAJ1``, u32 version, u32 record count, u32 column
    count, then per column a u32 name length and UTF-8 name, then the
    records row by row as f64 values.

    Parameters
    ----------
    records : numpy.ndarray
        (n, len(COLUMNS)) float array
    path : str or pathlib.Path
        Destination file
    """
    records = np.asarray(records, dtype="<f8")
    if records.ndim != 2 or records.shape[1] != len(COLUMNS):
        raise ValueError(
            "Trajectory records must have shape (n, {}), got {}".format(
                len(COLUMNS), records.shape
            )
        )
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<III", VERSION, *records.shape))
        for name in COLUMNS:
            encoded = name.encode("utf-8")
            handle.write(struct.pack("<I", len(encoded)))
            handle.write(encoded)
        handle.write(records.tobytes())


def read_traj(path):
    """
    Read a TRAJ1 file into a pandas DataFrame

    Parameters
    ----------
    path : str or pathlib.Path
        Source file

    Returns
    -------
    pandas.DataFrame
        One row per record
    """
    with open(path, "rb") as handle:
        data = handle.read()
    if data[:5] != MAGIC:
        raise ValueError("'{}' is not a TRAJ1 file".format(path))
    version, count, width = struct.unpack_from("<III", data, 5)
    if version != VERSION:
        raise ValueError(
            "Unsupported TRAJ1 version {} (expected {})".format(
                version, VERSION
            )
        )
    offset, names = 17, []
    for _ in range(width):
        (length,) = struct.unpack_from("<I", data, offset)
        offset += 4
        names.append(data[offset : offset + length].decode("utf-8"))
        offset += length
    values = np.frombuffer(
        data, dtype="<f8", count=count * width, offset=offset
    )
    return pd.DataFrame(values.reshape(count, width), columns=names)
