import os
import json
import dataclasses
import logging
import subprocess
import numpy as np

logger = logging.getLogger(__name__)


class QbError(Exception):
    """Base class of every error raised by the battery simulation modules."""


class ParameterSet:
    """
    Base class for the physical parameter records (EIT drive, cavity sector, Fock system, pulse).

        type: str
            name of the parameter set, used to name the files written by save()

        as_dict():
            returns a json-serializable copy of the attributes
        save(destination):
            writes a readable log of the parameters to <destination>/<type>_params.txt
    """

    type = "parameters"

    def as_dict(self):
        """
        Returns a json-serializable dictionary of the attributes (arrays as lists, complex as [re, im]).
        """
        serializable_dict = {}
        for key, value in self.__dict__.items():
            serializable_dict[key] = to_serializable(value)
        return serializable_dict

    def save(self, destination):
        """
        Save a readable log of the parameters to the disk.
        """
        check_directory_exists(destination)
        path = os.path.join(destination, "{}_params.txt".format(self.type))
        with open(path, "w") as f:
            json.dump(self.as_dict(), f, indent=2, sort_keys=True)
        logger.debug("saved %s parameters to %s", self.type, path)
        return path

    def __repr__(self):
        fields = ", ".join("{}={!r}".format(key, value) for key, value in self.__dict__.items())
        return "{}({})".format(self.__class__.__name__, fields)


def to_serializable(value):
    """Convert numpy and complex values to plain json types."""
    if isinstance(value, ParameterSet):
        return value.as_dict()
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return to_serializable(dataclasses.asdict(value))
    if isinstance(value, np.ndarray):
        return to_serializable(value.tolist())
    if isinstance(value, (list, tuple)):
        return [to_serializable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): to_serializable(v) for k, v in value.items()}
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.generic):
        return value.item()
    return value


def check_directory_exists(directory):
    if not os.path.isdir(directory):
        raise FileNotFoundError("the directory {} doesn't exist".format(directory))


def create_directory(directory, safe=True):
    """
    Create the directory. With safe=True an existing non-empty directory is an error,
    otherwise new files are added next to the existing ones.
    """
    if os.path.exists(directory):
        if safe and os.listdir(directory):
            raise FileExistsError("the folder {} already exists and is not empty".format(directory))
        return False
    os.makedirs(directory)
    return True


def get_git_hash():
    try:
        binary_hash = subprocess.check_output(["git", "rev-parse", "HEAD"], stderr=subprocess.DEVNULL).strip()
        hash = binary_hash.decode("utf-8")
    except (OSError, subprocess.CalledProcessError):
        hash = "no git commit"
    return hash


def save_params(params, path):
    """
    Dump a dictionary of run parameters as indented, key-sorted json.
    """
    with open(path, "w") as f:
        json.dump(to_serializable(params), f, indent=2, sort_keys=True)
    return path


def format_value(value):
    """Shortest round-trip decimal representation of a float (repr), used by every text sink."""
    if isinstance(value, (bool, np.bool_)):
        return "pass" if value else "fail"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (complex, np.complexfloating)):
        return "{}{:+}j".format(repr(float(value.real)), float(value.imag))
    return str(value)


def emit_csv(series, path, index_name="t"):
    """
    Write a set of series sharing one grid to a csv file.

    Inputs:
        series - ordered mapping name -> TimeSeries (all on the same grid)
        path - destination file
        index_name - header of the first column
    """
    if len(series) == 0:
        raise ValueError("cannot write an empty series set to {}".format(path))
    names = list(series.keys())
    grid = series[names[0]].t
    for name in names[1:]:
        if series[name].t.shape != grid.shape or np.any(series[name].t != grid):
            raise ValueError("series {} is not on the shared grid".format(name))

    # one line per grid point, columns in declaration order
    lines = [",".join([index_name] + names)]
    columns = [series[name].y for name in names]
    for i, t in enumerate(grid):
        lines.append(",".join([repr(float(t))] + [repr(float(column[i])) for column in columns]))

    with open(path, "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    logger.info("wrote %d rows to %s", len(grid), path)
    return path


def read_csv(path):
    """
    Read back a file written by emit_csv.
    Returns:
        header - list of column names
        data - (n_rows, n_columns) array of float
    """
    with open(path, "r") as f:
        header = f.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data.reshape(-1, len(header))


def write_report(entries, path):
    """
    Write an ordered mapping as key=value lines (deterministic given the entries).
    """
    with open(path, "w", newline="\n") as f:
        for key, value in entries.items():
            f.write("{}={}\n".format(key, format_value(value)))
    logger.info("wrote report %s", path)
    return path


def configure_logging(verbose=False, log_path=None):
    """
    Configure the root logger: stderr handler plus an optional file handler.
    """
    handlers = [logging.StreamHandler()]
    if log_path is not None:
        handlers.append(logging.FileHandler(log_path, mode="w"))
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
                        handlers=handlers,
                        force=True)
