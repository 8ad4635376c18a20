"""Euler-Poisson ion lab - result output"""

import os
import csv
import json
import hashlib
import logging
import numpy as np
import scipy
from epion.misc import OutputError, json_dump, get_version

# Module's logger
LOGGER = logging.getLogger(__name__)

# Suffix of manifest files accompanying CSV output
MANIFEST_SUFFIX = ".manifest.json"


def output_path(path):
    """
    Resolve an output path, placing relative paths under the directory
    specified with the EPION_OUTPUT_DIR environment variable, if set.

    Args:
        path:   The output path to resolve.

    Returns:
        The resolved path.
    """
    assert isinstance(path, str) and path
    directory = os.environ.get("EPION_OUTPUT_DIR", "")
    if directory and not os.path.isabs(path):
        return os.path.join(directory, path)
    return path


def config_hash(config):
    """
    Hash a JSON configuration in its canonical form.

    Args:
        config: The JSON configuration to hash.

    Returns:
        The hex SHA-256 digest of the sorted-key compact JSON.
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf8")).hexdigest()


def manifest(subcommand, parameters, seed):
    """
    Create a provenance manifest for an experiment's results.

    Args:
        subcommand: The name of the experiment.
        parameters: The (validated) JSON parameters of the experiment.
        seed:       The seed of the experiment's random streams.

    Returns:
        The manifest JSON object.
    """
    assert isinstance(subcommand, str)
    assert isinstance(seed, int)
    return dict(
        subcommand=subcommand,
        config_hash=config_hash(dict(subcommand=subcommand,
                                     parameters=parameters, seed=seed)),
        seed=seed,
        versions=dict(epion=get_version(), numpy=np.__version__,
                      scipy=scipy.__version__),
    )


def format_value(value):
    """Format a CSV cell value deterministically"""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def write_json(path, value, manifest_value, indent=4):
    """
    Write a JSON result object, with the manifest embedded under the
    "manifest" key.

    Args:
        path:           The output path (resolved with output_path()).
        value:          The JSON object to write.
        manifest_value: The manifest to embed.
        indent:         Number of indent spaces, or zero for single-line.

    Returns:
        The path written.

    Raises:
        OutputError if writing failed.
    """
    assert isinstance(value, dict)
    path = output_path(path)
    try:
        with open(path, "w", encoding="utf8") as file:
            json_dump(dict(value, manifest=manifest_value), file,
                      indent=indent)
    except OSError as exc:
        raise OutputError(path) from exc
    LOGGER.info("Wrote %r", path)
    return path


class CsvWriter:
    """
    An incremental CSV writer flushing every row, so a failure leaves the
    rows written so far intact. Writes the manifest sidecar on opening.
    """

    def __init__(self, path, header, manifest_value):
        """
        Open the CSV file and write the header row and the manifest.

        Args:
            path:           The output path (resolved with output_path()).
            header:         The list of column names.
            manifest_value: The manifest to write to the sidecar file.

        Raises:
            OutputError if writing failed.
        """
        assert isinstance(header, (list, tuple)) and header
        self.path = output_path(path)
        self.width = len(header)
        try:
            with open(self.path + MANIFEST_SUFFIX, "w",
                      encoding="utf8") as file:
                json_dump(manifest_value, file, indent=4)
            # It's closed in close(), pylint: disable=consider-using-with
            self.file = open(self.path, "w", encoding="utf8", newline="")
        except OSError as exc:
            raise OutputError(self.path) from exc
        self.writer = csv.writer(self.file, lineterminator="\n")
        self.write(header)

    def write(self, row):
        """
        Write a row and flush it.

        Args:
            row:    The sequence of cell values.

        Raises:
            OutputError if writing failed.
        """
        assert len(row) == self.width
        try:
            self.writer.writerow([format_value(v) for v in row])
            self.file.flush()
        except OSError as exc:
            raise OutputError(self.path) from exc

    def close(self):
        """Close the file"""
        try:
            self.file.close()
        except OSError as exc:
            raise OutputError(self.path) from exc
        LOGGER.info("Wrote %r", self.path)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_value, exc_tb):
        self.close()


def write_csv(path, header, rows, manifest_value):
    """
    Write a CSV table with a mandatory header row, and its manifest into the
    "<path>.manifest.json" sidecar.

    Args:
        path:           The output path (resolved with output_path()).
        header:         The list of column names.
        rows:           An iterable of row sequences.
        manifest_value: The manifest to write to the sidecar file.

    Returns:
        The path written.

    Raises:
        OutputError if writing failed.
    """
    with CsvWriter(path, header, manifest_value) as writer:
        for row in rows:
            writer.write(row)
    return writer.path


def read_csv(path):
    """
    Read a CSV table written by write_csv().

    Args:
        path:   The path to the CSV file.

    Returns:
        The header list and the list of rows (lists of strings).
    """
    with open(path, "r", encoding="utf8", newline="") as file:
        rows = list(csv.reader(file))
    return rows[0], rows[1:]
