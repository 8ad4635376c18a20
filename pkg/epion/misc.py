"""Euler-Poisson ion lab - misc definitions"""

import os
import re
import sys
import math
import json
import logging
import argparse
import functools
import traceback
from textwrap import indent
from importlib import metadata
import numpy as np
import jsonschema

# Module's logger
LOGGER = logging.getLogger(__name__)

# Named logging levels, highest first
_LEVELS = sorted(
    ((name, value) for name, value in vars(logging).items()
     if name.isalpha() and name.isupper() and isinstance(value, int) and
     value),
    key=lambda level: -level[1]
)

# Logging level values by name, highest first, "NONE" disabling logging
LOGGING_LEVEL_MAP = dict([("NONE", _LEVELS[0][1] + 1), *_LEVELS])

# Format of log messages, timestamped
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Check light assertions only, if True
LIGHT_ASSERTS = not os.environ.get("EPION_HEAVY_ASSERTS", "")


class Error(Exception):
    """An abstract error, terminating a tool with a generic failure"""

    # Exit status a console tool terminates with on this error
    EXIT_STATUS = 1


class ConfigError(Error):
    """A configuration or parameter document is invalid"""

    EXIT_STATUS = 2


class GuardError(Error):
    """A numerical guard was violated, or a numerical method failed"""

    EXIT_STATUS = 3


class OutputError(Error):
    """Writing results failed"""

    EXIT_STATUS = 4

    def __init__(self, path):
        """
        Initialize the exception.

        Args:
            path:   The path of the file which couldn't be written.
        """
        super().__init__(f"Failed writing {path!r}")


def logging_setup(level):
    """
    Setup logging: set root logger log level.

    Args:
        level:  Logging level for the root logger.
    """
    assert isinstance(level, int)
    logging.getLogger().setLevel(level)


def _exception_chain(exc):
    """Generate an exception and the exceptions it was raised from"""
    while exc is not None:
        yield exc
        exc = exc.__cause__ if exc.__suppress_context__ else exc.__context__


def format_exception_stack(exc):
    """
    Format an exception with its chain of causes, one summary per cause,
    each indented two spaces deeper than the previous one.

    Args:
        exc:    The exception to format.

    Returns:
        The formatted chain, causes on separate lines.
    """
    assert isinstance(exc, Exception)
    summaries = (
        ": ".join(part for part in (type(cause).__name__, str(cause)) if part)
        for cause in _exception_chain(exc)
    )
    return ":\n".join(indent(summary, "  " * depth)
                      for depth, summary in enumerate(summaries))


def log_and_print_excepthook(type, value, tb):
    """
    Log an exception with DEBUG level and print its summary to stderr.
    Adheres to sys.excepthook interface.

    Args:
        type:   Exception class.
        value:  Exception instance.
        tb:     Exception traceback object.
    """
    # "tb" is OK, pylint: disable=invalid-name
    # "type" too, pylint: disable=redefined-builtin
    lines = traceback.format_exception(type, value, tb)
    LOGGER.debug("%s", "".join(lines).rstrip())
    print(format_exception_stack(value), file=sys.stderr)


def main_function(function):
    """
    Decorate a console tool's main function: install the exception hook and
    convert our errors into their exit statuses.

    Args:
        function:   The main function to decorate. Must return the exit
                    status.

    Returns:
        The decorated function.
    """
    @functools.wraps(function)
    def wrapper(*args, **kwargs):
        sys.excepthook = log_and_print_excepthook
        try:
            return function(*args, **kwargs)
        except Error as exc:
            log_and_print_excepthook(type(exc), exc, exc.__traceback__)
            return exc.EXIT_STATUS
    return wrapper


def get_version(package="epion"):
    """
    Retrieve the installed version of a package.

    Args:
        package:    The name of the distribution to get the version of.

    Returns:
        The version string, or "unknown" if the package is not installed.
    """
    try:
        return metadata.version(package)
    except metadata.PackageNotFoundError:
        return "unknown"


class ArgumentParser(argparse.ArgumentParser):
    """
    Command-line argument parser handling common arguments.
    """

    def __init__(self, *args, **kwargs):
        """
        Initialize the parser, adding common arguments.

        Args:
            args:   Positional arguments to initialize ArgumentParser with.
            kwargs: Keyword arguments to initialize ArgumentParser with.
        """
        super().__init__(*args, **kwargs)
        self.add_argument(
            '--version',
            action='version',
            version=f"Version {get_version()}"
        )
        self.add_argument(
            '-l', '--log-level',
            metavar="LEVEL",
            default="NONE",
            choices=LOGGING_LEVEL_MAP.keys(),
            help='Limit logging to LEVEL (%(choices)s). Default is NONE.'
        )
        self.add_argument(
            '--seed',
            metavar="SEED",
            type=non_negative_int,
            default=0,
            help='Seed the random streams with SEED. Default is zero.'
        )

    def parse_args(self, args=None, namespace=None):
        """
        Parse arguments, including common ones, apply ones affecting global
        state.

        Args:
            args:       List of strings to parse. The default is taken from
                        sys.argv.
            namespace:  An object to take the attributes. The default is a new
                        empty argparse.Namespace object.

        Returns:
            Namespace populated with arguments.
        """
        args = super().parse_args(args=args, namespace=namespace)
        logging.basicConfig()
        logging_setup(LOGGING_LEVEL_MAP[args.log_level])
        formatter = logging.Formatter(LOG_FORMAT)
        for handler in logging.getLogger().handlers:
            handler.setFormatter(formatter)
        return args


class OutputArgumentParser(ArgumentParser):
    """
    Command-line argument parser for tools writing a result file.
    """

    def __init__(self, *args, default_out=None, **kwargs):
        """
        Initialize the parser, adding output arguments.

        Args:
            args:           Positional arguments to initialize ArgumentParser
                            with.
            default_out:    The default output path, or None to require one.
            kwargs:         Keyword arguments to initialize ArgumentParser
                            with.
        """
        super().__init__(*args, **kwargs)
        self.add_argument(
            '-o', '--out',
            metavar="PATH",
            required=default_out is None,
            default=default_out,
            help='Write results to PATH' +
            ('.' if default_out is None else f'. Default is {default_out}.')
        )
        self.add_argument(
            '--indent',
            metavar="NUMBER",
            type=non_negative_int,
            help='Pretty-print JSON using NUMBER of spaces for indenting. '
                 'Print single-line if zero. Default is 4.',
            default=4,
            required=False
        )


def non_negative_int(string):
    """
    Parse a non-negative integer out of a string.
    Matches the argparse type function interface.

    Args:
        string: The string to parse.

    Returns:
        The non-negative integer parsed out of the string.

    Raises:
        argparse.ArgumentTypeError: the string wasn't representing a
        non-negative integer.
    """
    if not re.fullmatch("[0-9]+", string):
        raise argparse.ArgumentTypeError(
            f'{repr(string)} is not a positive integer, nor zero'
        )
    return int(string)


def positive_int(string):
    """
    Parse a positive integer out of a string.
    Matches the argparse type function interface.

    Args:
        string: The string to parse.

    Returns:
        The positive integer parsed out of the string.

    Raises:
        argparse.ArgumentTypeError: the string wasn't representing a
        positive integer.
    """
    if not re.fullmatch("0*[1-9][0-9]*", string):
        raise argparse.ArgumentTypeError(
            f'{repr(string)} is not a positive integer'
        )
    return int(string)


def finite_float(string):
    """
    Parse a finite floating-point number out of a string.
    Matches the argparse type function interface.

    Args:
        string: The string to parse.

    Returns:
        The number parsed out of the string.

    Raises:
        argparse.ArgumentTypeError: the string wasn't representing a finite
        number.
    """
    try:
        value = float(string)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f'{repr(string)} is not a number'
        ) from exc
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(
            f'{repr(string)} is not a finite number'
        )
    return value


def positive_float(string):
    """
    Parse a positive finite floating-point number out of a string.
    Matches the argparse type function interface.

    Args:
        string: The string to parse.

    Returns:
        The positive number parsed out of the string.

    Raises:
        argparse.ArgumentTypeError: the string wasn't representing a positive
        finite number.
    """
    value = finite_float(string)
    if value <= 0:
        raise argparse.ArgumentTypeError(
            f'{repr(string)} is not a positive number'
        )
    return value


def validate(instance, schema):
    """
    Validate a JSON document against a (Draft 7) JSON schema.

    Args:
        instance:   The document to validate.
        schema:     The schema to validate against.

    Returns:
        The validated document.

    Raises:
        ConfigError if the document is invalid.
    """
    try:
        jsonschema.validate(
            instance=instance, schema=schema,
            format_checker=jsonschema.Draft7Validator.FORMAT_CHECKER
        )
    except jsonschema.exceptions.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise ConfigError(
            f"Invalid document at {path or 'top level'!r}: {exc.message}"
        ) from exc
    return instance


def json_load(path):
    """
    Load a JSON value from a file.

    Args:
        path:   The path to the file to load.

    Returns:
        The loaded JSON value.

    Raises:
        ConfigError if the file couldn't be read, or contains invalid JSON.
    """
    assert isinstance(path, str)
    try:
        with open(path, "r", encoding="utf8") as file:
            return json.load(file)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"Cannot load JSON from {path!r}") from exc


# It's OK, pylint: disable=redefined-outer-name
def json_dump(value, fp, indent=0):
    """
    Dump a JSON value to a file, followed by a newline.

    Args:
        value:  The JSON value to dump.
        fp:     The file-like object to output to.
        indent: Number of indent spaces for pretty-printing, or zero to
                disable pretty-printing and dump the value single-line.
    """
    # "fp" is OK, pylint: disable=invalid-name
    json.dump(value, fp, indent=indent or None, allow_nan=False)
    fp.write("\n")


def random_streams(seed, count):
    """
    Create independent random generators with fixed stream IDs out of a
    single seed. The same seed always produces the same streams.

    Args:
        seed:   The non-negative integer seed.
        count:  Number of streams to create.

    Returns:
        A list of numpy.random.Generator instances, one per stream ID.
    """
    assert isinstance(seed, int) and seed >= 0
    assert isinstance(count, int) and count >= 1
    return [
        np.random.default_rng(sequence)
        for sequence in np.random.SeedSequence(seed).spawn(count)
    ]
