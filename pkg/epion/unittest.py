"""Euler-Poisson ion lab - unittest extensions"""

import os
import re
import sys
import textwrap
import subprocess

# Template of the script running a tool's main function
DRIVER = textwrap.dedent("""\
    import sys
    import {module}
    sys.argv[0] = {executable!r}
    sys.exit({module}.{function}())
""")


def execute(name, *args, env=None):
    """
    Run the main function of an epion tool in a separate interpreter, with
    stdin closed.

    Args:
        name:   The dotted name of the tool's main function, ending with
                "_main", e.g. "epion.solver.simulate_main".
        args:   The command-line arguments.
        env:    A dictionary of environment variables to set on top of
                ours, or None.

    Returns:
        The subprocess.CompletedProcess with text stdout and stderr.
    """
    module, function = name.rsplit(".", 1)
    assert function.endswith("_main")
    executable = "-".join(name[:-len("_main")].split(".")).replace("_", "-")
    environment = dict(os.environ, **(env or {}))
    # The status is checked by callers, pylint: disable=subprocess-run-check
    return subprocess.run(
        [sys.executable, "-c",
         DRIVER.format(module=module, function=function,
                       executable=executable),
         *args],
        encoding="utf8",
        stdin=subprocess.DEVNULL,
        capture_output=True,
        env=environment,
    )


def assert_executes(name, *args, env=None,
                    stdout_re="", stderr_re="", status=0):
    """
    Assert an epion tool exits with a status, and its whole stdout and
    stderr match regular expressions (with "." matching newlines).

    Args:
        name:       The dotted name of the tool's main function.
        args:       The command-line arguments.
        env:        Extra environment variables, or None.
        stdout_re:  The regular expression for stdout, empty by default.
        stderr_re:  The regular expression for stderr, empty by default.
        status:     The expected exit status, zero by default.

    Returns:
        The subprocess.CompletedProcess.
    """
    result = execute(name, *args, env=env)
    problems = [] if result.returncode == status else \
        [f"exit status {result.returncode}, expected {status}"]
    for stream, regex, text in (("stdout", stdout_re, result.stdout),
                                ("stderr", stderr_re, result.stderr)):
        if not re.fullmatch(regex, text, re.DOTALL):
            problems.append(f"{stream} not matching {regex!r}:\n" +
                            textwrap.indent(text, "    "))
    assert not problems, f"{name} {' '.join(args)}: " + "\n".join(problems)
    return result
