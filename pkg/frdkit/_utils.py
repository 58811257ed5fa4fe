import json
import math
import sys

import click
import numpy as np
import psutil


def exit(status):
    """sys.exit() wrapper with better handling of negative exit codes"""
    if isinstance(status, int):
        if status < 0:
            # Use the bash convention for signals
            status = 0x80 - status
        status &= 0xff

    sys.exit(status)


def echo(message, stderr=False, color=None):
    """Print a message to STDOUT or STDERR."""
    message = click.style(message, fg=color)
    click.echo(message, nl=False, err=stderr)


def echo_ok():
    """Print OK for success."""
    echo('OK\n', color='green')


def echo_failed():
    """Print FAILED on error."""
    echo('FAILED\n', color='red')


def echo_error(message):
    """Print an error message to STDERR."""
    echo('ERROR: {message}\n'.format(message=message),
         stderr=True, color='red')


def echo_warning(message):
    """Print an warning message to STDERR."""
    echo('WARNING: {message}\n'.format(message=message),
         stderr=True, color='yellow')


def default_workers():
    """Number of worker processes to use when none is given"""
    return psutil.cpu_count(logical=False) or 1


def to_plain(data):
    """Recursively convert numpy scalars/arrays into JSON-friendly values.

    Non-finite floats become ``None`` so the output stays valid JSON.
    """
    if isinstance(data, dict):
        return {str(k): to_plain(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [to_plain(v) for v in data]
    if isinstance(data, np.ndarray):
        return [to_plain(v) for v in data.tolist()]
    if isinstance(data, (np.integer,)):
        return int(data)
    if isinstance(data, (float, np.floating)):
        data = float(data)
        return data if math.isfinite(data) else None
    if isinstance(data, np.bool_):
        return bool(data)
    return data


def json_encode(data, pretty=False):
    return json.dumps(
        to_plain(data), separators=(', ', ': '),
        indent=(2 if pretty else None), sort_keys=True, allow_nan=False)


def format_elapsed_time(seconds):
    """Format number of seconds as hours, minutes & seconds like '1h 2m 3s'"""
    seconds = int(round(seconds))
    minutes, seconds = divmod(seconds, 60)
    result = '{seconds}s'.format(seconds=seconds)

    if minutes:
        hours, minutes = divmod(minutes, 60)
        result = '{minutes}m {prev}'.format(minutes=minutes, prev=result)

        if hours:
            result = '{hours}h {prev}'.format(hours=hours, prev=result)

    return result


def versions():
    """Versions of frdkit and its numerical stack, for result metadata"""
    import pandas
    import scipy

    from . import __version__

    return {
        'frdkit': __version__,
        'numpy': np.__version__,
        'pandas': pandas.__version__,
        'scipy': scipy.__version__,
    }
