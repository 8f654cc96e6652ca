# harness/formats.py
"""CSV streams: phi/gap landscapes, grid functions and suite reports.

Every table has a header row, LF line endings and the tokens "inf"/"-inf"
for infinite values.
"""
import csv
import io
import logging
import math

import numpy as np
from django.core.exceptions import ValidationError

from conjugate.models import GridFunction
from core.exceptions import OperatorSpecError, PreconditionError
from core.models import ExtendedReal, PairedPoint
from core.utils import coupling
from fitz.utils import fitzpatrick

from .models import SuiteReport

logger = logging.getLogger(__name__)

GRID_HEADER = ('x', 'xstar', 'phi', 'c', 'gap')


def _writer(stream):
    return csv.writer(stream, lineterminator='\n')


def format_number(value):
    """Shortest round-tripping text; integral values lose their '.0'"""
    value = float(value)
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    if value == 0:
        return '0'
    text = repr(value)
    return text[:-2] if text.endswith('.0') else text


def parse_number(token):
    token = token.strip()
    try:
        return ExtendedReal.from_float(float(token))
    except ValueError:
        raise OperatorSpecError(f"Not a number: {token!r}")
    except ValidationError:
        raise OperatorSpecError(f"Not an extended real: {token!r}")


def _finish(buffer):
    return buffer.getvalue() if buffer is not None else None


def grid_rows(operator, window, resolution, policy=None):
    """(x, xstar, phi, c, gap) over a resolution x resolution grid, x outer"""
    if operator.dimension != 1:
        raise PreconditionError(f"Grid dumps need a 1-D operator, got dimension {operator.dimension}")
    xmin, xmax, ymin, ymax = (float(v) for v in window)
    resolution = int(resolution)
    if resolution < 1 or xmin > xmax or ymin > ymax:
        raise PreconditionError(f"Bad grid window {window!r} at resolution {resolution}")

    for x in np.linspace(xmin, xmax, resolution):
        for xstar in np.linspace(ymin, ymax, resolution):
            z = PairedPoint([x], [xstar])
            phi = fitzpatrick(operator, z, policy)
            c = coupling(z)
            yield float(x), float(xstar), phi, c, phi - c


def grid_dump(operator, window, resolution, stream=None, policy=None):
    """Write the phi/gap landscape of a 1-D operator; returns the text when no stream is given"""
    buffer = io.StringIO() if stream is None else None
    writer = _writer(stream or buffer)
    writer.writerow(GRID_HEADER)
    rows = 0
    for row in grid_rows(operator, window, resolution, policy):
        writer.writerow([format_number(value) for value in row])
        rows += 1
    logger.debug(f"Grid dump of {rows} rows over {window}")
    return _finish(buffer)


def read_grid_dump(stream):
    """Rows of a grid dump as dicts of extended reals"""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    header = tuple(next(reader, ()))
    if header != GRID_HEADER:
        raise OperatorSpecError(f"Expected header {','.join(GRID_HEADER)}, got {','.join(header)}")
    rows = []
    for line, row in enumerate(reader, start=2):
        if len(row) != len(GRID_HEADER):
            raise OperatorSpecError(f"line {line}: expected {len(GRID_HEADER)} fields, got {len(row)}")
        rows.append(dict(zip(GRID_HEADER, (parse_number(token) for token in row))))
    return rows


def write_grid_function(f, stream=None):
    """Nodes in row-major order: columns x,value or x,y,value"""
    buffer = io.StringIO() if stream is None else None
    writer = _writer(stream or buffer)
    writer.writerow(('x', 'value') if f.dimension == 1 else ('x', 'y', 'value'))
    for index in np.ndindex(*f.shape):
        node = [format_number(f.coords[axis][i]) for axis, i in enumerate(index)]
        writer.writerow(node + [format_number(f.values[index])])
    return _finish(buffer)


def read_grid_function(stream):
    """Parse a grid function CSV; every node of the product grid must appear exactly once"""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    header = tuple(name.strip() for name in next(reader, ()))
    if header not in (('x', 'value'), ('x', 'y', 'value')):
        raise OperatorSpecError(f"Expected header x,value or x,y,value, got {','.join(header)}")
    dimension = len(header) - 1

    nodes = {}
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise OperatorSpecError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        numbers = [parse_number(token) for token in row]
        if not all(number.is_finite for number in numbers[:-1]):
            raise OperatorSpecError(f"line {line}: grid coordinates must be finite")
        key = tuple(float(number) for number in numbers[:-1])
        if key in nodes:
            raise OperatorSpecError(f"line {line}: duplicate node {key}")
        nodes[key] = float(numbers[-1])
    if not nodes:
        raise OperatorSpecError("Grid function has no nodes")

    axes = tuple(np.unique([key[axis] for key in nodes]) for axis in range(dimension))
    shape = tuple(axis.size for axis in axes)
    if len(nodes) != int(np.prod(shape)):
        raise OperatorSpecError(f"{len(nodes)} nodes do not fill a product grid of shape {shape}")
    values = np.empty(shape)
    for index in np.ndindex(*shape):
        values[index] = nodes[tuple(float(axes[axis][i]) for axis, i in enumerate(index))]
    return GridFunction(axes, values)


def write_reports(reports, stream=None, fmt='csv'):
    """Suite reports as CSV rows (one per suite) or as text blocks"""
    buffer = io.StringIO() if stream is None else None
    out = stream or buffer
    if fmt == 'csv':
        writer = _writer(out)
        writer.writerow(SuiteReport.CSV_HEADER)
        for report in reports:
            writer.writerow(report.csv_row())
    else:
        for report in reports:
            out.write(report.as_text() + '\n')
    return _finish(buffer)
