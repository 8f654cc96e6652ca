# harness/utils.py
import io
import logging
from pathlib import Path

import numpy as np
from rest_framework import serializers
from rest_framework.exceptions import ParseError
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from core.exceptions import OperatorSpecError
from core.models import PairedPoint

from .serializers import OperatorSpecSerializer, flatten_errors, operator_to_spec

logger = logging.getLogger(__name__)


def _parse_json(stream, source):
    try:
        return JSONParser().parse(stream)
    except ParseError as exc:
        # the message carries json's "line L column C" location
        raise OperatorSpecError(f"{source}: {exc.detail}")


def parse_operator(data, source='<spec>'):
    """Validate a spec dict and build its operator"""
    serializer = OperatorSpecSerializer(data=data)
    try:
        serializer.is_valid(raise_exception=True)
        return serializer.save()
    except serializers.ValidationError as exc:
        errors = flatten_errors(exc.detail)
        summary = '; '.join(f'{path}: {message}' for path, message in errors.items())
        raise OperatorSpecError(f"{source}: {summary}", errors)


def load_operator(path):
    """Read an operator spec file (schema_version 1) and build the operator"""
    path = Path(path)
    try:
        with path.open('rb') as stream:
            data = _parse_json(stream, path)
    except OSError as exc:
        raise OperatorSpecError(f"{path}: {exc.strerror or exc}")
    if not isinstance(data, dict):
        raise OperatorSpecError(f"{path}: top level must be an object")
    operator = parse_operator(data, path)
    logger.info(f"Loaded {operator.kind} operator of dimension {operator.dimension} from {path}")
    return operator


def loads_operator(text, source='<string>'):
    data = _parse_json(io.BytesIO(text.encode('utf-8')), source)
    if not isinstance(data, dict):
        raise OperatorSpecError(f"{source}: top level must be an object")
    return parse_operator(data, source)


def render_json(data):
    return JSONRenderer().render(data)


def dump_operator(operator):
    return render_json(operator_to_spec(operator)).decode('utf-8')


def point_to_dict(z):
    return z.as_lists() if z is not None else None


def point_from_dict(data):
    return PairedPoint(data['x'], data['xstar'])


def parse_vector(text):
    """'1,-2.5,3' -> array([1., -2.5, 3.])"""
    try:
        return np.array([float(part) for part in text.split(',') if part.strip()])
    except ValueError:
        raise OperatorSpecError(f"Not a comma-separated list of numbers: {text!r}")


def write_replay(directory, suite, index, operator, inputs, detail=''):
    """Serialize a failed instance so `fitz eval --replay` can reproduce it"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    payload = {
        'suite': suite,
        'index': index,
        'operator': operator_to_spec(operator) if operator is not None else None,
        'inputs': inputs,
        'detail': detail,
    }
    path = directory / f'{suite}-{index:06d}.json'
    path.write_bytes(render_json(payload))
    logger.info(f"Wrote replay file {path}")
    return path


def load_replay(path):
    """(operator, inputs) stored by write_replay"""
    path = Path(path)
    try:
        with path.open('rb') as stream:
            payload = _parse_json(stream, path)
    except OSError as exc:
        raise OperatorSpecError(f"{path}: {exc.strerror or exc}")
    if not isinstance(payload, dict) or not payload.get('operator'):
        raise OperatorSpecError(f"{path}: replay file carries no operator")
    return parse_operator(payload['operator'], f'{path}:operator'), payload.get('inputs') or {}
