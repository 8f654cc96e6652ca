# harness/serializers.py
from django.core.exceptions import ValidationError as ModelValidationError
from rest_framework import serializers

from core.models import PairedPoint
from opmodel.models import (
    CubicOperator,
    LinearMonotoneOperator,
    LinePiece,
    PointPiece,
    PolygonalOperator,
    RayPiece,
    SegmentPiece,
)

SCHEMA_VERSION = 1

# Fields each piece type reads, in constructor order
PIECE_FIELDS = {
    'point': ('z',),
    'segment': ('a', 'b'),
    'ray': ('base', 'dir'),
    'line': ('base', 'dir'),
}
PIECE_CLASSES = {
    'point': PointPiece,
    'segment': SegmentPiece,
    'ray': RayPiece,
    'line': LinePiece,
}


def flatten_errors(detail, prefix=''):
    """Turn a nested DRF error tree into {'pieces[1].dir.x': 'message'}"""
    flat = {}
    if isinstance(detail, dict):
        for key, value in detail.items():
            if key == 'non_field_errors':
                path = prefix or key
            else:
                path = f'{prefix}.{key}' if prefix else str(key)
            flat.update(flatten_errors(value, path))
    elif isinstance(detail, list):
        if detail and all(isinstance(item, str) for item in detail):
            flat[prefix or 'non_field_errors'] = ' '.join(str(item) for item in detail)
        else:
            for index, item in enumerate(detail):
                flat.update(flatten_errors(item, f'{prefix}[{index}]'))
    elif detail:
        flat[prefix or 'non_field_errors'] = str(detail)
    return flat


def _model_errors(exc, prefix):
    """Prefix the field names of a model ValidationError with a spec path"""
    if hasattr(exc, 'message_dict'):
        return {f'{prefix}.{key}' if prefix else key: ' '.join(messages)
                for key, messages in exc.message_dict.items()}
    return {prefix or 'non_field_errors': ' '.join(exc.messages)}


class PairedPointSerializer(serializers.Serializer):
    x = serializers.ListField(child=serializers.FloatField(), min_length=1)
    xstar = serializers.ListField(child=serializers.FloatField(), min_length=1)

    def validate(self, data):
        if len(data['x']) != len(data['xstar']):
            raise serializers.ValidationError(
                f"x has {len(data['x'])} coordinates but xstar has {len(data['xstar'])}"
            )
        return data

    def to_representation(self, instance):
        return instance.as_lists()


class PieceSerializer(serializers.Serializer):
    type = serializers.ChoiceField(choices=list(PIECE_FIELDS))
    z = PairedPointSerializer(required=False)
    a = PairedPointSerializer(required=False)
    b = PairedPointSerializer(required=False)
    base = PairedPointSerializer(required=False)
    dir = PairedPointSerializer(required=False)

    def validate(self, data):
        """Check the piece carries exactly the endpoints its type needs"""
        needed = PIECE_FIELDS[data['type']]
        errors = {name: 'This field is required.' for name in needed if name not in data}
        extra = [name for name in ('z', 'a', 'b', 'base', 'dir') if name in data and name not in needed]
        for name in extra:
            errors[name] = f"Not used by a {data['type']} piece."
        if errors:
            raise serializers.ValidationError(errors)
        return data


class OperatorSpecSerializer(serializers.Serializer):
    schema_version = serializers.IntegerField()
    kind = serializers.ChoiceField(choices=['polygonal', 'linear', 'cubic1d'])
    dimension = serializers.IntegerField(min_value=1)
    pieces = PieceSerializer(many=True, required=False)
    A = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()), required=False)
    b = serializers.ListField(child=serializers.FloatField(), required=False)

    def validate_schema_version(self, value):
        if value != SCHEMA_VERSION:
            raise serializers.ValidationError(f"Unsupported schema version {value}, expected {SCHEMA_VERSION}")
        return value

    def validate(self, data):
        """Kind-specific payload and dimension checks"""
        kind, n = data['kind'], data['dimension']
        errors = {}
        if kind == 'polygonal':
            if not data.get('pieces'):
                errors['pieces'] = 'A polygonal operator needs at least one piece.'
            else:
                for index, piece in enumerate(data['pieces']):
                    for name in PIECE_FIELDS[piece['type']]:
                        if len(piece[name]['x']) != n:
                            errors[f'pieces[{index}].{name}'] = f'Expected dimension {n}.'
        elif kind == 'linear':
            if 'A' not in data:
                errors['A'] = 'This field is required.'
            elif len(data['A']) != n or any(len(row) != n for row in data['A']):
                errors['A'] = f'A must be a {n}x{n} matrix.'
            if 'b' not in data:
                errors['b'] = 'This field is required.'
            elif len(data['b']) != n:
                errors['b'] = f'Expected {n} entries.'
        elif n != 1:
            errors['dimension'] = 'The cubic operator lives in dimension 1.'
        if errors:
            raise serializers.ValidationError(errors)
        return data

    def create(self, validated_data):
        """Build the operator; invariant violations surface with their field path"""
        kind = validated_data['kind']
        try:
            if kind == 'linear':
                return LinearMonotoneOperator(validated_data['A'], validated_data['b'])
            if kind == 'cubic1d':
                return CubicOperator()
        except ModelValidationError as exc:
            raise serializers.ValidationError(_model_errors(exc, ''))

        pieces = []
        for index, piece in enumerate(validated_data['pieces']):
            try:
                points = [PairedPoint(piece[name]['x'], piece[name]['xstar']) for name in PIECE_FIELDS[piece['type']]]
                pieces.append(PIECE_CLASSES[piece['type']](*points))
            except ModelValidationError as exc:
                raise serializers.ValidationError(_model_errors(exc, f'pieces[{index}]'))
        return PolygonalOperator(tuple(pieces))


def operator_to_spec(operator):
    """Operator file dict for an operator"""
    spec = {'schema_version': SCHEMA_VERSION, 'kind': operator.kind, 'dimension': operator.dimension}
    if operator.kind == 'polygonal':
        spec['pieces'] = [piece.as_dict() for piece in operator.pieces]
    elif operator.kind == 'linear':
        spec['A'] = operator.A.tolist()
        spec['b'] = operator.b.tolist()
    return spec
