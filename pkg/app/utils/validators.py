from fractions import Fraction

import numpy as np
from marshmallow import EXCLUDE, Schema, ValidationError as SchemaError, fields, post_load, validate, validates_schema

from app.models.report import REPORT_SCHEMA_VERSION, OperatorFile


def parse_rational(value):
    """'29/100'、'0.29'、29/100 → float，只转换一次"""
    if isinstance(value, bool):
        raise SchemaError(f"不是数值: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(Fraction(str(value).strip()))
    except (ValueError, ZeroDivisionError):
        raise SchemaError(f"无法解析为有理数: {value!r}")


class ComplexEntry(fields.Field):
    """矩阵元素：数值、有理数字符串或 {re, im} 对象"""

    def _deserialize(self, value, attr, data, **kwargs):
        if isinstance(value, dict):
            unknown = set(value) - {'re', 'im'}
            if unknown:
                raise SchemaError(f"复数对象含未知键 {sorted(unknown)}")
            return complex(parse_rational(value.get('re', 0)), parse_rational(value.get('im', 0)))
        return complex(parse_rational(value), 0.0)

    def _serialize(self, value, attr, obj, **kwargs):
        if value is None:
            return None
        z = complex(value)
        return {'re': z.real, 'im': z.imag}


class Rational(fields.Field):

    def _deserialize(self, value, attr, data, **kwargs):
        return parse_rational(value)

    def _serialize(self, value, attr, obj, **kwargs):
        return None if value is None else float(value)


def _matrix_field(**kwargs):
    return fields.List(fields.List(ComplexEntry()), **kwargs)


def _square(matrix, label):
    size = len(matrix)
    if size == 0 or any(len(row) != size for row in matrix):
        raise SchemaError(f"{label} 必须是非空方阵")
    return size


class OperatorFileSchema(Schema):
    """
    算符文件 / API 请求体

    matrix 与 terms 至少给出一个；terms 的键除 "1" 外必须出现在 parameters 中。
    """

    class Meta:
        unknown = EXCLUDE

    name = fields.String(load_default='')
    d = fields.Integer(load_default=None, allow_none=True)
    parameters = fields.Dict(keys=fields.String(), values=Rational(), load_default=dict)
    matrix = _matrix_field(load_default=None, allow_none=True)
    terms = fields.Dict(keys=fields.String(), values=_matrix_field(), load_default=None, allow_none=True)

    @validates_schema
    def validate_shape(self, data, **kwargs):
        matrix, terms = data.get('matrix'), data.get('terms')
        if matrix is None and not terms:
            raise SchemaError("需要 matrix 或 terms 之一", 'matrix')
        sizes = set()
        if matrix is not None:
            sizes.add(_square(matrix, 'matrix'))
        for key, term in (terms or {}).items():
            sizes.add(_square(term, f'terms[{key}]'))
            if key != '1' and key not in data.get('parameters', {}):
                raise SchemaError(f"terms 中的参数 {key} 未在 parameters 中给出", 'terms')
        if len(sizes) > 1:
            raise SchemaError(f"矩阵尺寸不一致: {sorted(sizes)}", 'terms')
        d = data.get('d')
        if d is not None and sizes and d not in sizes:
            raise SchemaError(f"d={d} 与矩阵尺寸 {sizes.pop()} 不一致", 'd')

    @post_load
    def make_operator(self, data, **kwargs):
        terms = data.get('terms')
        if terms:
            arrays = {k: np.array(v, dtype=complex) for k, v in terms.items()}
            matrix = OperatorFile.evaluate_terms(arrays, data['parameters'])
        else:
            arrays = None
            matrix = np.array(data['matrix'], dtype=complex)
        return OperatorFile(
            d=matrix.shape[0], matrix=matrix, name=data.get('name', ''),
            parameters=data['parameters'], terms=arrays, source=self.context.get('source', '')
        )


class ConstantsSchema(Schema):
    """纯度常数 c2 … cd（请求体 / CLI 标志）"""

    class Meta:
        unknown = EXCLUDE

    pure = fields.Boolean(load_default=False)
    c2 = Rational(load_default=None, allow_none=True)
    c3 = Rational(load_default=None, allow_none=True)
    c4 = Rational(load_default=None, allow_none=True)
    c5 = Rational(load_default=None, allow_none=True)
    c6 = Rational(load_default=None, allow_none=True)

    def constants_for(self, data, d):
        """按维度取出 (c2, …, cd)；pure 时全为零"""
        if data.get('pure'):
            return tuple(0.0 for _ in range(2, d + 1))
        keys = [f'c{k}' for k in range(2, d + 1)]
        missing = [k for k in keys if data.get(k) is None]
        if missing:
            raise SchemaError(f"d={d} 需要常数 {', '.join(keys)}，缺少 {', '.join(missing)}")
        extra = [k for k in ('c2', 'c3', 'c4', 'c5', 'c6') if k not in keys and data.get(k) is not None]
        if extra:
            raise SchemaError(f"d={d} 不接受常数 {', '.join(extra)}")
        return tuple(data[k] for k in keys)


class SweepSchema(ConstantsSchema):
    param = fields.String(required=True)
    start = fields.Float(data_key='from', required=True)
    stop = fields.Float(data_key='to', required=True)
    steps = fields.Integer(load_default=11, validate=validate.Range(min=1))


class RunReportSchema(Schema):
    """报告的读写 schema；schema 字段固定为当前版本"""

    class Meta:
        unknown = EXCLUDE
        ordered = True

    schema = fields.String(required=True, validate=validate.Equal(REPORT_SCHEMA_VERSION))
    mode = fields.String(required=True, validate=validate.OneOf(['pure', 'mixed', 'spectrum', 'sweep', 'region']))
    name = fields.String(load_default='')
    input_digest = fields.String(required=True, allow_none=True)
    seed = fields.Integer(required=True)
    d = fields.Integer(required=True, validate=validate.Range(min=2))
    constants = fields.Dict(allow_none=True, load_default=None)
    solutions = fields.List(fields.Dict(), load_default=list)
    spectrum = fields.Dict(allow_none=True, load_default=None)
    decompositions = fields.List(fields.Dict(allow_none=True), load_default=list)
    oracle = fields.Dict(allow_none=True, load_default=None)
    rows = fields.List(fields.Dict(), load_default=list)
    timing = fields.Dict(load_default=None)
