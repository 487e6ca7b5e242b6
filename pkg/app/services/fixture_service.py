import json
import logging
import os

import numpy as np
from marshmallow import ValidationError as SchemaError

from app.config import setting
from app.models.report import OperatorFile
from app.services.su_algebra_service import SuAlgebraService
from app.utils.errors import FixtureIOError, UnknownParameterError, ValidationError
from app.utils.validators import OperatorFileSchema

logger = logging.getLogger(__name__)


class FixtureService:
    """算符文件读取与内置算符库"""

    @staticmethod
    def fixture_dir():
        return setting('QEX_FIXTURE_DIR')

    @classmethod
    def list_fixtures(cls):
        directory = cls.fixture_dir()
        if not os.path.isdir(directory):
            return []
        names = sorted(f[:-5] for f in os.listdir(directory) if f.endswith('.json'))
        return names

    @classmethod
    def resolve(cls, source, library_only=False):
        """文件路径优先，其次按名称在算符库中查找；library_only 时只查算符库"""
        if not library_only and os.path.isfile(source):
            return source
        if library_only and (os.path.basename(source) != source or source.startswith('.')):
            raise FixtureIOError(f"内置算符名不合法: {source}", {'source': source})
        candidate = os.path.join(cls.fixture_dir(), f'{source}.json')
        if os.path.isfile(candidate):
            return candidate
        raise FixtureIOError(f"找不到算符文件或内置算符: {source}",
                             {'source': source, 'library': cls.list_fixtures()})

    @classmethod
    def parse(cls, payload, source='') -> OperatorFile:
        """
        校验并求值算符文件内容

        Raises:
            ValidationError: 结构错误
            NonHermitianError: 矩阵非厄米
        """
        schema = OperatorFileSchema()
        schema.context['source'] = source
        try:
            operator_file = schema.load(payload)
        except SchemaError as e:
            raise ValidationError(f"算符文件格式错误: {source or 'payload'}", {'fields': e.messages})
        # 维度与厄米性在加载时检查
        SuAlgebraService.decompose(operator_file.matrix, operator_file.name)
        return operator_file

    @classmethod
    def load(cls, source, library_only=False) -> OperatorFile:
        path = cls.resolve(source, library_only)
        try:
            with open(path, 'r', encoding='utf-8') as f:
                payload = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise FixtureIOError(f"读取算符文件失败: {path}: {e}", {'path': path})
        operator_file = cls.parse(payload, source=path)
        logger.info(f"算符文件加载成功: {operator_file.name or path} (d={operator_file.d})")
        return operator_file

    @staticmethod
    def with_parameter(operator_file: OperatorFile, name, value) -> OperatorFile:
        if name not in operator_file.parameters or not operator_file.terms:
            raise UnknownParameterError(
                f"算符 {operator_file.name or operator_file.source} 没有参数 {name}",
                {'parameters': sorted(operator_file.parameters)}
            )
        return operator_file.with_parameters(**{name: float(value)})

    @staticmethod
    def to_payload(operator_file: OperatorFile):
        """OperatorFile → 可写回磁盘的 JSON 结构"""
        def encode(matrix):
            return [[{'re': float(z.real), 'im': float(z.imag)} for z in row] for row in np.asarray(matrix)]

        payload = {'name': operator_file.name, 'd': operator_file.d,
                   'parameters': dict(operator_file.parameters)}
        if operator_file.terms:
            payload['terms'] = {k: encode(v) for k, v in operator_file.terms.items()}
        else:
            payload['matrix'] = encode(operator_file.matrix)
        return payload
