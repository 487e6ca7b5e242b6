# conftest.py
import pytest
import os
import sys

import numpy as np

# 添加项目根目录到Python路径
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

from app import create_app
from app.services.fixture_service import FixtureService
from app.services.su_algebra_service import SuAlgebraService


@pytest.fixture(scope='session')
def app():
    """创建测试应用"""
    app = create_app('testing')
    app.config.update({
        'TESTING': True,
        'QEX_REPORT_TIMING': False,
    })

    with app.app_context():
        yield app


@pytest.fixture(scope='function')
def client(app):
    """创建测试客户端"""
    return app.test_client()


@pytest.fixture(scope='function')
def runner(app):
    """Flask CLI 测试运行器"""
    return app.test_cli_runner()


@pytest.fixture
def rng():
    """固定种子的随机数发生器"""
    return np.random.default_rng(20240601)


@pytest.fixture
def load_operator(app):
    """按名称加载内置算符，可覆盖参数，返回 HermitianOperator"""
    def _load(name, **overrides):
        operator_file = FixtureService.load(name)
        if overrides:
            operator_file = operator_file.with_parameters(**overrides)
        return SuAlgebraService.decompose(operator_file.matrix, operator_file.name)
    return _load


def random_hermitian(rng, d, scale=1.0):
    """随机厄米矩阵（GUE 型）"""
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (x + x.conj().T)


def random_state(rng, d):
    """随机满秩密度矩阵（Wishart 归一化）"""
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def write_operator(tmp_path):
    """把矩阵写成临时算符文件，返回路径"""
    import json

    def _write(matrix, name='tmp_operator'):
        matrix = np.asarray(matrix, dtype=complex)
        payload = {
            'name': name,
            'd': int(matrix.shape[0]),
            'matrix': [[{'re': float(z.real), 'im': float(z.imag)} for z in row] for row in matrix]
        }
        path = tmp_path / f'{name}.json'
        path.write_text(json.dumps(payload), encoding='utf-8')
        return str(path)
    return _write
