import os
from functools import wraps
from dotenv import load_dotenv
from flask import current_app, has_app_context

load_dotenv()


def _float_env(name, default):
    return float(os.environ.get(name, default))


def _int_env(name, default):
    return int(os.environ.get(name, default))


class Config:
    # 基础配置
    SECRET_KEY = os.environ.get('SECRET_KEY') or 'dev-secret-key-change-this'
    JSON_SORT_KEYS = True

    # 数值容差
    TAU_HERM_REL = _float_env('QEX_TAU_HERM_REL', 1e-10)
    TAU_STRUCT = _float_env('QEX_TAU_STRUCT', 1e-13)
    TAU_RANK_REL = _float_env('QEX_TAU_RANK_REL', 1e-10)
    TAU_NULL = _float_env('QEX_TAU_NULL', 1e-9)
    TAU_BEZ = _float_env('QEX_TAU_BEZ', 1e-9)
    TAU_SOL = _float_env('QEX_TAU_SOL', 1e-11)
    TAU_DEDUP = _float_env('QEX_TAU_DEDUP', 1e-7)
    TAU_PSD = _float_env('QEX_TAU_PSD', 1e-8)
    TAU_ORTH = _float_env('QEX_TAU_ORTH', 1e-8)
    TAU_GRAM = _float_env('QEX_TAU_GRAM', 1e-10)
    TAU_UNITARY = _float_env('QEX_TAU_UNITARY', 1e-10)

    # 求解器配置
    SOLVER_START_FACTOR = _int_env('QEX_SOLVER_START_FACTOR', 120)
    SOLVER_PURE_CHUNK = _int_env('QEX_SOLVER_PURE_CHUNK', 16)
    SOLVER_MIXED_CHUNK = _int_env('QEX_SOLVER_MIXED_CHUNK', 8)
    SOLVER_MAX_ITER = _int_env('QEX_SOLVER_MAX_ITER', 80)
    SOLVER_POLISH_ITER = _int_env('QEX_SOLVER_POLISH_ITER', 40)
    SPECTRUM_RETRY_BUDGET = _int_env('QEX_SPECTRUM_RETRY_BUDGET', 2)
    ORACLE_MAX_SWEEPS = _int_env('QEX_ORACLE_MAX_SWEEPS', 60)

    # 服务配置
    QEX_THREADS = _int_env('QEX_THREADS', 4)
    QEX_DEFAULT_SEED = _int_env('QEX_DEFAULT_SEED', 0)
    QEX_FIXTURE_DIR = os.environ.get('QEX_FIXTURE_DIR') or os.path.join(
        os.path.dirname(os.path.abspath(__file__)), 'fixtures'
    )
    QEX_REPORT_TIMING = os.environ.get('QEX_REPORT_TIMING', 'false').lower() == 'true'
    QEX_RATELIMIT = os.environ.get('QEX_RATELIMIT') or '60 per minute'
    RATELIMIT_ENABLED = True

    SWAGGER = {
        'title': 'Qudit Extremal API',
        'uiversion': 3,
        'info': {
            'title': 'Qudit Extremal API',
            'version': '1.0.0',
            'description': '有限维厄米算符的极值密度矩阵计算 API'
        }
    }


class DevelopmentConfig(Config):
    DEBUG = True
    TESTING = False


class ProductionConfig(Config):
    DEBUG = False
    TESTING = False


class TestingConfig(Config):
    TESTING = True
    RATELIMIT_ENABLED = False
    QEX_THREADS = 2


config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}


def setting(name, default=None):
    """读取配置项：应用上下文内取 current_app.config，否则取 Config 默认值"""
    if has_app_context():
        return current_app.config.get(name, getattr(Config, name, default))
    return getattr(Config, name, default)


def bind_app_context(fn):
    """把当前应用上下文带进线程池任务；无上下文时原样返回"""
    if not has_app_context():
        return fn
    app = current_app._get_current_object()

    @wraps(fn)
    def wrapper(*args, **kwargs):
        with app.app_context():
            return fn(*args, **kwargs)
    return wrapper
