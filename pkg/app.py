import os
import sys
from app import create_app

app = create_app(os.getenv('FLASK_ENV', 'default'))

if __name__ == '__main__':
    # 处理命令行参数
    if len(sys.argv) > 1:
        from app.utils.commands import main

        with app.app_context():
            main(sys.argv[1:])
    else:
        # 正常启动Flask应用
        print("🚀 启动 qex 服务...")
        print("📍 端口: 15000")
        print("📍 健康检查: http://localhost:15000/health")
        print("📍 计算API: http://localhost:15000/api/qex/")
        app.run(host='0.0.0.0', port=15000, debug=app.config.get('DEBUG', False))
