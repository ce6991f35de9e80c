"""
Django settings for knotgate project.

Generated by 'django-admin startproject' using Django 5.2.1.

For more information on this file, see
https://docs.djangoproject.com/en/5.2/topics/settings/

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# .envファイルから環境変数を読み込む
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# 環境変数から秘密鍵を読み込む
SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-default-key-for-dev')

# デバッグモードを環境変数から設定
DEBUG = os.getenv('DEBUG', 'False') == 'True'

# 許可されたホストを環境変数から設定
ALLOWED_HOSTS = os.getenv('ALLOWED_HOSTS', 'localhost,127.0.0.1,testserver').split(',')


# Application definition

INSTALLED_APPS = [
    "knowledge.apps.KnowledgeConfig",
    "gateway.apps.GatewayConfig",
    "services.apps.ServicesConfig",
    "corsheaders",  # CORS対応のため追加
]

MIDDLEWARE = [
    "django.middleware.security.SecurityMiddleware",
    "corsheaders.middleware.CorsMiddleware",  # 必ずCommonMiddlewareの前に配置
    "django.middleware.common.CommonMiddleware",
]

ROOT_URLCONF = "knotgate.urls"

WSGI_APPLICATION = "knotgate.wsgi.application"


# ストアはメモリ上にあるのでデータベースは使わない
DATABASES = {}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = "ja"

# 詳細表示のタイムスタンプ（エポックミリ秒）をこのタイムゾーンで表示する
TIME_ZONE = os.getenv('TIME_ZONE', 'UTC')

USE_I18N = True

USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# CORS settings
CORS_ALLOW_ALL_ORIGINS = True  # 開発環境のみ。本番環境では特定のオリジンのみ許可するべき
CORS_ALLOW_METHODS = [
    "DELETE",
    "GET",
    "OPTIONS",
    "POST",
]
CORS_URLS_REGEX = r"^/api/.*$"

# ゲートウェイの設定
KNOTGATE = {
    'CONFIG': os.getenv('KNOTGATE_CONFIG', ''),
    'EGRESS_ATTEMPTS': int(os.getenv('KNOTGATE_EGRESS_ATTEMPTS', '3')),
    'EGRESS_SPACING_MS': int(os.getenv('KNOTGATE_EGRESS_SPACING_MS', '200')),
    'WEBHOOK_TIMEOUT': float(os.getenv('KNOTGATE_WEBHOOK_TIMEOUT', '5')),
}

LOG_LEVEL = os.getenv('KNOTGATE_LOG_LEVEL', 'INFO')

# ロギング設定
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'standard': {
            'format': '%(asctime)s [%(levelname)s] %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'standard',
        },
    },
    'loggers': {
        'knowledge': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
        },
        'gateway': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
        },
        'services': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
        },
    },
}
