from pathlib import Path
import os

import environ
from django.core.exceptions import ImproperlyConfigured

# -----------------
# BASE DIRECTORY
# -----------------
BASE_DIR = Path(__file__).resolve().parent.parent

# -----------------
# ENVIRONMENT VARIABLES
# -----------------
env = environ.Env(
    # Set casting and default values
    DEBUG=(bool, False),
    SECRET_KEY=(str, 'fitzlab-local-key'),
    FITZLAB_TOL_EXACT=(float, 1e-9),
    FITZLAB_TOL_ITER=(float, 1e-7),
    FITZLAB_TOL_SLACK=(float, 1e-8),
    FITZLAB_BISECT_WIDTH=(float, 1e-12),
    FITZLAB_PROJECTION_MAX_ITER=(int, 10000),
    FITZLAB_M3_DIRECTIONS=(int, 64),
    FITZLAB_DEFAULT_SEED=(int, 7),
    FITZLAB_DEFAULT_COUNT=(int, 200),
    FITZLAB_WORKERS=(int, 1),
    FITZLAB_REPLAY_DIR=(str, ''),
)

# Read .env file if it exists (for local runs)
env_file = BASE_DIR / ".env"
if env_file.exists():
    environ.Env.read_env(env_file)

# -----------------
# CORE DJANGO SETTINGS
# -----------------
SECRET_KEY = env('SECRET_KEY')
DEBUG = env.bool('DEBUG', default=False)
ALLOWED_HOSTS = []

# -----------------
# INSTALLED APPS
# -----------------
INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',

    # Third-party apps
    'rest_framework',

    # Local apps
    'core',
    'opmodel',
    'hull',
    'fitz',
    'conjugate',
    'harness',
]

# No ORM state: every domain object is an immutable value
DATABASES = {}

# -----------------
# DJANGO REST FRAMEWORK
# -----------------
# Only serializers, parsers and renderers are used (operator spec files)
REST_FRAMEWORK = {
    'UNAUTHENTICATED_USER': None,
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'DEFAULT_PARSER_CLASSES': [
        'rest_framework.parsers.JSONParser',
    ],
    'COERCE_DECIMAL_TO_STRING': False,
}

# -----------------
# FITZLAB NUMERICS
# -----------------
FITZLAB = {
    'TOL_EXACT': env.float('FITZLAB_TOL_EXACT'),
    'TOL_ITER': env.float('FITZLAB_TOL_ITER'),
    'TOL_SLACK': env.float('FITZLAB_TOL_SLACK'),
    'BISECT_WIDTH': env.float('FITZLAB_BISECT_WIDTH'),
    'PROJECTION_MAX_ITER': env.int('FITZLAB_PROJECTION_MAX_ITER'),
    'M3_DIRECTIONS': env.int('FITZLAB_M3_DIRECTIONS'),
    'DEFAULT_SEED': env.int('FITZLAB_DEFAULT_SEED'),
    'DEFAULT_COUNT': env.int('FITZLAB_DEFAULT_COUNT'),
    'WORKERS': env.int('FITZLAB_WORKERS'),
    'REPLAY_DIR': env.str('FITZLAB_REPLAY_DIR') or None,
}

for key in ('TOL_EXACT', 'TOL_ITER', 'TOL_SLACK', 'BISECT_WIDTH'):
    if not FITZLAB[key] > 0:
        raise ImproperlyConfigured(f"FITZLAB_{key} must be strictly positive, got {FITZLAB[key]}")

if FITZLAB['PROJECTION_MAX_ITER'] < 1 or FITZLAB['WORKERS'] < 1:
    raise ImproperlyConfigured("FITZLAB_PROJECTION_MAX_ITER and FITZLAB_WORKERS must be at least 1")

# -----------------
# INTERNATIONALIZATION
# -----------------
LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# -----------------
# LOGGING CONFIGURATION
# -----------------
LOG_DIR = BASE_DIR / 'logs'
APP_LOG_HANDLERS = ['console'] + (['file'] if LOG_DIR.exists() or DEBUG else [])
APP_LOG_LEVEL = 'DEBUG' if DEBUG else 'INFO'

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose' if not DEBUG else 'simple',
        },
        'file': {
            'class': 'logging.FileHandler',
            'filename': LOG_DIR / 'fitzlab.log',
            'formatter': 'verbose',
        } if LOG_DIR.exists() or DEBUG else None,
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        app: {
            'handlers': APP_LOG_HANDLERS,
            'level': APP_LOG_LEVEL,
            'propagate': False,
        }
        for app in ('core', 'opmodel', 'hull', 'fitz', 'conjugate', 'harness')
    },
}

# Remove None values from handlers
LOGGING['handlers'] = {k: v for k, v in LOGGING['handlers'].items() if v is not None}

# Create logs directory if it doesn't exist and we're in debug mode
if DEBUG:
    os.makedirs(LOG_DIR, exist_ok=True)
