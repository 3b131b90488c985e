"""
Django settings for the mintau project.

The project has no database and no web surface: Django provides the
settings layer, the management-command front-end and the test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/6.0/ref/settings/
"""

from pathlib import Path
import os
from dotenv import load_dotenv

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('SECRET_KEY', 'mintau-batch-only')

DEBUG = os.getenv('DEBUG', 'false').lower() == "true"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'funcspace',
    'problem',
    'integrator',
    'steering',
    'mintime',
    'regularity',
    'experiments',
]

DATABASES = {}


# Toolkit defaults

MINTAU_HISTORY_SAMPLES = int(os.getenv('MINTAU_HISTORY_SAMPLES', '64'))
MINTAU_DEFAULT_DT_DIVISOR = 256

MINTAU_TOL_LIP = 1e-9
MINTAU_TOL_RATIO = 0.05
MINTAU_EPS_TARGET_FACTOR = 1e-4
MINTAU_MAX_STEER_ITERS = 500

MINTAU_DEPTH_LIMIT = 16
MINTAU_PETROV_RADIAL_LAYERS = 4
MINTAU_INCONCLUSIVE_SKIP_RATIO = 0.2

MINTAU_THREADS = int(os.getenv('MINTAU_THREADS', str(os.cpu_count() or 1)))
MINTAU_OUTPUT_DIR = Path(os.getenv('MINTAU_OUTPUT_DIR', BASE_DIR / 'output'))

MINTAU_LOG_LEVEL = os.getenv('MINTAU_LOG_LEVEL', 'INFO').upper()


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': MINTAU_LOG_LEVEL,
            'propagate': False,
        }
        for app in INSTALLED_APPS
    },
}

# Internationalization
# https://docs.djangoproject.com/en/6.0/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True
