import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "fitzlab.settings")
django.setup()
