import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "knotgate.settings")
django.setup()
