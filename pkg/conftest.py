import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'chipforge.settings')
django.setup()
