from django.apps import AppConfig


class ChipforgeConfig(AppConfig):
    name = 'chipforge'
    verbose_name = 'chipforge'

    def ready(self):
        from . import checks  # noqa: F401
