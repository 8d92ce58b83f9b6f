from django.core.checks import Error, register
from django.core.exceptions import ImproperlyConfigured


@register()
def check_chipforge_settings(app_configs, **kwargs):
    from .conf import get_app_settings

    try:
        get_app_settings()
    except ImproperlyConfigured as exc:
        return [Error(str(exc), hint="Fix the CHIPFORGE_* keys in settings.ini or the environment.", id='chipforge.E001')]
    return []
