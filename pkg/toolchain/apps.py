from django.apps import AppConfig


class ToolchainConfig(AppConfig):
    name = 'toolchain'
    verbose_name = 'EDA toolchain'
