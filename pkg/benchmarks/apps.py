from django.apps import AppConfig


class BenchmarksConfig(AppConfig):
    name = 'benchmarks'
    verbose_name = 'Benchmark analytics'
