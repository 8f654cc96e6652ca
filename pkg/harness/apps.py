from django.apps import AppConfig


class HarnessConfig(AppConfig):
    name = 'harness'
    verbose_name = 'Operator files, generators and suites'
