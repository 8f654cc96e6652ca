from django.apps import AppConfig


class ConjugateConfig(AppConfig):
    name = 'conjugate'
    verbose_name = 'Grid conjugation'
