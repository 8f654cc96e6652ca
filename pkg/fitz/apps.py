from django.apps import AppConfig


class FitzConfig(AppConfig):
    name = 'fitz'
    verbose_name = 'Fitzpatrick functions and estimates'
