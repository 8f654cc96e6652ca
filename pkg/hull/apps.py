from django.apps import AppConfig


class HullConfig(AppConfig):
    name = 'hull'
    verbose_name = 'Convex hulls and projections'
